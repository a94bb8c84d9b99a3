//! Computationally efficient active learning of homogeneous halfspaces under
//! bounded (Massart) and Tsybakov label noise.
//!
//! The learner queries labels only inside a shrinking band around its current
//! hypothesis, runs projected online gradient descent on each band, and
//! halves its target distance to the Bayes-optimal halfspace every epoch.
//!
//! Layout:
//!
//! * [`geometry`]: normalization, angles, projections, hard thresholding.
//! * [`distributions`]: well-behaved unlabeled samplers with certified
//!   density and tail parameters.
//! * [`oracles`]: noise models, hidden ground truth, band sampling and the
//!   query ledger that counts labels.
//! * [`learner`]: epoch schedules, `optimize`, `initialize` and `learn`,
//!   including the attribute-efficient sparse variant.
//! * [`diagnostics`]: Monte Carlo estimators and checks of the geometric and
//!   noise lemmas the learner relies on.
//! * [`experiment`]: JSON configs, seeded replicate runs, sweeps, verification
//!   reports and CSV output; driven by the `halfspace-al` binary.
//!
//! ```
//! use halfspace_al::distributions::{Family, WellBehavedDistribution};
//! use halfspace_al::learner::{make_schedule, Multipliers, NoiseRegime};
//!
//! let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 10).unwrap();
//! let schedule = make_schedule(
//!     &NoiseRegime::Massart { eta: 0.2 },
//!     &dist,
//!     0.1,
//!     0.05,
//!     None,
//!     &Multipliers::default(),
//! )
//! .unwrap();
//! assert_eq!(schedule.refine_epochs, 6);
//! ```

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod learner;
pub mod oracles;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{UnitVector, WeightVector};

/// The random stream used throughout the crate.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Builds the stream for `(seed, replicate)`. Replicates of the same seed get
/// independent ChaCha streams rather than consecutive seeds.
pub fn stream(seed: u64, replicate: u64) -> Stream {
    use rand::SeedableRng;
    let mut rng = Stream::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
