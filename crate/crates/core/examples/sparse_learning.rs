//! A sparse target in high dimension: the sparse schedule pays s·ln d per
//! epoch instead of d, and the learner projects onto an ℓ1 ball as well.
//!
//! ```text
//! cargo run --release --example sparse_learning -- [dim] [sparsity] [seed]
//! ```

use halfspace_al::diagnostics::{excess_error, ExcessMethod};
use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::experiment::Profile;
use halfspace_al::learner::{learn, LearnerConfig};
use halfspace_al::oracles::{BandSampler, GroundTruth, LabelingEnvironment, NoiseModel};
use halfspace_al::stream;

fn main() -> halfspace_al::Result<()> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map_or(100, |s| s.parse().expect("dim"));
    let s: usize = args.next().map_or(3, |s| s.parse().expect("sparsity"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let noise = NoiseModel::MassartConstant { eta: 0.1 };
    let mut config = LearnerConfig {
        dist: WellBehavedDistribution::new(Family::IsotropicGaussian, dim)?,
        noise,
        epsilon: 0.2,
        delta: 0.05,
        sparsity: Some(s),
        multipliers: Profile::Desk.multipliers(),
        regime: None,
    };
    let sparse = config.schedule()?;
    config.sparsity = None;
    let dense = config.schedule()?;
    println!(
        "labels: sparse schedule {} (effective dimension {:.1}), dense schedule {}",
        sparse.total_labels(),
        sparse.effective_dim,
        dense.total_labels()
    );

    let mut rng = stream(seed, 0);
    let truth = GroundTruth::random_sparse(dim, s, &mut rng)?;
    let mut env = LabelingEnvironment::new(config.dist.clone(), noise, truth.clone(), BandSampler::Conditional)?;
    let out = learn(&sparse, &mut env, &mut rng)?;
    let excess = excess_error(&out.output, &config.dist, &noise, &truth, ExcessMethod::Exact, &mut rng)?;
    // Share of the output's norm carried by the coordinates w* uses.
    let on_support = out
        .output
        .as_slice()
        .iter()
        .zip(truth.w_star().as_slice())
        .filter(|(_, t)| **t != 0.0)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        .sqrt();
    println!(
        "sparse run: excess error {:.3e} (target {}), norm on the true support {:.3}, {} labels",
        excess.value, config.epsilon, on_support, out.ledger.label_calls
    );
    Ok(())
}
