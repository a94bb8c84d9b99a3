//! One audited run under constant Massart noise, printing the per-epoch trace.
//!
//! ```text
//! cargo run --release --example learn_massart -- [dim] [eta] [seed]
//! ```

use halfspace_al::diagnostics::{excess_error, ExcessMethod};
use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::experiment::Profile;
use halfspace_al::learner::{learn, LearnerConfig};
use halfspace_al::oracles::{BandSampler, GroundTruth, LabelingEnvironment, NoiseModel};
use halfspace_al::{geometry, stream};

fn main() -> halfspace_al::Result<()> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map_or(10, |s| s.parse().expect("dim"));
    let eta: f64 = args.next().map_or(0.2, |s| s.parse().expect("eta"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let noise = NoiseModel::MassartConstant { eta };
    let config = LearnerConfig {
        dist: WellBehavedDistribution::new(Family::IsotropicGaussian, dim)?,
        noise,
        epsilon: 0.1,
        delta: 0.05,
        sparsity: None,
        multipliers: Profile::Desk.multipliers(),
        regime: None,
    };
    let schedule = config.schedule()?;
    let mut rng = stream(seed, 0);
    let truth = GroundTruth::random(dim, &mut rng);
    let mut env = LabelingEnvironment::new(config.dist.clone(), noise, truth.clone(), BandSampler::Conditional)?
        .with_audit(true);
    let out = learn(&schedule, &mut env, &mut rng)?;

    println!("epoch  radius      bandwidth   labels      angle");
    for t in &out.trace {
        println!(
            "{:<6} {:<11.4e} {:<11.4e} {:<11} {:.3e}",
            t.epoch,
            t.proximity,
            t.bandwidth,
            t.cumulative_labels,
            t.angle.unwrap_or(f64::NAN)
        );
    }
    let angle = geometry::angle(&out.output, truth.w_star())?;
    let excess = excess_error(&out.output, &config.dist, &noise, &truth, ExcessMethod::Exact, &mut rng)?;
    println!("final angle {angle:.3e}, excess error {:.3e}, labels {}", excess.value, out.ledger.label_calls);
    Ok(())
}
