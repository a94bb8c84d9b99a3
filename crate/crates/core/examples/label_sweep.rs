//! Label complexity against 1/ε under Massart noise, with the log-log
//! slope of total and refinement labels. Pass `run` to execute the learner
//! at every grid point instead of only building schedules.
//!
//! ```text
//! cargo run --release --example label_sweep -- [run]
//! ```

use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::experiment::{self, ExperimentConfig, Profile, SweepAxis, SweepSpec};
use halfspace_al::oracles::NoiseModel;

fn main() -> halfspace_al::Result<()> {
    let live = std::env::args().nth(1).as_deref() == Some("run");
    let mut config = ExperimentConfig::new(
        WellBehavedDistribution::new(Family::IsotropicGaussian, 5)?,
        NoiseModel::MassartConstant { eta: 0.2 },
        0.2,
        0.05,
        4,
    );
    config.profile = Profile::Desk;
    config.replicates = 4;
    config.sweep = Some(SweepSpec {
        axis: SweepAxis::Epsilon,
        values: vec![0.4, 0.2, 0.1, 0.05, 0.025],
        dry_run: !live,
    });
    let out = experiment::sweep(&config)?;
    println!("epsilon  total_labels  refine_labels  within_epsilon");
    for p in &out.points {
        let within = p.within_epsilon.map_or("-".to_string(), |w| format!("{w}/{}", config.replicates));
        println!("{:<8} {:<13} {:<14} {within}", p.value, p.total_labels, p.refine_labels);
    }
    if let Some(f) = &out.fits {
        println!("slope against ln(1/epsilon): total {:.3}, refinement {:.3}", f.total.slope, f.refine.slope);
    }
    for w in &out.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
