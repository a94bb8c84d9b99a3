//! Label budgets under each regime and multiplier profile, without
//! querying a single label.
//!
//! ```text
//! cargo run --release --example preview_schedule
//! ```

use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::experiment::Profile;
use halfspace_al::learner::{make_schedule, NoiseRegime};
use halfspace_al::oracles::NoiseModel;

fn main() -> halfspace_al::Result<()> {
    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 10)?;
    let regimes = [
        NoiseRegime::Massart { eta: 0.2 },
        NoiseRegime::tsybakov_for_geometric(1.0, 0.75, &dist)?,
        NoiseRegime::for_noise(&NoiseModel::GeometricTsybakov { b: 1.0, alpha: 0.75 }),
    ];
    for profile in [Profile::PaperConstants, Profile::Desk] {
        println!("profile {profile}");
        for regime in &regimes {
            let s = make_schedule(regime, &dist, 0.1, 0.05, None, &profile.multipliers())?;
            println!(
                "  {:<5} trials {:<3} init epochs {:<3} refine epochs {:<3} init labels {:<12} refine labels {:<12} total {}",
                regime.short_name(),
                s.trials,
                s.init_epochs,
                s.refine_epochs,
                s.init_labels(),
                s.refine_labels(),
                s.total_labels()
            );
        }
    }
    let s = make_schedule(&regimes[0], &dist, 0.1, 0.05, None, &Profile::Desk.multipliers())?;
    println!("desk Massart epoch plans (initialization runs 0..={}, refinement 1..={}):", s.init_epochs, s.refine_epochs);
    println!("  epoch  radius      bandwidth   queries   step");
    for e in &s.epochs {
        println!("  {:<6} {:<11.4e} {:<11.4e} {:<9} {:.4e}", e.index, e.proximity, e.bandwidth, e.queries, e.step);
    }
    Ok(())
}
