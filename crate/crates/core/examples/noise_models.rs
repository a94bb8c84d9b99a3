//! Flip probability as a function of the margin for each noise model, and
//! the Tsybakov constant the geometric model implies.
//!
//! ```text
//! cargo run --release --example noise_models
//! ```

use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::learner::NoiseRegime;
use halfspace_al::oracles::{effective_tsybakov_a, NoiseModel};

fn main() -> halfspace_al::Result<()> {
    let models = [
        NoiseModel::MassartConstant { eta: 0.2 },
        NoiseModel::MassartBand { eta: 0.4, tau: 0.3 },
        NoiseModel::GeometricTsybakov { b: 1.0, alpha: 0.75 },
        NoiseModel::GeometricTsybakov { b: 1.0, alpha: 0.5 },
    ];
    print!("margin ");
    for m in &models {
        print!(" {:>28}", format!("{m:?}").split_whitespace().next().unwrap_or(""));
    }
    println!();
    for margin in [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0] {
        print!("{margin:<7}");
        for m in &models {
            print!(" {:>28.5}", m.flip_probability(margin));
        }
        println!();
    }

    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 10)?;
    for m in &models {
        let regime = NoiseRegime::for_noise(m);
        println!("{m:?}: Massart bound {:?}, regime {}", m.massart_bound(), regime.short_name());
        if let NoiseModel::GeometricTsybakov { b, alpha } = *m {
            println!("  implied Tsybakov A = {:.4}", effective_tsybakov_a(b, alpha, &dist)?);
        }
    }
    Ok(())
}
