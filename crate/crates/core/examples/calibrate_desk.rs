//! Grid search for the desk profile's query and step multipliers.
//!
//! For each step multiplier c_α, finds the smallest query multiplier c_T in
//! {2⁻⁸, …, 2⁰} for which at least 45 of 50 seeded refinement epochs, started
//! at distance 4r from w*, end within r. At that c_T it then reports the
//! initialization contract (20 seeds, ‖û₀ − w*‖ ≤ 1/4) and full runs at
//! d = 10 (20 seeds, excess error ≤ ε).
//!
//! ```text
//! cargo run --release --example calibrate_desk -- 16,32,64,128
//! ```

use std::time::Instant;

use rayon::prelude::*;

use halfspace_al::distributions::{random_unit_vector, Family, WellBehavedDistribution};
use halfspace_al::experiment::{self, ExperimentConfig};
use halfspace_al::learner::{
    initialize, make_schedule, optimize, Aggregation, Mode, Multipliers, NoiseRegime,
};
use halfspace_al::oracles::{BandSampler, GroundTruth, LabelingEnvironment, NoiseModel};
use halfspace_al::{geometry, stream};

fn parse_list(arg: Option<String>, default: &[f64]) -> Vec<f64> {
    arg.map(|s| s.split(',').map(|v| v.parse().expect("number")).collect())
        .unwrap_or_else(|| default.to_vec())
}

/// Number of seeded epochs started at ‖w₁ − w*‖ = 4r that end within r.
fn epoch_successes(m: &Multipliers, seeds: u64) -> usize {
    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 5).unwrap();
    let noise = NoiseModel::MassartConstant { eta: 0.1 };
    let schedule = make_schedule(&NoiseRegime::Massart { eta: 0.1 }, &dist, 0.1, 0.05, None, m).unwrap();
    let plan = *schedule.epoch(1);
    (0..seeds)
        .into_par_iter()
        .filter(|&seed| {
            let mut rng = stream(seed, 0);
            let truth = GroundTruth::random(5, &mut rng);
            let u = random_unit_vector(&mut rng, 5);
            let start: Vec<f64> = truth
                .w_star()
                .as_slice()
                .iter()
                .zip(u.as_slice())
                .map(|(w, d)| w + 4.0 * plan.proximity * d)
                .collect();
            let mut env = LabelingEnvironment::new(dist.clone(), noise, truth.clone(), BandSampler::Conditional).unwrap();
            let out = optimize(&start, &plan, Aggregation::Average, Mode::Dense, &mut env, &mut rng).unwrap();
            out.output.sub(truth.w_star()).norm() <= plan.proximity
        })
        .count()
}

fn init_successes(m: &Multipliers, seeds: u64) -> usize {
    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 5).unwrap();
    let noise = NoiseModel::MassartConstant { eta: 0.1 };
    let schedule = make_schedule(&NoiseRegime::Massart { eta: 0.1 }, &dist, 0.1, 0.05, None, m).unwrap();
    (0..seeds)
        .into_par_iter()
        .filter(|&seed| {
            let mut rng = stream(seed, 0);
            let truth = GroundTruth::random(5, &mut rng);
            let mut env = LabelingEnvironment::new(dist.clone(), noise, truth.clone(), BandSampler::Conditional).unwrap();
            let out = initialize(&schedule, &mut env, &mut rng).unwrap();
            geometry::normalize(&out.output).unwrap().to_weight().sub(truth.w_star()).norm() <= 0.25
        })
        .count()
}

fn main() {
    let steps = parse_list(std::env::args().nth(1), &[16.0, 32.0, 64.0, 128.0]);
    let grid: Vec<f64> = (0..=8).rev().map(|k| 0.5f64.powi(k)).collect();
    println!("c_alpha  c_T        epoch/50  init/20  run/20  median_angle  target   labels     seconds");
    for &step in &steps {
        // Smallest c_T on the grid meeting the single-epoch contract.
        let Some((q, epoch)) = grid.iter().find_map(|&q| {
            let m = Multipliers { queries: q, step, ..Multipliers::default() };
            let hits = epoch_successes(&m, 50);
            (hits >= 45).then_some((q, hits))
        }) else {
            println!("{step:<8} none");
            continue;
        };
        let m = Multipliers { queries: q, step, ..Multipliers::default() };
        let started = Instant::now();
        let init = init_successes(&m, 20);
        let mut config = ExperimentConfig::new(
            WellBehavedDistribution::new(Family::IsotropicGaussian, 10).unwrap(),
            NoiseModel::MassartConstant { eta: 0.2 },
            0.1,
            0.05,
            0,
        );
        config.multipliers = Some(m);
        config.replicates = 20;
        let run = experiment::run(&config).unwrap();
        let angle = run.summary.final_angle.map_or(f64::NAN, |q| q.median);
        println!(
            "{step:<8} {q:<10.7} {epoch:<9} {init:<8} {:<7} {angle:<13.3e} {:<8.5} {:<10} {:.1}",
            run.summary.within_epsilon,
            run.rows[0].refine_target_angle,
            run.schedule.total_labels(),
            started.elapsed().as_secs_f64()
        );
    }
}
