//! Acceptance criteria, one test and one PASS/FAIL line each.
//!
//! Tests hold a shared lock so wall-clock budgets are measured without
//! competing threads. Run with `--nocapture` to see the lines.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use halfspace_al::diagnostics::{estimate_psi, excess_error, verify_lemma_suite, ExcessMethod, SuiteSettings};
use halfspace_al::distributions::{random_unit_vector, Family, WellBehavedDistribution};
use halfspace_al::experiment::{
    self, ExperimentConfig, FitKind, Profile, RegimeKind, SweepAxis, SweepSpec,
};
use halfspace_al::geometry::{self, angle, normalize};
use halfspace_al::learner::{
    bregman_step, initialize, make_schedule, optimize, step_objective, Aggregation, Mode,
    NoiseRegime, SparseConstraint, BREGMAN_TOLERANCE,
};
use halfspace_al::oracles::{
    rejection_sample_band, BandSampler, GroundTruth, LabelingEnvironment, NoiseModel, QueryLedger,
};
use halfspace_al::stats::normal_cdf;
use halfspace_al::{stream, WeightVector};
use serde::Deserialize;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(criterion: u32, passed: bool, detail: String) {
    println!("{} criterion {criterion}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn gaussian(d: usize) -> WellBehavedDistribution {
    WellBehavedDistribution::new(Family::IsotropicGaussian, d).unwrap()
}

fn base_config(d: usize, noise: NoiseModel, epsilon: f64) -> ExperimentConfig {
    ExperimentConfig::new(gaussian(d), noise, epsilon, 0.05, 0)
}

fn dry_sweep(mut config: ExperimentConfig, axis: SweepAxis, values: &[f64]) -> experiment::SweepOutput {
    config.sweep = Some(SweepSpec {
        axis,
        values: values.to_vec(),
        dry_run: true,
    });
    experiment::sweep(&config).unwrap()
}

#[test]
fn criterion_1_massart_scaling() {
    let _g = serial();
    let started = Instant::now();
    let config = base_config(10, NoiseModel::MassartConstant { eta: 0.2 }, 0.1);
    let out = dry_sweep(config, SweepAxis::Eta, &[0.1, 0.2, 0.3, 0.4]);
    let fits = out.fits.expect("four points");
    assert_eq!(fits.kind, FitKind::LogLog);
    let secs = started.elapsed().as_secs_f64();
    let passed = (fits.total.slope - 2.0).abs() <= 0.1 && secs < 60.0;
    verdict(
        1,
        passed,
        format!(
            "total-label slope vs 1/(1-2eta) = {:.4} (target 2.0 +/- 0.1); refinement-only slope {:.4}; {secs:.1}s",
            fits.total.slope, fits.refine.slope
        ),
    );
    assert!((fits.refine.slope - 2.0).abs() <= 0.1);
    assert!(passed);
}

#[test]
fn criterion_2_tsybakov_epsilon_scaling() {
    let _g = serial();
    let started = Instant::now();
    let grid = [0.2, 0.1, 0.05, 0.025];
    let alpha = 0.75;
    let noise = NoiseModel::GeometricTsybakov { b: 1.0, alpha };
    let mut tnc = base_config(10, noise, 0.1);
    tnc.regime = Some(RegimeKind::Tsybakov);
    let tnc = dry_sweep(tnc, SweepAxis::Epsilon, &grid).fits.unwrap();
    let gtnc = dry_sweep(base_config(10, noise, 0.1), SweepAxis::Epsilon, &grid).fits.unwrap();
    let tnc_target = (2.0 - 2.0 * alpha) / (2.0 * alpha - 1.0);
    let gtnc_target = (2.0 - 2.0 * alpha) / alpha;
    let secs = started.elapsed().as_secs_f64();
    let passed = (tnc.total.slope - tnc_target).abs() <= 0.15
        && (gtnc.total.slope - gtnc_target).abs() <= 0.15
        && secs < 120.0;
    verdict(
        2,
        passed,
        format!(
            "TNC slope vs 1/eps = {:.4} (target {tnc_target:.4} +/- 0.15, refinement-only {:.4}); \
             GTNC slope = {:.4} (target {gtnc_target:.4} +/- 0.15, refinement-only {:.4}); {secs:.1}s",
            tnc.total.slope, tnc.refine.slope, gtnc.total.slope, gtnc.refine.slope
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_3_end_to_end_pac() {
    let _g = serial();
    let started = Instant::now();
    let mut config = base_config(10, NoiseModel::MassartConstant { eta: 0.2 }, 0.1);
    config.profile = Profile::Desk;
    config.replicates = 20;
    config.trace = true;
    let out = experiment::run(&config).unwrap();
    let ok: Vec<_> = out.rows.iter().filter(|r| r.is_ok()).collect();
    let within = ok
        .iter()
        .filter(|r| r.excess_exact == Some(true) && r.excess_error.unwrap() <= 0.1)
        .count();
    let median_angle = out.summary.final_angle.map_or(f64::INFINITY, |q| q.median);
    let target = PI * out.schedule.refine_proximity;
    let ledger_exact = out.rows.iter().all(|r| r.label_calls == out.schedule.total_labels());
    let feasible = ok.iter().all(|r| r.max_excess_distance.unwrap() <= 1e-9);
    // ‖w − w*‖ ≤ r < 1 bounds the angle by asin r. Reported, not gated: the
    // per-epoch guarantee is probabilistic.
    let epochs_within = ok
        .iter()
        .flat_map(|r| r.trace.iter().skip(1))
        .filter(|e| e.angle.unwrap() <= e.proximity.min(1.0).asin())
        .count();
    let epochs_total: usize = ok.iter().map(|r| r.trace.len() - 1).sum();
    let secs = started.elapsed().as_secs_f64();
    let passed = within >= 18 && median_angle <= target && ledger_exact && feasible && secs < 600.0;
    verdict(
        3,
        passed,
        format!(
            "{within}/20 runs with excess error <= 0.1 (need 18); median angle {median_angle:.3e} \
             vs pi*r_eps = {target:.3e}; {} labels per run, ledger exact: {ledger_exact}, \
             feasible: {feasible}; {epochs_within}/{epochs_total} refinement epochs end within their radius; {secs:.1}s",
            out.schedule.total_labels()
        ),
    );
    assert!(passed);
}

/// w* + 4r·u for a random unit u.
fn start_at_distance(truth: &GroundTruth, radius: f64, rng: &mut halfspace_al::Stream) -> Vec<f64> {
    let u = random_unit_vector(rng, truth.dim());
    truth
        .w_star()
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(w, d)| w + radius * d)
        .collect()
}

#[test]
fn criterion_4_optimize_epoch_contract() {
    let _g = serial();
    let started = Instant::now();
    let config = {
        let mut c = base_config(5, NoiseModel::MassartConstant { eta: 0.1 }, 0.1);
        c.profile = Profile::Desk;
        c
    };
    let schedule = config.schedule().unwrap();
    let plan = *schedule.epoch(1);
    assert_eq!(plan.proximity, 1.0 / 16.0);
    let mut hits = 0;
    let mut feasible = true;
    let mut ledger_exact = true;
    for seed in 0..50 {
        let mut rng = stream(seed, 0);
        let truth = GroundTruth::random(5, &mut rng);
        let start = start_at_distance(&truth, 4.0 * plan.proximity, &mut rng);
        let mut env = LabelingEnvironment::new(config.dist.clone(), config.noise, truth.clone(), BandSampler::Conditional)
            .unwrap();
        let out = optimize(&start, &plan, Aggregation::Average, Mode::Dense, &mut env, &mut rng).unwrap();
        feasible &= out.max_distance <= 4.0 * plan.proximity + 1e-9;
        ledger_exact &= env.ledger().label_calls == plan.queries;
        if out.output.sub(truth.w_star()).norm() <= plan.proximity {
            hits += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = hits >= 45 && feasible && ledger_exact && secs < 300.0;
    verdict(
        4,
        passed,
        format!(
            "{hits}/50 epochs end within r = 1/16 (need 45); T = {}, b = {:.5}; feasible: {feasible}, \
             ledger exact: {ledger_exact}; {secs:.1}s",
            plan.queries, plan.bandwidth
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_5_initialize_contract() {
    let _g = serial();
    let started = Instant::now();
    let mut config = base_config(5, NoiseModel::MassartConstant { eta: 0.1 }, 0.1);
    config.profile = Profile::Desk;
    let schedule = config.schedule().unwrap();
    let mut hits = 0;
    let mut feasible = true;
    let mut ledger_exact = true;
    for seed in 0..20 {
        let mut rng = stream(seed, 0);
        let truth = GroundTruth::random(5, &mut rng);
        let mut env = LabelingEnvironment::new(config.dist.clone(), config.noise, truth.clone(), BandSampler::Conditional)
            .unwrap();
        let out = initialize(&schedule, &mut env, &mut rng).unwrap();
        feasible &= out.max_excess_distance <= 1e-9;
        ledger_exact &= env.ledger().label_calls == schedule.init_labels();
        if out.output.to_weight().sub(truth.w_star()).norm() <= 0.25 {
            hits += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = hits >= 19 && feasible && ledger_exact && secs < 600.0;
    verdict(
        5,
        passed,
        format!(
            "{hits}/20 initializations within 1/4 of w* (need 19); {} labels each; feasible: {feasible}, \
             ledger exact: {ledger_exact}; {secs:.1}s",
            schedule.init_labels()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_6_lemma_suite() {
    let _g = serial();
    let started = Instant::now();
    let dist = gaussian(10);
    let truth = GroundTruth::random(10, &mut stream(6, 0));
    let settings = SuiteSettings::default();
    assert_eq!(settings.samples, 1_000_000);
    let report = verify_lemma_suite(&dist, &NoiseModel::MassartConstant { eta: 0.2 }, &truth, &settings, 6).unwrap();
    let families = ["psi_massart", "psi_tsybakov", "psi_geometric", "band_lower", "band_upper", "disagree_lower", "disagree_upper", "tail_", "excess_massart", "excess_tsybakov", "excess_geometric"];
    let all_present = families.iter().all(|f| report.family(f).count() > 0);
    let failures: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    let secs = started.elapsed().as_secs_f64();
    let passed = report.passed() && all_present && secs < 300.0;
    verdict(
        6,
        passed,
        format!(
            "{} checks at 3 sigma with 10^6 samples each, {} failed {failures:?}; all families present: {all_present}; {secs:.1}s",
            report.checks.len(),
            failures.len()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_estimator_oracles() {
    let _g = serial();
    let started = Instant::now();
    let dist = gaussian(10);
    let mut rng = stream(7, 0);
    let truth = GroundTruth::random(10, &mut rng);
    let noise = NoiseModel::MassartConstant { eta: 0.2 };

    let psi = estimate_psi(truth.w_star(), 1.0, &dist, &noise, &truth, 1_000_000, &mut rng).unwrap();
    let psi_ok = (psi.value - 0.27592).abs() <= 3.0 * psi.std_error;

    // Acceptance rate of the rejection sampler: accepted draws over attempts.
    let b = 0.5;
    let accepted = 200_000u64;
    let mut ledger = QueryLedger::default();
    let dir = random_unit_vector(&mut rng, 10);
    for _ in 0..accepted {
        rejection_sample_band(&dist, &dir, b, &mut rng, &mut ledger, 10_000).unwrap();
    }
    let rate = accepted as f64 / ledger.ex_calls as f64;
    let rate_se = (rate * rate * (1.0 - rate) / accepted as f64).sqrt();
    let closed = 2.0 * normal_cdf(b) - 1.0;
    let rate_ok = (rate - 0.382925).abs() <= 3.0 * rate_se && (closed - 0.382925).abs() < 5e-7;

    let mut agree = 0;
    let mut worst_z = 0.0f64;
    let n = 200_000;
    let mut x = vec![0.0; 10];
    use rand::Rng;
    for _ in 0..20 {
        let u = random_unit_vector(&mut rng, 10);
        let v = dist.sample(&mut rng);
        let exact = dist.exact_disagreement(&u, &v).unwrap();
        let mut hits = 0u64;
        for _ in 0..n {
            for c in x.iter_mut() {
                *c = rng.sample(rand_distr::StandardNormal);
            }
            if (u.dot(&x) >= 0.0) != (v.dot(&x) >= 0.0) {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let z = (freq - exact).abs() / (exact * (1.0 - exact) / n as f64).sqrt();
        worst_z = worst_z.max(z);
        if z <= 3.0 {
            agree += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = psi_ok && rate_ok && agree == 20;
    verdict(
        7,
        passed,
        format!(
            "psi(w*, b=1) = {:.5} +/- {:.1e} vs 0.27592; acceptance rate at b=0.5 = {rate:.6} +/- {rate_se:.1e} \
             vs 0.382925; disagreement agrees on {agree}/20 pairs (worst |z| = {worst_z:.2}); {secs:.1}s",
            psi.value, psi.std_error
        ),
    );
    assert!(passed);
}

#[derive(Deserialize)]
struct OracleCase {
    current: Vec<f64>,
    gradient: Vec<f64>,
    step: f64,
    anchor: Vec<f64>,
    ball_center: Vec<f64>,
    ball_radius: f64,
    l1_radius: f64,
    p: f64,
    objective: f64,
    infeasibility: f64,
}

#[derive(Deserialize)]
struct OracleFile {
    cases: Vec<OracleCase>,
}

#[test]
fn criterion_8_sparse_variant() {
    let _g = serial();
    let started = Instant::now();
    let mut sparse = base_config(50, NoiseModel::MassartConstant { eta: 0.1 }, 0.1);
    sparse.sparsity = Some(5);
    let out = dry_sweep(sparse.clone(), SweepAxis::Dim, &[50.0, 100.0, 200.0]);
    let fits = out.fits.unwrap();
    assert_eq!(fits.kind, FitKind::Linear);
    let sparse_200 = out.points[2].total_labels;
    let dense_200 = experiment::sweep_point(&base_config(50, NoiseModel::MassartConstant { eta: 0.1 }, 0.1), SweepAxis::Dim, 200.0)
        .unwrap()
        .schedule()
        .unwrap()
        .total_labels();
    let ratio = sparse_200 as f64 / dense_200 as f64;

    let file: OracleFile =
        serde_json::from_str(include_str!("fixtures/bregman_oracle.json")).unwrap();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_infeasibility: f64 = 0.0;
    for case in &file.cases {
        let constraint = SparseConstraint {
            ball_center: case.ball_center.clone(),
            ball_radius: case.ball_radius,
            l1_center: case.anchor.clone(),
            l1_radius: case.l1_radius,
        };
        let sol = bregman_step(&case.current, &case.gradient, case.step, &constraint, &case.anchor, case.p, BREGMAN_TOLERANCE)
            .unwrap();
        let ours = step_objective(&sol.point, &case.current, &case.gradient, case.step, &case.anchor, case.p);
        // The fixture omits the constant terms of the objective.
        let constant = step_objective(&case.anchor, &case.current, &case.gradient, case.step, &case.anchor, case.p)
            - oracle_objective(&case.anchor, case);
        worst_gap = worst_gap.max(ours - constant - case.objective);
        worst_infeasibility = worst_infeasibility.max(constraint.infeasibility(&sol.point));
        assert!(case.infeasibility < 1e-9);
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = fits.total.r_squared >= 0.99
        && ratio < 0.2
        && worst_gap <= 1e-4
        && worst_infeasibility <= BREGMAN_TOLERANCE;
    verdict(
        8,
        passed,
        format!(
            "labels vs ln d: R^2 = {:.5} (need 0.99), slope {:.0}; sparse/dense labels at d=200 = {ratio:.4} \
             (need < 0.2); Bregman step vs conic solver on {} instances: worst objective gap {worst_gap:.2e}, \
             worst infeasibility {worst_infeasibility:.1e}; {secs:.1}s",
            fits.total.r_squared,
            fits.total.slope,
            file.cases.len()
        ),
    );
    assert!(passed);
}

/// The fixture's objective α⟨w,g⟩ + φ(w−a) − ⟨∇φ(u−a), w⟩, evaluated here
/// only to align additive constants.
fn oracle_objective(w: &[f64], c: &OracleCase) -> f64 {
    let p = c.p;
    let pn = |v: &[f64]| v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let u: Vec<f64> = c.current.iter().zip(&c.anchor).map(|(a, b)| a - b).collect();
    let n = pn(&u);
    let grad: Vec<f64> = u
        .iter()
        .map(|x| if n == 0.0 { 0.0 } else { x.signum() * (x.abs() / n).powf(p - 1.0) * n / (p - 1.0) })
        .collect();
    let v: Vec<f64> = w.iter().zip(&c.anchor).map(|(a, b)| a - b).collect();
    c.step * w.iter().zip(&c.gradient).map(|(a, b)| a * b).sum::<f64>() + pn(&v).powi(2) / (2.0 * (p - 1.0))
        - grad.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
}

#[test]
fn criterion_9_property_suites() {
    let _g = serial();
    let started = Instant::now();
    let mut rng = stream(9, 0);

    // Angle and ℓ₂ distance relations for random w and unit u.
    let mut violations = 0;
    for trial in 0..10_000 {
        let d = 2 + trial % 9;
        let u = random_unit_vector(&mut rng, d);
        let scale = 10f64.powf(rand::Rng::random_range(&mut rng, -2.0..1.0));
        let w: Vec<f64> = gaussian(d).sample(&mut rng).as_slice().iter().map(|c| c * scale).collect();
        let dist = geometry::normalize(&w).unwrap().to_weight().sub(&u).norm();
        let raw = WeightVector::new(w.clone()).unwrap().sub(&u).norm();
        let theta = angle(&w, &u).unwrap();
        if dist > 2.0 * raw + 1e-12 || theta > PI * raw + 1e-12 {
            violations += 1;
        }
        let unit = normalize(&w).unwrap();
        let unit_dist = unit.to_weight().sub(&u).norm();
        if unit_dist > angle(&unit, &u).unwrap() + 1e-12 {
            violations += 1;
        }
    }

    // Dense and sparse learner runs: feasibility and exact label counts.
    let mut config = base_config(8, NoiseModel::MassartConstant { eta: 0.1 }, 0.3);
    config.profile = Profile::Desk;
    config.replicates = 2;
    let dense = experiment::run(&config).unwrap();
    let mut invariants = dense
        .rows
        .iter()
        .all(|r| r.is_ok() && r.label_calls == dense.schedule.total_labels() && r.max_excess_distance.unwrap() <= 1e-9);
    let sparse_schedule = make_schedule(
        &NoiseRegime::Massart { eta: 0.1 },
        &config.dist,
        0.3,
        0.05,
        Some(2),
        &Profile::Desk.multipliers(),
    )
    .unwrap();
    let mut sparse_rng = stream(9, 1);
    let truth = GroundTruth::random_sparse(8, 2, &mut sparse_rng).unwrap();
    let mut env = LabelingEnvironment::new(config.dist.clone(), config.noise, truth, BandSampler::Conditional).unwrap();
    let plan = *sparse_schedule.epoch(1);
    let start = {
        let mut s = vec![0.0; 8];
        s[0] = 1.0;
        s
    };
    let epoch = optimize(&start, &plan, Aggregation::Average, Mode::Sparse(2), &mut env, &mut sparse_rng).unwrap();
    invariants &= epoch.max_distance <= 4.0 * plan.proximity + 1e-9
        && epoch.max_l1_distance.unwrap() <= 8.0 * plan.proximity * 4f64.sqrt() + BREGMAN_TOLERANCE
        && env.ledger().label_calls == plan.queries;

    // Byte-identical reruns.
    let dir = tempfile::tempdir().unwrap();
    let mut small = base_config(4, NoiseModel::MassartConstant { eta: 0.2 }, 0.3);
    small.profile = Profile::Desk;
    small.replicates = 3;
    small.trace = true;
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = experiment::run(&small).unwrap();
        let path = dir.path().join(name);
        experiment::write_run(&path, &small, &out).unwrap();
        files.push((
            std::fs::read(path.join("results.csv")).unwrap(),
            std::fs::read(path.join("trace.jsonl")).unwrap(),
        ));
    }
    let identical = files[0] == files[1];

    // Exact excess error of a run agrees with Monte Carlo.
    let row = &dense.rows[0];
    let mc_check = {
        let mut r = stream(9, 2);
        let truth = GroundTruth::random(8, &mut r);
        let v = gaussian(8).sample(&mut r);
        let exact = excess_error(&v, &config.dist, &config.noise, &truth, ExcessMethod::Exact, &mut r).unwrap();
        let mc = excess_error(&v, &config.dist, &config.noise, &truth, ExcessMethod::MonteCarlo(200_000), &mut r).unwrap();
        (exact.value - mc.value).abs() <= 3.0 * mc.std_error
    };

    let secs = started.elapsed().as_secs_f64();
    let passed = violations == 0 && invariants && identical && mc_check;
    verdict(
        9,
        passed,
        format!(
            "{violations} angle/l2 violations over 10^4 pairs; feasibility and ledger invariants hold: {invariants} \
             ({} labels per dense run, final angle {:.2e}); byte-identical reruns: {identical}; {secs:.1}s",
            dense.schedule.total_labels(),
            row.final_angle.unwrap_or(f64::NAN)
        ),
    );
    assert!(passed);
}
