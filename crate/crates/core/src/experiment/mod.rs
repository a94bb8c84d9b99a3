//! Seeded experiment runner: replicated runs, one-axis sweeps, verification
//! and schedule previews, with CSV and JSON output.
//!
//! Replicate `i` of an experiment with seed `s` draws everything from
//! [`stream(s, i)`](crate::stream): w*, every sample, every label and the
//! Monte Carlo excess error. Rows therefore depend only on (config, seed),
//! whatever the thread count. Wall times are kept out of the CSV so reruns
//! are byte-identical.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, Overrides, Profile, RegimeKind, RunMode, SweepAxis, SweepSpec};

use crate::diagnostics::{excess_error, verify_lemma_suite, ExcessMethod};
use crate::distributions::WellBehavedDistribution;
use crate::error::{Error, Result};
use crate::geometry;
use crate::learner::{learn, EpochTrace, Schedule};
use crate::oracles::{GroundTruth, LabelingEnvironment, NoiseModel};
use crate::report::Report;
use crate::stats::{linear_fit, median, quantile, LinearFit};

/// Column order of every results CSV; documented in the README.
pub const CSV_COLUMNS: [&str; 23] = [
    "sweep_value",
    "replicate",
    "seed",
    "regime",
    "noise",
    "eta",
    "tau",
    "b",
    "alpha",
    "epsilon",
    "delta",
    "dim",
    "sparsity",
    "label_calls",
    "predicted_labels",
    "ex_calls",
    "final_angle",
    "refine_target_angle",
    "excess_error",
    "excess_std_error",
    "excess_exact",
    "max_excess_distance",
    "status",
];

/// One replicate. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: Option<f64>,
    pub replicate: u64,
    pub seed: u64,
    pub regime: String,
    pub noise: String,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub dim: usize,
    pub sparsity: Option<usize>,
    pub label_calls: u64,
    pub predicted_labels: u64,
    pub ex_calls: u64,
    pub final_angle: Option<f64>,
    /// π·r_ε, the angle the refinement stage aims below.
    pub refine_target_angle: f64,
    pub excess_error: Option<f64>,
    pub excess_std_error: Option<f64>,
    pub excess_exact: Option<bool>,
    pub max_excess_distance: Option<f64>,
    /// `ok`, or the error that stopped the replicate.
    pub status: String,
    #[serde(skip)]
    pub trace: Vec<EpochTrace>,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn noise_columns(noise: &NoiseModel) -> (&'static str, Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    match *noise {
        NoiseModel::MassartConstant { eta } => ("massart_constant", Some(eta), None, None, None),
        NoiseModel::MassartBand { eta, tau } => ("massart_band", Some(eta), Some(tau), None, None),
        NoiseModel::GeometricTsybakov { b, alpha } => ("geometric_tsybakov", None, None, Some(b), Some(alpha)),
    }
}

/// Runs replicate `replicate` of `config` against a precomputed schedule.
pub fn run_replicate(config: &ExperimentConfig, schedule: &Schedule, replicate: u64) -> ResultRow {
    let started = Instant::now();
    let mut rng = crate::stream(config.seed, replicate);
    let (noise, eta, tau, b, alpha) = noise_columns(&config.noise);
    let mut row = ResultRow {
        sweep_value: None,
        replicate,
        seed: config.seed,
        regime: schedule.regime.short_name().to_string(),
        noise: noise.to_string(),
        eta,
        tau,
        b,
        alpha,
        epsilon: config.epsilon,
        delta: config.delta,
        dim: config.dist.dim(),
        sparsity: schedule.sparse_level(),
        label_calls: 0,
        predicted_labels: schedule.total_labels(),
        ex_calls: 0,
        final_angle: None,
        refine_target_angle: std::f64::consts::PI * schedule.refine_proximity,
        excess_error: None,
        excess_std_error: None,
        excess_exact: None,
        max_excess_distance: None,
        status: "ok".into(),
        trace: Vec::new(),
        wall_time_ms: 0.0,
    };
    let truth = match schedule.sparse_level() {
        Some(s) => GroundTruth::random_sparse(config.dist.dim(), s, &mut rng),
        None => Ok(GroundTruth::random(config.dist.dim(), &mut rng)),
    };
    let outcome = truth.and_then(|truth| {
        let mut env =
            LabelingEnvironment::new(config.dist.clone(), config.noise, truth.clone(), config.sampler)?
                .with_audit(config.trace);
        let result = learn(schedule, &mut env, &mut rng);
        let ledger = env.ledger();
        row.label_calls = ledger.label_calls;
        row.ex_calls = ledger.ex_calls;
        let out = result?;
        row.trace = out.trace;
        row.max_excess_distance = Some(out.max_excess_distance);
        row.final_angle = Some(geometry::angle(&out.output, truth.w_star())?);
        let exact = config.dist.is_spherically_symmetric()
            && matches!(config.noise, NoiseModel::MassartConstant { .. });
        let method = if exact {
            ExcessMethod::Exact
        } else {
            ExcessMethod::MonteCarlo(config.excess_samples)
        };
        let excess = excess_error(&out.output, &config.dist, &config.noise, &truth, method, &mut rng)?;
        row.excess_error = Some(excess.value);
        row.excess_std_error = Some(excess.std_error);
        row.excess_exact = Some(exact);
        Ok(())
    });
    if let Err(e) = outcome {
        row.status = e.to_string();
    }
    row.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    row
}

/// Median and outer quantiles of a column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| Self {
            min: quantile(values, 0.0),
            q10: quantile(values, 0.1),
            median: median(values),
            q90: quantile(values, 0.9),
            max: quantile(values, 1.0),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub profile: String,
    pub replicates: usize,
    pub completed: usize,
    /// Completed runs with excess error ≤ ε.
    pub within_epsilon: usize,
    pub predicted_labels: u64,
    pub label_calls: Option<Quantiles>,
    pub ex_calls: Option<Quantiles>,
    pub final_angle: Option<Quantiles>,
    pub excess_error: Option<Quantiles>,
    pub wall_time_ms: Vec<f64>,
    pub total_wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub schedule: Schedule,
    pub rows: Vec<ResultRow>,
    pub summary: RunSummary,
}

fn summarize(config: &ExperimentConfig, schedule: &Schedule, rows: &[ResultRow], total_ms: f64) -> RunSummary {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    RunSummary {
        profile: config.profile.to_string(),
        replicates: rows.len(),
        completed: ok.len(),
        within_epsilon: ok
            .iter()
            .filter(|r| r.excess_error.is_some_and(|e| e <= config.epsilon))
            .count(),
        predicted_labels: schedule.total_labels(),
        label_calls: Quantiles::of(&col(&|r| Some(r.label_calls as f64))),
        ex_calls: Quantiles::of(&col(&|r| Some(r.ex_calls as f64))),
        final_angle: Quantiles::of(&col(&|r| r.final_angle)),
        excess_error: Quantiles::of(&col(&|r| r.excess_error)),
        wall_time_ms: rows.iter().map(|r| r.wall_time_ms).collect(),
        total_wall_time_ms: total_ms,
    }
}

/// Runs `config.replicates` independent replicates in parallel.
///
/// A replicate that fails (for instance with a band too thin to sample)
/// reports its error in the `status` column; the others still run.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let started = Instant::now();
    let schedule = config.schedule()?;
    let rows: Vec<ResultRow> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|i| run_replicate(config, &schedule, i))
        .collect();
    let summary = summarize(config, &schedule, &rows, started.elapsed().as_secs_f64() * 1e3);
    Ok(RunOutput { schedule, rows, summary })
}

/// The config of one sweep grid point.
pub fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    c.sweep = None;
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!("{axis:?} grid values must be positive integers, got {v}")))
        }
    };
    match (axis, &mut c.noise) {
        (SweepAxis::Eta, NoiseModel::MassartConstant { eta } | NoiseModel::MassartBand { eta, .. }) => *eta = value,
        (SweepAxis::Alpha, NoiseModel::GeometricTsybakov { alpha, .. }) => *alpha = value,
        (SweepAxis::B, NoiseModel::GeometricTsybakov { b, .. }) => *b = value,
        (SweepAxis::Epsilon, _) => c.epsilon = value,
        (SweepAxis::Dim, _) => c.dist = WellBehavedDistribution::new(c.dist.family(), as_count(value)?)?,
        (SweepAxis::Sparsity, _) => c.sparsity = Some(as_count(value)?),
        (axis, noise) => {
            return Err(Error::Config(format!("cannot sweep {axis:?} with noise {noise:?}")));
        }
    }
    c.validate()?;
    Ok(c)
}

/// How a sweep axis maps to the fitted coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// ln labels against ln x.
    LogLog,
    /// ln labels against x.
    SemiLog,
    /// labels against x.
    Linear,
}

/// The theory coordinate of a grid value and how labels are fitted against it.
pub fn theory_coordinate(config: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<(f64, FitKind)> {
    Ok(match axis {
        SweepAxis::Eta => (1.0 / (1.0 - 2.0 * value), FitKind::LogLog),
        SweepAxis::Epsilon => (1.0 / value, FitKind::LogLog),
        SweepAxis::B => (1.0 / value, FitKind::LogLog),
        SweepAxis::Sparsity => (value, FitKind::LogLog),
        SweepAxis::Dim if config.sparsity.is_some() => (value.ln(), FitKind::Linear),
        SweepAxis::Dim => (value, FitKind::LogLog),
        SweepAxis::Alpha => match config.noise_regime()? {
            crate::learner::NoiseRegime::Tsybakov { .. } => {
                ((2.0 - 2.0 * value) / (2.0 * value - 1.0), FitKind::SemiLog)
            }
            _ => ((2.0 - 2.0 * value) / value, FitKind::SemiLog),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub coordinate: f64,
    pub total_labels: u64,
    pub init_labels: u64,
    pub refine_labels: u64,
    pub refine_epochs: usize,
    /// Completed replicates with excess error ≤ ε; absent on dry runs.
    pub within_epsilon: Option<usize>,
    pub median_excess_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub kind: FitKind,
    /// Fit of total labels (initialization plus refinement).
    pub total: LinearFit,
    /// Fit of refinement labels only.
    pub refine: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub fits: Option<SweepFits>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
}

/// Minimum grid size for which slopes are reported.
pub const MIN_FIT_POINTS: usize = 3;

fn fit(kind: FitKind, x: &[f64], labels: &[u64]) -> Option<LinearFit> {
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    match kind {
        FitKind::LogLog => linear_fit(
            &x.iter().map(|v| v.ln()).collect::<Vec<_>>(),
            &y.iter().map(|v| v.ln()).collect::<Vec<_>>(),
        ),
        FitKind::SemiLog => linear_fit(x, &y.iter().map(|v| v.ln()).collect::<Vec<_>>()),
        FitKind::Linear => linear_fit(x, &y),
    }
}

/// Runs every grid point of `config.sweep` and fits labels against the
/// theory coordinate. Dry runs only build schedules.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a \"sweep\" section".into()))?;
    let mut points = Vec::with_capacity(spec.values.len());
    let mut rows = Vec::new();
    let mut kind = FitKind::LogLog;
    for &value in &spec.values {
        let point_config = sweep_point(config, spec.axis, value)?;
        let schedule = point_config.schedule()?;
        let (coordinate, k) = theory_coordinate(&point_config, spec.axis, value)?;
        kind = k;
        let (within, median_excess) = if spec.dry_run {
            (None, None)
        } else {
            let mut out = run(&point_config)?;
            out.rows.iter_mut().for_each(|r| r.sweep_value = Some(value));
            rows.extend(out.rows);
            (
                Some(out.summary.within_epsilon),
                out.summary.excess_error.map(|q| q.median),
            )
        };
        points.push(SweepPoint {
            value,
            coordinate,
            total_labels: schedule.total_labels(),
            init_labels: schedule.init_labels(),
            refine_labels: schedule.refine_labels(),
            refine_epochs: schedule.refine_epochs,
            within_epsilon: within,
            median_excess_error: median_excess,
        });
    }
    let mut warnings = Vec::new();
    let fits = if points.len() < MIN_FIT_POINTS {
        warnings.push(format!(
            "grid has {} points; slopes need at least {MIN_FIT_POINTS}",
            points.len()
        ));
        None
    } else {
        let x: Vec<f64> = points.iter().map(|p| p.coordinate).collect();
        let total: Vec<u64> = points.iter().map(|p| p.total_labels).collect();
        let refine: Vec<u64> = points.iter().map(|p| p.refine_labels).collect();
        match (fit(kind, &x, &total), fit(kind, &x, &refine)) {
            (Some(total), Some(refine)) => Some(SweepFits { kind, total, refine }),
            _ => {
                warnings.push("grid coordinates are degenerate; slopes omitted".into());
                None
            }
        }
    };
    Ok(SweepOutput {
        axis: spec.axis,
        points,
        fits,
        warnings,
        rows,
    })
}

/// Certifies the configured distribution's parameters and runs the lemma
/// suite against the configured noise.
pub fn verify(config: &ExperimentConfig) -> Result<Report> {
    let settings = &config.verify;
    let truth = GroundTruth::random(config.dist.dim(), &mut crate::stream(config.seed, u64::MAX));
    let mut report = config
        .dist
        .certify_parameters(&mut crate::stream(config.seed, u64::MAX - 1), settings.samples as usize);
    report.extend(verify_lemma_suite(&config.dist, &config.noise, &truth, settings, config.seed)?);
    Ok(report)
}

/// The schedule a run of `config` would follow.
pub fn preview_schedule(config: &ExperimentConfig) -> Result<Schedule> {
    config.schedule()
}

/// Creates `dir` and returns it.
fn ensure_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir)?;
    Ok(dir)
}

/// Writes rows as CSV with a header, even when there are no rows.
pub fn write_rows_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per epoch and replicate.
pub fn write_trace(path: &Path, rows: &[ResultRow]) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        sweep_value: Option<f64>,
        replicate: u64,
        seed: u64,
        #[serde(flatten)]
        epoch: &'a EpochTrace,
    }
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        for epoch in &row.trace {
            let line = Line {
                sweep_value: row.sweep_value,
                replicate: row.replicate,
                seed: row.seed,
                epoch,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `results.csv`, `summary.json` and, when tracing, `trace.jsonl`.
pub fn write_run(dir: &Path, config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    let dir = ensure_dir(dir)?;
    write_json(&dir.join("config.json"), config)?;
    write_rows_csv(&dir.join("results.csv"), &out.rows)?;
    write_json(&dir.join("summary.json"), &out.summary)?;
    if config.trace {
        write_trace(&dir.join("trace.jsonl"), &out.rows)?;
    }
    Ok(())
}

/// `sweep.json`, plus `results.csv` and optional `trace.jsonl` unless dry.
pub fn write_sweep(dir: &Path, config: &ExperimentConfig, out: &SweepOutput) -> Result<()> {
    let dir = ensure_dir(dir)?;
    write_json(&dir.join("config.json"), config)?;
    write_json(&dir.join("sweep.json"), out)?;
    if !config.sweep.as_ref().is_some_and(|s| s.dry_run) {
        write_rows_csv(&dir.join("results.csv"), &out.rows)?;
        if config.trace {
            write_trace(&dir.join("trace.jsonl"), &out.rows)?;
        }
    }
    Ok(())
}

/// `report.json`.
pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    write_json(&ensure_dir(dir)?.join("report.json"), report)
}

/// `schedule.json`.
pub fn write_schedule(dir: &Path, schedule: &Schedule) -> Result<()> {
    write_json(&ensure_dir(dir)?.join("schedule.json"), schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use crate::learner::Multipliers;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            WellBehavedDistribution::new(Family::IsotropicGaussian, 3).unwrap(),
            NoiseModel::MassartConstant { eta: 0.1 },
            0.3,
            0.09,
            5,
        );
        c.multipliers = Some(Multipliers {
            queries: 1.0 / 256.0,
            step: 32.0,
            ..Multipliers::default()
        });
        c
    }

    #[test]
    fn one_replicate_gives_one_row_matching_schedule() {
        let out = run(&small()).unwrap();
        assert_eq!(out.rows.len(), 1);
        let row = &out.rows[0];
        assert!(row.is_ok(), "{}", row.status);
        assert_eq!(row.label_calls, out.schedule.total_labels());
        assert_eq!(row.excess_exact, Some(true));
    }

    #[test]
    fn csv_is_byte_identical_across_reruns() {
        let mut c = small();
        c.replicates = 3;
        let dir = tempfile::tempdir().unwrap();
        let read = |name: &str| {
            let path = dir.path().join(name);
            write_rows_csv(&path, &run(&c).unwrap().rows).unwrap();
            fs::read(path).unwrap()
        };
        let a = read("a.csv");
        let b = read("b.csv");
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn header_written_without_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_rows_csv(&path, &[]).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap().trim(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn short_grid_omits_slopes_with_warning() {
        let mut c = small();
        c.sweep = Some(SweepSpec {
            axis: SweepAxis::Eta,
            values: vec![0.1, 0.2],
            dry_run: true,
        });
        let out = sweep(&c).unwrap();
        assert!(out.fits.is_none());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn sweep_axis_must_match_noise() {
        let c = small();
        assert!(sweep_point(&c, SweepAxis::Alpha, 0.75).is_err());
        assert!(sweep_point(&c, SweepAxis::Dim, 2.5).is_err());
        assert_eq!(sweep_point(&c, SweepAxis::Dim, 7.0).unwrap().dist.dim(), 7);
    }
}
