//! White-box Monte Carlo estimators and lemma checks.
//!
//! Everything here reads η(x) and w* directly and never touches a
//! [`QueryLedger`](crate::oracles::QueryLedger): these tools validate the
//! simulated environment, not the learner. Statistical checks pass when the
//! bound holds within three standard errors of the estimate.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{random_unit_vector, WellBehavedDistribution};
use crate::error::{invalid, Error, Result};
use crate::geometry::{self, UnitVector};
use crate::oracles::{sign, GroundTruth, NoiseModel};
use crate::report::{Check, Report};
use crate::stats::RunningMean;

/// Standard errors of slack granted to every statistical check.
pub const SIGMA_TOLERANCE: f64 = 3.0;

/// Monte Carlo estimate of ψ_{D,b}(w).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: u64,
}

/// ψ_{D,b}(w) = E[(1 − 2η(x))|⟨w*,x⟩|] over the band {|⟨ŵ,x⟩| ≤ b}.
///
/// Depends on `w` only through ŵ, so `w` and `2w` give identical estimates
/// from identical streams.
pub fn estimate_psi<R: Rng + ?Sized>(
    w: &impl AsRef<[f64]>,
    b: f64,
    dist: &WellBehavedDistribution,
    noise: &NoiseModel,
    truth: &GroundTruth,
    samples: u64,
    rng: &mut R,
) -> Result<PsiEstimate> {
    let w = w.as_ref();
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    if w.len() != dist.dim() {
        return Err(invalid("dimension mismatch"));
    }
    if dist.band_probability(b)? <= 0.0 {
        return Err(Error::BandTooThin {
            bandwidth: b,
            attempts: 0,
        });
    }
    let mut direction = vec![0.0; w.len()];
    geometry::normalize_into(w, &mut direction);
    let mut x = vec![0.0; w.len()];
    let mut acc = RunningMean::default();
    for _ in 0..samples {
        dist.sample_band_into(&direction, b, rng, &mut x);
        let margin = truth.margin(&x);
        acc.push((1.0 - 2.0 * noise.flip_probability(margin)) * margin.abs());
    }
    Ok(PsiEstimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        sample_count: samples,
    })
}

/// How [`excess_error`] is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcessMethod {
    /// (1 − 2η)·θ(v, w*)/π; spherically symmetric families with constant
    /// Massart noise only.
    Exact,
    /// E[1{h_v(x) ≠ h_{w*}(x)}·(1 − 2η(x))] over this many draws.
    MonteCarlo(u64),
}

/// An excess-error value with its standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// err(h_v) − err(h_{w*}).
pub fn excess_error<R: Rng + ?Sized>(
    v: &impl AsRef<[f64]>,
    dist: &WellBehavedDistribution,
    noise: &NoiseModel,
    truth: &GroundTruth,
    method: ExcessMethod,
    rng: &mut R,
) -> Result<ExcessEstimate> {
    let v = v.as_ref();
    if geometry::norm(v) == 0.0 {
        return Err(invalid("excess error is undefined for the zero vector"));
    }
    match method {
        ExcessMethod::Exact => match noise {
            NoiseModel::MassartConstant { eta } if dist.is_spherically_symmetric() => {
                Ok(ExcessEstimate {
                    value: (1.0 - 2.0 * eta) * dist.exact_disagreement(&v, truth.w_star())?,
                    std_error: 0.0,
                })
            }
            _ => Err(Error::Unsupported(
                "exact excess error needs constant Massart noise on a symmetric family".into(),
            )),
        },
        ExcessMethod::MonteCarlo(samples) => {
            if samples == 0 {
                return Err(invalid("need at least one sample"));
            }
            let mut x = vec![0.0; v.len()];
            let mut acc = RunningMean::default();
            for _ in 0..samples {
                dist.sample_into(rng, &mut x);
                let margin = truth.margin(&x);
                let disagree = sign(geometry::dot(v, &x)) != sign(margin);
                acc.push(if disagree {
                    1.0 - 2.0 * noise.flip_probability(margin)
                } else {
                    0.0
                });
            }
            Ok(ExcessEstimate {
                value: acc.mean(),
                std_error: acc.std_error(),
            })
        }
    }
}

/// Sample sizes and grids of [`verify_lemma_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSettings {
    /// Monte Carlo draws per estimate.
    pub samples: u64,
    /// Bandwidths at which ψ lower bounds are checked.
    pub psi_bandwidths: Vec<f64>,
    /// Random pairs for the disagreement bounds.
    pub pairs: usize,
    /// γ values for the disagreement upper bound.
    pub gammas: Vec<f64>,
    /// t values for the geometric-to-plain Tsybakov tail bound.
    pub tail_grid: Vec<f64>,
    /// Random v for the excess-error conversions.
    pub excess_points: usize,
    /// η used for Massart checks when the supplied noise is not Massart.
    pub massart_eta: f64,
    /// (B, α) used for Tsybakov checks when the supplied noise is not
    /// geometric Tsybakov.
    pub geometric_b: f64,
    pub geometric_alpha: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            psi_bandwidths: vec![0.05, 0.2],
            pairs: 20,
            gammas: vec![0.01, 0.1],
            tail_grid: vec![0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45],
            excess_points: 5,
            massart_eta: 0.2,
            geometric_b: 1.0,
            geometric_alpha: 0.75,
        }
    }
}

/// Noise generators exercised by the suite, one per regime.
struct Generators {
    massart_eta: f64,
    geometric_b: f64,
    alpha: f64,
    /// A for which the geometric generator satisfies plain (A, α)-Tsybakov
    /// exactly: P(|⟨w*,x⟩| ≤ s) ≤ 2·peak·s with s = (t/B)^{α/(1−α)}.
    tsybakov_a: f64,
}

impl Generators {
    fn new(noise: &NoiseModel, dist: &WellBehavedDistribution, s: &SuiteSettings) -> Self {
        let massart_eta = noise.massart_bound().unwrap_or(s.massart_eta);
        let (geometric_b, alpha) = match *noise {
            NoiseModel::GeometricTsybakov { b, alpha } if alpha < 1.0 => (b, alpha),
            _ => (s.geometric_b, s.geometric_alpha),
        };
        let tsybakov_a =
            2.0 * dist.marginal_density_peak() * geometric_b.powf(-alpha / (1.0 - alpha));
        Self {
            massart_eta,
            geometric_b,
            alpha,
            tsybakov_a,
        }
    }

    fn massart(&self) -> NoiseModel {
        NoiseModel::MassartConstant { eta: self.massart_eta }
    }

    fn geometric(&self) -> NoiseModel {
        NoiseModel::GeometricTsybakov {
            b: self.geometric_b,
            alpha: self.alpha,
        }
    }
}

/// A unit vector at angle `theta` from `base`, rotated toward a random
/// orthogonal direction.
fn at_angle<R: Rng + ?Sized>(base: &UnitVector, theta: f64, rng: &mut R) -> Vec<f64> {
    let d = base.dim();
    let mut orth = random_unit_vector(rng, d).into_weight().into_vec();
    loop {
        let along = base.dot(&orth);
        for (o, b) in orth.iter_mut().zip(base.as_slice()) {
            *o -= along * b;
        }
        let n = geometry::norm(&orth);
        if n > 1e-8 {
            orth.iter_mut().for_each(|c| *c /= n);
            break;
        }
        orth = random_unit_vector(rng, d).into_weight().into_vec();
    }
    base.as_slice()
        .iter()
        .zip(&orth)
        .map(|(b, o)| theta.cos() * b + theta.sin() * o)
        .collect()
}

type Task<'a> = Box<dyn Fn(&mut crate::Stream) -> Result<Vec<Check>> + Send + Sync + 'a>;

/// Runs every lemma check family:
///
/// * `psi_*`: ψ lower bounds for each noise regime at w with θ̃ ≥ 4b/R;
/// * `band_*`: bRL ≤ P(|⟨w,x⟩| ≤ b) ≤ 4bUβ ln(2/(bUβ)) for b ≤ R/2;
/// * `disagree_*`: LR²θ ≤ P(h_u ≠ h_v) ≤ 4Uβ²ln²(6/γ)θ + γ;
/// * `tail_*`: the plain Tsybakov tail implied by the geometric generator;
/// * `excess_*`: excess error versus disagreement for the three regimes.
///
/// Each task gets its own stream derived from `seed`, so the report is
/// identical whether tasks run serially or in parallel.
pub fn verify_lemma_suite(
    dist: &WellBehavedDistribution,
    noise: &NoiseModel,
    truth: &GroundTruth,
    settings: &SuiteSettings,
    seed: u64,
) -> Result<Report> {
    noise.validate()?;
    if truth.dim() != dist.dim() {
        return Err(invalid("dimension mismatch between w* and the distribution"));
    }
    let s = settings;
    let gens = Generators::new(noise, dist, s);
    let p = dist.params();
    let (l, rr, u, beta) = (p.density_lower, p.radius, p.density_upper, p.tail_scale);
    let n = s.samples;
    let w_star = truth.w_star();
    let mut tasks: Vec<Task<'_>> = Vec::new();

    for &b in &s.psi_bandwidths {
        let theta_min = 4.0 * b / rr;
        if theta_min > PI / 2.0 {
            continue;
        }
        let log = (2.0 / (b * u * beta)).ln();
        let gens = &gens;
        tasks.push(Box::new(move |rng| {
            let mut checks = Vec::new();
            for (k, theta) in [theta_min, (theta_min + PI / 2.0) / 2.0, PI / 2.0].into_iter().enumerate() {
                // Random sign and scale: θ̃ and ψ ignore both.
                let scale = if k % 2 == 0 { 1.7 } else { -0.6 };
                let w: Vec<f64> = at_angle(w_star, theta, rng).iter().map(|c| c * scale).collect();
                let tilde = geometry::tilde_angle(&w, w_star)?;
                let cases = [
                    (
                        "massart",
                        gens.massart(),
                        (1.0 - 2.0 * gens.massart_eta) * rr * rr * l / (128.0 * u * beta * log) * tilde,
                    ),
                    (
                        "tsybakov",
                        gens.geometric(),
                        (rr * b * l / (8.0 * gens.tsybakov_a)).powf((1.0 - gens.alpha) / gens.alpha)
                            * rr
                            * rr
                            * l
                            / (256.0 * u * beta * log)
                            * tilde,
                    ),
                    (
                        "geometric",
                        gens.geometric(),
                        rr * l / (16.0 * u * beta * log)
                            * (rr * tilde / 8.0).min(gens.geometric_b * (rr * tilde / 8.0).powf(1.0 / gens.alpha)),
                    ),
                ];
                for (name, model, bound) in cases {
                    let est = estimate_psi(&w, b, dist, &model, truth, n, rng)?;
                    checks.push(
                        Check::at_least(
                            format!("psi_{name}_b{b}_theta{tilde:.4}"),
                            est.value,
                            bound,
                            SIGMA_TOLERANCE * est.std_error,
                        )
                        .with_detail(format!("std_error {:.3e}", est.std_error)),
                    );
                }
            }
            Ok(checks)
        }));
    }

    tasks.push(Box::new(move |rng| {
        let dir = random_unit_vector(rng, dist.dim());
        let mut grid: Vec<f64> = vec![0.02, 0.05, 0.1, 0.2];
        grid.push((rr / 2.0).min(0.5));
        grid.retain(|&b| b <= rr / 2.0);
        let mut hits = vec![0u64; grid.len()];
        let mut x = vec![0.0; dist.dim()];
        for _ in 0..n {
            dist.sample_into(rng, &mut x);
            let z = dir.dot(&x).abs();
            for (h, &b) in hits.iter_mut().zip(&grid) {
                if z <= b {
                    *h += 1;
                }
            }
        }
        let mut checks = Vec::new();
        for (&b, &h) in grid.iter().zip(&hits) {
            let freq = h as f64 / n as f64;
            let se = (freq * (1.0 - freq) / n as f64).sqrt();
            checks.push(Check::at_least(format!("band_lower_b{b}"), freq, b * rr * l, SIGMA_TOLERANCE * se));
            let upper = 4.0 * b * u * beta * (2.0 / (b * u * beta)).ln();
            checks.push(Check::at_most(format!("band_upper_b{b}"), freq, upper, SIGMA_TOLERANCE * se));
        }
        Ok(checks)
    }));

    for pair in 0..s.pairs {
        let gammas = &s.gammas;
        tasks.push(Box::new(move |rng| {
            let a = random_unit_vector(rng, dist.dim());
            // Angles spread log-uniformly over [0.01, π].
            let theta = 0.01 * (100.0 * PI).powf(rng.random::<f64>());
            let v = at_angle(&a, theta, rng);
            let angle = geometry::angle(&a, &v)?;
            let mut x = vec![0.0; dist.dim()];
            let mut hits = 0u64;
            for _ in 0..n {
                dist.sample_into(rng, &mut x);
                if sign(a.dot(&x)) != sign(geometry::dot(&v, &x)) {
                    hits += 1;
                }
            }
            let freq = hits as f64 / n as f64;
            let se = (freq * (1.0 - freq) / n as f64).sqrt().max(1.0 / n as f64);
            let mut checks = vec![Check::at_least(
                format!("disagree_lower_pair{pair}"),
                freq,
                l * rr * rr * angle,
                SIGMA_TOLERANCE * se,
            )
            .with_detail(format!("angle {angle:.5}"))];
            for &gamma in gammas {
                let bound = 4.0 * u * beta * beta * (6.0 / gamma).ln().powi(2) * angle + gamma;
                checks.push(
                    Check::at_most(format!("disagree_upper_pair{pair}_gamma{gamma}"), freq, bound, SIGMA_TOLERANCE * se)
                        .with_detail(format!("angle {angle:.5}")),
                );
            }
            Ok(checks)
        }));
    }

    {
        let gens = &gens;
        let grid = &s.tail_grid;
        tasks.push(Box::new(move |rng| {
            let model = gens.geometric();
            let mut hits = vec![0u64; grid.len()];
            let mut x = vec![0.0; dist.dim()];
            for _ in 0..n {
                dist.sample_into(rng, &mut x);
                let gap = 0.5 - model.flip_probability(truth.margin(&x));
                for (h, &t) in hits.iter_mut().zip(grid) {
                    if gap <= t {
                        *h += 1;
                    }
                }
            }
            let mut checks = Vec::new();
            for (&t, &h) in grid.iter().zip(&hits) {
                let freq = h as f64 / n as f64;
                let se = (freq * (1.0 - freq) / n as f64).sqrt().max(1.0 / n as f64);
                let scaled = (t / gens.geometric_b).powf(gens.alpha / (1.0 - gens.alpha));
                let bound = 4.0 * u * beta * scaled * (2.0 / (u * beta * scaled)).ln();
                checks.push(Check::at_most(format!("tail_t{t}"), freq, bound, SIGMA_TOLERANCE * se));
            }
            Ok(checks)
        }));
    }

    for point in 0..s.excess_points {
        let gens = &gens;
        tasks.push(Box::new(move |rng| {
            // Angles spread over (0, π/2].
            let theta = PI / 2.0 * (point as f64 + 1.0) / s.excess_points as f64;
            let v = at_angle(w_star, theta, rng);
            let disagreement = dist.exact_disagreement(&v, w_star)?;
            let massart = gens.massart();
            let geometric = gens.geometric();
            let (mut exc_m, mut exc_g) = (RunningMean::default(), RunningMean::default());
            let mut x = vec![0.0; dist.dim()];
            for _ in 0..n {
                dist.sample_into(rng, &mut x);
                let margin = truth.margin(&x);
                let disagree = sign(geometry::dot(&v, &x)) != sign(margin);
                let weight = |m: &NoiseModel| if disagree { 1.0 - 2.0 * m.flip_probability(margin) } else { 0.0 };
                exc_m.push(weight(&massart));
                exc_g.push(weight(&geometric));
            }
            let alpha = gens.alpha;
            let tsy_bound = (2.0 * gens.tsybakov_a).powf(-(1.0 - alpha) / alpha) * disagreement.powf(1.0 / alpha);
            let geo_bound = gens.geometric_b
                * (disagreement / 3.0).powf(1.0 / alpha)
                * (12.0 * u * beta * (9.0 / disagreement).ln()).powf(-(1.0 - alpha) / alpha);
            Ok(vec![
                Check::at_least(
                    format!("excess_massart_v{point}"),
                    exc_m.mean(),
                    (1.0 - 2.0 * gens.massart_eta) * disagreement,
                    SIGMA_TOLERANCE * exc_m.std_error(),
                ),
                Check::at_least(format!("excess_tsybakov_v{point}"), exc_g.mean(), tsy_bound, SIGMA_TOLERANCE * exc_g.std_error()),
                Check::at_least(format!("excess_geometric_v{point}"), exc_g.mean(), geo_bound, SIGMA_TOLERANCE * exc_g.std_error()),
            ])
        }));
    }

    let results: Vec<Result<Vec<Check>>> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| task(&mut crate::stream(seed, i as u64)))
        .collect();
    let mut report = Report::default();
    for r in results {
        r?.into_iter().for_each(|c| report.push(c));
    }
    Ok(report)
}
