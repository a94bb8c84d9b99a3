//! Per-epoch bandwidths, query budgets and step sizes.
//!
//! Epoch j targets ℓ₂ proximity r_j = 4^{−(j+1)}. Every asymptotic constant
//! is replaced by an explicit [`Multipliers`] entry.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistParams, WellBehavedDistribution};
use crate::error::{invalid, Error, Result};
use crate::oracles::{effective_tsybakov_a, NoiseModel};

/// The noise condition a schedule is tuned for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum NoiseRegime {
    /// η-Massart.
    Massart { eta: f64 },
    /// (A, α)-Tsybakov, α ∈ (1/2, 1].
    Tsybakov { a: f64, alpha: f64 },
    /// (B, α)-geometric Tsybakov, α ∈ (0, 1].
    GeometricTsybakov { b: f64, alpha: f64 },
}

impl NoiseRegime {
    /// The regime a noise generator certifies directly.
    pub fn for_noise(noise: &NoiseModel) -> Self {
        match *noise {
            NoiseModel::MassartConstant { eta } | NoiseModel::MassartBand { eta, .. } => {
                NoiseRegime::Massart { eta }
            }
            NoiseModel::GeometricTsybakov { b, alpha } => NoiseRegime::GeometricTsybakov { b, alpha },
        }
    }

    /// The plain Tsybakov regime implied by a geometric generator, with A
    /// from [`effective_tsybakov_a`].
    pub fn tsybakov_for_geometric(
        b: f64,
        alpha: f64,
        dist: &WellBehavedDistribution,
    ) -> Result<Self> {
        Ok(NoiseRegime::Tsybakov {
            a: effective_tsybakov_a(b, alpha, dist)?,
            alpha,
        })
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            NoiseRegime::Massart { .. } => "mnc",
            NoiseRegime::Tsybakov { .. } => "tnc",
            NoiseRegime::GeometricTsybakov { .. } => "gtnc",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseRegime::Massart { eta } => {
                if !(0.0..0.5).contains(&eta) {
                    return Err(invalid(format!("eta must lie in [0, 1/2), got {eta}")));
                }
            }
            NoiseRegime::Tsybakov { a, alpha } => {
                if !(alpha > 0.5 && alpha <= 1.0) {
                    return Err(Error::Unsupported(format!(
                        "Tsybakov schedules need alpha in (1/2, 1], got {alpha}"
                    )));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(invalid(format!("A must be positive, got {a}")));
                }
            }
            NoiseRegime::GeometricTsybakov { b, alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
                }
                if !(b > 0.0 && b.is_finite()) {
                    return Err(invalid(format!("B must be positive, got {b}")));
                }
            }
        }
        Ok(())
    }
}

/// Explicit stand-ins for the hidden constants of the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Multipliers {
    /// c_b, scales every bandwidth b_j.
    pub bandwidth: f64,
    /// c_T, scales every query budget T_j.
    pub queries: f64,
    /// c_S, scales the selection sample of initialization.
    pub selection: f64,
    /// c_ε, scales the initialization excess-error target ε₀.
    pub init_target: f64,
    /// c_α, scales the step size of every epoch.
    pub step: f64,
}

impl Default for Multipliers {
    fn default() -> Self {
        Self {
            bandwidth: 1.0,
            queries: 1.0,
            selection: 4.0,
            init_target: 1.0,
            step: 1.0,
        }
    }
}

impl Multipliers {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bandwidth", self.bandwidth),
            ("queries", self.queries),
            ("selection", self.selection),
            ("init_target", self.init_target),
            ("step", self.step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("multiplier {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One epoch's plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub index: usize,
    /// Target proximity r_j = 4^{−(j+1)}.
    pub proximity: f64,
    pub bandwidth: f64,
    pub queries: u64,
    pub step: f64,
}

/// A fully resolved schedule for one learning problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub regime: NoiseRegime,
    pub dim: usize,
    pub sparsity: Option<usize>,
    /// d, or s·ln d in sparse mode.
    pub effective_dim: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub multipliers: Multipliers,
    /// ε₀.
    pub init_target: f64,
    /// r₀.
    pub init_proximity: f64,
    /// k₀: each initialization trial runs epochs 0..=k₀.
    pub init_epochs: usize,
    /// N.
    pub trials: usize,
    /// m, the size of the selection sample.
    pub selection_sample: u64,
    /// r_ε.
    pub refine_proximity: f64,
    /// k_ε: refinement runs epochs 1..=k_ε.
    pub refine_epochs: usize,
    /// Plans for epochs 0..=max(k₀, k_ε).
    pub epochs: Vec<EpochPlan>,
}

impl Schedule {
    pub fn epoch(&self, j: usize) -> &EpochPlan {
        &self.epochs[j]
    }

    /// Labels spent by one initialization trial.
    pub fn trial_labels(&self) -> u64 {
        self.epochs[..=self.init_epochs].iter().map(|e| e.queries).sum()
    }

    /// Labels spent by initialization: N trials plus the selection sample.
    pub fn init_labels(&self) -> u64 {
        self.trials as u64 * self.trial_labels() + self.selection_sample
    }

    /// Labels spent by the refinement epochs 1..=k_ε.
    pub fn refine_labels(&self) -> u64 {
        self.epochs[1..=self.refine_epochs].iter().map(|e| e.queries).sum()
    }

    /// Exact label complexity of a full run.
    pub fn total_labels(&self) -> u64 {
        self.init_labels() + self.refine_labels()
    }

    /// Whether Optimize runs its sparse variant.
    pub fn sparse_level(&self) -> Option<usize> {
        self.sparsity.filter(|&s| s < self.dim)
    }
}

/// ⌈log₄(1/r)⌉.
fn epochs_for(r: f64) -> usize {
    let k = ((1.0 / r).ln() / 4f64.ln()).ceil();
    k.max(0.0) as usize
}

/// r_ε = ε/(32Uβ²ln²(12/ε)).
pub fn refine_proximity(epsilon: f64, p: &DistParams) -> f64 {
    epsilon / (32.0 * p.density_upper * p.tail_scale.powi(2) * (12.0 / epsilon).ln().powi(2))
}

/// r₀ = ε₀/(64Uβ²ln²(24/ε₀)).
pub fn init_proximity(init_target: f64, p: &DistParams) -> f64 {
    init_target / (64.0 * p.density_upper * p.tail_scale.powi(2) * (24.0 / init_target).ln().powi(2))
}

/// N = ⌈10 ln(4/δ)⌉.
pub fn trial_count(delta: f64) -> usize {
    (10.0 * (4.0 / delta).ln()).ceil() as usize
}

/// ε₀ before the c_ε multiplier and the 1/2 clip.
fn base_init_target(regime: &NoiseRegime, p: &DistParams) -> f64 {
    let mass = p.density_lower * p.radius.powi(2) / 4.0;
    match *regime {
        NoiseRegime::Massart { eta } => (1.0 - 2.0 * eta) * mass,
        NoiseRegime::Tsybakov { a, alpha } => {
            (1.0 / (2.0 * a)).powf((1.0 - alpha) / alpha) * mass.powf(1.0 / alpha)
        }
        NoiseRegime::GeometricTsybakov { b, alpha } => {
            let log_term = 12.0 * p.density_upper * p.tail_scale * (9.0 / mass).ln();
            b * (mass / 3.0).powf(1.0 / alpha) * log_term.powf(-(1.0 - alpha) / alpha)
        }
    }
}

/// (b, T) before multipliers, clipping and rounding.
fn base_epoch(regime: &NoiseRegime, p: &DistParams, r: f64) -> (f64, f64) {
    let DistParams {
        density_lower: l,
        radius: rr,
        density_upper: u,
        tail_scale: beta,
    } = *p;
    let shape = u * beta * beta / (rr * rr * l);
    match *regime {
        NoiseRegime::Massart { eta } => {
            let margin = 1.0 - 2.0 * eta;
            let b = (r * rr).min(margin * r * rr * rr * l / (u * beta));
            (b, (shape / margin).powi(2))
        }
        NoiseRegime::Tsybakov { a, alpha } => {
            let denom = 2.0 * alpha - 1.0;
            let b = (r * rr).min(
                (rr * l / a).powf((1.0 - alpha) / denom)
                    * (rr * rr * l * r / (u * beta)).powf(alpha / denom),
            );
            let first = (a / (beta * rr * l * r)).powf((2.0 - 2.0 * alpha) / denom)
                * shape.powf(2.0 * alpha / denom);
            let second = (a / (rr * rr * l * r)).powf((2.0 - 2.0 * alpha) / alpha) * shape.powi(2);
            (b, first.max(second))
        }
        NoiseRegime::GeometricTsybakov { b: gb, alpha } => {
            let b = (rr * l / (u * beta)).min(1.0) * (rr * r).min(gb * (rr * r).powf(1.0 / alpha));
            let first = shape.powi(2);
            let second = (beta * beta * u / (gb * rr * l)).powi(2)
                * rr.powf(-2.0 / alpha)
                * r.powf(-(2.0 - 2.0 * alpha) / alpha);
            (b, first.max(second))
        }
    }
}

/// Builds the schedule for a learning problem.
///
/// `sparsity = Some(s)` with 1 ≤ s < d replaces d by s·ln d in every query
/// budget and switches Optimize to its sparse variant; s ≥ d falls back to
/// the dense schedule. Sparse mode needs d ≥ 3 so that ln d > 1.
pub fn make_schedule(
    regime: &NoiseRegime,
    dist: &WellBehavedDistribution,
    epsilon: f64,
    delta: f64,
    sparsity: Option<usize>,
    multipliers: &Multipliers,
) -> Result<Schedule> {
    regime.validate()?;
    multipliers.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 0.1) {
        return Err(invalid(format!("delta must lie in (0, 1/10), got {delta}")));
    }
    let dim = dist.dim();
    let d = dim as f64;
    let effective_dim = match sparsity {
        Some(0) => return Err(invalid("sparsity must be at least 1")),
        Some(s) if s < dim => {
            if dim < 3 {
                return Err(invalid("sparse mode needs dimension at least 3"));
            }
            s as f64 * d.ln()
        }
        _ => d,
    };
    let sparse = sparsity.filter(|&s| s < dim);
    let p = dist.params();

    let init_target = (multipliers.init_target * base_init_target(regime, &p)).min(0.5);
    let init_proximity = init_proximity(init_target, &p);
    let init_epochs = epochs_for(init_proximity);
    let trials = trial_count(delta);
    let selection_sample =
        (multipliers.selection * (trials as f64 / delta).ln() / init_target.powi(2)).ceil() as u64;
    let refine_proximity = refine_proximity(epsilon, &p);
    let refine_epochs = epochs_for(refine_proximity).max(1);

    let epochs = (0..=init_epochs.max(refine_epochs))
        .map(|j| {
            let r = 4f64.powi(-(j as i32 + 1));
            let (b, t) = base_epoch(regime, &p, r);
            let bandwidth = (multipliers.bandwidth * b).min(p.radius / 2.0);
            let log_cube = (1.0 / (delta * r)).ln().powi(3);
            let queries = (multipliers.queries * effective_dim * log_cube * t).ceil().max(1.0) as u64;
            let tn = queries as f64;
            let rate = match sparse {
                Some(s) => (s as f64 * d.ln() / tn).sqrt(),
                None => (1.0 / (d * tn)).sqrt(),
            };
            let log_term = (tn * d / (delta * r * bandwidth * p.radius * p.density_lower)).ln();
            let step = multipliers.step * (r / p.tail_scale) * rate / log_term;
            EpochPlan {
                index: j,
                proximity: r,
                bandwidth,
                queries,
                step,
            }
        })
        .collect();

    Ok(Schedule {
        regime: *regime,
        dim,
        sparsity,
        effective_dim,
        epsilon,
        delta,
        multipliers: *multipliers,
        init_target,
        init_proximity,
        init_epochs,
        trials,
        selection_sample,
        refine_proximity,
        refine_epochs,
        epochs,
    })
}
