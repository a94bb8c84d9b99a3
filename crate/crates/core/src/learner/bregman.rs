//! The p-norm Bregman step of sparse Optimize.
//!
//! With anchor a and φ(v) = ‖v‖_p²/(2(p−1)), the step solves
//!
//! ```text
//! min_{w ∈ K}  α⟨w, g⟩ + D(w, u),   D(w, u) = φ(w−a) − φ(u−a) − ⟨∇φ(u−a), w−u⟩
//! ```
//!
//! over K = {‖w − c₂‖₂ ≤ r₂} ∩ {‖w − c₁‖₁ ≤ r₁}. The unconstrained minimizer
//! is a + ∇φ*(∇φ(u−a) − αg). When it falls outside K the step is solved on
//! whichever side is smooth. For p ≥ 2, ∇φ is 1-Lipschitz and projected
//! gradient with backtracking runs on the primal. For p < 2 (d ≥ 8), ∇φ is only
//! (p−1)-Hölder while ∇φ* is 1-Lipschitz, so accelerated proximal gradient
//! runs on the dual. Dual iterates are mapped back, projected onto K, and
//! accepted once the duality gap certifies them. Projections onto K reduce
//! to a one-dimensional search over the ball's multiplier.

use crate::error::{Error, Result};
use crate::geometry::{self, distance, distance_l1};

/// Tolerance used by Optimize: on the gradient mapping for the primal
/// solver, on the relative duality gap for the dual one.
pub const BREGMAN_TOLERANCE: f64 = 1e-8;

/// Iteration cap of either solver.
pub const MAX_ITERATIONS: usize = 10_000;

/// Multiplier-search iterations of the projection onto K.
const PROJECTION_MAX_ITERATIONS: usize = 200;
/// Relative accuracy of the ball multiplier and of the ball constraint.
const PROJECTION_TOLERANCE: f64 = 1e-12;
/// Past this ball multiplier the ℓ₁ and ℓ₂ balls are taken to be disjoint.
const MAX_MULTIPLIER: f64 = 1e15;

/// Both solvers can plateau just above `tol` while the objective is already
/// flat to rounding. The primal solver also stops once its best objective
/// improved by at most STALL_FACTOR·tol (relative) over STALL_WINDOW
/// iterations. The dual solver applies the same rule to its best certified
/// gap, provided that gap is already below √tol (relative).
const STALL_WINDOW: usize = 100;
const STALL_FACTOR: f64 = 1e-3;

/// Iterations between duality-gap evaluations, each of which costs a
/// projection onto K.
const GAP_CHECK_INTERVAL: usize = 10;

/// p = ln d/(ln d − 1), the exponent whose dual is q = ln d. Needs d ≥ 3.
pub fn norm_exponent(dim: usize) -> f64 {
    let ln_d = (dim as f64).ln();
    ln_d / (ln_d - 1.0)
}

fn p_norm(v: &[f64], p: f64) -> f64 {
    let max = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * v.iter().map(|c| (c.abs() / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// φ(v) = ‖v‖_p²/(2(p−1)).
pub fn potential(v: &[f64], p: f64) -> f64 {
    p_norm(v, p).powi(2) / (2.0 * (p - 1.0))
}

/// ∇φ(v) = ‖v‖_p^{2−p}·sign(v)|v|^{p−1}/(p−1).
pub fn mirror_map(v: &[f64], p: f64, out: &mut [f64]) {
    let n = p_norm(v, p);
    if n == 0.0 {
        out.fill(0.0);
        return;
    }
    for (o, c) in out.iter_mut().zip(v) {
        *o = c.signum() * (c.abs() / n).powf(p - 1.0) * n / (p - 1.0);
    }
}

/// φ*(θ) = (p−1)‖θ‖_q²/2, the convex conjugate of [`potential`].
pub fn conjugate_potential(theta: &[f64], p: f64) -> f64 {
    (p - 1.0) * p_norm(theta, p / (p - 1.0)).powi(2) / 2.0
}

/// ∇φ*(θ) = (p−1)‖θ‖_q^{2−q}·sign(θ)|θ|^{q−1} with q = p/(p−1); inverts
/// [`mirror_map`].
pub fn inverse_mirror_map(theta: &[f64], p: f64, out: &mut [f64]) {
    let q = p / (p - 1.0);
    let n = p_norm(theta, q);
    if n == 0.0 {
        out.fill(0.0);
        return;
    }
    for (o, c) in out.iter_mut().zip(theta) {
        *o = (p - 1.0) * c.signum() * (c.abs() / n).powf(q - 1.0) * n;
    }
}

/// K = {‖w − ball_center‖₂ ≤ ball_radius} ∩ {‖w − l1_center‖₁ ≤ l1_radius}.
/// An infinite `l1_radius` leaves only the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseConstraint {
    pub ball_center: Vec<f64>,
    pub ball_radius: f64,
    pub l1_center: Vec<f64>,
    pub l1_radius: f64,
}

impl SparseConstraint {
    /// Largest constraint violation, zero when feasible.
    pub fn infeasibility(&self, w: &[f64]) -> f64 {
        let l2 = distance(w, &self.ball_center) - self.ball_radius;
        let l1 = distance_l1(w, &self.l1_center) - self.l1_radius;
        l2.max(l1).max(0.0)
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        self.infeasibility(w) == 0.0
    }

    /// Euclidean projection onto K.
    ///
    /// With a multiplier λ ≥ 0 on the ball, the minimizer of
    /// ‖x − z‖² + λ‖x − c₂‖² over the ℓ₁ ball is the ℓ₁ projection of
    /// (z + λc₂)/(1 + λ). Its distance to c₂ is nonincreasing in λ, and the
    /// projection onto K is that point at the smallest λ for which it lies in
    /// the ball. λ is found by Illinois regula falsi on a geometrically grown bracket
    /// seeded at the multiplier that is exact when the ℓ₁ ball is inactive.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let at = |lambda: f64| -> Vec<f64> {
            let mut y: Vec<f64> = z
                .iter()
                .zip(&self.ball_center)
                .map(|(a, c)| (a + lambda * c) / (1.0 + lambda))
                .collect();
            geometry::project_l1_ball_in_place(&mut y, &self.l1_center, self.l1_radius);
            y
        };
        let excess = |x: &[f64]| distance(x, &self.ball_center) - self.ball_radius;
        let x0 = at(0.0);
        let f0 = excess(&x0);
        if f0 <= 0.0 {
            return x0;
        }
        // Start from the multiplier that is exact when the ℓ₁ ball is inactive.
        let guess = (distance(z, &self.ball_center) / self.ball_radius - 1.0).max(f64::MIN_POSITIVE);
        let (mut lo, mut f_lo) = (0.0, f0);
        let mut hi = guess;
        let mut x_hi = at(hi);
        let mut f_hi = excess(&x_hi);
        while f_hi > 0.0 {
            if hi > MAX_MULTIPLIER {
                // The sets do not intersect; return the closest attempt.
                return x_hi;
            }
            (lo, f_lo) = (hi, f_hi);
            hi *= 16.0;
            x_hi = at(hi);
            f_hi = excess(&x_hi);
        }
        // Invariant: f_lo > 0 ≥ f_hi; x_hi is feasible for the ball.
        let mut side = 0i8;
        for _ in 0..PROJECTION_MAX_ITERATIONS {
            if hi - lo <= PROJECTION_TOLERANCE * hi || f_hi >= -PROJECTION_TOLERANCE * self.ball_radius {
                break;
            }
            let mut mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let x_mid = at(mid);
            let f_mid = excess(&x_mid);
            if f_mid > 0.0 {
                (lo, f_lo) = (mid, f_mid);
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                (hi, f_hi, x_hi) = (mid, f_mid, x_mid);
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
        }
        x_hi
    }
}

/// A solved Bregman step.
#[derive(Clone, Debug, PartialEq)]
pub struct BregmanSolution {
    pub point: Vec<f64>,
    /// Solver iterations; zero when the closed form was feasible.
    pub iterations: usize,
    /// Final gradient-mapping norm (p ≥ 2) or certified duality gap (p < 2).
    pub residual: f64,
    pub infeasibility: f64,
}

/// The step objective up to an additive constant.
pub fn step_objective(
    w: &[f64],
    current: &[f64],
    gradient: &[f64],
    step: f64,
    anchor: &[f64],
    p: f64,
) -> f64 {
    let v: Vec<f64> = w.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let u: Vec<f64> = current.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let mut grad_u = vec![0.0; w.len()];
    mirror_map(&u, p, &mut grad_u);
    step * geometry::dot(w, gradient) + potential(&v, p) - potential(&u, p)
        - geometry::dot(&grad_u, &v)
        + geometry::dot(&grad_u, &u)
}

/// Solves one Bregman step; see the module docs.
pub fn bregman_step(
    current: &[f64],
    gradient: &[f64],
    step: f64,
    constraint: &SparseConstraint,
    anchor: &[f64],
    p: f64,
    tol: f64,
) -> Result<BregmanSolution> {
    let d = current.len();
    let shifted: Vec<f64> = current.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let mut dual = vec![0.0; d];
    mirror_map(&shifted, p, &mut dual);
    for (t, g) in dual.iter_mut().zip(gradient) {
        *t -= step * g;
    }
    let mut free = vec![0.0; d];
    inverse_mirror_map(&dual, p, &mut free);
    for (f, a) in free.iter_mut().zip(anchor) {
        *f += a;
    }
    if constraint.contains(&free) {
        return Ok(BregmanSolution {
            point: free,
            iterations: 0,
            residual: 0.0,
            infeasibility: 0.0,
        });
    }

    if p >= 2.0 {
        solve_primal(free, &dual, constraint, anchor, p, tol)
    } else {
        solve_dual(free, &dual, constraint, anchor, p, tol)
    }
}

/// Projected gradient with backtracking on the primal, where ∇φ is
/// 1-Lipschitz in ℓ₂ when p ≥ 2.
fn solve_primal(
    free: Vec<f64>,
    dual: &[f64],
    constraint: &SparseConstraint,
    anchor: &[f64],
    p: f64,
    tol: f64,
) -> Result<BregmanSolution> {
    let d = free.len();
    // Objective up to a constant, in the shifted variable v = w − a.
    let objective = |w: &[f64]| -> f64 {
        let v: Vec<f64> = w.iter().zip(anchor).map(|(a, b)| a - b).collect();
        potential(&v, p) - geometry::dot(dual, &v)
    };
    let grad_at = |w: &[f64], out: &mut [f64]| {
        let v: Vec<f64> = w.iter().zip(anchor).map(|(a, b)| a - b).collect();
        mirror_map(&v, p, out);
        for i in 0..d {
            out[i] -= dual[i];
        }
    };

    let mut w = constraint.project(&free);
    let mut grad = vec![0.0; d];
    let mut lipschitz = 1.0;
    let mut residual = f64::INFINITY;
    let mut best = objective(&w);
    let mut history = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        grad_at(&w, &mut grad);
        let f_w = objective(&w);
        let next = loop {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a - g / lipschitz).collect();
            let candidate = constraint.project(&trial);
            let diff: Vec<f64> = candidate.iter().zip(&w).map(|(a, b)| a - b).collect();
            let model = f_w + geometry::dot(&grad, &diff) + 0.5 * lipschitz * geometry::dot(&diff, &diff);
            if objective(&candidate) <= model + 1e-14 * f_w.abs().max(1.0) || lipschitz > 1e30 {
                break candidate;
            }
            lipschitz *= 2.0;
        };
        residual = lipschitz * distance(&next, &w);
        w = next;
        best = best.min(objective(&w));
        history.push(best);
        let stalled = iteration > STALL_WINDOW
            && history[iteration - 1 - STALL_WINDOW] - best <= STALL_FACTOR * tol * best.abs().max(1.0);
        if residual <= tol || stalled {
            return Ok(BregmanSolution {
                infeasibility: constraint.infeasibility(&w),
                point: w,
                iterations: iteration,
                residual,
            });
        }
        lipschitz = (lipschitz / 2.0).max(1e-12);
    }
    Err(Error::Numerical {
        iterations: MAX_ITERATIONS,
        residual,
        infeasibility: constraint.infeasibility(&w),
    })
}

/// Accelerated proximal gradient on the dual, where ∇φ* is 1-Lipschitz in ℓ₂
/// when p ≤ 2, with backtracking and a restart whenever the dual value goes
/// up. Stops on a relative duality gap of `tol`.
fn solve_dual(
    free: Vec<f64>,
    dual: &[f64],
    constraint: &SparseConstraint,
    anchor: &[f64],
    p: f64,
    tol: f64,
) -> Result<BregmanSolution> {
    let d = free.len();
    let problem = DualProblem::new(dual, constraint, anchor, p);
    // Objective up to a constant, in the shifted variable v = w − a.
    let primal_value = |w: &[f64]| -> f64 {
        let v: Vec<f64> = w.iter().zip(anchor).map(|(a, b)| a - b).collect();
        potential(&v, p) - geometry::dot(dual, &v)
    };
    let recover = |z2: &[f64], z1: &[f64]| -> (Vec<f64>, f64) {
        let mut w = problem.primal(z2, z1);
        for (x, a) in w.iter_mut().zip(anchor) {
            *x += a;
        }
        let w = constraint.project(&w);
        let gap = primal_value(&w) + problem.value(z2, z1);
        (w, gap)
    };

    let mut z2 = vec![0.0; d];
    let mut z1 = vec![0.0; d];
    let mut y2 = z2.clone();
    let mut y1 = z1.clone();
    let mut g2 = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    let mut momentum = 1.0f64;
    let mut lipschitz = 1.0f64;
    let mut value = problem.value(&z2, &z1);
    let mut gap = f64::INFINITY;
    let mut point = free;
    // Best certified gap at each check, for the stall rule.
    let mut checks: Vec<f64> = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        let smooth_y = problem.smooth_gradient(&y2, &y1, &mut g2, &mut g1);
        let (n2, n1) = loop {
            let mut n2: Vec<f64> = y2.iter().zip(&g2).map(|(y, g)| y - g / lipschitz).collect();
            let mut n1: Vec<f64> = y1.iter().zip(&g1).map(|(y, g)| y - g / lipschitz).collect();
            shrink_l2(&mut n2, constraint.ball_radius / lipschitz);
            shrink_linf(&mut n1, constraint.l1_radius / lipschitz);
            let mut model = smooth_y;
            let mut sq = 0.0;
            for i in 0..d {
                let (a, b) = (n2[i] - y2[i], n1[i] - y1[i]);
                model += g2[i] * a + g1[i] * b;
                sq += a * a + b * b;
            }
            model += 0.5 * lipschitz * sq;
            let smooth_n = problem.smooth(&n2, &n1);
            if smooth_n <= model + 1e-15 * smooth_n.abs().max(1.0) || lipschitz > 1e30 {
                break (n2, n1);
            }
            lipschitz *= 2.0;
        };
        let next_value = problem.value(&n2, &n1);
        if next_value > value {
            momentum = 1.0;
            y2.clone_from(&z2);
            y1.clone_from(&z1);
        } else {
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            for i in 0..d {
                y2[i] = n2[i] + beta * (n2[i] - z2[i]);
                y1[i] = n1[i] + beta * (n1[i] - z1[i]);
            }
            z2 = n2;
            z1 = n1;
            momentum = next_momentum;
            value = next_value;
        }
        lipschitz = (lipschitz / 1.5).max(1e-12);
        if iteration == 1 || iteration % GAP_CHECK_INTERVAL == 0 {
            // The certified gap is not monotone along the iterates, so keep the best.
            let (candidate, candidate_gap) = recover(&z2, &z1);
            if candidate_gap < gap {
                (point, gap) = (candidate, candidate_gap);
            }
            checks.push(gap);
            let scale = primal_value(&point).abs().max(1.0);
            let window = STALL_WINDOW / GAP_CHECK_INTERVAL;
            let stalled = checks.len() > window
                && gap <= tol.sqrt() * scale
                && checks[checks.len() - 1 - window] - gap <= STALL_FACTOR * tol * scale;
            if gap <= tol * scale || stalled {
                return Ok(BregmanSolution {
                    infeasibility: constraint.infeasibility(&point),
                    point,
                    iterations: iteration,
                    residual: gap.max(0.0),
                });
            }
        }
    }
    Err(Error::Numerical {
        iterations: MAX_ITERATIONS,
        residual: gap,
        infeasibility: constraint.infeasibility(&point),
    })
}

/// The dual of min_{v ∈ K − a} φ(v) − ⟨θ, v⟩, with one multiplier per
/// constraint set:
///
/// ```text
/// min_{z₂, z₁}  φ*(θ − z₂ − z₁) + ⟨c₂ − a, z₂⟩ + r₂‖z₂‖₂ + ⟨c₁ − a, z₁⟩ + r₁‖z₁‖_∞
/// ```
///
/// ∇φ* is 1-Lipschitz in ℓ₂ because (p−1)(q−1) = 1, and v = ∇φ*(θ − z₂ − z₁)
/// recovers the primal point.
struct DualProblem<'a> {
    theta: &'a [f64],
    ball_offset: Vec<f64>,
    l1_offset: Vec<f64>,
    ball_radius: f64,
    l1_radius: f64,
    p: f64,
}

impl<'a> DualProblem<'a> {
    fn new(theta: &'a [f64], constraint: &SparseConstraint, anchor: &[f64], p: f64) -> Self {
        let offset = |c: &[f64]| c.iter().zip(anchor).map(|(c, a)| c - a).collect();
        Self {
            theta,
            ball_offset: offset(&constraint.ball_center),
            l1_offset: offset(&constraint.l1_center),
            ball_radius: constraint.ball_radius,
            l1_radius: constraint.l1_radius,
            p,
        }
    }

    fn shifted(&self, z2: &[f64], z1: &[f64]) -> Vec<f64> {
        self.theta.iter().zip(z2).zip(z1).map(|((t, a), b)| t - a - b).collect()
    }

    fn linear(&self, z2: &[f64], z1: &[f64]) -> f64 {
        geometry::dot(&self.ball_offset, z2) + geometry::dot(&self.l1_offset, z1)
    }

    fn smooth(&self, z2: &[f64], z1: &[f64]) -> f64 {
        conjugate_potential(&self.shifted(z2, z1), self.p) + self.linear(z2, z1)
    }

    /// The smooth part at (z₂, z₁); its partial gradients go to `g2`, `g1`.
    fn smooth_gradient(&self, z2: &[f64], z1: &[f64], g2: &mut [f64], g1: &mut [f64]) -> f64 {
        let shifted = self.shifted(z2, z1);
        inverse_mirror_map(&shifted, self.p, g2);
        for i in 0..shifted.len() {
            let v = g2[i];
            g2[i] = self.ball_offset[i] - v;
            g1[i] = self.l1_offset[i] - v;
        }
        conjugate_potential(&shifted, self.p) + self.linear(z2, z1)
    }

    fn value(&self, z2: &[f64], z1: &[f64]) -> f64 {
        let linf = z1.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        // An infinite ℓ₁ radius pins z₁ at zero; skip the ∞·0 term.
        let l1_term = if linf > 0.0 { self.l1_radius * linf } else { 0.0 };
        self.smooth(z2, z1) + self.ball_radius * geometry::norm(z2) + l1_term
    }

    fn primal(&self, z2: &[f64], z1: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.theta.len()];
        inverse_mirror_map(&self.shifted(z2, z1), self.p, &mut v);
        v
    }
}

/// Proximal map of t‖·‖₂.
fn shrink_l2(y: &mut [f64], t: f64) {
    let n = geometry::norm(y);
    let scale = if n > t { 1.0 - t / n } else { 0.0 };
    y.iter_mut().for_each(|c| *c *= scale);
}

/// Proximal map of t‖·‖_∞: y minus its projection onto the ℓ₁ ball of radius t.
fn shrink_linf(y: &mut [f64], t: f64) {
    let mut projected = y.to_vec();
    geometry::project_l1_ball_in_place(&mut projected, &vec![0.0; y.len()], t);
    for (c, p) in y.iter_mut().zip(&projected) {
        *c -= p;
    }
}
