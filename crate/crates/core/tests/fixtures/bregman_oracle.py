"""Regenerates bregman_oracle.json: random sparse-mode Bregman steps solved by
a conic solver (cvxpy + Clarabel), independent of the crate's projected
gradient method.

    python3 bregman_oracle.py > bregman_oracle.json
"""

import json
import math

import cvxpy as cp
import numpy as np

D = 6
S = 2
COUNT = 100


def p_norm(v, p):
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def mirror_map(v, p):
    n = p_norm(v, p)
    if n == 0.0:
        return np.zeros_like(v)
    return np.sign(v) * (np.abs(v) / n) ** (p - 1.0) * n / (p - 1.0)


def objective(w, u, g, step, a, p):
    """step<w,g> + phi(w-a) - <grad phi(u-a), w>, without constants."""
    return step * float(w @ g) + p_norm(w - a, p) ** 2 / (2 * (p - 1)) - float(mirror_map(u - a, p) @ w)


def hard_threshold(w, s):
    keep = np.argsort(-np.abs(w), kind="stable")[:s]
    out = np.zeros_like(w)
    out[keep] = w[keep]
    return out


def main():
    rng = np.random.default_rng(20240601)
    p = math.log(D) / (math.log(D) - 1.0)
    cases = []
    while len(cases) < COUNT:
        r = float(rng.choice([1 / 16, 1 / 64]))
        w1 = rng.normal(size=D)
        w1 /= np.linalg.norm(w1)
        anchor = hard_threshold(w1, S)
        ball_r = 4 * r
        l1_r = 8 * r * math.sqrt(2 * S)
        # A feasible current point: mix of anchor and w1 (both in K).
        lam = rng.uniform()
        u = lam * anchor + (1 - lam) * w1 + rng.normal(size=D) * 0.1 * r
        if np.linalg.norm(u - w1) > ball_r or np.abs(u - anchor).sum() > l1_r:
            continue
        x = rng.normal(size=D)
        y = float(rng.choice([-1.0, 1.0]))
        g = -y * x
        step = float(rng.uniform(0.05, 3.0) * r)

        w = cp.Variable(D)
        t = cp.Variable()
        grad_u = mirror_map(u - anchor, p)
        obj = step * (g @ w) + cp.square(t) / (2 * (p - 1)) - grad_u @ w
        cons = [
            cp.pnorm(w - anchor, p) <= t,
            cp.norm(w - w1, 2) <= ball_r,
            cp.norm(w - anchor, 1) <= l1_r,
        ]
        prob = cp.Problem(cp.Minimize(obj), cons)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
        if prob.status != cp.OPTIMAL:
            continue
        sol = np.asarray(w.value)
        cases.append(
            {
                "current": u.tolist(),
                "gradient": g.tolist(),
                "step": step,
                "anchor": anchor.tolist(),
                "ball_center": w1.tolist(),
                "ball_radius": ball_r,
                "l1_radius": l1_r,
                "p": p,
                "solution": sol.tolist(),
                "objective": objective(sol, u, g, step, anchor, p),
                "infeasibility": max(
                    0.0,
                    float(np.linalg.norm(sol - w1)) - ball_r,
                    float(np.abs(sol - anchor).sum()) - l1_r,
                ),
            }
        )
    print(json.dumps({"dim": D, "sparsity": S, "cases": cases}, indent=1))


if __name__ == "__main__":
    main()
