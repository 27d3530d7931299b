"""Independent brute-force reference solvers.

Used only by tests and the ``oracle`` CLI verb.  These deliberately share no
code with the production solvers beyond the domain types: every objective is
re-expressed inline, optima are found by grid scans or multi-start projected
gradient, and agreement with the closed-form/dual solvers is therefore
evidence rather than tautology.  Not performance-engineered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridResult:
    objective: float
    argopt: dict
    cell: dict          # grid cell sizes at the finest refinement level


def grid_tdm_mse(gains, budgets, nu, var: float, noise_var: float,
                 n_receive: int = 241, n_transmit: int = 400,
                 refinements: int = 3) -> GridResult:
    """Coarse-to-fine grid minimization of the single-slot aggregation MSE.

    Scans the receive gain on a log grid (refined linearly around the best
    point); for each receive gain the per-user transmit amplitude is scanned
    independently on its own power interval, which is exact because the MSE
    separates across users once the receive gain is fixed.
    """
    habs = np.abs(np.asarray(gains, dtype=complex))
    P = np.asarray(budgets, dtype=float)
    nu = np.asarray(nu, dtype=float)
    K = habs.shape[0]
    smax = np.sqrt(P)                      # amplitude in units of nu |b|
    coef = habs / nu                       # received amplitude per unit s
    s_grids = [np.linspace(0.0, smax[k], n_transmit) for k in range(K)]

    a_ref = 1.0 / np.median(coef * smax)
    a_grid = a_ref * np.logspace(-5, 5, n_receive)
    lo, hi = None, None
    best = None
    for level in range(refinements + 1):
        if level > 0:
            a_grid = np.linspace(lo, hi, n_receive)
            a_grid = a_grid[a_grid > 0]
        per_a = np.zeros(a_grid.shape[0])
        s_best = np.zeros((a_grid.shape[0], K))
        for k in range(K):
            t = a_grid[:, None] * coef[k] * s_grids[k][None, :]   # (n_a, n_s)
            mis = (t - 1.0) ** 2
            idx = np.argmin(mis, axis=1)
            per_a += var * mis[np.arange(a_grid.shape[0]), idx]
            s_best[:, k] = s_grids[k][idx]
        total = per_a + a_grid ** 2 * noise_var
        j = int(np.argmin(total))
        best = (float(total[j]), float(a_grid[j]), s_best[j])
        lo = a_grid[max(j - 1, 0)]
        hi = a_grid[min(j + 1, a_grid.shape[0] - 1)]
    obj, a_opt, s_opt = best
    cell = {
        "receive": float((hi - lo) / n_receive),
        "transmit": float(np.max(smax) / (n_transmit - 1)),
    }
    return GridResult(objective=obj,
                      argopt={"receive": a_opt, "transmit_scaled": s_opt.tolist()},
                      cell=cell)


def _min_sum_squares_at_budget(u: np.ndarray, s1: float, iters: int = 80) -> np.ndarray:
    """Minimize sum c^2 subject to sum c = s1, 0 <= c <= u (waterlevel bisection)."""
    lo, hi = 0.0, float(np.max(u))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.minimum(u, mid)) < s1:
            lo = mid
        else:
            hi = mid
    return np.minimum(u, 0.5 * (lo + hi))


def grid_tdm_md(u, delta_prime: float, sigma_eq_sq: float,
                n_grid: int | None = None, refinements: int = 2) -> GridResult:
    """Grid maximization of the capped discriminant objective, two routes.

    Route one scans the full box [0, u_1] x ... x [0, u_K] with local
    refinement; route two scans the total amplitude and solves the inner
    minimum-energy subproblem by waterlevel bisection.  Both are returned; the
    dominant one is the reported objective.
    """
    u = np.asarray(u, dtype=float)
    K = u.shape[0]
    if n_grid is None:
        n_grid = {1: 2001, 2: 201, 3: 61, 4: 27}.get(K, 15)

    def objective(c):
        s = np.sum(c, axis=-1)
        q = np.sum(c ** 2, axis=-1)
        return delta_prime * s ** 2 / (q + sigma_eq_sq)

    lo = np.zeros(K)
    hi = u.copy()
    best_c, best_val = None, -np.inf
    for _ in range(refinements + 1):
        axes = [np.linspace(lo[k], hi[k], n_grid) for k in range(K)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, K)
        vals = objective(mesh)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_c = float(vals[j]), mesh[j]
        width = (hi - lo) / (n_grid - 1)
        lo = np.maximum(best_c - 2 * width, 0.0)
        hi = np.minimum(best_c + 2 * width, u)
    cell_box = float(np.max((hi - lo) / (n_grid - 1)))

    # Second route: scan S1, inner quadratic subproblem solved exactly.
    s1_grid = np.linspace(0.0, np.sum(u), 2000)[1:]
    best2_val, best2_c = -np.inf, None
    for s1 in s1_grid:
        c = _min_sum_squares_at_budget(u, s1)
        v = float(objective(c[None, :])[0])
        if v > best2_val:
            best2_val, best2_c = v, c
    val = max(best_val, best2_val)
    arg = best_c if best_val >= best2_val else best2_c
    return GridResult(objective=val,
                      argopt={"c": np.asarray(arg).tolist(),
                              "route_box": best_val, "route_budget": best2_val},
                      cell={"box": cell_box,
                            "budget_scan": float(np.sum(u) / 2000)})


# ---------------------------------------------------------------------------
# Multi-start projected gradient for the FDM problems
# ---------------------------------------------------------------------------

def _project_rows(s: np.ndarray, radius: np.ndarray) -> np.ndarray:
    # s: (..., K, M) amplitudes in power units; row norms capped at radius_k.
    s = np.maximum(s, 0.0)
    norms = np.sqrt(np.sum(s ** 2, axis=-1, keepdims=True))
    scale = np.minimum(1.0, radius[:, None] / np.maximum(norms, 1e-300))
    return s * scale


def _fdm_objective_and_grads(s, a, coef, var, noise_var, delta, objective):
    """Objective and gradients in scaled amplitudes s = nu |b| (aligned phases)."""
    c = coef * s                                        # (..., K, M) received gains
    if objective == "mse":
        t = a[..., None, :] * c
        resid = t - 1.0
        f = np.sum(var * np.sum(resid ** 2, axis=-2)
                   + a ** 2 * noise_var, axis=-1)
        gs = 2.0 * var * resid * a[..., None, :] * coef
        ga = 2.0 * var * np.sum(resid * c, axis=-2) + 2.0 * a * noise_var
        return f, gs, ga
    s1 = np.sum(c, axis=-2)
    q = np.sum(c ** 2, axis=-2)
    den = var * q + noise_var
    f = np.sum(delta * s1 ** 2 / den, axis=-1)
    gc = 2.0 * delta * s1[..., None, :] * (den[..., None, :]
                                           - s1[..., None, :] * var * c) / den[..., None, :] ** 2
    return f, gc * coef, np.zeros_like(a)


def multistart_primal_fdm(gains, budgets, nu_sq, var_per_dim, noise_var,
                          delta_min_sq=None, objective: str = "mse",
                          starts: int = 20, iters: int = 800,
                          rng: np.random.Generator | None = None) -> dict:
    """Projected-gradient multistart on transmit/receive magnitudes.

    Phases are fixed to coherent alignment (both objectives are optimized by
    it); amplitudes live in per-user power balls, enforced by radial
    projection.  Per-start adaptive step with halving on failure.  Returns the
    best objective, its magnitudes, and per-start values.
    """
    rng = rng or np.random.default_rng(0)
    habs = np.abs(np.asarray(gains, dtype=complex))
    K, M = habs.shape
    P = np.asarray(budgets, dtype=float)
    nu_sq = np.asarray(nu_sq, dtype=float)
    var = np.asarray(var_per_dim, dtype=float)
    delta = None if delta_min_sq is None else np.asarray(delta_min_sq, dtype=float)
    if objective == "md" and delta is None:
        raise ValueError("delta_min_sq required for the md objective")
    coef = habs / np.sqrt(nu_sq)
    radius = np.sqrt(P)
    sign = -1.0 if objective == "mse" else 1.0     # descent vs ascent

    s = _project_rows(rng.random((starts, K, M)) * radius[:, None], radius)
    a_scale = 1.0 / np.median(coef * radius[:, None])
    a = rng.random((starts, M)) * 2.0 * a_scale
    step = np.full(starts, 0.25)
    f, _, _ = _fdm_objective_and_grads(s, a, coef, var, noise_var, delta, objective)
    for _ in range(iters):
        f, gs, ga = _fdm_objective_and_grads(s, a, coef, var, noise_var, delta, objective)
        gnorm = np.sqrt(np.sum(gs ** 2, axis=(-2, -1)) + np.sum(ga ** 2, axis=-1))
        gnorm = np.maximum(gnorm, 1e-300)
        stp = (step / gnorm)[:, None, None]
        s_new = _project_rows(s + sign * stp * gs, radius)
        a_new = np.maximum(a + sign * stp[:, :, 0] * ga, 0.0)
        f_new, _, _ = _fdm_objective_and_grads(s_new, a_new, coef, var, noise_var,
                                               delta, objective)
        improved = (f_new < f) if objective == "mse" else (f_new > f)
        s = np.where(improved[:, None, None], s_new, s)
        a = np.where(improved[:, None], a_new, a)
        step = np.where(improved, step * 1.1, step * 0.5)
        step = np.clip(step, 1e-14, 10.0)
    f, _, _ = _fdm_objective_and_grads(s, a, coef, var, noise_var, delta, objective)
    j = int(np.argmin(f) if objective == "mse" else np.argmax(f))
    bmag = s[j] / np.sqrt(nu_sq)
    return {
        "objective": float(f[j]),
        "transmit_mag": bmag,
        "receive": a[j],
        "per_start": f,
    }


def finite_difference_check(gains, budgets, nu_sq, var_per_dim, noise_var,
                            delta_min_sq=None, objective: str = "mse",
                            eps: float = 1e-6,
                            rng: np.random.Generator | None = None) -> float:
    """Max relative error of the analytic gradient versus central differences."""
    rng = rng or np.random.default_rng(1)
    habs = np.abs(np.asarray(gains, dtype=complex))
    K, M = habs.shape
    nu_sq = np.asarray(nu_sq, dtype=float)
    var = np.asarray(var_per_dim, dtype=float)
    delta = None if delta_min_sq is None else np.asarray(delta_min_sq, dtype=float)
    coef = habs / np.sqrt(nu_sq)
    s = rng.random((1, K, M)) + 0.1
    a = rng.random((1, M)) + 0.1
    _, gs, ga = _fdm_objective_and_grads(s, a, coef, var, noise_var, delta, objective)

    def val(sv, av):
        f, _, _ = _fdm_objective_and_grads(sv, av, coef, var, noise_var, delta,
                                           objective)
        return float(f[0])

    worst = 0.0
    for k in range(K):
        for m in range(M):
            d = np.zeros_like(s)
            d[0, k, m] = eps
            fd = (val(s + d, a) - val(s - d, a)) / (2 * eps)
            worst = max(worst, abs(fd - gs[0, k, m]) / max(abs(fd), 1e-9))
    if objective == "mse":
        for m in range(M):
            d = np.zeros_like(a)
            d[0, m] = eps
            fd = (val(s, a + d) - val(s, a - d)) / (2 * eps)
            worst = max(worst, abs(fd - ga[0, m]) / max(abs(fd), 1e-9))
    return worst
