"""Dual-decomposition FDM allocators.

The per-user power constraints couple the subcarriers, so both the
MSE-minimizing and the discriminant-maximizing problems are solved by pricing
the power constraints with dual variables: per subcarrier a scalar monotone
equation gives the inner optimum in closed form, and the outer loop adjusts
the prices until every budget is met.  The outer loop runs a projected
subgradient warmup followed by per-user bisection sweeps (the dual is concave
and per-user power is monotone in the own price, so bisection pins
complementary slackness to machine level).

Everything is vectorized over a leading batch axis so the Monte-Carlo harness
can solve thousands of channel draws in one call; the public per-instance
functions wrap the batch of size one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aircomp import Allocation
from .model import FDM, ChannelRealization


class UnboundedReceiveGain(ValueError):
    """All dual prices are zero: the inner receive gain is unconstrained."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and iteration caps for the dual outer loop."""

    subgrad_iters: int = 60
    subgrad_step: float = 1.0          # alpha_0 in normalized price units
    gs_sweeps: int = 60
    lambda_bisect_iters: int = 60
    root_iters: int = 90
    power_rtol: float = 1e-8
    max_iter: int = 5000
    trace: bool = False
    receive_rule: str = "mmse"         # receive coefficient for decision allocations

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class DualState:
    prices: np.ndarray            # (K,) final dual variables
    power_slack: np.ndarray       # (K,) power used minus budget
    dual_value: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FdmSolution:
    alloc: Allocation
    dual_state: DualState
    objective: float
    per_subcarrier: np.ndarray    # r_n* (computation) or z_n* (decision)
    duality_gap: float            # relative gap estimate
    rescaled: bool                # primal row rescaling was needed for feasibility
    trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.dual_state.converged


def _safe_div(num, den):
    den_ok = den > 0
    return np.where(den_ok, num / np.where(den_ok, den, 1.0), 0.0)


def _bisect_root(f, target, shape, skip, root_iters, rtol=1e-14):
    """Root of the strictly decreasing f on [0, inf) with f(root) = target.

    ``skip`` marks entries whose root is pinned at zero (boundary cases).
    Returns the root array and the final bracket (lo, hi) for residual audits.
    """
    lo = np.zeros(shape)
    hi = np.ones(shape)
    need = ~skip & (f(hi) > target)
    for _ in range(200):
        if not need.any():
            break
        lo = np.where(need, hi, lo)
        hi = np.where(need, 2.0 * hi, hi)
        need = need & (f(hi) > target)
    # Shrink downward so every bracket is within a factor of two of its root.
    down = ~skip & (lo == 0.0)
    for _ in range(120):
        if not down.any():
            break
        mid = np.where(down, 0.5 * hi, hi)
        above = f(mid) > target
        lo = np.where(down & above, mid, lo)
        hi = np.where(down & ~above, mid, hi)
        down = down & ~above
    for _ in range(root_iters):
        if bool(np.all(skip | (hi - lo <= rtol * hi))):
            break
        mid = 0.5 * (lo + hi)
        go_up = f(mid) > target
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    root = np.where(skip, 0.0, 0.5 * (lo + hi))
    return root, lo, hi


class _CompProblem:
    """Inner machinery of the MSE-minimizing dual (batched)."""

    def __init__(self, habs, nu_sq, var, noise_var, budgets, root_iters=90,
                 root_rtol=1e-14):
        self.H = habs                      # (T, K, M)
        self.H2 = habs ** 2
        self.nu_sq = nu_sq                 # (K, M)
        self.var = var                     # (M,)
        self.noise_var = noise_var
        self.budgets = budgets             # (K,)
        self.root_iters = root_iters
        self.root_rtol = root_rtol
        self.maximize = False

    def subset(self, idx):
        return _CompProblem(self.H[idx], self.nu_sq, self.var, self.noise_var,
                            self.budgets, self.root_iters, self.root_rtol)

    def solve_inner(self, lam):
        """Per-subcarrier receive power r_n*(lambda) by monotone bisection."""
        lam3 = lam[..., None]
        A = self.var * self.H2             # coefficient of r in the denominator
        B = lam3 * self.nu_sq

        def f(r):
            den = (A * r[..., None, :] + B) ** 2
            return np.sum(_safe_div(B * A * self.var, den), axis=-2)

        f0 = np.sum(_safe_div(self.var ** 2 * self.H2, B), axis=-2)
        # A zero-priced user cancels its term exactly at any r > 0, so the
        # objective drops discontinuously when leaving the r = 0 boundary.
        free = np.any((B == 0.0) & (self.H2 > 0.0), axis=-2)
        f0 = np.where(free, np.inf, f0)
        skip = f0 <= self.noise_var        # stationary point at the r = 0 boundary
        r, _, _ = _bisect_root(f, self.noise_var, f0.shape, skip,
                               self.root_iters, self.root_rtol)
        return r, (A, B)

    def transmit_mags(self, lam, r, cache):
        A, B = cache
        r3 = r[..., None, :]
        return _safe_div(self.var * np.sqrt(r3) * self.H, A * r3 + B)

    def power(self, lam, root_iters=None):
        r, cache = self.solve_inner(lam)
        bmag = self.transmit_mags(lam, r, cache)
        power = np.sum(self.nu_sq * bmag ** 2, axis=-1)
        allzero = np.all(lam <= 0.0, axis=-1)
        if allzero.any():
            # With every price at zero the inner infimum pushes |b| to infinity.
            power = np.where(allzero[..., None], np.inf, power)
        return power

    def dual_value(self, lam):
        r, (A, B) = self.solve_inner(lam)
        r3 = r[..., None, :]
        phi = np.sum(_safe_div(B * self.var, A * r3 + B), axis=-2) + r * self.noise_var
        return np.sum(phi, axis=-1) - np.sum(lam * self.budgets, axis=-1)


class _DecisionProblem:
    """Inner machinery of the discriminant-maximizing dual (batched)."""

    def __init__(self, habs, nu_sq, var, noise_var, budgets, delta_min_sq,
                 root_iters=90, root_rtol=1e-14):
        self.H = habs
        self.H2 = habs ** 2
        self.nu_sq = nu_sq
        self.var = var
        self.noise_var = noise_var
        self.budgets = budgets
        self.delta = delta_min_sq          # (M,) squared minimum gaps
        self.root_iters = root_iters
        self.root_rtol = root_rtol
        self.maximize = True

    def subset(self, idx):
        return _DecisionProblem(self.H[idx], self.nu_sq, self.var,
                                self.noise_var, self.budgets, self.delta,
                                self.root_iters, self.root_rtol)

    def solve_inner(self, lam):
        lam3 = lam[..., None]
        B = lam3 * self.nu_sq
        A2 = self.delta * self.var * self.H2   # coefficient of z^2 in the denominator
        target = np.where(self.delta > 0, _safe_div(np.full_like(self.delta, self.noise_var),
                                                    self.delta), np.inf)

        def f(z):
            den = (B + A2 * (z[..., None, :] ** 2)) ** 2
            return np.sum(_safe_div(B * self.H2, den), axis=-2)

        f0 = np.sum(_safe_div(self.H2, B), axis=-2)
        skip = (f0 <= target) | (self.delta <= 0)  # subcarrier carries no content
        z, _, _ = _bisect_root(f, target, f0.shape, skip,
                               self.root_iters, self.root_rtol)
        return z, (B, A2)

    def transmit_mags(self, lam, z, cache):
        B, A2 = cache
        z3 = z[..., None, :]
        return _safe_div(self.delta * self.H * z3, B + A2 * z3 ** 2)

    def power(self, lam, root_iters=None):
        z, cache = self.solve_inner(lam)
        bmag = self.transmit_mags(lam, z, cache)
        power = np.sum(self.nu_sq * bmag ** 2, axis=-1)
        allzero = np.all(lam <= 0.0, axis=-1)
        if allzero.any():
            power = np.where(allzero[..., None], np.inf, power)
        return power

    def dual_value(self, lam):
        z, cache = self.solve_inner(lam)
        bmag = self.transmit_mags(lam, z, cache)
        c = self.H * bmag
        s = np.sum(c, axis=-2)
        q = np.sum(c ** 2, axis=-2)
        gain = _safe_div(self.delta * s ** 2, self.var * q + self.noise_var)
        penalty = np.sum(lam[..., None] * self.nu_sq * bmag ** 2, axis=-2)
        psi = np.maximum(gain - penalty, 0.0)   # b = 0 is always available
        return np.sum(psi, axis=-1) + np.sum(lam * self.budgets, axis=-1)


ROOT_ITERS_DEFAULT = 90


def _dual_outer(problem, opts: SolverOptions):
    """Shared outer loop: subgradient warmup then per-user bisection sweeps.

    Returns (lam (T, K), power (T, K), iterations, converged (T,), trace).
    """
    P = problem.budgets
    T = problem.H.shape[0]
    K = P.shape[0]
    lam0 = problem.noise_var / P                       # initial price scale
    lam = np.tile(lam0, (T, 1))
    floor = 1e-14 * lam0
    iters = 0
    trace = []

    # Phase 1: projected subgradient with diminishing step in normalized prices.
    scaled = lam / lam0
    for t in range(1, opts.subgrad_iters + 1):
        power = problem.power(lam)
        viol = (power - P) / P
        viol = np.where(np.isfinite(viol), viol, 1.0)
        scaled = np.maximum(scaled + (opts.subgrad_step / np.sqrt(t)) * viol, 0.0)
        lam = np.maximum(scaled * lam0, floor)
        iters += 1
        if opts.trace:
            trace.append((iters, float(np.mean(problem.dual_value(lam))),
                          float(np.max(viol))))

    # Phase 2: Gauss-Seidel bisection per user. Own-price power is monotone
    # decreasing (the dual is concave), so each 1-D solve is exact.  Trials
    # whose budgets are already matched drop out of the working batch.
    idx = np.arange(T)
    for sweep in range(opts.gs_sweeps):
        sub = problem if idx.size == T else problem.subset(idx)
        lam_sub = lam[idx]
        for k in range(K):
            lam_sub = _price_bisect(sub, lam_sub, k, floor, opts)
        lam[idx] = lam_sub
        power_sub = sub.power(lam_sub)
        iters += 1
        rel = np.abs(power_sub - P) / P
        active = lam_sub > 1e3 * floor
        over = power_sub > P * (1 + opts.power_rtol)
        bad = np.any(over | (active & (rel > opts.power_rtol)), axis=-1)
        if opts.trace:
            trace.append((iters, float(np.mean(problem.dual_value(lam))),
                          float(np.max((problem.power(lam) - P) / P))))
        idx = idx[bad]
        if idx.size == 0:
            break

    power = problem.power(lam)
    rel = np.abs(power - P) / P
    active = lam > 1e3 * floor
    converged = np.all((power <= P * (1 + 10 * opts.power_rtol))
                       & (~active | (rel <= 10 * opts.power_rtol)), axis=-1)
    return lam, power, iters, converged, trace


def _price_bisect(problem, lam, k, floor, opts: SolverOptions):
    """Solve power_k(lam_k) = P_k for every batch entry at fixed other prices."""
    P = problem.budgets
    T, K = lam.shape

    def pk(x):
        trial = lam.copy()
        trial[:, k] = x
        return problem.power(trial)[:, k]

    # Zero-price test: users whose budget is slack at lam_k = 0 get price 0.
    # Only meaningful for the minimization dual: in the maximization problem
    # every budget binds (the objective grows under uniform scaling) and the
    # inner supremum at a zero price is not attained, so the probe is skipped.
    if K > 1 and not problem.maximize:
        others_positive = np.any(np.delete(lam, k, axis=1) > 0, axis=1)
        p0 = pk(np.zeros(T))
        at_zero = others_positive & (p0 <= P[k])
    else:
        at_zero = np.zeros(T, dtype=bool)

    x = np.maximum(lam[:, k], floor[k])
    # Bracket: expand up while power is above budget, down while below.
    lo = x.copy()
    hi = x.copy()
    p = pk(x)
    need_up = ~at_zero & (p > P[k])
    for _ in range(80):
        if not need_up.any():
            break
        lo = np.where(need_up, hi, lo)
        hi = np.where(need_up, hi * 4.0, hi)
        need_up = need_up & (pk(hi) > P[k])
    need_dn = ~at_zero & (p < P[k])
    for _ in range(80):
        if not need_dn.any():
            break
        hi = np.where(need_dn, lo, hi)
        lo = np.where(need_dn, lo / 4.0, lo)
        need_dn = need_dn & (pk(lo) < P[k]) & (lo > floor[k])
    for _ in range(opts.lambda_bisect_iters):
        if bool(np.all(at_zero | (hi - lo <= 0.01 * opts.power_rtol
                                  * np.maximum(hi, floor[k])))):
            break
        mid = 0.5 * (lo + hi)
        above = pk(mid) > P[k]
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = lam.copy()
    out[:, k] = np.where(at_zero, 0.0, 0.5 * (lo + hi))
    return out


def _phase_align(habs_gains):
    return np.exp(-1j * np.angle(habs_gains))


def _polish_comp_primal(bmag, habs, nu_sq, var, noise_var, budgets,
                        rounds=40, bisect_iters=60, rtol=1e-12):
    """Block-coordinate descent on the computation objective.

    Alternates the closed-form receive amplitude with per-user transmit
    updates (projection onto the power ball via a scalar multiplier found by
    bisection).  Every step decreases the objective, so this can only improve
    a feasible allocation recovered from the dual.  Batched over the leading
    trial axis.
    """
    K = habs.shape[-2]
    P = np.broadcast_to(budgets, bmag.shape[:-2] + (K,))

    def receive(b):
        c = habs * b
        s = np.sum(c, axis=-2)
        q = np.sum(c ** 2, axis=-2)
        return _safe_div(var * s, var * q + noise_var)

    def objective(b, a):
        mis = np.sum((a[..., None, :] * habs * b - 1.0) ** 2, axis=-2)
        return np.sum(var * mis + a ** 2 * noise_var, axis=-1)

    a = receive(bmag)
    prev = objective(bmag, a)
    for _ in range(rounds):
        for k in range(K):
            ah = a * habs[..., k, :]
            num = var * ah               # unconstrained minimizer numerator
            den0 = var * ah ** 2
            nu_k = nu_sq[k]

            def pk(mu):
                bk = _safe_div(num, den0 + mu[..., None] * nu_k)
                return np.sum(nu_k * bk ** 2, axis=-1)

            mu = np.zeros(bmag.shape[:-2])
            over = pk(mu) > P[..., k]
            if over.any():
                lo = np.zeros_like(mu)
                hi = np.ones_like(mu)
                grow = over & (pk(hi) > P[..., k])
                for _ in range(200):
                    if not grow.any():
                        break
                    lo = np.where(grow, hi, lo)
                    hi = np.where(grow, hi * 4.0, hi)
                    grow = grow & (pk(hi) > P[..., k])
                for _ in range(bisect_iters):
                    mid = 0.5 * (lo + hi)
                    above = pk(mid) > P[..., k]
                    lo = np.where(above, mid, lo)
                    hi = np.where(above, hi, mid)
                mu = np.where(over, 0.5 * (lo + hi), 0.0)
            bmag[..., k, :] = _safe_div(num, den0 + mu[..., None] * nu_k)
        a = receive(bmag)
        cur = objective(bmag, a)
        if np.all(prev - cur <= rtol * np.maximum(prev, 1e-300)):
            prev = cur
            break
        prev = cur
    return bmag, a, prev


def _mmse_receive(c, var, noise_var):
    """Scalar MMSE receive coefficient given aligned gains c = |h b| per user."""
    s = np.sum(c, axis=-2)
    q = np.sum(c ** 2, axis=-2)
    return _safe_div(var * s, var * q + noise_var)


def solve_fdm_batch(gains, budgets, nu_sq, var_per_dim, noise_var,
                    delta_min_sq=None, objective="mse",
                    opts: SolverOptions | None = None) -> dict:
    """Batched dual solve over a leading trial axis.

    gains: (T, K, M) complex; returns a dict of batched arrays (transmit
    magnitudes, receive coefficients, objective, convergence metadata).
    """
    opts = opts or SolverOptions()
    gains = np.asarray(gains, dtype=complex)
    habs = np.abs(gains)
    budgets = np.asarray(budgets, dtype=float)
    nu_sq = np.asarray(nu_sq, dtype=float)
    var = np.asarray(var_per_dim, dtype=float)

    if objective == "mse":
        problem = _CompProblem(habs, nu_sq, var, noise_var, budgets,
                               root_iters=opts.root_iters,
                               root_rtol=min(1e-12, 1e-4 * opts.power_rtol))
    elif objective == "md":
        if delta_min_sq is None:
            raise ValueError("delta_min_sq required for the decision objective")
        problem = _DecisionProblem(habs, nu_sq, var, noise_var, budgets,
                                   np.asarray(delta_min_sq, dtype=float),
                                   root_iters=opts.root_iters,
                                   root_rtol=min(1e-12, 1e-4 * opts.power_rtol))
    else:
        raise ValueError("objective must be 'mse' or 'md'")

    lam, power, iters, converged, trace = _dual_outer(problem, opts)
    inner, cache = problem.solve_inner(lam)
    bmag = problem.transmit_mags(lam, inner, cache)

    # Primal recovery: scale any over-budget row down to its boundary.
    used = np.sum(nu_sq * bmag ** 2, axis=-1)
    scale = np.sqrt(np.minimum(1.0, _safe_div(np.broadcast_to(budgets, used.shape),
                                              np.where(used > 0, used, 1.0))))
    scale = np.where(used > budgets, scale, 1.0)
    rescaled = np.any(scale < 1.0, axis=-1)
    bmag = bmag * scale[..., None]

    if objective == "mse":
        # The dual can carry a small residual gap; a monotone block-coordinate
        # pass tightens the recovered primal without leaving the feasible set.
        bmag, a, obj = _polish_comp_primal(bmag, habs, nu_sq, var, noise_var,
                                           budgets)
        c = habs * bmag
    else:
        c = habs * bmag
        if opts.receive_rule == "normalize":
            # Unit end-to-end gain per dimension: a sum_k h b = K.
            s = np.sum(c, axis=-2)
            a = _safe_div(np.full_like(s, float(habs.shape[1])), s)
        else:
            a = _mmse_receive(c, var, noise_var)
        s = np.sum(c, axis=-2)
        q = np.sum(c ** 2, axis=-2)
        obj = np.sum(_safe_div(problem.delta * s ** 2, var * q + noise_var), axis=-1)

    dual = problem.dual_value(lam)
    power = np.sum(nu_sq * bmag ** 2, axis=-1)
    if objective == "mse":
        gap = (obj - dual) / np.maximum(np.abs(obj), 1e-300)
    else:
        gap = (dual - obj) / np.maximum(np.abs(obj), 1e-300)

    return {
        "transmit_mag": bmag,
        "receive": a,
        "phases": _phase_align(gains),
        "objective": obj,
        "prices": lam,
        "power": power,
        "dual_value": dual,
        "duality_gap": gap,
        "per_subcarrier": inner,
        "iterations": iters,
        "converged": converged,
        "rescaled": rescaled,
        "trace": trace,
    }


def _build_solution(result, gains, budgets, scheme_objective) -> FdmSolution:
    bmag = result["transmit_mag"][0]
    b = bmag * np.exp(-1j * np.angle(gains))
    a = result["receive"][0].astype(complex)
    alloc = Allocation(transmit=b, receive=a, scheme=FDM)
    state = DualState(
        prices=result["prices"][0],
        power_slack=result["power"][0] - np.asarray(budgets, dtype=float),
        dual_value=float(result["dual_value"][0]),
        iterations=int(result["iterations"]),
        converged=bool(result["converged"][0]),
    )
    return FdmSolution(
        alloc=alloc,
        dual_state=state,
        objective=float(result["objective"][0]),
        per_subcarrier=result["per_subcarrier"][0],
        duality_gap=float(result["duality_gap"][0]),
        rescaled=bool(result["rescaled"][0]),
        trace=result["trace"],
    )


def comp_optimal_fdm(channels: ChannelRealization, budgets, nu_sq, var_per_dim,
                     noise_var, opts: SolverOptions | None = None) -> FdmSolution:
    """MSE-minimizing FDM allocation via Lagrange dual decomposition."""
    gains = channels.gains
    result = solve_fdm_batch(gains[None], budgets, nu_sq, var_per_dim, noise_var,
                             objective="mse", opts=opts)
    return _build_solution(result, gains, budgets, "mse")


def decision_optimal_fdm(channels: ChannelRealization, budgets, nu_sq, delta_min_sq,
                         var_per_dim, noise_var,
                         opts: SolverOptions | None = None) -> FdmSolution:
    """Discriminant-maximizing FDM allocation via Lagrange dual decomposition."""
    gains = channels.gains
    result = solve_fdm_batch(gains[None], budgets, nu_sq, var_per_dim, noise_var,
                             delta_min_sq=delta_min_sq, objective="md", opts=opts)
    return _build_solution(result, gains, budgets, "md")


# ---------------------------------------------------------------------------
# Per-subcarrier scalar operations (public contracts, also used in tests)
# ---------------------------------------------------------------------------

def inner_b_comp(lam_k: float, a_n: complex, h_kn: complex, var_n: float,
                 nu_sq_kn: float) -> complex:
    """Inner transmit coefficient minimizing the priced per-subcarrier MSE term."""
    if lam_k < 0:
        raise ValueError("dual price must be nonnegative")
    den = var_n * abs(a_n) ** 2 * abs(h_kn) ** 2 + lam_k * nu_sq_kn
    if den == 0:
        return 0.0 + 0.0j
    mag = var_n * abs(a_n * h_kn) / den
    return mag * np.exp(-1j * np.angle(a_n * h_kn))


def solve_rn(lam, h_col, nu_sq_col, var_n: float, noise_var: float,
             root_iters: int = 90):
    """Unique nonnegative root r of the receive-power stationarity equation.

    Returns (r, boundary_flag, residual).  Raises UnboundedReceiveGain when
    every price is zero.
    """
    lam = np.asarray(lam, dtype=float)
    if np.all(lam == 0):
        raise UnboundedReceiveGain("all dual prices are zero on this subcarrier")
    habs2 = np.abs(np.asarray(h_col, dtype=complex)) ** 2
    nu2 = np.asarray(nu_sq_col, dtype=float)
    B = lam * nu2

    def f(r):
        r = np.asarray(r).reshape(-1, 1)
        val = np.sum(_safe_div(B * habs2 * var_n ** 2, (var_n * r * habs2 + B) ** 2),
                     axis=-1)
        return val

    f0 = float(np.sum(_safe_div(var_n ** 2 * habs2, B)))
    if f0 <= noise_var:
        return 0.0, True, abs(f0 - noise_var)
    root, _, _ = _bisect_root(lambda r: f(r).reshape(r.shape), noise_var,
                              (1,), np.zeros(1, dtype=bool), root_iters)
    r = float(root[0])
    return r, False, float(abs(f(np.array([r]))[0] - noise_var))


def inner_b_decision(lam_k: float, h_kn: complex, nu_sq_kn: float,
                     delta_sq_n: float, var_n: float, z_n: float) -> float:
    """Inner transmit magnitude of the priced per-subcarrier discriminant term."""
    if lam_k < 0 or z_n < 0:
        raise ValueError("dual price and z must be nonnegative")
    habs = abs(h_kn)
    den = lam_k * nu_sq_kn + delta_sq_n * var_n * habs ** 2 * z_n ** 2
    if den == 0:
        return 0.0
    return delta_sq_n * habs * z_n / den


def solve_zn(lam, h_col, nu_sq_col, delta_sq_n: float, var_n: float,
             noise_var: float, root_iters: int = 90):
    """Nonnegative root z of the discriminant stationarity equation.

    Returns (z, off_flag, root_residual, fixed_point_residual).  The fixed
    point definition z = sum|h b| / (var sum|h b|^2 + noise) is re-evaluated
    at the returned point and its relative mismatch reported.
    """
    lam = np.asarray(lam, dtype=float)
    if np.all(lam == 0):
        raise UnboundedReceiveGain("all dual prices are zero on this subcarrier")
    habs = np.abs(np.asarray(h_col, dtype=complex))
    habs2 = habs ** 2
    nu2 = np.asarray(nu_sq_col, dtype=float)
    B = lam * nu2
    if delta_sq_n <= 0:
        return 0.0, True, 0.0, 0.0
    target = noise_var / delta_sq_n

    def f(z):
        z = np.asarray(z).reshape(-1, 1)
        den = (B + delta_sq_n * var_n * habs2 * z ** 2) ** 2
        return np.sum(_safe_div(B * habs2, den), axis=-1)

    f0 = float(np.sum(_safe_div(habs2, B)))
    if f0 <= target:
        return 0.0, True, abs(f0 - target), 0.0
    root, _, _ = _bisect_root(lambda z: f(z).reshape(z.shape), target,
                              (1,), np.zeros(1, dtype=bool), root_iters)
    z = float(root[0])
    bmag = np.array([inner_b_decision(lk, hk, nk, delta_sq_n, var_n, z)
                     for lk, hk, nk in zip(lam, h_col, nu2)])
    c = habs * bmag
    z_def = float(np.sum(c) / (var_n * np.sum(c ** 2) + noise_var))
    fp_res = abs(z_def - z) / max(z, 1e-300)
    return z, False, float(abs(f(np.array([z]))[0] - target)), fp_res
