"""Closed-form per-slot TDM allocators.

Both solvers work on a single slot (slow fading makes all slots identical):
the MSE-minimizing allocator has a threshold structure separating full-power
from channel-inverting users, and the discriminant-maximizing allocator has a
capped structure where weak links saturate at full power and strong links
share a common gain cap.  Transmit phases always conjugate the channel phase
so every a h b product is real nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FULL_POWER = "full-power"
CAPPED = "capped"


@dataclass(frozen=True)
class TdmSolution:
    """Single-slot allocation: K transmit coefficients plus one receive coefficient."""

    transmit: np.ndarray          # (K,) complex
    receive: complex
    threshold: float              # k* (count of full-power users) or the gain cap tau*
    objective: float              # per-slot MSE (minimized) or MD (maximized)
    regimes: tuple                # per-user tag: FULL_POWER or CAPPED
    degenerate: bool = False      # all-zero channels (decision case only)

    def to_dict(self) -> dict:
        return {
            "transmit_re": np.real(self.transmit).tolist(),
            "transmit_im": np.imag(self.transmit).tolist(),
            "receive_re": float(np.real(self.receive)),
            "receive_im": float(np.imag(self.receive)),
            "threshold": self.threshold,
            "objective": self.objective,
            "regimes": list(self.regimes),
            "degenerate": self.degenerate,
        }


def _slot_mse(a: float, g: np.ndarray, var: float, noise_var: float) -> float:
    # Exact per-slot MSE once b is chosen optimally for this receive gain:
    # users with a g_k < 1 are power-limited, the rest invert the channel.
    c = np.minimum(a * g, 1.0)
    return float(var * np.sum((c - 1.0) ** 2) + a * a * noise_var)


def comp_optimal_tdm(gains: np.ndarray, budgets: np.ndarray, nu: np.ndarray,
                     var: float, noise_var: float) -> TdmSolution:
    """MSE-minimizing single-slot allocation.

    gains: (K,) complex channel gains; budgets: per-slot power budgets P_k;
    nu: per-user transmit-signal std nu_k; var: feature variance of the slot;
    noise_var: channel noise variance.
    """
    h = np.asarray(gains, dtype=complex)
    P = np.asarray(budgets, dtype=float)
    nu = np.asarray(nu, dtype=float)
    habs = np.abs(h)
    if np.any(habs == 0):
        raise ValueError("zero channel gain: computation-optimal TDM undefined")
    if np.any(P <= 0) or np.any(nu <= 0) or var <= 0 or noise_var <= 0:
        raise ValueError("budgets, nu, var and noise_var must be positive")

    # Full-power receive amplitudes, ascending: weak users misalign first.
    g = np.sqrt(P) * habs / nu
    order = np.argsort(g, kind="stable")
    gs = g[order]

    # Candidate receive gains: stationary point of each full-power prefix plus
    # every regime breakpoint 1/g_k.  The global optimum of the piecewise-smooth
    # 1-D MSE profile is attained at one of these.
    prefix_g = np.cumsum(gs)
    prefix_g2 = np.cumsum(gs ** 2)
    candidates = list(var * prefix_g / (var * prefix_g2 + noise_var))
    candidates.extend(1.0 / gs)
    best_a, best_mse = None, np.inf
    for a in candidates:
        if a <= 0:
            continue
        m = _slot_mse(a, g, var, noise_var)
        if m < best_mse - 1e-15 or (best_a is None):
            best_a, best_mse = a, m

    a = float(best_a)
    full = a * g < 1.0                       # full power cannot reach alignment
    bmag = np.where(full, np.sqrt(P) / nu, 1.0 / (a * habs))
    b = bmag * np.exp(-1j * np.angle(h))
    regimes = tuple(FULL_POWER if f else CAPPED for f in full)
    return TdmSolution(transmit=b, receive=complex(a), threshold=float(np.sum(full)),
                       objective=best_mse, regimes=regimes)


def _capped_md(tau: float, u: np.ndarray, delta_prime: float, sigma_eq_sq: float) -> float:
    c = np.minimum(u, tau)
    s = np.sum(c)
    return float(delta_prime * s * s / (np.sum(c * c) + sigma_eq_sq))


def decision_optimal_tdm(gains: np.ndarray, budgets: np.ndarray, nu: np.ndarray,
                         delta_prime: float, sigma_eq_sq: float) -> TdmSolution:
    """Discriminant-maximizing single-slot allocation (capped structure).

    delta_prime is the squared minimum mean gap normalized by the feature
    variance; sigma_eq_sq the channel noise normalized the same way.
    """
    h = np.asarray(gains, dtype=complex)
    P = np.asarray(budgets, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(P <= 0) or np.any(nu <= 0) or delta_prime < 0 or sigma_eq_sq <= 0:
        raise ValueError("invalid inputs")
    habs = np.abs(h)
    u = habs * np.sqrt(P) / nu
    if np.all(u == 0):
        zeros = np.zeros_like(h)
        return TdmSolution(transmit=zeros, receive=1.0 + 0j, threshold=0.0,
                           objective=0.0, regimes=tuple([CAPPED] * len(u)),
                           degenerate=True)

    order = np.argsort(u, kind="stable")
    us = u[order]
    K = len(us)
    # Candidate caps: every boundary u_j plus each segment's stationary point
    # tau_j = (sum_{k<=j} u_k^2 + sigma_eq^2) / sum_{k<=j} u_k, kept only when
    # it falls inside its segment (closed on the right).
    candidates = [float(x) for x in us if x > 0]
    pre_u = np.cumsum(us)
    pre_u2 = np.cumsum(us ** 2)
    for j in range(1, K):
        if pre_u[j - 1] <= 0:
            continue
        tau_j = (pre_u2[j - 1] + sigma_eq_sq) / pre_u[j - 1]
        lo, hi = us[j - 1], us[j]
        if lo < tau_j <= hi:
            candidates.append(float(tau_j))

    best_tau, best_val = None, -np.inf
    for tau in sorted(candidates):
        val = _capped_md(tau, u, delta_prime, sigma_eq_sq)
        if val > best_val + 1e-15:
            best_tau, best_val = tau, val

    tau = float(best_tau)
    c = np.minimum(u, tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        bmag = np.where(habs > 0, c / habs, 0.0)
    b = bmag * np.exp(-1j * np.angle(h))
    regimes = tuple(FULL_POWER if (uk <= tau or uk == 0) else CAPPED for uk in u)
    return TdmSolution(transmit=b, receive=1.0 + 0j, threshold=tau,
                       objective=best_val, regimes=regimes)
