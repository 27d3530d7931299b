"""Over-the-air aggregation and the two proxy metrics.

Implements the linear AirComp receive model, the aggregation mean squared
error, the per-dimension Mahalanobis discriminant of the received features,
and the margin-based accuracy lower bound.  All metric functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TDM, ChannelRealization, ClassModel
from .sensing import FeatureSample

POWER_SLACK = 1e-6  # relative slack tolerated by the feasibility audit


@dataclass(frozen=True)
class Allocation:
    """Transceiver coefficients: (K, M) transmit and (M,) receive, plus scheme tag."""

    transmit: np.ndarray
    receive: np.ndarray
    scheme: str

    def __post_init__(self):
        b = np.asarray(self.transmit, dtype=complex)
        a = np.asarray(self.receive, dtype=complex)
        if b.ndim != 2 or a.shape != (b.shape[1],):
            raise ValueError("transmit must be (K, M) and receive (M,)")
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "transmit", b)
        object.__setattr__(self, "receive", a)

    def power_used(self, nu_sq: np.ndarray) -> np.ndarray:
        """Per-user transmit power sum_n |b_{k,n}|^2 nu_{k,n}^2."""
        return np.sum(np.abs(self.transmit) ** 2 * nu_sq, axis=1)

    def is_power_feasible(self, nu_sq: np.ndarray, budgets: np.ndarray,
                          rel_slack: float = POWER_SLACK) -> bool:
        return bool(np.all(self.power_used(nu_sq) <= np.asarray(budgets) * (1 + rel_slack)))

    def is_constant_across_slots(self, tol: float = 1e-12) -> bool:
        b0 = self.transmit[:, :1]
        a0 = self.receive[:1]
        return bool(np.all(np.abs(self.transmit - b0) <= tol)
                    and np.all(np.abs(self.receive - a0) <= tol))


@dataclass(frozen=True)
class ProxyReport:
    """Both proxies for one allocation; totals are exact sums over dimensions."""

    mse_per_dim: np.ndarray
    md_per_dim: np.ndarray

    @property
    def mse_total(self) -> float:
        return float(np.sum(self.mse_per_dim))

    @property
    def md_total(self) -> float:
        return float(np.sum(self.md_per_dim))

    def to_dict(self) -> dict:
        return {
            "mse_total": self.mse_total,
            "mse_per_dim": np.asarray(self.mse_per_dim).tolist(),
            "md_total": self.md_total,
            "md_per_dim": np.asarray(self.md_per_dim).tolist(),
        }


def aggregate(sample, channels: ChannelRealization, alloc: Allocation,
              channel_noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Received vector y_hat_n = a_n (sum_k h b x_k,n) + a_n w_n with fresh CSCG noise.

    ``sample`` may be a FeatureSample or a raw (K, M) real array of per-user
    transmitted features.
    """
    feats = sample.per_user if isinstance(sample, FeatureSample) else np.asarray(sample)
    h = channels.gains
    superposed = np.sum(h * alloc.transmit * feats, axis=0)
    w = np.sqrt(channel_noise_var / 2.0) * (
        rng.standard_normal(h.shape[1]) + 1j * rng.standard_normal(h.shape[1]))
    return alloc.receive * (superposed + w)


def mse_per_dim(alloc: Allocation, channels: ChannelRealization,
                var_per_dim: np.ndarray, channel_noise_var: float) -> np.ndarray:
    """MSE_n = var_n sum_k |a_n h_{k,n} b_{k,n} - 1|^2 + |a_n|^2 noise."""
    g = alloc.receive[None, :] * channels.gains * alloc.transmit
    misalign = np.sum(np.abs(g - 1.0) ** 2, axis=0)
    return np.asarray(var_per_dim) * misalign + np.abs(alloc.receive) ** 2 * channel_noise_var


def mse_total(alloc: Allocation, channels: ChannelRealization,
              var_per_dim: np.ndarray, channel_noise_var: float) -> float:
    return float(np.sum(mse_per_dim(alloc, channels, var_per_dim, channel_noise_var)))


def md_per_dim(alloc: Allocation, channels: ChannelRealization,
               delta_min_sq: np.ndarray, var_per_dim: np.ndarray,
               channel_noise_var: float) -> np.ndarray:
    """Per-dimension discriminant of the received feature; independent of the receive side.

    G_m = |sum_k h b|^2 delta_min_sq_m / (var_m sum_k |h b|^2 + noise).
    """
    hb = channels.gains * alloc.transmit
    num = np.abs(np.sum(hb, axis=0)) ** 2 * np.asarray(delta_min_sq)
    den = np.asarray(var_per_dim) * np.sum(np.abs(hb) ** 2, axis=0) + channel_noise_var
    return num / den


def md_total(alloc: Allocation, channels: ChannelRealization, delta_min_sq: np.ndarray,
             var_per_dim: np.ndarray, channel_noise_var: float) -> float:
    return float(np.sum(md_per_dim(alloc, channels, delta_min_sq, var_per_dim,
                                   channel_noise_var)))


def proxy_report(alloc: Allocation, channels: ChannelRealization, delta_min_sq: np.ndarray,
                 var_per_dim: np.ndarray, channel_noise_var: float) -> ProxyReport:
    return ProxyReport(
        mse_per_dim=mse_per_dim(alloc, channels, var_per_dim, channel_noise_var),
        md_per_dim=md_per_dim(alloc, channels, delta_min_sq, var_per_dim,
                              channel_noise_var),
    )


def pairwise_md(class_model: ClassModel, first: int, second: int,
                dim: int | None = None) -> float:
    """Mahalanobis distance between two classes, total or for a single dimension."""
    diff_sq = (class_model.means[first] - class_model.means[second]) ** 2
    per_dim = diff_sq / class_model.covariance_diag
    if dim is not None:
        return float(per_dim[dim])
    return float(np.sum(per_dim))


def min_pairwise_md(class_model: ClassModel) -> float:
    """Minimum inter-class Mahalanobis distance over all class pairs."""
    L = class_model.num_classes
    return min(pairwise_md(class_model, i, j)
               for i in range(L) for j in range(i + 1, L))


def markov_accuracy_bound(expected_err: float, margin: float, ceiling: float) -> float:
    """Accuracy lower bound max(0, A0 (1 - E||e||^2 / margin^2))."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    if expected_err < 0:
        raise ValueError("expected_err must be nonnegative")
    if not 0 <= ceiling <= 1:
        raise ValueError("ceiling must lie in [0, 1]")
    return max(0.0, ceiling * (1.0 - expected_err / margin ** 2))
