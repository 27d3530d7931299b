"""Reference allocations: equal power split and truncated channel inversion.

Neither baseline fixes a receive coefficient; the per-subcarrier MMSE value
given the transmit choice is used so the comparison with the optimized
schemes is not confounded by receive-side mismatch.
"""

from __future__ import annotations

import numpy as np

from .aircomp import Allocation
from .model import ChannelRealization


def _mmse_receive(c: np.ndarray, var_per_dim, noise_var: float) -> np.ndarray:
    # c: (K, M) aligned real gains |h_{k,n} b_{k,n}|.
    s = np.sum(c, axis=0)
    q = np.sum(c ** 2, axis=0)
    return np.asarray(var_per_dim) * s / (np.asarray(var_per_dim) * q + noise_var)


def equal_allocation(channels: ChannelRealization, budgets, nu_sq,
                     var_per_dim, noise_var: float, scheme: str = "FDM") -> Allocation:
    """Uniform per-user power split across the M active subcarriers (always tight)."""
    h = channels.gains
    K, M = h.shape
    budgets = np.asarray(budgets, dtype=float)
    nu_sq = np.asarray(nu_sq, dtype=float)
    bmag = np.sqrt(budgets[:, None] / (M * nu_sq))
    b = bmag * np.exp(-1j * np.angle(h))
    a = _mmse_receive(np.abs(h) * bmag, var_per_dim, noise_var)
    return Allocation(transmit=b, receive=a.astype(complex), scheme=scheme)


def channel_inversion(channels: ChannelRealization, budgets, nu_sq,
                      var_per_dim, noise_var: float, scheme: str = "FDM",
                      share_count: int | None = None) -> Allocation:
    """Truncated channel inversion under a per-subcarrier power share.

    Each coefficient is min(sqrt(P_k / (share_count nu^2)), 1/|h|);
    ``share_count`` defaults to the number of active subcarriers M but may be
    set to the total subcarrier count N of the deployment.  Any row still over
    budget is scaled to the boundary.
    """
    h = channels.gains
    K, M = h.shape
    budgets = np.asarray(budgets, dtype=float)
    nu_sq = np.asarray(nu_sq, dtype=float)
    share = M if share_count is None else int(share_count)
    cap = np.sqrt(budgets[:, None] / (share * nu_sq))
    habs = np.abs(h)
    with np.errstate(divide="ignore"):
        inv = np.where(habs > 0, 1.0 / np.where(habs > 0, habs, 1.0), np.inf)
    bmag = np.minimum(cap, inv)
    used = np.sum(bmag ** 2 * nu_sq, axis=1)
    over = used > budgets
    if np.any(over):
        bmag = bmag * np.where(over, np.sqrt(budgets / used), 1.0)[:, None]
    b = bmag * np.exp(-1j * np.angle(h))
    a = _mmse_receive(habs * bmag, var_per_dim, noise_var)
    return Allocation(transmit=b, receive=a.astype(complex), scheme=scheme)
