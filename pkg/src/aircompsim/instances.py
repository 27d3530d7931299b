"""Random problem instance generation for oracle audits and tests."""

from __future__ import annotations

import numpy as np

from .model import ChannelRealization, sample_gain_matrix


def random_tdm_instance(num_users: int, rng: np.random.Generator) -> dict:
    """One random single-slot instance with moderate dynamic range."""
    K = num_users
    return {
        "gains": sample_gain_matrix(K, 1, rng)[:, 0],
        "budgets": 10.0 ** rng.uniform(-1, 1, K),
        "nu": 10.0 ** rng.uniform(-0.3, 0.3, K),
        "var": float(10.0 ** rng.uniform(-0.7, 0.3)),
        "noise_var": float(10.0 ** rng.uniform(-1.5, 0.0)),
        "delta_sq": float(10.0 ** rng.uniform(-0.5, 0.5)),
    }


def random_fdm_instance(num_users: int, num_dims: int,
                        rng: np.random.Generator) -> dict:
    """One random multi-subcarrier instance for the dual solvers."""
    K, M = num_users, num_dims
    nu = 10.0 ** rng.uniform(-0.3, 0.3, (K, M))
    return {
        "channels": ChannelRealization(gains=sample_gain_matrix(K, M, rng)),
        "budgets": 10.0 ** rng.uniform(-1, 1, K),
        "nu_sq": nu ** 2,
        "var_per_dim": 10.0 ** rng.uniform(-0.7, 0.3, M),
        "noise_var": float(10.0 ** rng.uniform(-1.5, 0.0)),
        "delta_min_sq": 10.0 ** rng.uniform(-0.5, 0.5, M),
    }
