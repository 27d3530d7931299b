"""System statistics and channel generation.

Holds the Gaussian class statistics, the scenario parameters, and the
second-order quantities (feature powers, minimum inter-class gaps) that every
solver consumes.  All containers are immutable after construction and safe to
share across parallel Monte-Carlo workers; randomness always flows through an
explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TDM = "TDM"
FDM = "FDM"
_SCHEMES = (TDM, FDM)


def _frozen(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ClassModel:
    """Gaussian class components: L mean vectors plus a shared diagonal covariance.

    ``means`` has shape (L, M); ``covariance_diag`` has shape (M,) and must be
    strictly positive.  At least two classes are required.
    """

    means: np.ndarray
    covariance_diag: np.ndarray

    def __post_init__(self):
        means = _frozen(self.means)
        cov = _frozen(self.covariance_diag)
        if means.ndim != 2:
            raise ValueError("means must be a (L, M) array")
        if means.shape[0] < 2:
            raise ValueError("at least two classes are required (L >= 2)")
        if cov.ndim != 1 or cov.shape[0] != means.shape[1]:
            raise ValueError("covariance_diag length must match feature dimension")
        if not np.all(cov > 0):
            raise ValueError("covariance_diag entries must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance_diag", cov)

    @property
    def num_classes(self) -> int:
        return self.means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "means": self.means.tolist(),
            "covariance_diag": self.covariance_diag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassModel":
        model = cls(means=np.asarray(d["means"], dtype=float),
                    covariance_diag=np.asarray(d["covariance_diag"], dtype=float))
        if "num_classes" in d and int(d["num_classes"]) != model.num_classes:
            raise ValueError("num_classes does not match the number of mean vectors")
        return model

    @classmethod
    def from_json(cls, path) -> "ClassModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class Scenario:
    """All system parameters of one simulated deployment.

    Power budgets are linear-scale watts.  ``num_subcarriers`` is only
    meaningful for FDM, where it must be at least ``feature_dim``.
    """

    num_users: int
    feature_dim: int
    sensing_noise_var: float
    channel_noise_var: float
    power_budgets: np.ndarray
    scheme: str
    seed: int
    num_subcarriers: int | None = None

    def __post_init__(self):
        if self.num_users < 1 or self.feature_dim < 1:
            raise ValueError("num_users and feature_dim must be positive")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")
        budgets = _frozen(self.power_budgets)
        if budgets.shape != (self.num_users,) or not np.all(budgets > 0):
            raise ValueError("power_budgets must be K positive reals")
        if self.sensing_noise_var < 0:
            raise ValueError("sensing_noise_var must be nonnegative")
        if self.channel_noise_var <= 0:
            raise ValueError("channel_noise_var must be strictly positive")
        n = self.num_subcarriers
        if self.scheme == FDM:
            n = self.feature_dim if n is None else int(n)
            if n < self.feature_dim:
                raise ValueError("FDM requires num_subcarriers >= feature_dim")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        object.__setattr__(self, "power_budgets", budgets)
        object.__setattr__(self, "num_subcarriers", n)

    def to_dict(self) -> dict:
        return {
            "num_users": self.num_users,
            "feature_dim": self.feature_dim,
            "num_subcarriers": self.num_subcarriers,
            "sensing_noise_var": self.sensing_noise_var,
            "channel_noise_var": self.channel_noise_var,
            "power_budgets": self.power_budgets.tolist(),
            "scheme": self.scheme,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(
            num_users=int(d["num_users"]),
            feature_dim=int(d["feature_dim"]),
            num_subcarriers=d.get("num_subcarriers"),
            sensing_noise_var=float(d["sensing_noise_var"]),
            channel_noise_var=float(d["channel_noise_var"]),
            power_budgets=np.asarray(d["power_budgets"], dtype=float),
            scheme=str(d["scheme"]),
            seed=int(d["seed"]),
        )

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class ChannelRealization:
    """Complex gains, one row per user, one column per active subcarrier/slot."""

    gains: np.ndarray

    def __post_init__(self):
        gains = _frozen(self.gains, dtype=complex)
        if gains.ndim != 2:
            raise ValueError("gains must be a (K, M) array")
        object.__setattr__(self, "gains", gains)

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_slots(self) -> int:
        return self.gains.shape[1]


@dataclass(frozen=True)
class SecondMoments:
    """Second-order feature statistics consumed by the solvers.

    ``nu_sq`` is the (K, M) transmitted-signal second moment (identical rows:
    all users observe the same statistics), ``delta_min_sq`` the per-dimension
    minimum squared inter-class mean gap, and ``var_per_dim`` the total
    per-dimension feature variance seen on air (class variance plus sensing
    noise).
    """

    nu_sq: np.ndarray
    delta_min_sq: np.ndarray
    var_per_dim: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nu_sq", _frozen(self.nu_sq))
        object.__setattr__(self, "delta_min_sq", _frozen(self.delta_min_sq))
        object.__setattr__(self, "var_per_dim", _frozen(self.var_per_dim))


def delta_min_sq(class_model: ClassModel) -> np.ndarray:
    """Per-dimension minimum squared mean difference over all class pairs."""
    mu = class_model.means
    L = class_model.num_classes
    # Exhaustive pairwise scan; L is small.
    best = np.full(class_model.feature_dim, np.inf)
    for i in range(L):
        for j in range(i + 1, L):
            best = np.minimum(best, (mu[i] - mu[j]) ** 2)
    return best


def second_moments(class_model: ClassModel, sensing_noise_var: float,
                   num_users: int = 1) -> SecondMoments:
    """Analytic mixture second moments of the noisy per-user features.

    Per dimension m: nu_m^2 = mean over classes of mu_{l,m}^2 + sigma_m^2 +
    sensing noise.  The K rows of ``nu_sq`` are identical.
    """
    if sensing_noise_var < 0:
        raise ValueError("sensing_noise_var must be nonnegative")
    mu = class_model.means
    nu = np.mean(mu ** 2, axis=0) + class_model.covariance_diag + sensing_noise_var
    var = class_model.covariance_diag + sensing_noise_var
    return SecondMoments(
        nu_sq=np.tile(nu, (num_users, 1)),
        delta_min_sq=delta_min_sq(class_model),
        var_per_dim=var,
    )


def sample_gain_matrix(num_users: int, num_cols: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. unit-variance CSCG (Rayleigh) gains of shape (K, num_cols)."""
    re = rng.standard_normal((num_users, num_cols))
    im = rng.standard_normal((num_users, num_cols))
    return (re + 1j * im) / np.sqrt(2.0)


def sample_channels(scenario: Scenario, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization for the scenario's M active slots/subcarriers.

    TDM uses slow fading: a single per-user draw replicated across all M slots.
    FDM draws independently per subcarrier.
    """
    K, M = scenario.num_users, scenario.feature_dim
    if scenario.scheme == TDM:
        h = sample_gain_matrix(K, 1, rng)
        gains = np.repeat(h, M, axis=1)
    else:
        gains = sample_gain_matrix(K, M, rng)
    return ChannelRealization(gains=gains)


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Documented RNG split rule: child generators via SeedSequence.spawn."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
