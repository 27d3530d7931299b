"""Feature synthesis and PCA ingestion.

Ground-truth features are drawn directly from the Gaussian class components;
each device sees the common feature corrupted by independent additive sensing
noise.  ``fit_pca`` exists solely for ingesting external raw data (CSV in,
JSON basis out) and is not used by the solver experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import ClassModel


class RankDeficiencyError(ValueError):
    """Sample covariance rank is below the requested basis dimension."""


@dataclass(frozen=True)
class FeatureSample:
    """One ground-truth feature vector plus its K noisy per-device observations."""

    label: int
    ground_truth: np.ndarray          # (M,)
    per_user: np.ndarray              # (K, M)

    def __post_init__(self):
        gt = np.asarray(self.ground_truth, dtype=float)
        obs = np.asarray(self.per_user, dtype=float)
        if obs.ndim != 2 or obs.shape[1] != gt.shape[0]:
            raise ValueError("per_user must be (K, M) matching ground_truth")
        gt.setflags(write=False)
        obs.setflags(write=False)
        object.__setattr__(self, "ground_truth", gt)
        object.__setattr__(self, "per_user", obs)


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal projection (F, M) with per-component explained variances."""

    projection: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.projection, dtype=float)
        ev = np.asarray(self.explained_variance, dtype=float)
        gram = u.T @ u
        if not np.allclose(gram, np.eye(u.shape[1]), atol=1e-9):
            raise ValueError("projection columns must be orthonormal")
        u.setflags(write=False)
        ev.setflags(write=False)
        object.__setattr__(self, "projection", u)
        object.__setattr__(self, "explained_variance", ev)

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump({"projection": self.projection.tolist(),
                       "explained_variance": self.explained_variance.tolist()}, f)

    @classmethod
    def from_json(cls, path) -> "PcaBasis":
        with open(path) as f:
            d = json.load(f)
        return cls(projection=np.asarray(d["projection"], dtype=float),
                   explained_variance=np.asarray(d["explained_variance"], dtype=float))


def synthesize_sample(class_model: ClassModel, label: int, sensing_noise_var: float,
                      num_users: int, rng: np.random.Generator) -> FeatureSample:
    """Draw a feature of class ``label`` plus K independently noisy observations."""
    if not 0 <= label < class_model.num_classes:
        raise ValueError(f"label {label} out of range [0, {class_model.num_classes})")
    std = np.sqrt(class_model.covariance_diag)
    x = class_model.means[label] + std * rng.standard_normal(class_model.feature_dim)
    noise = np.sqrt(sensing_noise_var) * rng.standard_normal((num_users, class_model.feature_dim))
    return FeatureSample(label=label, ground_truth=x, per_user=x[None, :] + noise)


def synthesize_batch(class_model: ClassModel, labels: np.ndarray, sensing_noise_var: float,
                     num_users: int, rng: np.random.Generator):
    """Vectorized variant: returns (ground_truth (T, M), per_user (T, K, M))."""
    labels = np.asarray(labels, dtype=int)
    if labels.min() < 0 or labels.max() >= class_model.num_classes:
        raise ValueError("labels out of range")
    T = labels.shape[0]
    M = class_model.feature_dim
    std = np.sqrt(class_model.covariance_diag)
    x = class_model.means[labels] + std * rng.standard_normal((T, M))
    noise = np.sqrt(sensing_noise_var) * rng.standard_normal((T, num_users, M))
    return x, x[:, None, :] + noise


def fit_pca(samples: np.ndarray, num_components: int, rank_tol: float = 1e-10) -> PcaBasis:
    """Top-M principal components of the sample covariance.

    Columns are sorted by descending eigenvalue (ties broken by first
    occurrence); the largest-magnitude entry of every column is made positive.
    Raises RankDeficiencyError if the data do not support ``num_components``
    directions.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be a (num_samples, F) matrix")
    n, f = samples.shape
    if num_components > f:
        raise ValueError("num_components exceeds the raw dimension")
    if n < num_components:
        raise ValueError("need at least num_components samples")
    centered = samples - samples.mean(axis=0)
    cov = centered.T @ centered / max(n - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    if evals[num_components - 1] <= rank_tol * max(evals[0], 1.0):
        raise RankDeficiencyError(
            f"sample covariance rank below {num_components} (eigenvalue "
            f"{evals[num_components - 1]:.3e})")
    u = evecs[:, :num_components]
    # Sign convention: largest-magnitude entry of each column positive.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(num_components)])
    u = u * signs
    return PcaBasis(projection=u, explained_variance=evals[:num_components])


def fit_pca_csv(csv_path, num_components: int, json_out=None) -> PcaBasis:
    """CSV ingestion path: rows are samples, columns raw dimensions."""
    samples = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    basis = fit_pca(samples, num_components)
    if json_out is not None:
        basis.to_json(json_out)
    return basis
