"""MAP classification of aggregated features and Monte-Carlo accuracy estimation.

The classifier scores the normalized received vector under the ideal-sum
statistics (class variance plus sensing noise averaged over users); channel
distortion is deliberately unmodeled, mirroring a model trained on clean
features.  Labels are 0-based class indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .aircomp import Allocation, aggregate
from .model import ClassModel, Scenario, sample_channels, second_moments
from .sensing import synthesize_sample


@dataclass(frozen=True)
class Decision:
    label: int
    log_likelihoods: np.ndarray

    def __post_init__(self):
        ll = np.asarray(self.log_likelihoods, dtype=float)
        ll.setflags(write=False)
        object.__setattr__(self, "log_likelihoods", ll)


def _log_likelihoods(y_norm: np.ndarray, class_model: ClassModel,
                     var_eff: np.ndarray) -> np.ndarray:
    # y_norm: (..., M); returns (..., L). Uniform priors.
    diff = y_norm[..., None, :] - class_model.means          # (..., L, M)
    quad = np.sum(diff ** 2 / var_eff, axis=-1)
    return -0.5 * (quad + np.sum(np.log(2.0 * np.pi * var_eff)))


def map_classify(y_hat: np.ndarray, class_model: ClassModel, num_users: int,
                 sensing_noise_var: float) -> Decision:
    """MAP label of the aggregated vector normalized by the user count.

    Complex inputs use the real part (the feature pipeline is real-valued).
    Ties break toward the smallest class index.
    """
    y = np.real(np.asarray(y_hat)) / num_users
    var_eff = class_model.covariance_diag + sensing_noise_var / num_users
    ll = _log_likelihoods(y, class_model, var_eff)
    return Decision(label=int(np.argmax(ll)), log_likelihoods=ll)


def classify_batch(y_hat: np.ndarray, class_model: ClassModel, num_users: int,
                   sensing_noise_var: float) -> np.ndarray:
    """Vectorized MAP labels for a (T, M) batch of aggregated vectors."""
    y = np.real(np.asarray(y_hat)) / num_users
    var_eff = class_model.covariance_diag + sensing_noise_var / num_users
    return np.argmax(_log_likelihoods(y, class_model, var_eff), axis=-1)


def load_linear_classifier(path):
    """Optional external linear classifier: JSON with 'weights' (L, M) and 'biases' (L,)."""
    with open(path) as f:
        d = json.load(f)
    w = np.asarray(d["weights"], dtype=float)
    b = np.asarray(d["biases"], dtype=float)
    if w.ndim != 2 or b.shape != (w.shape[0],):
        raise ValueError("weights must be (L, M) and biases (L,)")

    def classify(y_norm):
        return np.argmax(y_norm @ w.T + b, axis=-1)

    return classify


def estimate_accuracy(scenario: Scenario, class_model: ClassModel, policy,
                      num_trials: int, rng: np.random.Generator):
    """Monte-Carlo correct-classification rate with a fresh channel per trial.

    ``policy`` maps (channels, moments, scenario) to an Allocation.  Returns
    (accuracy, binomial standard error); deterministic given the generator
    state.
    """
    if num_trials < 1:
        raise ValueError("num_trials must be at least 1")
    moments = second_moments(class_model, scenario.sensing_noise_var,
                             scenario.num_users)
    correct = 0
    for _ in range(num_trials):
        label = int(rng.integers(class_model.num_classes))
        sample = synthesize_sample(class_model, label, scenario.sensing_noise_var,
                                   scenario.num_users, rng)
        channels = sample_channels(scenario, rng)
        alloc = policy(channels, moments, scenario)
        y_hat = aggregate(sample, channels, alloc, scenario.channel_noise_var, rng)
        decision = map_classify(y_hat, class_model, scenario.num_users,
                                scenario.sensing_noise_var)
        correct += int(decision.label == label)
    acc = correct / num_trials
    stderr = float(np.sqrt(max(acc * (1 - acc), 1e-12) / num_trials))
    return acc, stderr


def noise_free_ceiling(class_model: ClassModel, num_users: int,
                       sensing_noise_var: float, num_trials: int,
                       rng: np.random.Generator):
    """Accuracy of the classifier under ideal (noise-free) transmission.

    Classifies the exact per-user sum, i.e. the saturation ceiling every
    transmission scheme approaches at high SNR.
    """
    labels = rng.integers(class_model.num_classes, size=num_trials)
    std = np.sqrt(class_model.covariance_diag)
    x = class_model.means[labels] + std * rng.standard_normal(
        (num_trials, class_model.feature_dim))
    noise = np.sqrt(sensing_noise_var) * rng.standard_normal(
        (num_trials, num_users, class_model.feature_dim))
    y = np.sum(x[:, None, :] + noise, axis=1)
    pred = classify_batch(y, class_model, num_users, sensing_noise_var)
    acc = float(np.mean(pred == labels))
    stderr = float(np.sqrt(max(acc * (1 - acc), 1e-12) / num_trials))
    return acc, stderr
