"""Experiment runner: parameter sweeps, result serialization, CSV/JSON emission.

One sweep evaluates every (axis value, scheme) pair with a Monte-Carlo
accuracy estimate (fresh channel per trial) plus the average analytic proxy
values of the allocations actually used.  Everything is deterministic given
the config seed; identical config and seed reproduce the output byte for
byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import tdm
from .classify import classify_batch, noise_free_ceiling
from .fdm import SolverOptions, solve_fdm_batch
from .model import (FDM, TDM, ClassModel, Scenario, sample_gain_matrix,
                    second_moments)
from .sensing import synthesize_batch

SCHEMES = ("comp-opt", "decision-opt", "equal", "inversion")
AXES = ("snr_db", "k", "n")
MAPPING_RULES = ("greedy", "first-m", "random-seeded")

_DEFAULT_MODEL = None


def default_class_model() -> ClassModel:
    """Four classes on a shared offset with circulant separations.

    Each class mean is a large common offset plus a cyclic shift of a
    graded gap pattern, scaled by a per-class weight.  The offset eats
    transmit power without separating classes, the cyclic shifts keep every
    class pair separated in every dimension, and the unequal class norms
    make the fixed classifier collapse to one class when the aggregation
    gain shrinks.  Constants live in data/default_model.json and were tuned
    once (see scripts/tune_class_model.py); the noise-free ceiling is about
    0.97 at the default sensing noise and user count.
    """
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        from importlib.resources import files
        path = files("aircompsim.data").joinpath("default_model.json")
        _DEFAULT_MODEL = ClassModel.from_dict(json.loads(path.read_text()))
    return _DEFAULT_MODEL


@dataclass(frozen=True)
class SweepConfig:
    scenario: Scenario
    class_model: ClassModel
    axis: str
    axis_values: tuple
    schemes: tuple
    trials: int
    output: str | None = None
    format: str = "csv"
    mapping_rule: str = "greedy"
    inversion_share: str = "total"     # split the inversion budget over N ("total") or M
    decision_receive: str = "normalize"
    # Monte-Carlo points tolerate a looser dual solve than oracle audits do.
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(
        subgrad_iters=25, power_rtol=1e-5))

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        vals = tuple(float(v) for v in self.axis_values)
        if any(b <= a for a, b in zip(vals, vals[1:])) or not vals:
            raise ValueError("axis values must be strictly increasing and nonempty")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}")
        if self.trials < 100:
            raise ValueError("trials must be at least 100")
        if self.mapping_rule not in MAPPING_RULES:
            raise ValueError(f"mapping_rule must be one of {MAPPING_RULES}")
        object.__setattr__(self, "axis_values", vals)
        object.__setattr__(self, "schemes", tuple(self.schemes))

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        scenario = Scenario.from_dict(d["scenario"])
        model = (ClassModel.from_dict(d["class_model"]) if "class_model" in d
                 else default_class_model())
        return cls(
            scenario=scenario,
            class_model=model,
            axis=d.get("axis", "snr_db"),
            axis_values=tuple(d["axis_values"]),
            schemes=tuple(d.get("schemes", SCHEMES)),
            trials=int(d.get("trials", 2000)),
            output=d.get("output"),
            format=d.get("format", "csv"),
            mapping_rule=d.get("mapping_rule", "greedy"),
            inversion_share=d.get("inversion_share", "total"),
            decision_receive=d.get("decision_receive", "normalize"),
            solver=SolverOptions.from_dict(d.get("solver", {})),
        )

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class SweepRow:
    axis: float
    scheme: str
    accuracy: float
    stderr: float
    mse: float
    md: float
    converged: bool
    seed: int

    def to_dict(self) -> dict:
        return {"axis": self.axis, "scheme": self.scheme,
                "accuracy": self.accuracy, "stderr": self.stderr,
                "mse": self.mse, "md": self.md,
                "converged": self.converged, "seed": self.seed}


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        return cls(rows=tuple(SweepRow(**r) for r in d["rows"]))


def assign_subcarriers(gains_full: np.ndarray, delta_prime: np.ndarray,
                       rule: str, rng: np.random.Generator) -> np.ndarray:
    """Select M of N subcarrier columns per trial; returns (T, K, M) gains.

    Greedy rule: dimensions sorted by discriminant weight (descending) pick,
    in turn, the unassigned subcarrier with the largest weakest-user gain.
    Output columns are in original dimension order.
    """
    T, K, N = gains_full.shape
    M = delta_prime.shape[0]
    if rule == "first-m":
        return gains_full[:, :, :M]
    if rule == "random-seeded":
        out = np.empty((T, K, M), dtype=complex)
        for t in range(T):
            cols = rng.choice(N, size=M, replace=False)
            out[t] = gains_full[t][:, cols]
        return out
    order = np.argsort(-delta_prime, kind="stable")
    strength = np.min(np.abs(gains_full), axis=1)          # (T, N)
    avail = strength.copy()
    chosen = np.empty((T, M), dtype=int)
    for rank, dim in enumerate(order):
        pick = np.argmax(avail, axis=1)
        chosen[:, dim] = pick
        avail[np.arange(T), pick] = -np.inf
    return np.take_along_axis(gains_full, chosen[:, None, :], axis=2)


def _mmse_a(c, var, noise_var):
    s = np.sum(c, axis=-2)
    q = np.sum(c ** 2, axis=-2)
    return var * s / (var * q + noise_var)


def _equal_batch(habs, budgets, nu_sq, var, noise_var):
    M = habs.shape[-1]
    bmag = np.sqrt(budgets[:, None] / (M * nu_sq))
    bmag = np.broadcast_to(bmag, habs.shape)
    c = habs * bmag
    return bmag, _mmse_a(c, var, noise_var)


def _inversion_batch(habs, budgets, nu_sq, var, noise_var, share):
    cap = np.sqrt(budgets[:, None] / (share * nu_sq))
    with np.errstate(divide="ignore"):
        inv = np.where(habs > 0, 1.0 / np.where(habs > 0, habs, 1.0), np.inf)
    bmag = np.minimum(cap, inv)
    used = np.sum(bmag ** 2 * nu_sq, axis=-1)
    scale = np.where(used > budgets, np.sqrt(budgets / np.maximum(used, 1e-300)), 1.0)
    bmag = bmag * scale[..., None]
    c = habs * bmag
    return bmag, _mmse_a(c, var, noise_var)


def _tdm_point(scheme, habs_col, budgets, nu, var, noise_var, delta, opts):
    """Per-trial closed-form TDM solves; returns (T, K) aligned magnitudes and (T,) a."""
    T = habs_col.shape[0]
    M = delta.shape[0]
    slot_budgets = budgets / M                 # total budget split across slots
    bmags = np.empty((T, habs_col.shape[1]))
    avals = np.empty(T)
    conv = True
    var_rep = float(np.mean(var))
    delta_prime = float(np.sum(delta / var))
    sigma_eq = noise_var / var_rep
    for t in range(T):
        h = habs_col[t]
        if scheme == "comp-opt":
            sol = tdm.comp_optimal_tdm(h, slot_budgets, nu, var_rep, noise_var)
            avals[t] = np.real(sol.receive)
        else:
            sol = tdm.decision_optimal_tdm(h, slot_budgets, nu, delta_prime, sigma_eq)
            c = h * np.abs(sol.transmit)
            s = np.sum(c)
            avals[t] = len(h) / s if s > 0 else 0.0
        bmags[t] = np.abs(sol.transmit)
    return bmags, avals, conv


def _point_allocations(scheme, gains, scenario, moments, cfg):
    """Aligned magnitudes c-side inputs for one sweep point, batched over trials."""
    habs = np.abs(gains)
    budgets = scenario.power_budgets
    nu_sq = moments.nu_sq
    var = moments.var_per_dim
    delta = moments.delta_min_sq
    noise = scenario.channel_noise_var
    converged = True
    if scheme == "equal":
        bmag, a = _equal_batch(habs, budgets, nu_sq, var, noise)
    elif scheme == "inversion":
        share = (scenario.num_subcarriers if cfg.inversion_share == "total"
                 else scenario.feature_dim)
        if scenario.scheme == TDM:
            share = scenario.feature_dim
        bmag, a = _inversion_batch(habs, budgets, nu_sq, var, noise, share)
    elif scenario.scheme == TDM:
        nu = np.sqrt(nu_sq[:, 0])
        bm, av, converged = _tdm_point(scheme, habs[:, :, 0], budgets, nu, var,
                                       noise, delta, cfg.solver)
        bmag = np.repeat(bm[:, :, None], scenario.feature_dim, axis=2)
        a = np.repeat(av[:, None], scenario.feature_dim, axis=1)
    elif scheme == "comp-opt":
        res = solve_fdm_batch(gains, budgets, nu_sq, var, noise,
                              objective="mse", opts=cfg.solver)
        bmag, a = res["transmit_mag"], res["receive"]
        converged = bool(np.all(res["converged"]))
    elif scheme == "decision-opt":
        opts = replace(cfg.solver, receive_rule=cfg.decision_receive)
        res = solve_fdm_batch(gains, budgets, nu_sq, var, noise,
                              delta_min_sq=delta, objective="md", opts=opts)
        bmag, a = res["transmit_mag"], res["receive"]
        converged = bool(np.all(res["converged"]))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return bmag, a, converged


def _simulate_point(scheme, scenario, class_model, cfg, trials, rng):
    """One (axis value, scheme) cell: accuracy, stderr, proxy means, flags."""
    moments = second_moments(class_model, scenario.sensing_noise_var,
                             scenario.num_users)
    K, M = scenario.num_users, scenario.feature_dim
    if scenario.scheme == FDM:
        full = sample_gain_matrix(K * trials, scenario.num_subcarriers, rng)
        full = full.reshape(trials, K, scenario.num_subcarriers)
        delta_prime = moments.delta_min_sq / moments.var_per_dim
        gains = assign_subcarriers(full, delta_prime, cfg.mapping_rule, rng)
    else:
        col = sample_gain_matrix(K * trials, 1, rng).reshape(trials, K, 1)
        gains = np.repeat(col, M, axis=2)

    bmag, a, converged = _point_allocations(scheme, gains, scenario, moments, cfg)
    c = np.abs(gains) * bmag                              # (T, K, M) aligned gains

    labels = rng.integers(class_model.num_classes, size=trials)
    _, per_user = synthesize_batch(class_model, labels,
                                   scenario.sensing_noise_var, K, rng)
    w = np.sqrt(scenario.channel_noise_var / 2.0) * (
        rng.standard_normal((trials, M)) + 1j * rng.standard_normal((trials, M)))
    y_hat = a * (np.sum(c * per_user, axis=1) + w)
    pred = classify_batch(y_hat, class_model, K, scenario.sensing_noise_var)
    acc = float(np.mean(pred == labels))
    stderr = float(np.sqrt(max(acc * (1 - acc), 1e-12) / trials))

    var = moments.var_per_dim
    noise = scenario.channel_noise_var
    mis = np.sum((a[:, None, :] * c - 1.0) ** 2, axis=1)
    mse = float(np.mean(np.sum(var * mis + a ** 2 * noise, axis=1)))
    s1 = np.sum(c, axis=1)
    q = np.sum(c ** 2, axis=1)
    md = float(np.mean(np.sum(moments.delta_min_sq * s1 ** 2
                              / (var * q + noise), axis=1)))

    audit_ok = np.all(np.sum(bmag ** 2 * moments.nu_sq, axis=-1)
                      <= scenario.power_budgets * (1 + 1e-6))
    if not audit_ok:
        raise AssertionError("power-feasibility audit failed for a reported allocation")
    return acc, stderr, mse, md, bool(converged)


def _scenario_at(cfg: SweepConfig, value: float) -> Scenario:
    base = cfg.scenario
    if cfg.axis == "snr_db":
        p = base.channel_noise_var * 10.0 ** (value / 10.0)
        return replace(base, power_budgets=np.full(base.num_users, p))
    if cfg.axis == "k":
        k = int(value)
        return replace(base, num_users=k,
                       power_budgets=np.full(k, base.power_budgets[0]))
    n = int(value)
    return replace(base, num_subcarriers=n)


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Evaluate every (axis value, scheme) cell; never aborts on solver flags."""
    rows = []
    root = np.random.SeedSequence(cfg.scenario.seed)
    children = root.spawn(len(cfg.axis_values) * len(cfg.schemes))
    idx = 0
    for value in cfg.axis_values:
        scenario = _scenario_at(cfg, value)
        for scheme in cfg.schemes:
            child = children[idx]
            point_seed = int(child.generate_state(1)[0])
            rng = np.random.default_rng(child)
            idx += 1
            acc, stderr, mse, md, converged = _simulate_point(
                scheme, scenario, cfg.class_model, cfg, cfg.trials, rng)
            rows.append(SweepRow(axis=float(value), scheme=scheme, accuracy=acc,
                                 stderr=stderr, mse=mse, md=md,
                                 converged=converged, seed=point_seed))
    return SweepResult(rows=tuple(rows))


CSV_HEADER = "axis,scheme,accuracy,stderr,mse,md,converged,seed"


def emit(result: SweepResult, fmt: str, path) -> None:
    """Write the sweep result; CSV columns and row order are part of the contract."""
    if not result.rows:
        raise ValueError("refusing to emit an empty sweep result")
    try:
        if fmt == "csv":
            lines = [CSV_HEADER]
            for r in result.rows:
                lines.append(f"{r.axis!r},{r.scheme},{r.accuracy!r},{r.stderr!r},"
                             f"{r.mse!r},{r.md!r},{str(r.converged).lower()},{r.seed}")
            data = "\n".join(lines) + "\n"
        elif fmt == "json":
            data = json.dumps(result.to_dict(), indent=2) + "\n"
        else:
            raise ValueError(f"unknown format {fmt!r}")
        with open(path, "w") as f:
            f.write(data)
    except OSError as e:
        raise OSError(f"failed to write sweep result to {path}: {e}") from e


def sweep_ceiling(cfg: SweepConfig, trials: int = 200_000) -> float:
    """Noise-free accuracy ceiling for the sweep's class model and user count."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.scenario.seed).spawn(1)[0])
    acc, _ = noise_free_ceiling(cfg.class_model, cfg.scenario.num_users,
                                cfg.scenario.sensing_noise_var, trials, rng)
    return acc
