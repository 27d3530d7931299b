"""Command-line interface: sweep runner, one-shot solver, oracle audits."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import fdm, oracle, tdm
from .harness import SweepConfig, emit, run_sweep
from .instances import random_fdm_instance, random_tdm_instance
from .model import ChannelRealization

_AXIS_ALIASES = {"snr": "snr_db", "snr_db": "snr_db", "k": "k", "n": "n"}


def _fail(message: str, code: int = 2):
    json.dump({"error": message}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _cmd_simulate(args) -> int:
    with open(args.config) as f:
        cfg_dict = json.load(f)
    if args.axis:
        cfg_dict["axis"] = _AXIS_ALIASES[args.axis]
    if args.trials:
        cfg_dict["trials"] = args.trials
    if args.seed is not None:
        cfg_dict.setdefault("scenario", {})["seed"] = args.seed
    if args.out:
        cfg_dict["output"] = args.out
    if args.format:
        cfg_dict["format"] = args.format
    cfg = SweepConfig.from_dict(cfg_dict)
    result = run_sweep(cfg)
    out = cfg.output or "sweep." + cfg.format
    emit(result, cfg.format, out)
    print(out)
    return 0


def _load_instance(path) -> dict:
    with open(path) as f:
        d = json.load(f)
    if "gains_re" in d:
        gains = np.asarray(d["gains_re"], dtype=float) + 1j * np.asarray(
            d.get("gains_im", np.zeros_like(d["gains_re"])), dtype=float)
        d["gains"] = gains
    return d


def _cmd_solve(args) -> int:
    d = _load_instance(args.instance)
    gains = np.atleast_2d(d["gains"])
    budgets = np.asarray(d["budgets"], dtype=float)
    noise = float(d["noise_var"])
    opts = fdm.SolverOptions.from_dict(d.get("solver", {}))
    if args.trace:
        opts = replace(opts, trace=True)
    if args.scheme == "comp-tdm":
        sol = tdm.comp_optimal_tdm(gains[:, 0], budgets, np.asarray(d["nu"]),
                                   float(d["var"]), noise)
        payload = sol.to_dict()
    elif args.scheme == "decision-tdm":
        sol = tdm.decision_optimal_tdm(gains[:, 0], budgets, np.asarray(d["nu"]),
                                       float(d["delta_prime"]),
                                       float(d["sigma_eq_sq"]))
        payload = sol.to_dict()
    elif args.scheme in ("comp-fdm", "decision-fdm"):
        channels = ChannelRealization(gains=gains)
        nu_sq = np.asarray(d["nu_sq"], dtype=float)
        var = np.asarray(d["var_per_dim"], dtype=float)
        if args.scheme == "comp-fdm":
            sol = fdm.comp_optimal_fdm(channels, budgets, nu_sq, var, noise, opts)
        else:
            sol = fdm.decision_optimal_fdm(channels, budgets, nu_sq,
                                           np.asarray(d["delta_min_sq"], dtype=float),
                                           var, noise, opts)
        payload = {
            "objective": sol.objective,
            "duality_gap": sol.duality_gap,
            "converged": sol.converged,
            "prices": sol.dual_state.prices.tolist(),
            "power_slack": sol.dual_state.power_slack.tolist(),
            "per_subcarrier": np.asarray(sol.per_subcarrier).tolist(),
            "transmit_mag": np.abs(sol.alloc.transmit).tolist(),
            "receive_mag": np.abs(sol.alloc.receive).tolist(),
        }
        if args.trace:
            with open(args.trace, "w") as f:
                f.write("iteration,dual_value,max_power_violation\n")
                for it, g, viol in sol.trace:
                    f.write(f"{it},{g!r},{viol!r}\n")
    else:
        return _fail(f"unknown scheme {args.scheme!r}")
    json.dump(payload, sys.stdout, indent=2)
    print()
    return 0


def _oracle_tdm(check: str, count: int, rng) -> list:
    rows = []
    for i in range(count):
        inst = random_tdm_instance(int(rng.integers(1, 5)), rng)
        if check == "comp-tdm":
            sol = tdm.comp_optimal_tdm(inst["gains"], inst["budgets"], inst["nu"],
                                       inst["var"], inst["noise_var"])
            ref = oracle.grid_tdm_mse(inst["gains"], inst["budgets"], inst["nu"],
                                      inst["var"], inst["noise_var"])
            ok = sol.objective <= ref.objective * (1 + 1e-9)
            rel = abs(sol.objective - ref.objective) / max(ref.objective, 1e-300)
        else:
            u = np.abs(inst["gains"]) * np.sqrt(inst["budgets"]) / inst["nu"]
            dprime = inst["delta_sq"] / inst["var"]
            seq = inst["noise_var"] / inst["var"]
            sol = tdm.decision_optimal_tdm(inst["gains"], inst["budgets"],
                                           inst["nu"], dprime, seq)
            ref = oracle.grid_tdm_md(u, dprime, seq)
            ok = sol.objective >= ref.objective * (1 - 1e-9)
            rel = abs(sol.objective - ref.objective) / max(ref.objective, 1e-300)
        rows.append({"instance": i, "dominates": bool(ok),
                     "relative_mismatch": rel, "pass": bool(ok and rel < 1e-3)})
    return rows


def _oracle_fdm(check: str, count: int, rng) -> list:
    rows = []
    objective = "mse" if check == "comp-fdm" else "md"
    for i in range(count):
        inst = random_fdm_instance(int(rng.integers(1, 4)),
                                   int(rng.integers(1, 5)), rng)
        if objective == "mse":
            sol = fdm.comp_optimal_fdm(inst["channels"], inst["budgets"],
                                       inst["nu_sq"], inst["var_per_dim"],
                                       inst["noise_var"])
        else:
            sol = fdm.decision_optimal_fdm(inst["channels"], inst["budgets"],
                                           inst["nu_sq"], inst["delta_min_sq"],
                                           inst["var_per_dim"], inst["noise_var"])
        ref = oracle.multistart_primal_fdm(
            inst["channels"].gains, inst["budgets"], inst["nu_sq"],
            inst["var_per_dim"], inst["noise_var"],
            delta_min_sq=inst["delta_min_sq"], objective=objective,
            rng=np.random.default_rng(rng.integers(2 ** 63)))
        rel = abs(sol.objective - ref["objective"]) / max(abs(ref["objective"]), 1e-300)
        rows.append({"instance": i, "duality_gap": sol.duality_gap,
                     "relative_mismatch": rel,
                     "pass": bool(rel < 1e-3 and abs(sol.duality_gap) < 0.01)})
    return rows


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.check in ("comp-tdm", "decision-tdm"):
        rows = _oracle_tdm(args.check, args.instances, rng)
    elif args.check in ("comp-fdm", "decision-fdm"):
        rows = _oracle_fdm(args.check, args.instances, rng)
    else:
        return _fail(f"unknown solver {args.check!r}")
    table = {"check": args.check, "rows": rows,
             "all_pass": all(r["pass"] for r in rows)}
    json.dump(table, sys.stdout, indent=2)
    print()
    return 0 if table["all_pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aircompsim",
                                description="AirComp feature-aggregation simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a parameter sweep")
    sim.add_argument("--config", required=True)
    sim.add_argument("--axis", choices=sorted(_AXIS_ALIASES))
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.add_argument("--format", choices=("csv", "json"))
    sim.set_defaults(func=_cmd_simulate)

    sol = sub.add_parser("solve", help="solve a single instance")
    sol.add_argument("--scheme", required=True,
                     choices=("comp-tdm", "decision-tdm", "comp-fdm", "decision-fdm"))
    sol.add_argument("--instance", required=True)
    sol.add_argument("--trace", help="CSV path for the dual convergence trace")
    sol.set_defaults(func=_cmd_solve)

    orc = sub.add_parser("oracle", help="randomized solver-vs-oracle audit")
    orc.add_argument("--check", required=True)
    orc.add_argument("--instances", type=int, default=20)
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        return _fail(str(e), code=1)


if __name__ == "__main__":
    sys.exit(main())
