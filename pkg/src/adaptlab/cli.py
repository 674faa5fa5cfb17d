"""Experiment runner CLI: run, compare, list-experiments.

Exit codes: 0 all checks passed, 1 drift above threshold (compare), 2
numerical divergence, 3 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DivergenceError, GainBoundError, StiffnessError
from .experiments import EXPERIMENTS, default_config

SCHEMA_VERSION = 1

# keys that identify the experiment; seed/integrator/output knobs excluded so
# refinement and reseeding runs stay comparable
_NON_IDENTITY_KEYS = {"seed", "integrator", "out", "step"}


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: dict) -> str:
    return hashlib.sha256(_canonical(config).encode()).hexdigest()[:16]


def experiment_hash(config: dict) -> str:
    ident = {k: v for k, v in config.items() if k not in _NON_IDENTITY_KEYS}
    return hashlib.sha256(_canonical(ident).encode()).hexdigest()[:16]


def validate_config(config: dict) -> dict:
    """Schema check: the experiment's default config defines the key set and
    value types; unknown keys are rejected."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    name = config.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}"
        )
    reference = default_config(name)
    unknown = set(config) - set(reference)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    merged = {**reference, **config}
    for key, ref_val in reference.items():
        val = merged[key]
        if ref_val is None or val is None:
            continue
        if isinstance(ref_val, bool) != isinstance(val, bool):
            raise ConfigError(f"config key {key!r} must be boolean")
        if isinstance(ref_val, (int, float)) and not isinstance(val, (int, float)):
            raise ConfigError(f"config key {key!r} must be numeric")
        if isinstance(ref_val, dict) and not isinstance(val, dict):
            raise ConfigError(f"config key {key!r} must be an object")
        if isinstance(ref_val, (list, tuple)) and not isinstance(val, (list, tuple)):
            raise ConfigError(f"config key {key!r} must be an array")
    if "integrator" in merged and isinstance(merged["integrator"], dict):
        ref_int = reference.get("integrator", {})
        unknown = set(merged["integrator"]) - set(ref_int) - {"rtol", "atol", "step", "method", "sample_interval"}
        if unknown:
            raise ConfigError(f"unknown integrator keys {sorted(unknown)}")
    return merged


def run_experiment(config: dict, out_dir: Path | None, strict_bounds: bool = False) -> dict:
    name = config["experiment"]
    _, runner = EXPERIMENTS[name]
    t0 = time.perf_counter()
    summary, logs = runner(config, strict_bounds=strict_bounds)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "adaptlab_version": __version__,
        "experiment": name,
        "config": config,
        "config_hash": config_hash(config),
        "experiment_hash": experiment_hash(config),
        "seed": config.get("seed"),
        "metrics": summary.get("metrics", {}),
        "wall_time_s": time.perf_counter() - t0,
    }
    for key, value in summary.items():
        if key != "metrics":
            sidecar[key] = value
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if isinstance(logs, dict):
            for label, log in logs.items():
                suffix = "" if label in ("main", "entropy") else f"_{label}"
                _write_log(log, out_dir, f"trajectory{suffix}.csv")
        elif logs is not None:
            _write_log(logs, out_dir, "trajectory.csv")
        with open(out_dir / "summary.json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    return sidecar


def _write_log(log, out_dir: Path, name: str) -> None:
    arr = log.to_array()
    with open(out_dir / name, "w") as fh:
        fh.write(",".join(log.columns) + "\n")
        np.savetxt(fh, arr, delimiter=",", fmt="%.17g")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def compare_summaries(baseline: dict, new: dict, threshold: float = 1e-12) -> tuple[dict, int]:
    """Per-metric relative drift; refuses on experiment-identity mismatch.

    Seed changes loosen the threshold to a statistical one (the runs are
    different draws from the same study)."""
    if baseline.get("experiment_hash") != new.get("experiment_hash"):
        raise ConfigError("experiment hashes differ; comparison refused")
    seed_changed = baseline.get("seed") != new.get("seed")
    eff_threshold = max(threshold, 0.5) if seed_changed else threshold
    report = {"seed_changed": seed_changed, "threshold": eff_threshold, "drift": {}}
    worst = 0.0
    b_metrics, n_metrics = baseline.get("metrics", {}), new.get("metrics", {})
    for key in sorted(set(b_metrics) & set(n_metrics)):
        bv, nv = b_metrics[key], n_metrics[key]
        if key.startswith("runtime") or key.startswith("wall"):
            continue
        if not isinstance(bv, (int, float)) or not isinstance(nv, (int, float)):
            continue
        denom = max(abs(bv), abs(nv), 1e-12)
        drift = abs(bv - nv) / denom
        report["drift"][key] = drift
        worst = max(worst, drift)
    report["worst_drift"] = worst
    return report, (0 if worst <= eff_threshold else 1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptlab",
                                     description="adaptive-control experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("experiment", nargs="?", help="experiment name (or use --config)")
    run_p.add_argument("--config", type=Path, help="JSON config file")
    run_p.add_argument("--scale", choices=("desk", "full"), default="desk")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", type=Path)
    run_p.add_argument("--dim", type=int, help="override parameter dimension")
    run_p.add_argument("--psi", help="override mirror potential, e.g. p:2 or p:1.1")
    run_p.add_argument("--horizon", type=float)
    run_p.add_argument("--strict-bounds", action="store_true",
                       help="treat violated sufficient gain bounds as errors")

    cmp_p = sub.add_parser("compare", help="drift report between two run summaries")
    cmp_p.add_argument("baseline", type=Path)
    cmp_p.add_argument("new", type=Path)
    cmp_p.add_argument("--threshold", type=float, default=1e-12)

    sub.add_parser("list-experiments", help="list runnable experiments")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-experiments":
        for name in sorted(EXPERIMENTS):
            print(name)
        return 0
    if args.command == "compare":
        try:
            with open(args.baseline) as fh:
                baseline = json.load(fh)
            with open(args.new) as fh:
                new = json.load(fh)
            report, code = compare_summaries(baseline, new, args.threshold)
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        print(json.dumps(report, indent=2, sort_keys=True))
        return code
    # run
    try:
        if args.config is not None:
            with open(args.config) as fh:
                config = json.load(fh)
        elif args.experiment:
            config = {"experiment": args.experiment}
        else:
            raise ConfigError("give an experiment name or --config FILE")
        if args.experiment and "experiment" not in config:
            config["experiment"] = args.experiment
        if args.config is None and config.get("experiment") in EXPERIMENTS:
            config = {**default_config(config["experiment"], args.scale), **config}
        if args.seed is not None:
            config["seed"] = args.seed
        if args.dim is not None:
            config["dim"] = args.dim
        if args.horizon is not None:
            config["horizon"] = args.horizon
        if args.psi is not None:
            if args.psi.startswith("p:"):
                config["p"] = float(args.psi.split(":", 1)[1])
            else:
                raise ConfigError(f"unsupported --psi value {args.psi!r}")
        config = validate_config(config)
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    try:
        sidecar = run_experiment(config, args.out, strict_bounds=args.strict_bounds)
    except (DivergenceError, StiffnessError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except GainBoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(sidecar.get("metrics", {}), indent=2, sort_keys=True,
                     default=_json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
