"""Experiment registry: reproduction studies and property suites."""

from __future__ import annotations

from . import chemical, nn_momentum, primitives, reg_audit, three_body
from .benchmark import run_lyapunov_suite

__all__ = [
    "EXPERIMENTS",
    "default_config",
    "run_lyapunov_suite",
]


def _lyapunov_default(scale: str = "desk") -> dict:
    return {
        "experiment": "lyapunov-suite",
        "seed": 0,
        "horizon": 150.0,
        "step": 2e-3,
        "laws": None,  # None = all families
    }


def _lyapunov_run(config: dict, strict_bounds: bool = False):
    out = run_lyapunov_suite(horizon=config["horizon"], step=config["step"],
                             strict_bounds=strict_bounds, names=config.get("laws"))
    metrics = {
        "n_families": len(out["results"]),
        "violations": out["violations"],
        "tolerance": out["tolerance"],
        "worst_increment_ratio": max(
            (r["max_increment"] / max(r["max_V"], 1e-30) for r in out["results"].values()),
            default=0.0,
        ),
        "worst_s_end": max((r["s_end"] for r in out["results"].values()), default=0.0),
    }
    return {"metrics": metrics, "results": out["results"]}, {}


EXPERIMENTS = {
    "nn-momentum": (nn_momentum.default_config, nn_momentum.run),
    "primitives": (primitives.default_config, primitives.run),
    "three-body": (three_body.default_config, three_body.run),
    "chemical": (chemical.default_config, chemical.run),
    "reg-audit": (reg_audit.default_config, reg_audit.run),
    "lyapunov-suite": (_lyapunov_default, _lyapunov_run),
}


def default_config(name: str, scale: str = "desk") -> dict:
    if name not in EXPERIMENTS:
        raise KeyError(name)
    return EXPERIMENTS[name][0](scale)
