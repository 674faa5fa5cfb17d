"""Second-order linearly parameterized benchmark and the Lyapunov suite.

The benchmark plant f = Y(x, t) a uses three bounded, persistently exciting
features with closed-form antiderivatives in x2, so every PI realization runs
on it.  For a linear parameterization the monotone-direction constants are
D1 = D2 = 1 with alpha = Y.

The suite runs every law family with gains satisfying its sufficient momentum
bound, audits the proof's Lyapunov certificate for monotonicity, and checks
terminal tracking.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..control import SineOfSine, SlidingConfig
from ..integrator import IntegratorConfig, integrate
from ..laws import (
    QuadQuartCost,
    TrackingPotentialLaw,
    lyapunov_audit,
    make_law,
)
from ..plants import LinearInParams, TrackingPlant
from ..potentials import QuadraticForm
from .assembly import build_tracking_system


def benchmark_plant(a_true=(1.0, -2.0, 1.5), testing: bool = True) -> TrackingPlant:
    w = 1.3
    ph = 0.2

    def reg(x, t):
        return np.array([math.sin(w * t + ph), math.tanh(x[0]), math.tanh(x[1])])

    def antideriv(x, t):
        return np.array(
            [x[1] * math.sin(w * t + ph), x[1] * math.tanh(x[0]), _logcosh(x[1])]
        )

    def d_antideriv_dx1(x, t):
        return np.array([0.0, x[1] * (1.0 - math.tanh(x[0]) ** 2), 0.0])

    def d_antideriv_dt(x, t):
        return np.array([w * x[1] * math.cos(w * t + ph), 0.0, 0.0])

    param = LinearInParams(reg, 3, antideriv=antideriv, d_antideriv_dx1=d_antideriv_dx1,
                           d_antideriv_dt=d_antideriv_dt)
    return TrackingPlant(2, param, np.asarray(a_true, float), testing=testing)


def _logcosh(z):
    az = abs(z)
    return az + math.log1p(math.exp(-2.0 * az)) - math.log(2.0)


def benchmark_psi():
    """Strongly convex non-Euclidean geometry with known l = 1, L = 2."""
    return QuadraticForm(np.diag([2.0, 1.5, 1.0]))


ETA = 1.0
LAM = 1.0


def suite_law_specs() -> dict[str, dict]:
    """Law configurations for the Lyapunov suite; each momentum-family mu
    strictly exceeds its sufficient bound for the benchmark's eta."""
    psi = {"psi": "benchmark"}
    return {
        "slotine-li": {"family": "slotine-li"},
        "natural": {"family": "natural", "gamma": 1.5, **psi},
        "tyukin-pi": {"family": "tyukin", "realization": "pi"},
        "composite": {"family": "composite", "gamma": 1.0, "kappa": 1.0,
                      "realization": "oracle"},
        "composite-pi": {"family": "composite", "gamma": 1.0, "kappa": 1.0,
                         "realization": "pi"},
        "momentum": {"family": "momentum", "gamma": 2.0, "beta": 1.0, "mu": 6.0},
        "momentum-composite": {"family": "momentum-composite", "gamma": 1.0, "kappa": 1.0,
                               "beta": 1.0, "mu": 4.5, "realization": "pi"},
        "momentum-tyukin": {"family": "momentum-tyukin", "gamma": 1.5, "beta": 1.0,
                            "mu": 3.0, "realization": "pi", "D1": 1.0},
        "elastic-first-order": {"family": "elastic", "variant": "first-order",
                                "base": "tyukin", "k": 0.5},
        "elastic-ho-center-a": {"family": "elastic", "variant": "ho-center-a", "k": 0.5,
                                "gamma": 1.0, "beta": 1.0, "mu": 6.0, "D1": 1.0},
        "elastic-ho-center-v": {"family": "elastic", "variant": "ho-center-v", "rho_c": 1.0,
                                "gamma": 1.0, "beta": 1.0, "mu": 2.0, "D1": 1.0},
        "elastic-ho-both": {"family": "elastic", "variant": "ho-both", "k": 0.5,
                            "rho_c": 0.3, "gamma": 1.0, "beta": 1.0, "mu": 6.0, "D1": 1.0},
        "bgf-composite-1st": {"family": "bgf", "variant": "composite-1st", "lam0": 1.0,
                              "P0": 2.0, "realization": "pi"},
        "bgf-composite-momentum": {"family": "bgf", "variant": "composite-momentum",
                                   "lam0": 1.0, "P0": 2.0, "beta": 1.0, "mu": 5.0,
                                   "realization": "pi"},
        "bgf-tyukin-1st": {"family": "bgf", "variant": "tyukin-1st", "lam0": 1.0,
                           "P0": 2.0, "realization": "pi"},
        "bgf-tyukin-momentum": {"family": "bgf", "variant": "tyukin-momentum", "lam0": 1.0,
                                "P0": 2.0, "beta": 1.0, "mu": 5.0, "realization": "pi",
                                "D1": 1.0, "D2": 1.0},
        "natural-momentum-a": {"family": "natural-momentum", "variant": "a", "gamma": 1.0,
                               "beta": 1.0, "mu": 3.0, "l": 1.0, "L": 2.0, **psi},
        "natural-momentum-b": {"family": "natural-momentum", "variant": "b", "gamma": 1.0,
                               "beta": 1.0, "mu": 6.0, "l": 1.0, "L": 2.0, **psi},
        "natural-momentum-c": {"family": "natural-momentum", "variant": "c", "gamma": 1.0,
                               "beta": 1.0, "mu": 6.0, "l": 1.0, "L": 2.0, **psi},
        "tracking-potential": {"family": "tracking-potential", "gamma": 1.5,
                               "cost": "quad-quart", "c": 0.25, **psi},
    }


def build_suite_law(name: str, spec: dict):
    spec = dict(spec)
    psi = benchmark_psi() if spec.pop("psi", None) == "benchmark" else None
    return make_law(spec, dim=3, psi=psi)


def run_suite_member(name: str, spec: dict, horizon: float = 150.0, step: float = 2e-3,
                     strict_bounds: bool = False) -> dict:
    """Run one law on the benchmark; return the certificate audit and metrics."""
    plant = benchmark_plant(testing=True)
    law = build_suite_law(name, spec)
    warnings = law.enforce(strict_bounds, eta=ETA)
    traj = SineOfSine()
    sliding = SlidingConfig(2, LAM, ETA)
    x0 = np.array([0.4, -0.2])
    theta0 = np.zeros(3)
    asm = build_tracking_system(plant, law, traj, sliding, x0, theta0, log_theta=3)
    cfg = IntegratorConfig(method="fixed-rk4", step=step, sample_interval=0.05)
    log = integrate(asm.system, cfg, (0.0, horizon), asm.initial)
    V = log.column("V")
    s = log.column("s")
    theta_cols = np.stack([log.column(f"theta_{i:03d}") for i in range(3)], axis=1)
    dt = np.diff(log.column("t"))
    theta_rate = np.max(np.abs(np.diff(theta_cols, axis=0)), axis=1) / dt
    out = {
        "law": name,
        "max_V": float(np.max(V)),
        "max_increment": lyapunov_audit(V),
        "s_end": float(abs(s[-1])),
        "tracking_err_end": float(abs(log.column("x1")[-1] - log.column("xd")[-1])),
        "theta_rate_end": float(theta_rate[-1]),
        "gain_warnings": warnings,
    }
    if "P_norm" in log.columns:
        out["P_norm_max"] = float(np.max(log.column("P_norm")))
    return out


def run_lyapunov_suite(horizon: float = 150.0, step: float = 2e-3,
                       strict_bounds: bool = False, names=None,
                       workers: int | None = None) -> dict:
    specs = suite_law_specs()
    if names:
        specs = {k: v for k, v in specs.items() if k in names}
    items = list(specs.items())
    if workers is None:
        workers = min(len(items), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {name: pool.submit(run_suite_member, name, spec, horizon, step,
                                      strict_bounds)
                    for name, spec in items}
            results = {name: fut.result() for name, fut in futs.items()}
    else:
        results = {name: run_suite_member(name, spec, horizon=horizon, step=step,
                                          strict_bounds=strict_bounds)
                   for name, spec in items}
    tol = 1e-6
    violations = [
        name
        for name, r in results.items()
        if r["max_increment"] > tol * max(r["max_V"], 1e-30) or r["s_end"] >= 1e-2
    ]
    return {"results": results, "violations": violations, "tolerance": tol}
