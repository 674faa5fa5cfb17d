"""Implicit-regularization audits on random underdetermined linear systems.

Each instance is a linear dynamics-prediction problem x_dot = Y(t) a whose
regressor spans a fixed low-dimensional row space, so infinitely many
parameter vectors interpolate the dynamics along the run.  The natural
first-order law and its momentum variant drive an observer-style predictor;
the converged estimate is compared against the independent Bregman projection
of the initial estimate onto the sampled interpolation set, and for the
Euclidean geometry additionally against the analytic least-norm interpolant.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..integrator import CoupledSystem, IntegratorConfig, StateLayout, integrate
from ..potentials import Potential, make_potential
from ..regcheck import (
    InterpolationSet,
    min_norm_interpolant,
    oracle_argmin_bregman,
    regularization_audit,
)


def default_config(scale: str = "desk") -> dict:
    return {
        "experiment": "reg-audit",
        "seed": 11,
        "n_systems": 100,
        "p_max": 12,
        "p_min": 6,
        "rank_max": 5,  # heavily underdetermined; one channel per direction
        "kinds": ["p2", "p1.5", "quadratic", "entropy", "log-barrier"],
        "laws": ["natural", "momentum-a"],
        "horizon": 30.0,
        "horizon_by_kind": {"entropy": 60.0, "log-barrier": 60.0},
        "k": 3.0,
        "gamma": 4.0,
        "gamma_by_kind": {"entropy": 5.0, "log-barrier": 8.0},
        "beta": 1.0,
        "mu": 2.0,
        "t_burn_frac": 0.2,
        "tolerance": 1e-3,
        "integrator": {"method": "fixed-rk4", "step": 0.02, "sample_interval": 0.05},
    }


def _make_potential(kind: str, rng: np.random.Generator, p_dim: int) -> Potential:
    if kind == "p2":
        return make_potential("squared-p-norm", p=2.0)
    if kind.startswith("p"):
        return make_potential("squared-p-norm", p=float(kind[1:]))
    if kind == "quadratic":
        d = rng.uniform(0.7, 1.5, size=p_dim)
        return make_potential("quadratic-form", q_matrix=np.diag(d))
    if kind == "entropy":
        return make_potential("negative-entropy")
    if kind == "log-barrier":
        return make_potential("log-barrier")
    raise ValueError(kind)


def _theta0(kind: str, p_dim: int) -> np.ndarray:
    if kind == "entropy":
        # unconstrained minimizer of sum x log x
        return np.full(p_dim, math.exp(-1.0))
    if kind == "log-barrier":
        return np.ones(p_dim)
    return np.zeros(p_dim)


def run_instance(kind: str, law_name: str, seed: int, cfg: dict) -> dict:
    rng = np.random.default_rng(seed)
    p_dim = int(rng.integers(cfg["p_min"], cfg["p_max"] + 1))
    r = int(rng.integers(2, cfg["rank_max"] + 1))
    # orthonormal constraint directions, one modulated output channel each
    M = np.linalg.qr(rng.normal(size=(p_dim, r)))[0].T
    omega = rng.uniform(0.6, 1.8, size=r)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=r)
    if kind in ("entropy", "log-barrier"):
        a_true = rng.uniform(0.3, 1.5, size=p_dim)
    else:
        a_true = rng.normal(size=p_dim)

    def regressor(t):
        return (np.sin(omega * t + phase))[:, None] * M  # (r, p)

    psi = _make_potential(kind, rng, p_dim)
    theta0 = _theta0(kind, p_dim)
    gamma = cfg.get("gamma_by_kind", {}).get(kind, cfg["gamma"])
    k = cfg["k"]
    beta, mu = cfg["beta"], cfg["mu"]
    momentum = law_name == "momentum-a"

    blocks = [("x", r), ("xh", r), ("w", p_dim)]
    if momentum:
        blocks.append(("th", p_dim))
    layout = StateLayout(blocks)

    def theta_of(parts):
        if momentum:
            return parts["th"]
        return psi.grad_inverse(parts["w"])

    def deriv(t, y):
        parts = layout.unpack(y)
        Y = regressor(t)
        e = parts["xh"] - parts["x"]
        theta = theta_of(parts)
        dy = np.empty_like(y)
        out = layout.unpack(dy)
        out["x"][:] = Y @ a_true
        out["xh"][:] = -k * e + Y @ theta
        drive = Y.T @ e
        if momentum:
            n_val = 1.0 + mu * float(np.sum(Y * Y))
            v_hat = psi.grad_inverse(parts["w"])
            out["w"][:] = -gamma * drive
            out["th"][:] = beta * n_val * (v_hat - parts["th"])
        else:
            out["w"][:] = -gamma * drive
        return dy

    x0 = rng.normal(0.0, 0.5, size=r)
    parts0 = {"x": x0, "xh": x0.copy(), "w": psi.grad(theta0)}
    if momentum:
        parts0["th"] = theta0.copy()
    y0 = layout.pack(parts0)

    def err_obs(t, y):
        parts = layout.unpack(y)
        return float(np.linalg.norm(parts["xh"] - parts["x"]))

    horizon = cfg.get("horizon_by_kind", {}).get(kind, cfg["horizon"])
    system = CoupledSystem(layout=layout, deriv=deriv, observers={"e_norm": err_obs})
    icfg = IntegratorConfig(**cfg["integrator"])
    log = integrate(system, icfg, (0.0, horizon), y0)

    parts = layout.unpack(log.final_state)
    theta_final = theta_of(parts).copy()

    t_burn = cfg["t_burn_frac"] * horizon
    ts = log.column("t")
    rows, vals = [], []
    for tk in ts[ts > t_burn]:
        Yk = regressor(tk)
        rows.append(Yk)
        vals.append(Yk @ a_true)
    iset = InterpolationSet.from_samples(np.vstack(rows), np.concatenate(vals))
    report = regularization_audit(psi, theta0, theta_final, iset)
    report.update(kind=kind, law=law_name, p_dim=p_dim, rank=r,
                  e_final=float(log.column("e_norm")[-1]))
    if kind == "p2":
        mn = min_norm_interpolant(iset)
        report["min_norm_gap"] = float(np.linalg.norm(theta_final - mn, np.inf))
    return report


def run(config: dict, strict_bounds: bool = False) -> tuple[dict, dict]:
    t_start = time.perf_counter()
    rng = np.random.default_rng(config["seed"])
    seeds = rng.integers(0, 2**31 - 1, size=config["n_systems"])
    results = []
    worst = {"bregman_gap": 0.0, "min_norm_gap": 0.0}
    kinds = config["kinds"]
    # the system draws rotate through the potential kinds; every system is
    # audited under both the first-order and the momentum law
    for i, s in enumerate(seeds):
        kind = kinds[i % len(kinds)]
        for law_name in config["laws"]:
            rep = run_instance(kind, law_name, int(s), config)
            results.append(rep)
            worst["bregman_gap"] = max(worst["bregman_gap"], rep["bregman_gap"])
            if "min_norm_gap" in rep:
                worst["min_norm_gap"] = max(worst["min_norm_gap"], rep["min_norm_gap"])
    tol = config["tolerance"]
    n_fail = sum(1 for rep in results if rep["bregman_gap"] >= tol)
    metrics = {
        "n_instances": len(results),
        "worst_bregman_gap": worst["bregman_gap"],
        "worst_min_norm_gap": worst["min_norm_gap"],
        "n_gap_failures": n_fail,
        "tolerance": tol,
        "runtime_s": time.perf_counter() - t_start,
    }
    summary = {
        "metrics": metrics,
        "per_instance": [
            {k: v for k, v in rep.items() if k != "oracle"} for rep in results
        ],
    }
    return summary, {}
