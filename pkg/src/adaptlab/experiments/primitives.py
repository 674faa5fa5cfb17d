"""Learning to control with convex combinations of primitives.

Phase 1 trains one Slotine-Li controller per random task until the estimates
settle.  Phase 2 tracks a piecewise target that hops between tasks using
u = sum_i beta_i u_i, adapting the mixture weights beta on the probability
simplex with either the Euclidean law (clip + renormalize) or the
multiplicative-weights mirror law driven by the negative entropy, which is
integrated directly in the mirrored domain and renormalized after every step.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..errors import ConfigError
from ..integrator import (
    CoupledSystem,
    Event,
    IntegratorConfig,
    StateLayout,
    integrate,
    simplex_project,
)


def default_config(scale: str = "desk") -> dict:
    desk = scale == "desk"
    return {
        "experiment": "primitives",
        "seed": 7,
        "n_features": 15,
        "n_primitives": 20 if desk else 300,
        "n_tasks": 3 if desk else 5,
        "horizon": 200.0 if desk else 1000.0,
        "train_horizon": 120.0 if desk else 240.0,
        "M": 0.1,
        "gamma_train": 5.0,
        "gamma_mix": 0.25,
        "eta": 0.5,
        "lam": 0.5,
        "x_std": 5.0,
        "a_std": 2.0,
        "init_std": 1e-3,
        "law": "both",  # euclidean | entropy | both
        "projection_interval": None,  # None -> every integrator step
        "integrator": {"method": "fixed-rk4", "step": 2e-3, "sample_interval": 0.05},
    }


class _TaskBank:
    """Vectorized task family x_d_i(t) = M sin(A_i t + B_i cos(C_i t)) + D_i."""

    def __init__(self, n: int, M: float, rng: np.random.Generator):
        self.M = M
        self.A = rng.uniform(0.0, 5.0 * math.pi, size=n)
        self.B = rng.uniform(0.0, 3.0, size=n)
        self.C = rng.uniform(0.0, 5.0 * math.pi, size=n)
        i = np.arange(1, n + 1)
        self.D = 2.0 * i * (-1.0) ** i * M

    def derivs(self, t: float):
        g = self.A * t + self.B * np.cos(self.C * t)
        dg = self.A - self.B * self.C * np.sin(self.C * t)
        ddg = -self.B * self.C**2 * np.cos(self.C * t)
        sin_g, cos_g = np.sin(g), np.cos(g)
        xd = self.M * sin_g + self.D
        xd1 = self.M * cos_g * dg
        xd2 = self.M * (-sin_g * dg**2 + cos_g * ddg)
        return xd, xd1, xd2


def train_primitives(cfg: dict, rng: np.random.Generator, V, a_true, tasks: _TaskBank):
    """Batch-train all primitives; returns (Theta, diagnostics)."""
    n, p = cfg["n_primitives"], cfg["n_features"]
    lam, eta, gamma = cfg["lam"], cfg["eta"], cfg["gamma_train"]
    layout = StateLayout([("X", 2 * n), ("TH", n * p)])

    def deriv(t, y):
        parts = layout.unpack(y)
        X = parts["X"].reshape(n, 2)
        TH = parts["TH"].reshape(n, p)
        F = np.tanh(X @ V.T)
        xd, xd1, xd2 = tasks.derivs(t)
        s = lam * (X[:, 0] - xd) + (X[:, 1] - xd1)
        xr = xd2 - lam * (X[:, 1] - xd1)
        f_hat = np.einsum("ij,ij->i", F, TH)
        u = f_hat + xr - eta * s
        f_true = F @ a_true
        dy = np.empty_like(y)
        out = layout.unpack(dy)
        dX = out["X"].reshape(n, 2)
        dX[:, 0] = X[:, 1]
        dX[:, 1] = u - f_true
        out["TH"].reshape(n, p)[:] = -gamma * s[:, None] * F
        return dy

    X0 = rng.normal(0.0, cfg["x_std"], size=(n, 2))
    TH0 = rng.normal(0.0, cfg["init_std"], size=(n, p))
    y0 = layout.pack({"X": X0.ravel(), "TH": TH0.ravel()})

    def s_max(t, y):
        parts = layout.unpack(y)
        X = parts["X"].reshape(n, 2)
        xd, xd1, _ = tasks.derivs(t)
        s = lam * (X[:, 0] - xd) + (X[:, 1] - xd1)
        return float(np.max(np.abs(s)))

    system = CoupledSystem(layout=layout, deriv=deriv, observers={"s_max": s_max})
    icfg = IntegratorConfig(**cfg["integrator"])
    log = integrate(system, icfg, (0.0, cfg["train_horizon"]), y0)
    parts = layout.unpack(log.final_state)
    theta = parts["TH"].reshape(n, p).copy()
    return theta, {"train_s_max_end": float(log.column("s_max")[-1])}


def run(config: dict, strict_bounds: bool = False) -> tuple[dict, dict]:
    t_start = time.perf_counter()
    rng = np.random.default_rng(config["seed"])
    n, p = config["n_primitives"], config["n_features"]
    V = rng.normal(0.0, 1.0 / p, size=(p, 2))
    a_true = rng.normal(0.0, config["a_std"], size=p)
    tasks = _TaskBank(n, config["M"], rng)
    schedule = rng.integers(0, n, size=config["n_tasks"]).tolist()

    theta, train_diag = train_primitives(config, rng, V, a_true, tasks)
    config = dict(config)
    config["x0"] = rng.normal(0.0, config["x_std"], size=2)

    which = config["law"]
    if which not in ("euclidean", "entropy", "both"):
        raise ConfigError("law must be euclidean, entropy or both")
    laws = ["euclidean", "entropy"] if which == "both" else [which]
    logs = {}
    metrics: dict = {"schedule": schedule, **train_diag}
    for law in laws:
        log = _run_mixture(config, law, V, a_true, tasks, schedule, theta)
        logs[law] = log
        metrics[law] = _segment_metrics(config, log)
    metrics["runtime_s"] = time.perf_counter() - t_start
    summary = {"metrics": metrics, "theta_primitives": theta}
    return summary, logs


def _run_mixture(cfg, law, V, a_true, tasks: _TaskBank, schedule, theta):
    n = cfg["n_primitives"]
    lam, eta, gamma = cfg["lam"], cfg["eta"], cfg["gamma_mix"]
    horizon = cfg["horizon"]
    seg = horizon / len(schedule)
    entropy = law == "entropy"
    layout = StateLayout([("x", 2), ("b", n)])

    def seg_idx(t):
        return min(int(t / seg), len(schedule) - 1)

    def beta_of(bstate):
        return np.exp(bstate - 1.0) if entropy else bstate

    def controls(t, x):
        """Primitive inputs share the current target's reference terms and
        differ only through each learned dynamics model (sum beta = 1 makes
        the mixture a convex combination of the models)."""
        F = np.tanh(V @ x)
        f_hat = theta @ F  # per-primitive dynamics estimates
        xd, xd1, xd2 = tasks.derivs(t)
        task = schedule[seg_idx(t)]
        s = lam * (x[0] - xd[task]) + (x[1] - xd1[task])
        xr = xd2[task] - lam * (x[1] - xd1[task])
        u_vec = f_hat + xr - eta * s
        return F, s, u_vec

    def deriv(t, y):
        parts = layout.unpack(y)
        x = parts["x"]
        beta = beta_of(parts["b"])
        F, s, u_vec = controls(t, x)
        u = float(beta @ u_vec)
        dy = np.empty_like(y)
        out = layout.unpack(dy)
        out["x"][0] = x[1]
        out["x"][1] = u - float(F @ a_true)
        out["b"][:] = -gamma * u_vec * s
        return dy

    proj_dt = cfg.get("projection_interval") or icfg_step(cfg)
    last_proj = [0.0]

    def post_step(t, y):
        if t - last_proj[0] < proj_dt - 1e-12:
            return
        last_proj[0] = t
        parts = layout.unpack(y)
        b = parts["b"]
        if entropy:
            # renormalizing onto the simplex is a uniform shift in the
            # mirrored (log) domain
            b -= math.log(float(np.sum(np.exp(b - 1.0))))
        else:
            b[:] = simplex_project(b)

    x0 = np.asarray(cfg["x0"], float)
    b0 = np.full(n, 1.0 / n)
    y0 = layout.pack({"x": x0, "b": np.log(b0) + 1.0 if entropy else b0})

    def s_obs(t, y):
        parts = layout.unpack(y)
        _, s, _ = controls(t, parts["x"])
        return float(s)

    observers = {
        "x1": lambda t, y: layout.unpack(y)["x"][0],
        "x2": lambda t, y: layout.unpack(y)["x"][1],
        "xd": lambda t, y: tasks.derivs(t)[0][schedule[seg_idx(t)]],
        "s": s_obs,
        "segment": lambda t, y: float(seg_idx(t)),
        "beta_sum": lambda t, y: float(np.sum(beta_of(layout.unpack(y)["b"]))),
        "beta_min": lambda t, y: float(np.min(beta_of(layout.unpack(y)["b"]))),
    }
    for i in range(n):
        observers[f"beta_{i:03d}"] = (
            lambda t, y, i=i: float(beta_of(layout.unpack(y)["b"])[i])
        )

    events = [Event(t=seg * l, apply=lambda t, y: None, label=f"switch-{l}")
              for l in range(1, len(schedule))]
    system = CoupledSystem(layout=layout, deriv=deriv, events=events,
                           post_step=post_step, observers=observers)
    icfg = IntegratorConfig(**cfg["integrator"])
    return integrate(system, icfg, (0.0, horizon), y0)


def icfg_step(cfg):
    return cfg["integrator"]["step"]


def _segment_metrics(cfg, log) -> dict:
    t = log.column("t")
    s = log.column("s")
    n_seg = cfg["n_tasks"]
    seg = cfg["horizon"] / n_seg
    s_ends = []
    for l in range(1, n_seg + 1):
        # strictly before the switch: at the boundary sample the target has
        # already jumped to the next task
        mask = t < seg * l - 1e-9
        s_ends.append(float(abs(s[mask][-1])))
    return {
        "s_end_per_segment": s_ends,
        "beta_sum_err_max": float(np.max(np.abs(log.column("beta_sum") - 1.0))),
        "beta_min": float(np.min(log.column("beta_min"))),
    }
