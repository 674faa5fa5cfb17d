"""Deterministic ODE integration with event handling and trajectory logging.

A :class:`CoupledSystem` is a flat-vector ODE assembled from named state
blocks (plant state, estimator states, centers, vectorized gain matrices).
Integration is either classic fixed-step RK4 or an adaptive embedded
Dormand-Prince 5(4) pair.  Scheduled events (task switches, shrinkage,
open-loop transitions) are applied exactly at their times: integration stops
on the boundary, the event mutates the state/system, and integration restarts,
so the log is bitwise reproducible given the same config.

The per-step hook ``post_step`` supports protocols that re-normalize state
between steps (e.g. mirror-domain integration with simplex projection).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, DivergenceError, ShapeError, StiffnessError


class StateLayout:
    """Named blocks laid out contiguously in one flat vector."""

    def __init__(self, blocks: Sequence[tuple[str, int]]):
        self.blocks = [(str(name), int(size)) for name, size in blocks]
        self.slices: dict[str, slice] = {}
        off = 0
        for name, size in self.blocks:
            if name in self.slices:
                raise ConfigError(f"duplicate block {name!r}")
            if size <= 0:
                raise ConfigError(f"block {name!r} has nonpositive size")
            self.slices[name] = slice(off, off + size)
            off += size
        self.size = off

    def pack(self, parts: dict[str, np.ndarray]) -> np.ndarray:
        if set(parts) != set(self.slices):
            raise ShapeError(f"blocks {sorted(parts)} != layout {sorted(self.slices)}")
        y = np.empty(self.size)
        for name, sl in self.slices.items():
            part = np.asarray(parts[name], dtype=float).ravel()
            if part.size != sl.stop - sl.start:
                raise ShapeError(f"block {name!r}: size {part.size} != {sl.stop - sl.start}")
            y[sl] = part
        return y

    def unpack(self, y: np.ndarray) -> dict[str, np.ndarray]:
        """Views into y, keyed by block name (writes propagate)."""
        return {name: y[sl] for name, sl in self.slices.items()}


@dataclass
class Event:
    """A discrete action applied exactly at time t."""

    t: float
    apply: Callable[[float, np.ndarray], None]  # mutates the flat state in place
    label: str = ""


@dataclass
class CoupledSystem:
    """Plant + controller/predictor + law assembled into one flat ODE."""

    layout: StateLayout
    deriv: Callable[[float, np.ndarray], np.ndarray]
    events: list[Event] = field(default_factory=list)
    # called after every accepted step; may renormalize the state in place
    post_step: Callable[[float, np.ndarray], None] | None = None
    # named scalar/vector observers evaluated at sample times for logging
    observers: dict[str, Callable[[float, np.ndarray], float]] = field(default_factory=dict)


@dataclass
class IntegratorConfig:
    method: str = "fixed-rk4"  # fixed-rk4 | adaptive-embedded-45
    step: float = 1e-3
    rtol: float = 1e-6
    atol: float = 1e-9
    sample_interval: float = 0.05
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in ("fixed-rk4", "adaptive-embedded-45"):
            raise ConfigError(f"unknown integrator method {self.method!r}")
        if self.step <= 0 or self.rtol <= 0 or self.atol <= 0 or self.sample_interval <= 0:
            raise ConfigError("step, rtol, atol and sample_interval must be positive")


class TrajectoryLog:
    """Time-stamped record of sampled states and observer columns.

    ``final_state`` holds the exact flat state at the end of integration (the
    sampled columns are observer projections, not the full state).
    """

    def __init__(self, columns: list[str]):
        self.columns = columns
        self._rows: list[list[float]] = []
        self.final_state: np.ndarray | None = None
        self.final_time: float | None = None

    def append(self, row: Sequence[float]) -> None:
        self._rows.append([float(v) for v in row])

    @property
    def t(self) -> np.ndarray:
        return self.to_array()[:, 0]

    def to_array(self) -> np.ndarray:
        return np.asarray(self._rows, dtype=float)

    def column(self, name: str) -> np.ndarray:
        return self.to_array()[:, self.columns.index(name)]

    def save(self, directory, sidecar: dict | None = None) -> Path:
        """Write trajectory.csv (+ summary.json sidecar) under directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / "trajectory.csv"
        arr = self.to_array()
        with open(csv_path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            np.savetxt(fh, arr, delimiter=",", fmt="%.17g")
        if sidecar is not None:
            with open(directory / "summary.json", "w") as fh:
                json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)
                fh.write("\n")
        return csv_path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau: 5th-order propagation, 4th-order error estimate.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _dp45_step(f, t, y, h):
    k = [f(t, y)]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_DP_A[i], k))
        k.append(f(t + _DP_C[i] * h, yi))
    y5 = y + h * sum(b * kk for b, kk in zip(_DP_B5, k) if b != 0.0)
    y4 = y + h * sum(b * kk for b, kk in zip(_DP_B4, k))
    return y5, y5 - y4


def _check_finite(t, y):
    if not np.all(np.isfinite(y)):
        raise DivergenceError(t)


def _advance_fixed(f, t0, t1, y, h, post_step):
    """RK4 from t0 to t1 with steps of at most h, landing exactly on t1."""
    t = t0
    span = t1 - t0
    n = max(1, int(math.ceil(span / h - 1e-12)))
    hs = span / n
    for i in range(n):
        y = rk4_step(f, t, y, hs)
        t = t0 + (i + 1) * hs
        _check_finite(t, y)
        if post_step is not None:
            post_step(t, y)
    return y


def _advance_adaptive(f, t0, t1, y, cfg, post_step, h_state):
    t = t0
    h = min(h_state[0], t1 - t0, cfg.max_step)
    h_min = 1e-14 * max(1.0, abs(t1))
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(h, t1 - t)
        y_new, err = _dp45_step(f, t, y, h)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        enorm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if enorm <= 1.0:
            t = t + h
            y = y_new
            _check_finite(t, y)
            if post_step is not None:
                post_step(t, y)
            grow = 0.9 * enorm ** (-0.2) if enorm > 0 else 5.0
            h = min(h * min(5.0, grow), cfg.max_step)
        else:
            h = h * max(0.2, 0.9 * enorm ** (-0.2))
        if h < h_min:
            raise StiffnessError(t)
    h_state[0] = max(h, h_min)
    return y


def integrate(
    system: CoupledSystem,
    config: IntegratorConfig,
    t_span: tuple[float, float],
    initial: np.ndarray,
) -> TrajectoryLog:
    """Integrate the coupled system, sampling the observers on a fixed grid.

    Events are applied exactly at their scheduled times (integration restarts
    at each boundary).  Raises :class:`DivergenceError` on non-finite states
    and :class:`StiffnessError` on adaptive step underflow.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(initial, dtype=float).ravel().copy()
    if y.size != system.layout.size:
        raise ShapeError(f"initial state size {y.size} != layout size {system.layout.size}")

    events = sorted((e for e in system.events if t0 < e.t <= t1), key=lambda e: e.t)
    n_samples = int(round((t1 - t0) / config.sample_interval))
    if abs(t0 + n_samples * config.sample_interval - t1) > 1e-9:
        n_samples = int(math.ceil((t1 - t0) / config.sample_interval))
    sample_times = [t0 + i * config.sample_interval for i in range(1, n_samples + 1)]
    sample_times[-1] = t1

    # merge samples and events into one ordered boundary list
    boundaries: list[tuple[float, str, object]] = [(t, "sample", None) for t in sample_times]
    boundaries += [(e.t, "event", e) for e in events]
    boundaries.sort(key=lambda b: (b[0], 0 if b[1] == "event" else 1))

    obs_names = list(system.observers)
    log = TrajectoryLog(["t"] + obs_names)

    def record(t, y):
        log.append([t] + [system.observers[name](t, y) for name in obs_names])

    record(t0, y)
    t = t0
    h_state = [config.step if config.method == "fixed-rk4" else config.sample_interval]
    for tb, kind, payload in boundaries:
        if tb > t + 1e-14 * max(1.0, abs(tb)):
            if config.method == "fixed-rk4":
                y = _advance_fixed(system.deriv, t, tb, y, config.step, system.post_step)
            else:
                y = _advance_adaptive(system.deriv, t, tb, y, config, system.post_step, h_state)
            t = tb
        if kind == "event":
            payload.apply(t, y)
            _check_finite(t, y)
        elif t > t0:
            record(t, y)
    log.final_state = y.copy()
    log.final_time = t
    return log


def simplex_project(beta) -> np.ndarray:
    """Clamp negative entries to zero and renormalize to unit 1-norm."""
    beta = np.asarray(beta, dtype=float)
    clipped = np.maximum(beta, 0.0)
    total = clipped.sum()
    if total <= 0.0:
        raise DegenerateInputError("simplex projection needs at least one positive entry")
    return clipped / total
