"""Sliding-variable machinery and reference-trajectory generation.

For an n-th order plant x^(n) + f(x, a, t) = u tracking a desired trajectory
x_d(t), the scalar sliding variable

    s = (d/dt + lam)^(n-1) x_tilde,   x_tilde = x - x_d,

collapses the tracking problem to the first-order error model
s_dot = -eta s + (f(x, a_hat, t) - f(x, a, t)) once the certainty-equivalent
input u = f(x, a_hat, t) + x_ref_n - eta s is applied.  All reference terms
are closed-form; nothing is differentiated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class SlidingConfig:
    n: int
    lam: float  # filter bandwidth, > 0
    eta: float  # feedback gain, > 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("system order n must be >= 1")
        if self.lam <= 0 or self.eta <= 0:
            raise ConfigError("lambda and eta must be positive")


def _binomial_weights(n: int, lam: float) -> np.ndarray:
    """Coefficients of (d/dt + lam)^(n-1) on (x~, x~', ..., x~^(n-1))."""
    return np.array([math.comb(n - 1, k) * lam ** (n - 1 - k) for k in range(n)])


def sliding_value(x_tilde, lam: float) -> float:
    """s = sum_k C(n-1, k) lam^(n-1-k) x_tilde^(k) for the error-state vector."""
    x_tilde = np.asarray(x_tilde, dtype=float)
    if x_tilde.ndim != 1 or x_tilde.size < 1:
        raise ShapeError("x_tilde must be a 1-d vector of length n")
    return float(_binomial_weights(x_tilde.size, lam) @ x_tilde)


def sliding_time_partial(x_d_derivs, lam: float) -> float:
    """ds/dt at frozen state: -sum_k C(n-1,k) lam^(n-1-k) x_d^(k+1)."""
    d = np.asarray(x_d_derivs, dtype=float)
    n = d.size - 1  # derivatives 0..n supplied
    w = _binomial_weights(n, lam)
    return -float(w @ d[1 : n + 1])


def reference_accel(x, x_d_derivs, lam: float) -> float:
    """The known feedforward term x_ref^(n) with s_dot = x^(n) - x_ref^(n).

    Expanding s_dot = x~^(n) + sum_{k<n-1} C(n-1,k) lam^(n-1-k) x~^(k+1) gives
    x_ref^(n) = x_d^(n) - sum_{k<n-1} C(n-1,k) lam^(n-1-k) x~^(k+1).
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(x_d_derivs, dtype=float)
    n = x.size
    if d.size != n + 1:
        raise ShapeError("x_d_derivs must hold derivatives 0..n")
    w = _binomial_weights(n, lam)
    xt = x - d[:n]
    rem = float(w[: n - 1] @ (xt[1:n])) if n > 1 else 0.0
    return float(d[n]) - rem


def control_input(f_hat: float, xr_n: float, eta: float, s: float) -> float:
    """Certainty-equivalent input u = f_hat + x_ref^(n) - eta s."""
    return f_hat + xr_n - eta * s


class DesiredTrajectory:
    """Closed-form desired trajectory with analytic derivatives up to order n."""

    def derivs(self, t: float, order: int) -> np.ndarray:
        """Array [x_d, x_d', ..., x_d^(order)] at time t."""
        raise NotImplementedError


class SineOfSine(DesiredTrajectory):
    """x_d(t) = sin(w1 t + cos(w2 t)), the benchmark tracking target."""

    def __init__(self, w1: float = math.sqrt(2.0) * math.pi / 12.0,
                 w2: float = math.sqrt(3.0) * math.pi / 12.0):
        self.w1 = w1
        self.w2 = w2

    def derivs(self, t, order=2):
        if order > 2:
            raise ConfigError("SineOfSine provides derivatives up to order 2")
        g = self.w1 * t + math.cos(self.w2 * t)
        dg = self.w1 - self.w2 * math.sin(self.w2 * t)
        ddg = -self.w2**2 * math.cos(self.w2 * t)
        out = [math.sin(g), math.cos(g) * dg, -math.sin(g) * dg**2 + math.cos(g) * ddg]
        return np.array(out[: order + 1])


class SinusoidPrimitive(DesiredTrajectory):
    """x_d(t) = M sin(A t + B cos(C t)) + D, one member of the task family."""

    def __init__(self, M: float, A: float, B: float, C: float, D: float):
        self.M, self.A, self.B, self.C, self.D = M, A, B, C, D

    def derivs(self, t, order=2):
        if order > 2:
            raise ConfigError("SinusoidPrimitive provides derivatives up to order 2")
        g = self.A * t + self.B * math.cos(self.C * t)
        dg = self.A - self.B * self.C * math.sin(self.C * t)
        ddg = -self.B * self.C**2 * math.cos(self.C * t)
        out = [
            self.M * math.sin(g) + self.D,
            self.M * math.cos(g) * dg,
            self.M * (-math.sin(g) * dg**2 + math.cos(g) * ddg),
        ]
        return np.array(out[: order + 1])


class ZeroTrajectory(DesiredTrajectory):
    """Regulation target x_d = 0 (used by predictor-style runs)."""

    def derivs(self, t, order=2):
        return np.zeros(order + 1)


def draw_primitive_family(
    n_tasks: int, rng: np.random.Generator, M: float = 0.1
) -> list[SinusoidPrimitive]:
    """Sample the random task family: A, C ~ U(0, 5 pi), B ~ U(0, 3), offsets
    D_i = 2 i (-1)^i M keep the tasks in non-overlapping state-space bands."""
    tasks = []
    for i in range(1, n_tasks + 1):
        A = rng.uniform(0.0, 5.0 * math.pi)
        B = rng.uniform(0.0, 3.0)
        C = rng.uniform(0.0, 5.0 * math.pi)
        D = 2.0 * i * (-1.0) ** i * M
        tasks.append(SinusoidPrimitive(M, A, B, C, D))
    return tasks


class PiecewiseTasks(DesiredTrajectory):
    """Piecewise target switching through drawn tasks at t_l = l T / k.

    Switches are discontinuous; the integrator must treat each t_l as a hard
    segment boundary so runs stay deterministic.
    """

    def __init__(self, tasks: list[DesiredTrajectory], schedule: list[int], horizon: float):
        if not schedule:
            raise ConfigError("schedule must select at least one task")
        self.tasks = tasks
        self.schedule = list(schedule)
        self.horizon = float(horizon)
        self.segment = self.horizon / len(self.schedule)

    def segment_index(self, t: float) -> int:
        idx = int(t / self.segment)
        return min(idx, len(self.schedule) - 1)

    def switch_times(self) -> list[float]:
        return [self.segment * l for l in range(1, len(self.schedule))]

    def derivs(self, t, order=2):
        return self.tasks[self.schedule[self.segment_index(t)]].derivs(t, order)
