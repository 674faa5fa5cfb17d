"""Wiring of plant + sliding controller + adaptation law into one flat ODE."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..control import DesiredTrajectory, SlidingConfig, control_input, reference_accel, sliding_value
from ..errors import ConfigError
from ..integrator import CoupledSystem, Event, StateLayout
from ..laws import AdaptationLaw, PIPack, Signals
from ..plants import TrackingPlant


@dataclass
class TrackingAssembly:
    system: CoupledSystem
    layout: StateLayout
    initial: np.ndarray
    plant: TrackingPlant
    law: AdaptationLaw
    probe: Callable[[float, np.ndarray], dict]
    # mutable run-mode switches (events flip these)
    mode: dict


def build_tracking_system(
    plant: TrackingPlant,
    law: AdaptationLaw,
    traj: DesiredTrajectory,
    sliding: SlidingConfig,
    x0,
    theta0,
    v0=None,
    oracle: str = "auto",  # auto | off | corrupt-after
    corrupt_at: float | None = None,
    corrupt_offset: float = 0.0,
    log_theta: int = 0,
    extra_observers: dict | None = None,
    events: list[Event] | None = None,
) -> TrackingAssembly:
    """Assemble the closed-loop tracking simulation for one adaptation law.

    ``oracle='auto'`` feeds the f~ channel whenever the plant is in testing
    mode; ``'off'`` withholds it (PI realizations must still run);
    ``'corrupt-after'`` poisons only the law-visible oracle channel past
    ``corrupt_at`` while leaving the plant untouched, which lets tests verify
    that PI realizations never read it.
    """
    n = plant.n
    if len(np.asarray(x0, float)) != n:
        raise ConfigError("x0 must match the plant order")
    param = plant.param
    layout = StateLayout([("x", n)] + law.blocks())
    mode = {"oracle": oracle, "adapt": True}

    def pi_pack(x, t):
        if not getattr(param, "supports_pi", False):
            return None
        return PIPack(
            A=param.antideriv(x, t),
            dA_dx1=param.d_antideriv_dx1(x, t),
            dA_dt=param.d_antideriv_dt(x, t),
        )

    def signals(t, x):
        refs = traj.derivs(t, n)
        x_t = x - refs[:n]
        s = sliding_value(x_t, sliding.lam)
        xr_n = reference_accel(x, refs, sliding.lam)
        return Signals(t=t, x=x, s=s, reg=param.direction(x, t), pi=pi_pack(x, t)), xr_n

    def compute(t, x, st):
        sig, xr_n = signals(t, x)
        theta = law.theta_hat(sig, st)
        f_hat = plant.f_at(x, theta, t)
        sig.u = control_input(f_hat, xr_n, sliding.eta, sig.s)
        sig.f_eval = lambda th: plant.f_at(x, th, t)
        if plant.testing and mode["oracle"] != "off":
            f_tilde = f_hat - plant.f_true(x, t)
            if (
                mode["oracle"] == "corrupt-after"
                and corrupt_at is not None
                and t >= corrupt_at
            ):
                f_tilde = f_tilde + corrupt_offset
            sig.f_tilde = f_tilde
        return sig, theta

    def deriv(t, y):
        parts = layout.unpack(y)
        x = parts["x"]
        st = {k: v for k, v in parts.items() if k != "x"}
        sig, theta = compute(t, x, st)
        dy = np.empty_like(y)
        out = layout.unpack(dy)
        out["x"][:] = plant.state_derivative(x, sig.u, t)
        if mode["adapt"]:
            for name, rate in law.rates(sig, st).items():
                out[name][:] = rate
        else:
            for name in st:
                out[name][:] = 0.0
        return dy

    _memo: dict = {"key": None, "val": None}

    def probe(t, y):
        key = (t, id(y))
        if _memo["key"] == key:
            return _memo["val"]
        parts = layout.unpack(y)
        x = parts["x"]
        st = {k: v for k, v in parts.items() if k != "x"}
        sig, theta = compute(t, x, st)
        refs = traj.derivs(t, n)
        info = {
            "t": t,
            "x": x,
            "theta": theta,
            "s": sig.s,
            "u": sig.u,
            "xd": refs[0],
            "xd_dot": refs[1] if n > 1 else 0.0,
            "tracking_err": abs(x[0] - refs[0]),
        }
        if plant.testing:
            info["f_tilde"] = plant.f_tilde(x, theta, t)
            info["V"] = law.lyapunov(sig, st, plant.true_params)
        v_fn = getattr(law, "v_hat", None)
        if v_fn is not None:
            v = v_fn(sig, st) if law.family != "natural-momentum" else v_fn(st)
            if v is not None:
                info["av_gap"] = float(np.linalg.norm(theta - v))
        gain_norm = getattr(law, "gain_norm", None)
        if gain_norm is not None:
            info["P_norm"] = gain_norm(st)
        _memo["key"], _memo["val"] = key, info
        return info

    observers: dict[str, Callable] = {}

    def col(name, fn):
        observers[name] = fn

    col("x1", lambda t, y: layout.unpack(y)["x"][0])
    if n > 1:
        col("x2", lambda t, y: layout.unpack(y)["x"][1])
    col("xd", lambda t, y: traj.derivs(t, n)[0])
    col("xd_dot", lambda t, y: traj.derivs(t, n)[1] if n > 1 else 0.0)
    col("s", lambda t, y: probe(t, y)["s"])
    col("u", lambda t, y: probe(t, y)["u"])
    col("th_l1", lambda t, y: float(np.linalg.norm(probe(t, y)["theta"], 1)))
    col("th_linf", lambda t, y: float(np.linalg.norm(probe(t, y)["theta"], np.inf)))
    if plant.testing:
        col("V", lambda t, y: probe(t, y)["V"])
        # multiply instead of ** so float overflow yields inf, not a raise
        col("f_tilde_sq", lambda t, y: (lambda f: f * f)(probe(t, y)["f_tilde"]))
    if getattr(law, "v_hat", None) is not None:
        col("av_gap", lambda t, y: probe(t, y).get("av_gap", 0.0))
    if getattr(law, "gain_norm", None) is not None:
        col("P_norm", lambda t, y: probe(t, y)["P_norm"])
    for i in range(log_theta):
        col(f"theta_{i:03d}", lambda t, y, i=i: probe(t, y)["theta"][i])
    if extra_observers:
        observers.update(extra_observers)

    # initial state; PI realizations are aligned so theta_hat(t0) = theta0
    try:
        st0 = law.init_state(theta0, v0=v0) if v0 is not None else law.init_state(theta0)
    except TypeError:
        st0 = law.init_state(theta0)
    align = getattr(law, "align_pi", None)
    if align is not None and getattr(law, "realization", None) == "pi":
        if not getattr(param, "supports_pi", False):
            raise ConfigError(
                f"{law.family}: PI realization needs a regressor antiderivative pack"
            )
        sig0, _ = signals(0.0, np.asarray(x0, float))
        align(st0, sig0)
    initial = layout.pack({"x": np.asarray(x0, float), **st0})

    system = CoupledSystem(layout=layout, deriv=deriv, events=list(events or []),
                           observers=observers)
    return TrackingAssembly(system=system, layout=layout, initial=initial, plant=plant,
                            law=law, probe=probe, mode=mode)
