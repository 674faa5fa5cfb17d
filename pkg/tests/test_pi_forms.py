"""Proportional-integral realizations against oracle integrations.

The PI law closes the loop; an auxiliary copy of the same law integrates the
oracle form (reading the true function error) along the identical closed-loop
trajectory.  Exact realizations keep the two estimates together to
integration accuracy, all without the PI side ever touching the oracle
channel.
"""

import numpy as np
import pytest

from adaptlab.control import SineOfSine, SlidingConfig
from adaptlab.integrator import IntegratorConfig, integrate
from adaptlab.laws import Composite, MomentumTyukin, NaturalTyukin, Signals, Tyukin
from adaptlab.plants import nn_tracking_plant, tanh_linear_plant
from adaptlab.potentials import SquaredPNorm
from adaptlab.experiments.assembly import build_tracking_system

RNG = np.random.default_rng(2024)


class PairedLaw:
    """Runs a PI law (in control) plus the oracle form of the same law as a
    passive rider, so both see the identical measured signals."""

    def __init__(self, pi_law, oracle_law):
        self.pi = pi_law
        self.oracle = oracle_law
        self.family = f"paired-{pi_law.family}"
        self.requires_oracle = True
        self.realization = "pi"
        self.dim = pi_law.dim

    def blocks(self):
        return self.pi.blocks() + [("or_" + n, d) for n, d in self.oracle.blocks()]

    def init_state(self, theta0, v0=None):
        try:
            st = dict(self.pi.init_state(theta0, v0=v0))
            st.update({"or_" + k: v for k, v in self.oracle.init_state(theta0, v0=v0).items()})
        except TypeError:
            st = dict(self.pi.init_state(theta0))
            st.update({"or_" + k: v for k, v in self.oracle.init_state(theta0).items()})
        return st

    def align_pi(self, st, sig):
        self.pi.align_pi(st, sig)

    def _split(self, st):
        pi_st = {k: v for k, v in st.items() if not k.startswith("or_")}
        or_st = {k[3:]: v for k, v in st.items() if k.startswith("or_")}
        return pi_st, or_st

    def theta_hat(self, sig, st):
        pi_st, _ = self._split(st)
        return self.pi.theta_hat(sig, pi_st)

    def oracle_theta(self, sig, st):
        _, or_st = self._split(st)
        return self.oracle.theta_hat(sig, or_st)

    def rates(self, sig, st):
        pi_st, or_st = self._split(st)
        # the oracle law integrates its own parameters with its own f~
        theta_or = self.oracle.theta_hat(sig, or_st)
        f_true = sig.f_eval(self.theta_hat(sig, pi_st)) - sig.f_tilde
        or_sig = Signals(t=sig.t, x=sig.x, s=sig.s, reg=sig.reg, u=sig.u,
                         f_eval=sig.f_eval,
                         f_tilde=sig.f_eval(theta_or) - f_true, pi=sig.pi)
        out = dict(self.pi.rates(sig, pi_st))
        out.update({"or_" + k: v for k, v in self.oracle.rates(or_sig, or_st).items()})
        return out

    def lyapunov(self, sig, st, a_true):
        pi_st, _ = self._split(st)
        return self.pi.lyapunov(sig, pi_st, a_true)


def _signals_at(asm, plant, traj, sliding, t, x):
    from adaptlab.control import reference_accel, sliding_value

    refs = traj.derivs(t, 2)
    s = sliding_value(x - refs[:2], sliding.lam)
    from adaptlab.laws import PIPack

    param = plant.param
    pack = PIPack(A=param.antideriv(x, t), dA_dx1=param.d_antideriv_dx1(x, t),
                  dA_dt=param.d_antideriv_dt(x, t))
    sig = Signals(t=t, x=x, s=s, reg=param.direction(x, t), pi=pack)
    sig.f_eval = lambda th: plant.f_at(x, th, t)
    return sig, refs


def max_gap_over_run(plant, pair, theta0, v0=None, horizon=5.0, step=1e-3,
                     sample=0.05):
    """Integrate and record the worst PI/oracle estimate deviation at samples."""
    traj = SineOfSine()
    sliding = SlidingConfig(2, 0.5, 0.5)
    refs0 = traj.derivs(0.0, 2)
    x0 = refs0[:2] + np.array([0.3, -0.2])
    asm = build_tracking_system(plant, pair, traj, sliding, x0, theta0, v0=v0)
    gaps = []

    def gap_obs(t, y):
        parts = asm.layout.unpack(y)
        st = {k: v for k, v in parts.items() if k != "x"}
        sig, _ = _signals_at(asm, plant, traj, sliding, t, parts["x"])
        th_pi = pair.theta_hat(sig, st)
        th_or = pair.oracle_theta(sig, st)
        g = float(np.max(np.abs(th_pi - th_or)))
        gaps.append(g)
        return g

    asm.system.observers["pi_gap"] = gap_obs
    log = integrate(asm.system, IntegratorConfig(step=step, sample_interval=sample),
                    (0.0, horizon), asm.initial)
    return float(np.max(log.column("pi_gap")))


def small_nn_plant(dim=8):
    V = RNG.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, 2))
    a_true = RNG.normal(0.0, 2.0, size=dim)
    return nn_tracking_plant(V, a_true, testing=True)


def small_linear_plant(dim=6):
    V = RNG.normal(0.0, 0.4, size=(dim, 2))
    a_true = RNG.normal(0.0, 1.5, size=dim)
    return tanh_linear_plant(V, a_true, testing=True)


def test_tyukin_pi_matches_oracle():
    plant = small_nn_plant()
    pair = PairedLaw(Tyukin(plant.dim, realization="pi"),
                     Tyukin(plant.dim, realization="oracle"))
    gap = max_gap_over_run(plant, pair, np.zeros(plant.dim))
    assert gap < 1e-4, gap


def test_natural_tyukin_pi_matches_oracle():
    plant = small_nn_plant()
    psi = SquaredPNorm(1.5)
    pair = PairedLaw(NaturalTyukin(plant.dim, psi, gamma=1.2, realization="pi"),
                     NaturalTyukin(plant.dim, psi, gamma=1.2, realization="oracle"))
    theta0 = np.abs(RNG.normal(0.0, 0.1, size=plant.dim)) + 0.05
    gap = max_gap_over_run(plant, pair, theta0)
    assert gap < 1e-4, gap


def test_composite_pi_matches_oracle():
    plant = small_linear_plant()
    pair = PairedLaw(Composite(plant.dim, gamma=1.0, kappa=1.0, realization="pi"),
                     Composite(plant.dim, gamma=1.0, kappa=1.0, realization="oracle"))
    gap = max_gap_over_run(plant, pair, np.zeros(plant.dim))
    assert gap < 1e-4, gap


def test_momentum_tyukin_pi_matches_oracle():
    plant = small_nn_plant()
    psi = SquaredPNorm(2.0)
    pair = PairedLaw(
        MomentumTyukin(plant.dim, gamma=1.5, beta=1.0, mu=4.5, psi=psi, realization="pi"),
        MomentumTyukin(plant.dim, gamma=1.5, beta=1.0, mu=4.5, psi=psi, realization="oracle"),
    )
    gap = max_gap_over_run(plant, pair, np.zeros(plant.dim))
    assert gap < 1e-4, gap


def test_pi_runs_without_oracle_channel():
    """PI realization integrates with the f~ channel withheld entirely."""
    plant = small_nn_plant()
    law = Tyukin(plant.dim, realization="pi")
    traj = SineOfSine()
    sliding = SlidingConfig(2, 0.5, 0.5)
    x0 = traj.derivs(0.0, 2)[:2]
    asm = build_tracking_system(plant, law, traj, sliding, x0,
                                np.zeros(plant.dim), oracle="off")
    log = integrate(asm.system, IntegratorConfig(step=1e-3, sample_interval=0.1),
                    (0.0, 2.0), asm.initial)
    assert np.isfinite(log.final_state).all()


def test_pi_trajectory_unchanged_when_oracle_corrupted():
    """Poisoning the law-visible oracle channel mid-run leaves the PI state
    bit-identical; an oracle-form law diverges from its clean baseline."""
    plant = small_nn_plant()
    traj = SineOfSine()
    sliding = SlidingConfig(2, 0.5, 0.5)
    x0 = traj.derivs(0.0, 2)[:2]

    def run(law, oracle_mode):
        asm = build_tracking_system(plant, law, traj, sliding, x0,
                                    np.zeros(plant.dim), oracle=oracle_mode,
                                    corrupt_at=1.0, corrupt_offset=5.0)
        log = integrate(asm.system, IntegratorConfig(step=1e-3, sample_interval=0.1),
                        (0.0, 2.0), asm.initial)
        return log.final_state

    clean = run(Tyukin(plant.dim, realization="pi"), "auto")
    poisoned = run(Tyukin(plant.dim, realization="pi"), "corrupt-after")
    assert (clean == poisoned).all()

    clean_or = run(Tyukin(plant.dim, realization="oracle"), "auto")
    poisoned_or = run(Tyukin(plant.dim, realization="oracle"), "corrupt-after")
    assert not np.allclose(clean_or, poisoned_or)
