"""The adaptation-law catalog: estimator state machines with certificates.

Every law is a pure map from measured signals + estimator state to estimator
state derivatives.  Laws that formally depend on the unmeasurable function
error f~ = f(x, a_hat, t) - f(x, a, t) come in two realizations:

* ``oracle`` -- reads f~ from the plant oracle; testing-only.
* ``pi``     -- a proportional-integral realization that produces the same
  a_hat(t) from measured signals alone (second-order plants); the estimate is
  a_bar plus a proportional term built from the regressor antiderivative.

Mirror-descent / natural-gradient laws integrate the mirrored variable
w = grad psi(.) directly and invert the gradient map afterwards, which is
exactly equivalent in continuous time and avoids inverse-Hessian products.

Each law carries the Lyapunov certificate from its stability proof
(``lyapunov``), the sufficient momentum-gain bound (``mu_bound``), and its
reduction behavior to parent laws under degenerate gains is covered by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, GainBoundError
from .potentials import Potential, SquaredPNorm, euclidean

# ---------------------------------------------------------------------------
# measured signals handed to a law at one time instant
# ---------------------------------------------------------------------------


@dataclass
class PIPack:
    """Closed-form pieces for proportional-integral realizations (order 2).

    ``A`` is the antiderivative of the regressor/direction in the top state
    x2; the partials are with respect to the remaining arguments.
    """

    A: np.ndarray
    dA_dx1: np.ndarray
    dA_dt: np.ndarray


@dataclass
class Signals:
    """What a law may read at time t.  ``f_tilde`` is the oracle channel and
    is None outside testing; PI realizations never touch it."""

    t: float
    x: np.ndarray
    s: float
    reg: np.ndarray
    u: float | None = None
    f_eval: Callable[[np.ndarray], float] | None = None  # known functional form
    f_tilde: float | None = None
    pi: PIPack | None = None

    def require_oracle(self) -> float:
        if self.f_tilde is None:
            raise PermissionError("law requires the f~ oracle (testing only)")
        return self.f_tilde


# ---------------------------------------------------------------------------
# rate functions (the unit-testable algebra)
# ---------------------------------------------------------------------------


def slotine_li_rate(Y, s, P) -> np.ndarray:
    """theta_dot = -P Y^T s."""
    return -np.asarray(P, float) @ np.asarray(Y, float) * float(s)


def natural_rate(Y, s, psi: Potential, theta_hat) -> np.ndarray:
    """theta_dot = -[hess psi(theta)]^-1 Y^T s (natural-gradient form)."""
    return -psi.hess_inverse_apply(theta_hat, np.asarray(Y, float) * float(s))


def tyukin_rate(alpha, f_tilde, P) -> np.ndarray:
    """theta_dot = -f~ P alpha (pseudogradient on the squared function error)."""
    return -float(f_tilde) * (np.asarray(P, float) @ np.asarray(alpha, float))


def natural_tyukin_rate(alpha, f_tilde, gamma, psi: Potential, theta_hat) -> np.ndarray:
    """theta_dot = -gamma f~ [hess psi(theta)]^-1 alpha."""
    return -gamma * float(f_tilde) * psi.hess_inverse_apply(theta_hat, np.asarray(alpha, float))


def composite_rate(Y, s, f_tilde, P, gamma, kappa) -> np.ndarray:
    """theta_dot = -P Y^T (gamma s + kappa f~), driven by both error signals."""
    Y = np.asarray(Y, float)
    return -np.asarray(P, float) @ Y * (gamma * float(s) + kappa * float(f_tilde))


def n_scalar(mu: float, reg) -> float:
    """The normalizing signal N = 1 + mu ||reg||^2."""
    r = np.asarray(reg, float)
    return 1.0 + mu * float(r @ r)


def n_matrix_apply(mu: float, reg, v) -> np.ndarray:
    """(I + mu reg reg^T) v, the matrix-valued normalization option."""
    r = np.asarray(reg, float)
    return v + mu * r * float(r @ v)


def momentum_rates(grad_term, v_hat, a_hat, beta, n_val) -> tuple[np.ndarray, np.ndarray]:
    """First-order pair  v_dot = -grad_term,  a_dot = beta N (v - a)."""
    return -np.asarray(grad_term, float), beta * n_val * (v_hat - a_hat)


def tracking_potential_rate(Y, s, psi: Potential, cost, theta_hat) -> np.ndarray:
    """Non-Euclidean tracking-error law.

    Scalar s: theta_dot = -[hess psi]^-1 Y^T phi''(s) s with phi the scalar
    tracking potential; vector s: theta_dot = -[hess psi]^-1 Y^T grad_g(s).
    """
    s = np.asarray(s, float)
    Y = np.asarray(Y, float)
    if s.ndim == 0:
        drive = Y * cost.multiplier(float(s))
    else:
        drive = Y.T @ cost.grad(s)
    return -psi.hess_inverse_apply(theta_hat, drive)


def forgetting_update(P, reg, lam0: float, P0: float, mode: str = "bounded-gain"):
    """Time-varying gain update  P_dot = lam P - P reg reg^T P.

    ``exponential`` keeps lam = lam0 but freezes P once ||P|| exceeds P0;
    ``bounded-gain`` uses lam(t) = lam0 (1 - ||P||/P0), which keeps
    ||P|| <= P0 without a case statement.  Returns (P_dot, lam).
    """
    P = np.asarray(P, float)
    r = np.asarray(reg, float)
    # Frobenius norm: a valid matrix norm that upper-bounds the spectral one,
    # and far cheaper inside the integration loop
    norm = float(np.linalg.norm(P))
    if mode == "exponential":
        if norm > P0:
            return np.zeros_like(P), lam0
        lam = lam0
    elif mode == "bounded-gain":
        lam = lam0 * (1.0 - norm / P0)
    else:
        raise ConfigError(f"unknown forgetting mode {mode!r}")
    Pr = P @ r
    return lam * P - np.outer(Pr, Pr), lam


def lyapunov_audit(values) -> float:
    """Largest increase between consecutive samples of a certificate series."""
    v = np.asarray(values, float)
    if v.size < 2:
        return 0.0
    return float(np.max(np.diff(v)))


def convergence_time(t, theta_dot_inf, tol: float = 1e-6, hold: float = 5.0):
    """First time after which ||theta_dot||_inf stays below tol for ``hold``
    time units; None if never."""
    t = np.asarray(t, float)
    v = np.asarray(theta_dot_inf, float)
    below = v < tol
    start = None
    for i in range(t.size):
        if below[i]:
            if start is None:
                start = t[i]
            if t[i] - start >= hold:
                return float(start)
        else:
            start = None
    return None


# ---------------------------------------------------------------------------
# sufficient momentum-gain bounds
# ---------------------------------------------------------------------------

_MU_BOUNDS: dict[str, tuple[tuple[str, ...], Callable[..., float]]] = {
    "momentum": (("gamma", "eta", "beta"), lambda gamma, eta, beta: gamma / (eta * beta)),
    "momentum-composite": (
        ("gamma", "eta", "beta", "kappa"),
        lambda gamma, eta, beta, kappa: (gamma / beta) * (1.0 / eta + kappa / gamma),
    ),
    "momentum-tyukin": (("gamma", "beta", "D1"), lambda gamma, beta, D1: gamma * D1 / beta),
    "elastic-ho-center-a": (
        ("gamma", "beta", "D1", "k"),
        lambda gamma, beta, D1, k: 2.0 * D1 * gamma / (beta * (1.0 - k)),
    ),
    "elastic-ho-center-v": (("gamma", "beta", "D1"), lambda gamma, beta, D1: gamma * D1 / beta),
    "elastic-ho-both": (
        ("gamma", "beta", "D1", "k"),
        lambda gamma, beta, D1, k: 2.0 * gamma * D1 / (beta * (1.0 - k)),
    ),
    "bgf-composite-momentum": (
        ("eta", "beta"),
        lambda eta, beta: (3.0 * eta + 2.0) / (2.0 * eta * beta),
    ),
    "bgf-tyukin-momentum": (
        ("beta", "D1", "D2"),
        lambda beta, D1, D2: (4.0 * D2 - 2.0 + (2.0 * D1 + 1.0) ** 2) / (beta * (4.0 * D2 - 1.0)),
    ),
    "natural-momentum-a": (
        ("gamma", "eta", "beta", "l"),
        lambda gamma, eta, beta, l: gamma * (1.0 + 1.0 / l) ** 2 / (4.0 * beta * eta),
    ),
    "natural-momentum-b": (
        ("gamma", "eta", "beta", "l", "L"),
        lambda gamma, eta, beta, l, L: gamma * (l + gamma * L) ** 2 / (4.0 * beta * eta * l**3),
    ),
    "natural-momentum-c": (
        ("gamma", "eta", "beta", "l", "L"),
        lambda gamma, eta, beta, l, L: gamma * (l + gamma * L) ** 2 / (4.0 * beta * eta * l**2),
    ),
}


def compute_mu_bound(family: str, **gains) -> float:
    """The sufficient lower bound on mu for the family's momentum proposition."""
    if family not in _MU_BOUNDS:
        raise ConfigError(f"no momentum bound for family {family!r}")
    names, fn = _MU_BOUNDS[family]
    missing = [n for n in names if n not in gains or gains[n] is None]
    if missing:
        raise ConfigError(f"{family}: missing gains {missing}")
    for n in names:
        if gains[n] <= 0:
            raise ConfigError(f"{family}: gain {n} must be positive")
    return float(fn(**{n: float(gains[n]) for n in names}))


# ---------------------------------------------------------------------------
# scalar tracking-error potentials for the non-Euclidean tracking laws
# ---------------------------------------------------------------------------


class TrackingCost:
    """Strictly convex scalar cost phi(s); laws use the multiplier phi''(s) s
    and certificates use the Bregman remainder d_phi(0, s) >= 0."""

    def multiplier(self, s: float) -> float:
        raise NotImplementedError

    def certificate(self, s: float) -> float:
        raise NotImplementedError


class QuadQuartCost(TrackingCost):
    """phi(s) = 1/2 s^2 + c s^4."""

    def __init__(self, c: float = 0.25):
        if c < 0:
            raise ConfigError("quartic weight must be nonnegative")
        self.c = c

    def multiplier(self, s):
        return (1.0 + 12.0 * self.c * s * s) * s

    def certificate(self, s):
        return 0.5 * s * s + 3.0 * self.c * s**4


class EvenPowerCost(TrackingCost):
    """phi(s) = s^p for even p >= 2; multiplier p(p-1) s^(p-1)."""

    def __init__(self, p: int):
        if p < 2 or p % 2:
            raise ConfigError("power must be an even integer >= 2")
        self.p = int(p)

    def multiplier(self, s):
        return self.p * (self.p - 1) * s ** (self.p - 1)

    def certificate(self, s):
        # d_phi(0, s) = phi(0) - phi(s) + s phi'(s) = (p - 1) s^p
        return (self.p - 1) * s**self.p


class ExpAbsCost(TrackingCost):
    """g'(s) = exp(lam |s|) s, the exponentially weighted tracking drive."""

    def __init__(self, lam: float):
        if lam <= 0:
            raise ConfigError("lam must be positive")
        self.lam = lam

    def multiplier(self, s):
        return math.exp(self.lam * abs(s)) * s

    def certificate(self, s):
        # g(s) = int_0^s exp(lam|r|) r dr, g(0) = 0
        a = self.lam * abs(s)
        return (math.exp(a) * (a - 1.0) + 1.0) / self.lam**2


class VectorTrackingCost:
    """Strongly convex g(s) with known gradient, for multi-input laws."""

    def __init__(self, grad, value=None):
        self.grad = grad
        self.value = value


# ---------------------------------------------------------------------------
# law state machines
# ---------------------------------------------------------------------------


def _as_gain_matrix(P, dim: int) -> np.ndarray:
    if P is None:
        return np.eye(dim)
    if np.isscalar(P):
        return float(P) * np.eye(dim)
    P = np.asarray(P, float)
    if P.shape != (dim, dim) or not np.allclose(P, P.T):
        raise ConfigError("P must be scalar or a symmetric (dim, dim) matrix")
    if np.any(np.linalg.eigvalsh(P) <= 0):
        raise ConfigError("P must be positive definite")
    return P


class AdaptationLaw:
    """Base estimator state machine.

    ``blocks`` declares the named state blocks; ``theta_hat`` exposes the
    controller parameters (possibly a function of state and measured signals,
    as in PI realizations); ``rates`` returns block time derivatives; and
    ``lyapunov`` evaluates the certificate from the law's stability proof
    (requires the true parameters, so testing only).
    """

    family = "abstract"
    requires_oracle = False

    def __init__(self, dim: int):
        self.dim = int(dim)

    def blocks(self) -> list[tuple[str, int]]:
        raise NotImplementedError

    def init_state(self, theta0: np.ndarray) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def theta_hat(self, sig: Signals, st: dict) -> np.ndarray:
        raise NotImplementedError

    def rates(self, sig: Signals, st: dict) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def lyapunov(self, sig: Signals, st: dict, a_true: np.ndarray) -> float:
        raise NotImplementedError

    def mu_bound(self, eta: float | None = None) -> float | None:
        return None

    def constraint_violations(self, eta: float | None = None) -> list[str]:
        return []

    def enforce(self, strict: bool, eta: float | None = None) -> list[str]:
        problems = self.constraint_violations(eta=eta)
        if problems and strict:
            raise GainBoundError("; ".join(problems))
        return problems


def _pi_theta(st_bar: np.ndarray, gain: np.ndarray, scale: float, sig: Signals) -> np.ndarray:
    if sig.pi is None:
        raise ConfigError("PI realization needs the regressor antiderivative pack")
    return st_bar - scale * (gain @ sig.pi.A)


def _pi_known_rate(sig: Signals, theta: np.ndarray) -> np.ndarray:
    """d/dt of the proportional term, with the unknown acceleration replaced
    through u - f(x, theta, t); equals reg*(u - f_hat) + dA/dx1 x2 + dA/dt."""
    pack = sig.pi
    x2 = sig.x[1]
    return sig.reg * (sig.u - sig.f_eval(theta)) + pack.dA_dx1 * x2 + pack.dA_dt


def tyukin_pi_xi(P, s, alpha) -> np.ndarray:
    """The proportional term xi = -P s alpha of the PI realization."""
    return -float(s) * (np.asarray(P, float) @ np.asarray(alpha, float))


def tyukin_pi_rho(P, s_fn, alpha_fn, antideriv_fn, x, t, x2_ref: float = 0.0) -> np.ndarray:
    """The definite integral rho = P * int_{x2_ref}^{x2} s dalpha/dx2 dx2.

    Evaluated by parts; built from callables so it vanishes identically when
    alpha does not depend on the top state.
    """
    x = np.asarray(x, float)
    x_ref = x.copy()
    x_ref[1] = x2_ref
    P = np.asarray(P, float)
    hi = float(s_fn(x, t)) * alpha_fn(x, t) - antideriv_fn(x, t)
    lo = float(s_fn(x_ref, t)) * alpha_fn(x_ref, t) - antideriv_fn(x_ref, t)
    return P @ (hi - lo)


class SlotineLi(AdaptationLaw):
    """theta_dot = -P Y^T s with constant positive-definite gains."""

    family = "slotine-li"

    def __init__(self, dim: int, P=None):
        super().__init__(dim)
        self.P = _as_gain_matrix(P, dim)
        self._Pinv = np.linalg.inv(self.P)

    def blocks(self):
        return [("theta", self.dim)]

    def init_state(self, theta0):
        return {"theta": np.asarray(theta0, float).copy()}

    def theta_hat(self, sig, st):
        return st["theta"]

    def rates(self, sig, st):
        return {"theta": slotine_li_rate(sig.reg, sig.s, self.P)}

    def lyapunov(self, sig, st, a_true):
        e = st["theta"] - a_true
        return 0.5 * sig.s**2 + 0.5 * float(e @ self._Pinv @ e)


class NaturalGradient(AdaptationLaw):
    """theta_dot = -gamma [hess psi(theta)]^-1 Y^T s, integrated in the
    mirrored domain (state w = grad psi(theta))."""

    family = "natural"

    def __init__(self, dim: int, psi: Potential, gamma: float = 1.0):
        super().__init__(dim)
        if gamma <= 0:
            raise ConfigError("gamma must be positive")
        self.psi = psi
        self.gamma = gamma

    def blocks(self):
        return [("w", self.dim)]

    def init_state(self, theta0):
        return {"w": self.psi.grad(np.asarray(theta0, float))}

    def theta_hat(self, sig, st):
        return self.psi.grad_inverse(st["w"])

    def rates(self, sig, st):
        return {"w": -self.gamma * sig.reg * sig.s}

    def lyapunov(self, sig, st, a_true):
        th = self.theta_hat(sig, st)
        return 0.5 * sig.s**2 + self.psi.bregman(a_true, th) / self.gamma


class TrackingPotentialLaw(AdaptationLaw):
    """Natural law with a non-Euclidean measure of the tracking error."""

    family = "tracking-potential"

    def __init__(self, dim: int, psi: Potential, cost: TrackingCost, gamma: float = 1.0):
        super().__init__(dim)
        self.psi = psi
        self.cost = cost
        self.gamma = gamma

    def blocks(self):
        return [("w", self.dim)]

    def init_state(self, theta0):
        return {"w": self.psi.grad(np.asarray(theta0, float))}

    def theta_hat(self, sig, st):
        return self.psi.grad_inverse(st["w"])

    def rates(self, sig, st):
        return {"w": -self.gamma * sig.reg * self.cost.multiplier(sig.s)}

    def lyapunov(self, sig, st, a_true):
        th = self.theta_hat(sig, st)
        return self.cost.certificate(sig.s) + self.psi.bregman(a_true, th) / self.gamma


class Tyukin(AdaptationLaw):
    """theta_dot = -f~ P alpha for monotone nonlinear parameterizations.

    ``realization='pi'`` produces the same trajectory from measured signals
    only; ``'oracle'`` reads f~ directly and is marked testing-only.
    """

    family = "tyukin"

    def __init__(self, dim: int, P=None, realization: str = "pi"):
        super().__init__(dim)
        if realization not in ("pi", "oracle"):
            raise ConfigError("realization must be 'pi' or 'oracle'")
        self.P = _as_gain_matrix(P, dim)
        self._Pinv = np.linalg.inv(self.P)
        self.realization = realization
        self.requires_oracle = realization == "oracle"

    def blocks(self):
        return [("theta" if self.realization == "oracle" else "a_bar", self.dim)]

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float)
        if self.realization == "oracle":
            return {"theta": theta0.copy()}
        # a_bar chosen so theta_hat(t0) = theta0; requires the PI pack at t0,
        # so runners call align_pi() before integrating.
        return {"a_bar": theta0.copy()}

    def align_pi(self, st, sig: Signals):
        if self.realization == "pi":
            st["a_bar"] = st["a_bar"] + self.P @ sig.pi.A

    def theta_hat(self, sig, st):
        if self.realization == "oracle":
            return st["theta"]
        return _pi_theta(st["a_bar"], self.P, 1.0, sig)

    def rates(self, sig, st):
        if self.realization == "oracle":
            return {"theta": tyukin_rate(sig.reg, sig.require_oracle(), self.P)}
        theta = self.theta_hat(sig, st)
        return {"a_bar": self.P @ _pi_known_rate(sig, theta)}

    def lyapunov(self, sig, st, a_true):
        e = self.theta_hat(sig, st) - a_true
        return 0.5 * float(e @ self._Pinv @ e)


class NaturalTyukin(AdaptationLaw):
    """d/dt grad psi(theta) = -gamma f~ alpha (mirror form of the natural
    pseudogradient law); PI realization inverts the gradient map."""

    family = "natural-tyukin"

    def __init__(self, dim: int, psi: Potential, gamma: float = 1.0, realization: str = "pi"):
        super().__init__(dim)
        self.psi = psi
        self.gamma = gamma
        if realization not in ("pi", "oracle"):
            raise ConfigError("realization must be 'pi' or 'oracle'")
        self.realization = realization
        self.requires_oracle = realization == "oracle"

    def blocks(self):
        return [("w" if self.realization == "oracle" else "w_bar", self.dim)]

    def init_state(self, theta0):
        w0 = self.psi.grad(np.asarray(theta0, float))
        return {"w": w0} if self.realization == "oracle" else {"w_bar": w0}

    def align_pi(self, st, sig: Signals):
        if self.realization == "pi":
            st["w_bar"] = st["w_bar"] + self.gamma * sig.pi.A

    def theta_hat(self, sig, st):
        if self.realization == "oracle":
            return self.psi.grad_inverse(st["w"])
        return self.psi.grad_inverse(st["w_bar"] - self.gamma * sig.pi.A)

    def rates(self, sig, st):
        if self.realization == "oracle":
            return {"w": -self.gamma * sig.require_oracle() * sig.reg}
        theta = self.theta_hat(sig, st)
        return {"w_bar": self.gamma * _pi_known_rate(sig, theta)}

    def lyapunov(self, sig, st, a_true):
        return self.psi.bregman(a_true, self.theta_hat(sig, st)) / self.gamma


class Composite(AdaptationLaw):
    """theta_dot = -P Y^T (gamma s + kappa Y (theta - a)); the f~ part is
    realized in PI form without filtering the dynamics."""

    family = "composite"

    def __init__(self, dim: int, gamma: float, kappa: float, P=None, realization: str = "pi"):
        super().__init__(dim)
        if gamma <= 0 or kappa < 0:
            raise ConfigError("need gamma > 0 and kappa >= 0")
        self.gamma, self.kappa = gamma, kappa
        self.P = _as_gain_matrix(P, dim)
        self._Pinv = np.linalg.inv(self.P)
        if realization not in ("pi", "oracle"):
            raise ConfigError("realization must be 'pi' or 'oracle'")
        self.realization = realization
        self.requires_oracle = realization == "oracle"

    def blocks(self):
        return [("theta" if self.realization == "oracle" else "a_bar", self.dim)]

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float).copy()
        return {"theta": theta0} if self.realization == "oracle" else {"a_bar": theta0}

    def align_pi(self, st, sig: Signals):
        if self.realization == "pi":
            st["a_bar"] = st["a_bar"] + self.kappa * (self.P @ sig.pi.A)

    def theta_hat(self, sig, st):
        if self.realization == "oracle":
            return st["theta"]
        return _pi_theta(st["a_bar"], self.P, self.kappa, sig)

    def rates(self, sig, st):
        if self.realization == "oracle":
            return {
                "theta": composite_rate(
                    sig.reg, sig.s, sig.require_oracle(), self.P, self.gamma, self.kappa
                )
            }
        theta = self.theta_hat(sig, st)
        abar_dot = -self.gamma * sig.s * (self.P @ sig.reg)
        abar_dot = abar_dot + self.kappa * (self.P @ _pi_known_rate(sig, theta))
        return {"a_bar": abar_dot}

    def lyapunov(self, sig, st, a_true):
        e = self.theta_hat(sig, st) - a_true
        return 0.5 * sig.s**2 + float(e @ self._Pinv @ e) / (2.0 * self.gamma)


class Momentum(AdaptationLaw):
    """Euclidean momentum law  v_dot = -gamma Y^T s,  a_dot = beta N (v - a),
    N = 1 + mu ||Y||^2 (or the matrix form I + mu Y^T Y)."""

    family = "momentum"

    def __init__(self, dim: int, gamma: float, beta: float, mu: float, n_kind: str = "scalar"):
        super().__init__(dim)
        if min(gamma, beta, mu) <= 0:
            raise ConfigError("gamma, beta, mu must be positive")
        if n_kind not in ("scalar", "matrix"):
            raise ConfigError("n_kind must be 'scalar' or 'matrix'")
        self.gamma, self.beta, self.mu = gamma, beta, mu
        self.n_kind = n_kind

    def blocks(self):
        return [("v", self.dim), ("theta", self.dim)]

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float)
        return {"v": theta0.copy(), "theta": theta0.copy()}

    def theta_hat(self, sig, st):
        return st["theta"]

    def _a_dot(self, sig, gap):
        if self.n_kind == "matrix":
            return self.beta * n_matrix_apply(self.mu, sig.reg, gap)
        return self.beta * n_scalar(self.mu, sig.reg) * gap

    def rates(self, sig, st):
        return {"v": -self.gamma * sig.reg * sig.s, "theta": self._a_dot(sig, st["v"] - st["theta"])}

    def lyapunov(self, sig, st, a_true):
        vt = st["v"] - a_true
        gap = st["v"] - st["theta"]
        return 0.5 * (sig.s**2 + (vt @ vt + gap @ gap) / self.gamma)

    def mu_bound(self, eta=None):
        return compute_mu_bound("momentum", gamma=self.gamma, eta=eta, beta=self.beta)

    def constraint_violations(self, eta=None):
        if eta is None:
            return []
        bound = self.mu_bound(eta)
        return [] if self.mu > bound else [f"momentum needs mu > {bound:.6g}, got {self.mu:.6g}"]


class MomentumComposite(AdaptationLaw):
    """Momentum pair driven by gamma s + kappa f~; PI or oracle realization."""

    family = "momentum-composite"

    def __init__(self, dim: int, gamma: float, kappa: float, beta: float, mu: float,
                 realization: str = "pi", n_kind: str = "scalar"):
        super().__init__(dim)
        self.gamma, self.kappa, self.beta, self.mu = gamma, kappa, beta, mu
        self.n_kind = n_kind
        self.realization = realization
        self.requires_oracle = realization == "oracle"

    def blocks(self):
        vblock = "v" if self.realization == "oracle" else "v_bar"
        return [(vblock, self.dim), ("theta", self.dim)]

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float)
        key = "v" if self.realization == "oracle" else "v_bar"
        return {key: theta0.copy(), "theta": theta0.copy()}

    def align_pi(self, st, sig: Signals):
        if self.realization == "pi":
            st["v_bar"] = st["v_bar"] + self.kappa * sig.pi.A

    def v_hat(self, sig, st):
        if self.realization == "oracle":
            return st["v"]
        return st["v_bar"] - self.kappa * sig.pi.A

    def theta_hat(self, sig, st):
        return st["theta"]

    def _n(self, sig, gap):
        if self.n_kind == "matrix":
            return self.beta * n_matrix_apply(self.mu, sig.reg, gap)
        return self.beta * n_scalar(self.mu, sig.reg) * gap

    def rates(self, sig, st):
        a_dot = self._n(sig, self.v_hat(sig, st) - st["theta"])
        if self.realization == "oracle":
            vdot = -sig.reg * (self.gamma * sig.s + self.kappa * sig.require_oracle())
            return {"v": vdot, "theta": a_dot}
        vbar_dot = -self.gamma * sig.s * sig.reg + self.kappa * _pi_known_rate(sig, st["theta"])
        return {"v_bar": vbar_dot, "theta": a_dot}

    def lyapunov(self, sig, st, a_true):
        v = self.v_hat(sig, st)
        vt = v - a_true
        gap = st["theta"] - v
        return 0.5 * sig.s**2 + (vt @ vt + gap @ gap) / (2.0 * self.gamma)

    def mu_bound(self, eta=None):
        return compute_mu_bound(
            "momentum-composite", gamma=self.gamma, eta=eta, beta=self.beta, kappa=self.kappa
        )

    def constraint_violations(self, eta=None):
        if eta is None:
            return []
        bound = self.mu_bound(eta)
        return [] if self.mu > bound else [f"needs mu > {bound:.6g}, got {self.mu:.6g}"]


class MomentumTyukin(AdaptationLaw):
    """Momentum law for monotone nonlinear parameterizations, optionally with
    a mirror map psi on the velocity variable (the non-Euclidean variant used
    for implicit regularization).  N = 1 + mu ||alpha||^2."""

    family = "momentum-tyukin"

    def __init__(self, dim: int, gamma: float, beta: float, mu: float,
                 psi: Potential | None = None, realization: str = "pi", D1: float = 1.0):
        super().__init__(dim)
        self.gamma, self.beta, self.mu = gamma, beta, mu
        self.psi = psi or euclidean()
        self.realization = realization
        self.requires_oracle = realization == "oracle"
        self.D1 = D1

    def blocks(self):
        vblock = "w_v" if self.realization == "oracle" else "w_bar"
        return [(vblock, self.dim), ("theta", self.dim)]

    def init_state(self, theta0, v0=None):
        theta0 = np.asarray(theta0, float)
        w0 = self.psi.grad(np.asarray(v0, float) if v0 is not None else theta0)
        key = "w_v" if self.realization == "oracle" else "w_bar"
        return {key: w0, "theta": theta0.copy()}

    def align_pi(self, st, sig: Signals):
        if self.realization == "pi":
            st["w_bar"] = st["w_bar"] + self.gamma * sig.pi.A

    def v_hat(self, sig, st):
        if self.realization == "oracle":
            return self.psi.grad_inverse(st["w_v"])
        return self.psi.grad_inverse(st["w_bar"] - self.gamma * sig.pi.A)

    def theta_hat(self, sig, st):
        return st["theta"]

    def rates(self, sig, st):
        v = self.v_hat(sig, st)
        a_dot = self.beta * n_scalar(self.mu, sig.reg) * (v - st["theta"])
        if self.realization == "oracle":
            return {"w_v": -self.gamma * sig.require_oracle() * sig.reg, "theta": a_dot}
        return {"w_bar": self.gamma * _pi_known_rate(sig, st["theta"]), "theta": a_dot}

    def lyapunov(self, sig, st, a_true):
        v = self.v_hat(sig, st)
        gap = st["theta"] - v
        return (self.psi.bregman(a_true, v) + 0.5 * float(gap @ gap)) / self.gamma

    def mu_bound(self, eta=None):
        return compute_mu_bound("momentum-tyukin", gamma=self.gamma, beta=self.beta, D1=self.D1)

    def constraint_violations(self, eta=None):
        bound = self.mu_bound()
        return [] if self.mu > bound else [f"needs mu > {bound:.6g}, got {self.mu:.6g}"]


class NaturalMomentum(AdaptationLaw):
    """Momentum laws in the mirror geometry of psi, three variants:

    * 'a': velocity in the mirrored domain, estimate filtered in the primal;
    * 'b': both updates entirely in the mirrored domain;
    * 'c': estimate filtered through the inverse Hessian at theta.
    """

    family = "natural-momentum"

    def __init__(self, dim: int, psi: Potential, gamma: float, beta: float, mu: float,
                 variant: str = "a", strong_l: float | None = None, smooth_L: float | None = None):
        super().__init__(dim)
        if variant not in ("a", "b", "c"):
            raise ConfigError("variant must be 'a', 'b' or 'c'")
        self.psi, self.gamma, self.beta, self.mu = psi, gamma, beta, mu
        self.variant = variant
        self.strong_l, self.smooth_L = strong_l, smooth_L

    def blocks(self):
        second = "theta" if self.variant == "a" else "w_a"
        return [("w_v", self.dim), (second, self.dim)]

    def init_state(self, theta0, v0=None):
        theta0 = np.asarray(theta0, float)
        v0 = np.asarray(v0, float) if v0 is not None else theta0
        st = {"w_v": self.psi.grad(v0)}
        if self.variant == "a":
            st["theta"] = theta0.copy()
        else:
            st["w_a"] = self.psi.grad(theta0)
        return st

    def v_hat(self, st):
        return self.psi.grad_inverse(st["w_v"])

    def theta_hat(self, sig, st):
        if self.variant == "a":
            return st["theta"]
        return self.psi.grad_inverse(st["w_a"])

    def rates(self, sig, st):
        n_val = self.beta * n_scalar(self.mu, sig.reg)
        w_v_dot = -self.gamma * sig.reg * sig.s
        if self.variant == "a":
            return {"w_v": w_v_dot, "theta": n_val * (self.v_hat(st) - st["theta"])}
        if self.variant == "b":
            return {"w_v": w_v_dot, "w_a": n_val * (st["w_v"] - st["w_a"])}
        return {"w_v": w_v_dot, "w_a": n_val * (self.v_hat(st) - self.theta_hat(sig, st))}

    def lyapunov(self, sig, st, a_true):
        v = self.v_hat(st)
        th = self.theta_hat(sig, st)
        if self.variant == "a":
            gap = th - v
            extra = 0.5 * float(gap @ gap)
        else:
            extra = self.psi.bregman(v, th)
        return 0.5 * sig.s**2 + (self.psi.bregman(a_true, v) + extra) / self.gamma

    def mu_bound(self, eta=None):
        kw = dict(gamma=self.gamma, eta=eta, beta=self.beta, l=self.strong_l)
        if self.variant == "a":
            return compute_mu_bound("natural-momentum-a", **kw)
        kw["L"] = self.smooth_L
        return compute_mu_bound(f"natural-momentum-{self.variant}", **kw)

    def constraint_violations(self, eta=None):
        if eta is None or self.strong_l is None:
            return []
        if self.variant in ("b", "c") and self.smooth_L is None:
            return []
        bound = self.mu_bound(eta)
        return [] if self.mu > bound else [f"needs mu > {bound:.6g}, got {self.mu:.6g}"]


class Elastic(AdaptationLaw):
    """Feedback coupling to low-pass-filtered center variables.

    Variants: ``first-order`` (center on theta of a Slotine-Li or Tyukin core),
    ``ho-center-a``, ``ho-center-v`` and ``ho-both`` on the momentum-Tyukin
    core.  k = 0 (or rho_c = 0) freezes the centers and recovers the base law.
    """

    family = "elastic"
    _FIRST = "first-order"

    def __init__(self, dim: int, variant: str, k: float = 0.0, rho_c: float = 0.0,
                 base: str = "tyukin", gamma: float = 1.0, beta: float = 1.0,
                 mu: float = 1.0, P=None, D1: float = 1.0):
        super().__init__(dim)
        if variant not in ("first-order", "ho-center-a", "ho-center-v", "ho-both"):
            raise ConfigError(f"unknown elastic variant {variant!r}")
        if base not in ("tyukin", "slotine-li"):
            raise ConfigError("base must be 'tyukin' or 'slotine-li'")
        if variant != "first-order" and base != "tyukin":
            raise ConfigError("higher-order elastic variants use the tyukin core")
        self.variant, self.base = variant, base
        self.k, self.rho_c = k, rho_c
        self.gamma, self.beta, self.mu = gamma, beta, mu
        self.P = _as_gain_matrix(P, dim)
        self._Pinv = np.linalg.inv(self.P)
        self.D1 = D1
        self.requires_oracle = base == "tyukin"

    def blocks(self):
        out = [("theta", self.dim)]
        if self.variant != "first-order":
            out.append(("v", self.dim))
        if self.variant in ("first-order", "ho-center-a", "ho-both"):
            out.append(("a_center", self.dim))
        if self.variant in ("ho-center-v", "ho-both"):
            out.append(("v_center", self.dim))
        return out

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float)
        return {name: theta0.copy() for name, _ in self.blocks()}

    def theta_hat(self, sig, st):
        return st["theta"]

    def _core(self, sig):
        if self.base == "slotine-li":
            return slotine_li_rate(sig.reg, sig.s, self.P)
        return tyukin_rate(sig.reg, sig.require_oracle(), self.P)

    def rates(self, sig, st):
        if self.variant == "first-order":
            return {
                "theta": self._core(sig) + self.k * (st["a_center"] - st["theta"]),
                "a_center": self.k * (st["theta"] - st["a_center"]),
            }
        n_val = self.beta * n_scalar(self.mu, sig.reg)
        out = {}
        v_dot = -self.gamma * sig.require_oracle() * sig.reg
        if self.variant in ("ho-center-v", "ho-both"):
            v_dot = v_dot + self.rho_c * (st["v_center"] - st["v"])
            out["v_center"] = self.rho_c * (st["v"] - st["v_center"])
        out["v"] = v_dot
        a_dot = n_val * (st["v"] - st["theta"])
        if self.variant in ("ho-center-a", "ho-both"):
            a_dot = a_dot + self.k * n_val * (st["a_center"] - st["theta"])
            out["a_center"] = self.k * n_val * (st["theta"] - st["a_center"])
        out["theta"] = a_dot
        return out

    def lyapunov(self, sig, st, a_true):
        th = st["theta"] - a_true
        if self.variant == "first-order":
            ce = st["a_center"] - a_true
            v = 0.5 * (th @ self._Pinv @ th + ce @ self._Pinv @ ce)
            if self.base == "slotine-li":
                v += 0.5 * sig.s**2
            return float(v)
        vt = st["v"] - a_true
        gap = st["theta"] - st["v"]
        if self.variant == "ho-center-a":
            ce = st["a_center"] - st["theta"]
            return float(vt @ vt + gap @ gap + ce @ ce) / (2.0 * self.gamma)
        if self.variant == "ho-center-v":
            cv = st["v_center"] - a_true
            return float(vt @ vt + cv @ cv + gap @ gap) / self.gamma
        ce = st["a_center"] - st["theta"]
        cv = st["v_center"] - a_true
        return float(gap @ gap + ce @ ce + vt @ vt + cv @ cv) / (2.0 * self.gamma)

    def mu_bound(self, eta=None):
        if self.variant == "first-order":
            return None
        fam = {"ho-center-a": "elastic-ho-center-a", "ho-center-v": "elastic-ho-center-v",
               "ho-both": "elastic-ho-both"}[self.variant]
        kw = dict(gamma=self.gamma, beta=self.beta, D1=self.D1)
        if fam != "elastic-ho-center-v":
            kw["k"] = self.k
        return compute_mu_bound(fam, **kw)

    def constraint_violations(self, eta=None):
        out = []
        if self.variant in ("ho-center-a", "ho-both") and not (1.0 / 3.0 <= self.k < 1.0):
            out.append(f"elastic gain k must satisfy 1/3 <= k < 1, got {self.k:.6g}")
        if self.variant == "ho-center-v" and not self.rho_c < 2.0 * self.beta:
            out.append("center gain must satisfy rho_c < 2 beta")
        if self.variant == "ho-both" and not self.rho_c < self.beta * (1.0 - self.k):
            out.append("center gain must satisfy rho_c < beta (1 - k)")
        bound = self.mu_bound()
        if bound is not None and not self.mu > bound:
            out.append(f"needs mu > {bound:.6g}, got {self.mu:.6g}")
        return out


class BoundedGainForgetting(AdaptationLaw):
    """Composite/Tyukin laws with the time-varying least-squares gain P(t):

        P_dot = lam P - P r r^T P,  lam = lam0 (1 - ||P||/P0)  (bounded-gain)

    Variants: 'composite-1st', 'composite-momentum', 'tyukin-1st',
    'tyukin-momentum'.  ``frozen=True`` disables the gain dynamics, which
    reduces each variant to its fixed-gain parent law.
    """

    family = "bgf"

    def __init__(self, dim: int, variant: str, lam0: float, P0: float, P_init=None,
                 beta: float = 1.0, mu: float = 1.0, mode: str = "bounded-gain",
                 realization: str = "pi", frozen: bool = False,
                 D1: float = 1.0, D2: float = 1.0):
        super().__init__(dim)
        if variant not in ("composite-1st", "composite-momentum", "tyukin-1st", "tyukin-momentum"):
            raise ConfigError(f"unknown bgf variant {variant!r}")
        if P0 <= 0 or lam0 < 0:
            raise ConfigError("need P0 > 0 and lam0 >= 0")
        self.variant = variant
        self.lam0, self.P0 = lam0, P0
        self.beta, self.mu = beta, mu
        self.mode = mode
        self.frozen = frozen
        self.D1, self.D2 = D1, D2
        self.P_init = _as_gain_matrix(P_init, dim)
        if realization not in ("pi", "oracle"):
            raise ConfigError("realization must be 'pi' or 'oracle'")
        self.realization = realization
        self.requires_oracle = realization == "oracle"
        self.momentum = variant.endswith("momentum")

    def blocks(self):
        est = "theta" if (self.momentum or self.realization == "oracle") else "a_bar"
        out = [(est, self.dim)]
        if self.momentum:
            out.append(("v" if self.realization == "oracle" else "v_bar", self.dim))
        out.append(("P", self.dim * self.dim))
        return out

    def init_state(self, theta0):
        theta0 = np.asarray(theta0, float)
        st = {}
        if self.momentum:
            st["theta"] = theta0.copy()
            st["v" if self.realization == "oracle" else "v_bar"] = theta0.copy()
        else:
            st["theta" if self.realization == "oracle" else "a_bar"] = theta0.copy()
        st["P"] = self.P_init.ravel().copy()
        return st

    def align_pi(self, st, sig: Signals):
        if self.realization != "pi":
            return
        P = self.P_init
        if self.momentum:
            st["v_bar"] = st["v_bar"] + P @ sig.pi.A
        else:
            st["a_bar"] = st["a_bar"] + P @ sig.pi.A

    def _gain(self, st):
        return st["P"].reshape(self.dim, self.dim)

    def v_hat(self, sig, st):
        if not self.momentum:
            return None
        if self.realization == "oracle":
            return st["v"]
        return st["v_bar"] - self._gain(st) @ sig.pi.A

    def theta_hat(self, sig, st):
        if self.momentum or self.realization == "oracle":
            return st["theta"]
        return st["a_bar"] - self._gain(st) @ sig.pi.A

    def _drive(self, sig):
        """The (s + f~)-weighted or f~-weighted regressor drive, oracle form."""
        if self.variant.startswith("composite"):
            return sig.reg * (sig.s + sig.require_oracle())
        return sig.reg * sig.require_oracle()

    def rates(self, sig, st):
        P = self._gain(st)
        if self.frozen:
            P_dot = np.zeros_like(P)
        else:
            P_dot, _ = forgetting_update(P, sig.reg, self.lam0, self.P0, self.mode)
        out = {"P": P_dot.ravel()}
        theta = self.theta_hat(sig, st)
        if self.realization == "oracle":
            core = -P @ self._drive(sig)
            if self.momentum:
                out["v"] = core
                out["theta"] = self.beta * n_scalar(self.mu, sig.reg) * (P @ (st["v"] - theta))
            else:
                out["theta"] = core
            return out
        known = P @ _pi_known_rate(sig, theta) + P_dot @ sig.pi.A
        if self.variant.startswith("composite"):
            known = known - sig.s * (P @ sig.reg)
        if self.momentum:
            out["v_bar"] = known
            v = self.v_hat(sig, st)
            out["theta"] = self.beta * n_scalar(self.mu, sig.reg) * (P @ (v - theta))
        else:
            out["a_bar"] = known
        return out

    def gain_norm(self, st) -> float:
        return float(np.linalg.norm(self._gain(st)))

    def lyapunov(self, sig, st, a_true):
        P = self._gain(st)
        Pinv = np.linalg.inv(P)
        th = self.theta_hat(sig, st)
        if not self.momentum:
            e = th - a_true
            v = 0.5 * float(e @ Pinv @ e)
            if self.variant.startswith("composite"):
                v += 0.5 * sig.s**2
            return v
        vh = self.v_hat(sig, st)
        vt = vh - a_true
        gap = vh - th
        v = 0.5 * float(vt @ Pinv @ vt) + 0.5 * float(gap @ Pinv @ gap)
        if self.variant.startswith("composite"):
            v += 0.5 * sig.s**2
        return v

    def mu_bound(self, eta=None):
        if not self.momentum:
            return None
        if self.variant == "composite-momentum":
            return compute_mu_bound("bgf-composite-momentum", eta=eta, beta=self.beta)
        return compute_mu_bound("bgf-tyukin-momentum", beta=self.beta, D1=self.D1, D2=self.D2)

    def constraint_violations(self, eta=None):
        out = []
        if self.variant.startswith("tyukin"):
            if not (self.D1 < 2.0 * self.D2**2 or self.D2 > 0.5):
                out.append("needs D1 < 2 D2^2 or D2 > 1/2")
        if self.variant == "tyukin-momentum" and not self.D2 > 0.5:
            out.append("needs D2 > 1/2")
        if self.momentum:
            bound = self.mu_bound(eta)
            if (eta is not None or self.variant == "tyukin-momentum") and bound is not None:
                if not self.mu > bound:
                    out.append(f"needs mu > {bound:.6g}, got {self.mu:.6g}")
        return out


# ---------------------------------------------------------------------------
# law construction from serialized specs
# ---------------------------------------------------------------------------


def make_law(spec: dict, dim: int, psi: Potential | None = None) -> AdaptationLaw:
    """Build a law from its serialized spec {family, gains..., realization}."""
    spec = dict(spec)
    family = spec.pop("family")
    psi = psi or euclidean()
    g = spec  # remaining keys are gains/options
    if family == "slotine-li":
        return SlotineLi(dim, P=g.get("P"))
    if family == "natural":
        return NaturalGradient(dim, psi, gamma=g.get("gamma", 1.0))
    if family == "tracking-potential":
        cost_kind = g.get("cost", "quad-quart")
        if cost_kind == "quad-quart":
            cost = QuadQuartCost(g.get("c", 0.25))
        elif cost_kind == "even-power":
            cost = EvenPowerCost(int(g.get("p", 4)))
        elif cost_kind == "exp-abs":
            cost = ExpAbsCost(g.get("lam", 1.0))
        else:
            raise ConfigError(f"unknown tracking cost {cost_kind!r}")
        return TrackingPotentialLaw(dim, psi, cost, gamma=g.get("gamma", 1.0))
    if family == "tyukin":
        return Tyukin(dim, P=g.get("P"), realization=g.get("realization", "pi"))
    if family == "natural-tyukin":
        return NaturalTyukin(dim, psi, gamma=g.get("gamma", 1.0),
                             realization=g.get("realization", "pi"))
    if family == "composite":
        return Composite(dim, gamma=g.get("gamma", 1.0), kappa=g.get("kappa", 1.0),
                         P=g.get("P"), realization=g.get("realization", "pi"))
    if family == "momentum":
        return Momentum(dim, gamma=g["gamma"], beta=g["beta"], mu=g["mu"],
                        n_kind=g.get("n_kind", "scalar"))
    if family == "momentum-composite":
        return MomentumComposite(dim, gamma=g["gamma"], kappa=g["kappa"], beta=g["beta"],
                                 mu=g["mu"], realization=g.get("realization", "pi"),
                                 n_kind=g.get("n_kind", "scalar"))
    if family == "momentum-tyukin":
        return MomentumTyukin(dim, gamma=g["gamma"], beta=g["beta"], mu=g["mu"], psi=psi,
                              realization=g.get("realization", "pi"), D1=g.get("D1", 1.0))
    if family == "natural-momentum":
        return NaturalMomentum(dim, psi, gamma=g["gamma"], beta=g["beta"], mu=g["mu"],
                               variant=g.get("variant", "a"), strong_l=g.get("l"),
                               smooth_L=g.get("L"))
    if family == "elastic":
        return Elastic(dim, variant=g.get("variant", "first-order"), k=g.get("k", 0.0),
                       rho_c=g.get("rho_c", 0.0), base=g.get("base", "tyukin"),
                       gamma=g.get("gamma", 1.0), beta=g.get("beta", 1.0),
                       mu=g.get("mu", 1.0), P=g.get("P"), D1=g.get("D1", 1.0))
    if family == "bgf":
        return BoundedGainForgetting(
            dim, variant=g["variant"], lam0=g.get("lam0", 1.0), P0=g.get("P0", 2.0),
            P_init=g.get("P_init"), beta=g.get("beta", 1.0), mu=g.get("mu", 1.0),
            mode=g.get("mode", "bounded-gain"), realization=g.get("realization", "pi"),
            frozen=g.get("frozen", False), D1=g.get("D1", 1.0), D2=g.get("D2", 1.0))
    raise ConfigError(f"unknown law family {family!r}")
