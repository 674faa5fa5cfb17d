"""True systems under control or prediction, with gated oracle access.

Plants own the true parameters.  Production-style estimator code never reads
them; tests and reproduction studies construct plants with ``testing=True`` to
unlock the oracle (true parameters, instantaneous function-approximation
error) for metrics and Lyapunov certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import ConfigError, ShapeError, SingularityError

# ---------------------------------------------------------------------------
# tracking plants  x^(n) + f(x, a, t) = u
# ---------------------------------------------------------------------------


class LinearInParams:
    """f(x, a, t) = reg(x, t) @ a with a known regressor row.

    The optional closed-form pack (antiderivative of the regressor in the top
    state and its partials) enables proportional-integral law realizations on
    second-order plants.
    """

    is_linear = True

    def __init__(self, reg, dim: int, antideriv=None, d_antideriv_dx1=None,
                 d_antideriv_dt=None):
        self.reg = reg
        self.dim = dim
        self.antideriv = antideriv
        self.d_antideriv_dx1 = d_antideriv_dx1
        self.d_antideriv_dt = d_antideriv_dt

    def f(self, x, theta, t):
        return float(self.reg(x, t) @ theta)

    def direction(self, x, t):
        """The monotone update direction; for linear models this is the regressor."""
        return self.reg(x, t)

    @property
    def supports_pi(self):
        return self.antideriv is not None


@dataclass(frozen=True)
class MonotoneLink:
    """A monotone, Lipschitz scalar link for generalized-linear dynamics."""

    fn: Callable[[float], float]
    lipschitz: float
    nondecreasing: bool = True


class GLMParams:
    """f(x, a, t) = lambda(x, t) * link(phi(x, t)^T a) with a monotone link.

    ``alpha(x, t) = (+/-1) * D1 * lambda(x, t) * phi(x, t)`` is the known
    update direction: the parameter error projected on alpha always agrees in
    sign with the function error, and D1 * |alpha^T (a_hat - a)| bounds the
    function error from above.
    """

    is_linear = False

    def __init__(self, lambda_fn, phi, link: MonotoneLink, D1: float, dim: int,
                 antideriv=None, d_antideriv_dx1=None, d_antideriv_dt=None):
        if D1 <= 0:
            raise ConfigError("D1 must be positive")
        self.lambda_fn = lambda_fn
        self.phi = phi
        self.link = link
        self.D1 = float(D1)
        self.dim = dim
        self.antideriv = antideriv
        self.d_antideriv_dx1 = d_antideriv_dx1
        self.d_antideriv_dt = d_antideriv_dt

    def f(self, x, theta, t):
        return float(self.lambda_fn(x, t) * self.link.fn(float(self.phi(x, t) @ theta)))

    def alpha(self, x, t):
        sign = 1.0 if self.link.nondecreasing else -1.0
        return sign * self.D1 * self.lambda_fn(x, t) * self.phi(x, t)

    def direction(self, x, t):
        return self.alpha(x, t)

    @property
    def supports_pi(self):
        return self.antideriv is not None


def glm_alpha(param: GLMParams, x, t) -> np.ndarray:
    """alpha(x, t) = (-1)^dir D1 lambda(x, t) phi(x, t); sign flips for nonincreasing links."""
    return param.alpha(x, t)


class TrackingPlant:
    """n-th order plant x^(n) + f(x, a, t) = u."""

    def __init__(self, n: int, param, a_true, testing: bool = False):
        if n < 1:
            raise ConfigError("plant order must be >= 1")
        a_true = np.asarray(a_true, dtype=float)
        if a_true.ndim != 1 or a_true.size != param.dim:
            raise ShapeError("true parameter vector does not match the parameterization")
        self.n = n
        self.param = param
        self._a = a_true
        self.testing = bool(testing)

    @property
    def dim(self):
        return self.param.dim

    @property
    def true_params(self) -> np.ndarray:
        if not self.testing:
            raise PermissionError("true-parameter oracle requires testing=True")
        return self._a.copy()

    def f_true(self, x, t) -> float:
        return self.param.f(x, self._a, t)

    def f_at(self, x, theta, t) -> float:
        """The known functional form evaluated at estimated parameters."""
        return self.param.f(x, theta, t)

    def f_tilde(self, x, theta, t) -> float:
        if not self.testing:
            raise PermissionError("f_tilde oracle requires testing=True")
        return self.param.f(x, theta, t) - self.f_true(x, t)

    def state_derivative(self, x, u, t) -> np.ndarray:
        """x_dot for the chain x_i' = x_{i+1}, x_n' = u - f(x, a, t)."""
        x = np.asarray(x, dtype=float)
        dx = np.empty_like(x)
        dx[:-1] = x[1:]
        dx[-1] = u - self.f_true(x, t)
        return dx


# -- the exp-of-network benchmark plant --------------------------------------


def nn_plant_dynamics(x, a, V) -> float:
    """Three-layer network f = exp(0.1 * tanh(V x)^T a)."""
    z = float(np.tanh(V @ np.asarray(x, float)) @ np.asarray(a, float))
    return math.exp(0.1 * z)


def _tanh_feature_pack(V: np.ndarray):
    """tanh(V x) features with the x2-antiderivative pack for PI realizations.

    The antiderivative of tanh(v1 x1 + v2 x2) in x2 is log cosh(.) / v2; rows
    with |v2| below a fixed threshold switch (per row, so the branch is
    time-consistent) to the series expansion around v2 = 0.
    """
    V = np.asarray(V, dtype=float)
    v1, v2 = V[:, 0], V[:, 1]
    small = np.abs(v2) < 1e-6

    def phi(x, t):
        return np.tanh(V @ x[:2])

    def antideriv(x, t):
        th = np.tanh(V @ x[:2])
        out = np.empty_like(th)
        z = V @ x[:2]
        out[~small] = _logcosh(z[~small]) / v2[~small]
        # series in v2: x2 tanh(g) + v2 x2^2 / 2 sech^2(g), g = v1 x1
        g = v1[small] * x[0]
        tg = np.tanh(g)
        out[small] = x[1] * tg + 0.5 * v2[small] * x[1] ** 2 * (1.0 - tg**2)
        return out

    def d_antideriv_dx1(x, t):
        th = np.tanh(V @ x[:2])
        out = np.empty_like(th)
        out[~small] = th[~small] * v1[~small] / v2[~small]
        g = v1[small] * x[0]
        tg = np.tanh(g)
        sech2 = 1.0 - tg**2
        out[small] = v1[small] * (x[1] * sech2 - v2[small] * x[1] ** 2 * tg * sech2)
        return out

    def d_antideriv_dt(x, t):
        return np.zeros(V.shape[0])

    return phi, antideriv, d_antideriv_dx1, d_antideriv_dt


def _logcosh(z):
    # overflow-safe log cosh
    az = np.abs(z)
    return az + np.log1p(np.exp(-2.0 * az)) - math.log(2.0)


def exp_link(scale: float = 0.1, z_max: float = 20.0) -> MonotoneLink:
    """The exponential link exp(scale z); Lipschitz only on a box |z| <= z_max."""
    return MonotoneLink(lambda z: math.exp(scale * z),
                        lipschitz=scale * math.exp(scale * z_max), nondecreasing=True)


def identity_link() -> MonotoneLink:
    return MonotoneLink(lambda z: z, lipschitz=1.0)


def nn_tracking_plant(V, a_true, link: MonotoneLink | None = None,
                      testing: bool = False) -> TrackingPlant:
    """Second-order plant with f = link(tanh(V x)^T a); D1 = max(1, L_box)."""
    V = np.asarray(V, dtype=float)
    link = link or exp_link()
    phi, antideriv, dA_dx1, dA_dt = _tanh_feature_pack(V)
    D1 = max(1.0, link.lipschitz)
    param = GLMParams(lambda x, t: 1.0, phi, link, D1, V.shape[0],
                      antideriv=antideriv, d_antideriv_dx1=dA_dx1, d_antideriv_dt=dA_dt)
    return TrackingPlant(2, param, a_true, testing=testing)


def tanh_linear_plant(V, a_true, testing: bool = False) -> TrackingPlant:
    """Second-order plant with f = tanh(V x)^T a (linear in the parameters)."""
    V = np.asarray(V, dtype=float)
    phi, antideriv, dA_dx1, dA_dt = _tanh_feature_pack(V)
    param = LinearInParams(phi, V.shape[0], antideriv=antideriv,
                           d_antideriv_dx1=dA_dx1, d_antideriv_dt=dA_dt)
    return TrackingPlant(2, param, a_true, testing=testing)


# ---------------------------------------------------------------------------
# three-body gravitational plant
# ---------------------------------------------------------------------------

_PAIRS = list(combinations(range(3), 2))


class ThreeBodyPlant:
    """Three point masses under Newtonian gravity in the plane (G = 1)."""

    def __init__(self, masses=(1.0, 1.0, 1.0)):
        m = np.asarray(masses, dtype=float)
        if m.shape != (3,) or np.any(m <= 0):
            raise ConfigError("three positive masses required")
        self.masses = m

    def _separations(self, q):
        q = np.asarray(q, dtype=float).reshape(3, 2)
        out = {}
        for i, j in _PAIRS:
            d = q[i] - q[j]
            r = np.hypot(d[0], d[1])
            if r < 1e-9:
                raise SingularityError(f"bodies {i} and {j} closer than 1e-9")
            out[(i, j)] = (d, r)
        return out

    def hamiltonian(self, q, p) -> float:
        p = np.asarray(p, dtype=float).reshape(3, 2)
        kin = float(np.sum(np.sum(p**2, axis=1) / (2.0 * self.masses)))
        pot = 0.0
        for (i, j), (_, r) in self._separations(q).items():
            pot -= self.masses[i] * self.masses[j] / r
        return kin + pot

    def derivative(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        """Hamilton's equations q_dot = dH/dp, p_dot = -dH/dq, analytic."""
        p2 = np.asarray(p, dtype=float).reshape(3, 2)
        qdot = p2 / self.masses[:, None]
        pdot = np.zeros((3, 2))
        for (i, j), (d, r) in self._separations(q).items():
            f = self.masses[i] * self.masses[j] * d / r**3
            pdot[i] -= f
            pdot[j] += f
        return qdot.ravel(), pdot.ravel()


def three_body_derivative(plant: ThreeBodyPlant, q, p):
    return plant.derivative(q, p)


class HamiltonianBasis:
    """21 scalar energy candidates for three planar bodies, in a fixed order:

    [|p_i|^2]_{i=1..3}, [|p_i|^4], [|q_i|^2], [|q_i|^4],
    then for pairs (1,2), (1,3), (2,3): [1/r_ij], [1/r_ij^2], [1/r_ij^3].
    """

    size = 21
    names = (
        ["p%d_sq" % (i + 1) for i in range(3)]
        + ["p%d_quartic" % (i + 1) for i in range(3)]
        + ["q%d_sq" % (i + 1) for i in range(3)]
        + ["q%d_quartic" % (i + 1) for i in range(3)]
        + ["rinv1_%d%d" % (i + 1, j + 1) for i, j in _PAIRS]
        + ["rinv2_%d%d" % (i + 1, j + 1) for i, j in _PAIRS]
        + ["rinv3_%d%d" % (i + 1, j + 1) for i, j in _PAIRS]
    )

    def _sep(self, q):
        q = q.reshape(3, 2)
        seps = []
        for i, j in _PAIRS:
            d = q[i] - q[j]
            # numpy scalar: power overflow becomes inf rather than raising
            r = np.hypot(d[0], d[1])
            if r < 1e-9:
                raise SingularityError("pair separation below 1e-9")
            seps.append((i, j, d, r))
        return seps

    def value(self, q, p) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        p2 = np.sum(p.reshape(3, 2) ** 2, axis=1)
        q2 = np.sum(q.reshape(3, 2) ** 2, axis=1)
        rs = np.array([r for *_, r in self._sep(q)])
        return np.concatenate([p2, p2**2, q2, q2**2, 1.0 / rs, 1.0 / rs**2, 1.0 / rs**3])

    def grad_p(self, q, p) -> np.ndarray:
        """(6, 21) matrix of basis gradients in p (columns follow self.names)."""
        p = np.asarray(p, dtype=float)
        p2 = np.sum(p.reshape(3, 2) ** 2, axis=1)
        G = np.zeros((6, 21))
        for i in range(3):
            sl = slice(2 * i, 2 * i + 2)
            G[sl, i] = 2.0 * p[sl]
            G[sl, 3 + i] = 4.0 * p2[i] * p[sl]
        return G

    def grad_q(self, q, p) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        q2 = np.sum(q.reshape(3, 2) ** 2, axis=1)
        G = np.zeros((6, 21))
        for i in range(3):
            sl = slice(2 * i, 2 * i + 2)
            G[sl, 6 + i] = 2.0 * q[sl]
            G[sl, 9 + i] = 4.0 * q2[i] * q[sl]
        for k, (i, j, d, r) in enumerate(self._sep(q)):
            for m, expo in enumerate((1, 2, 3)):
                col = 12 + 3 * m + k
                g = -expo * d / r ** (expo + 2)
                G[2 * i : 2 * i + 2, col] += g
                G[2 * j : 2 * j + 2, col] -= g
        return G


def hamiltonian_basis() -> HamiltonianBasis:
    return HamiltonianBasis()


# ---------------------------------------------------------------------------
# four-species chemical reaction network
# ---------------------------------------------------------------------------


class ChemicalNetworkPlant:
    """The four-species mass-action benchmark network."""

    def __init__(self, k1: float = 1.0, k2: float = 1.0):
        if k1 <= 0 or k2 <= 0:
            raise ConfigError("rate constants must be positive")
        self.k1 = float(k1)
        self.k2 = float(k2)

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (4,):
            raise ShapeError("chemical network state is 4-dimensional")
        r1 = self.k1 * x[0] * x[1]
        r2 = self.k2 * x[1] * x[2] ** 2
        return np.array([-r1, -r1 - r2, -r1 - 2.0 * r2, r2])


def chemical_derivative(plant: ChemicalNetworkPlant, x) -> np.ndarray:
    return plant.derivative(x)


def monomial_basis(n_species: int, max_degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree <= max_degree, graded-lex order."""
    if n_species < 1 or max_degree < 0:
        raise ConfigError("need n_species >= 1 and max_degree >= 0")
    by_degree: list[list[tuple[int, ...]]] = []

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in compositions(total - head, slots - 1):
                yield (head,) + tail

    for d in range(max_degree + 1):
        by_degree.append(sorted(compositions(d, n_species), reverse=True))
    return [expo for group in by_degree for expo in group]


class MonomialFeatures:
    """Evaluate a monomial exponent list as a feature vector."""

    def __init__(self, exponents: list[tuple[int, ...]]):
        self.exponents = list(exponents)
        self._expo = np.asarray(self.exponents, dtype=float)

    @property
    def size(self):
        return len(self.exponents)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            powed = np.where(self._expo == 0, 1.0, x[None, :] ** self._expo)
        return np.prod(powed, axis=1)


# ---------------------------------------------------------------------------
# continuous-time recurrent network plant
# ---------------------------------------------------------------------------


def _relu(z):
    return np.maximum(z, 0.0)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _softplus(z):
    return np.logaddexp(0.0, z)


ACTIVATIONS: dict[str, tuple[Callable, float]] = {
    # name -> (elementwise map, Lipschitz constant)
    "relu": (_relu, 1.0),
    "tanh": (np.tanh, 1.0),
    "sigmoid": (_sigmoid, 0.25),
    "softplus": (_softplus, 1.0),
}


class RnnPlant:
    """tau x_dot = -x + sigma(Theta x) with monotone Lipschitz activation."""

    def __init__(self, tau: float, theta: np.ndarray, activation: str = "tanh"):
        if tau <= 0:
            raise ConfigError("tau must be positive")
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ConfigError("Theta must be a square matrix")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.tau = float(tau)
        self.theta = theta
        self.activation = activation
        self.sigma = ACTIVATIONS[activation][0]

    @property
    def n(self):
        return self.theta.shape[0]

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (-x + self.sigma(self.theta @ x)) / self.tau
