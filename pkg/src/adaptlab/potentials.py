"""Strictly convex potentials and their Bregman geometry.

Every non-Euclidean adaptation law in this library is driven by a strictly
convex potential psi through four operations: the gradient (mirror map), its
closed-form inverse, products with the inverse Hessian, and the Bregman
divergence

    d(y, x) = psi(y) - psi(x) - (y - x)^T grad(x) >= 0.

Four closed-form families are provided:

* ``squared-p-norm``   psi(x) = 1/2 ||x||_p^2, p > 1 (p = 1 + eps approximates
  an l1 penalty; p large approximates l_inf)
* ``quadratic-form``   psi(x) = 1/2 x^T Q x with Q symmetric positive definite
* ``negative-entropy`` psi(x) = sum_i x_i log x_i on the positive orthant
* ``log-barrier``      psi(x) = -sum_i log x_i on the positive orthant

Each family accepts an optional diagonal scaling Gamma > 0 and is evaluated as
psi(Gamma x), which keeps units consistent when the estimated parameters are
physical quantities.  Domains are enforced by explicit checks, never by
clamping; callers that need projections do them upstream.

All operations are pure functions of immutable inputs and safe to call from
concurrent workers.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, ConfigError, DomainError, NumericalError, ShapeError

# Inputs smaller than this are treated as exactly zero inside the p-norm
# inverse-gradient power laws to avoid spurious overflow/underflow.
_PNORM_TINY = 1e-300

# Condition-estimate ceiling beyond which inverse-Hessian products are refused.
_COND_LIMIT = 1e12


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-d vector, got shape {x.shape}")
    return x


class Potential:
    """A strictly convex potential with closed-form Bregman machinery.

    Subclasses implement the unscaled operations on z = Gamma x; this base
    class applies the diagonal scaling and the shared domain/shape checks.
    """

    kind: str = "abstract"

    def __init__(self, gamma_diag=None):
        if gamma_diag is None:
            self._gamma = None
        else:
            g = np.asarray(gamma_diag, dtype=float)
            if g.ndim != 1 or np.any(g <= 0) or not np.all(np.isfinite(g)):
                raise ConfigError("gamma_diag must be a 1-d strictly positive vector")
            self._gamma = g

    # -- scaling -----------------------------------------------------------

    def _scaled(self, x: np.ndarray) -> np.ndarray:
        if self._gamma is None:
            return x
        if x.shape != self._gamma.shape:
            raise ShapeError(f"argument shape {x.shape} != gamma_diag shape {self._gamma.shape}")
        return self._gamma * x

    # -- public operations --------------------------------------------------

    def value(self, x) -> float:
        z = self._scaled(_as_vector(x))
        self._check_domain(z)
        return self._value(z)

    def grad(self, x) -> np.ndarray:
        """Exact analytic gradient of psi at x (the mirror map)."""
        z = self._scaled(_as_vector(x))
        self._check_domain(z)
        g = self._grad(z)
        return g if self._gamma is None else self._gamma * g

    def grad_inverse(self, y) -> np.ndarray:
        """The point x with grad(x) = y, in closed form.

        Round-trips with :meth:`grad` to ~1e-10 on the kind's domain.
        """
        y = _as_vector(y)
        w = y if self._gamma is None else y / self._gamma
        z = self._grad_inverse(w)
        return z if self._gamma is None else z / self._gamma

    def hess_apply(self, x, v) -> np.ndarray:
        """Hessian-vector product  (grad^2 psi(x)) v."""
        x, v = _as_vector(x), _as_vector(v)
        if x.shape != v.shape:
            raise ShapeError("x and v must have equal length")
        z = self._scaled(x)
        self._check_domain(z)
        w = v if self._gamma is None else self._gamma * v
        h = self._hess_apply(z, w)
        return h if self._gamma is None else self._gamma * h

    def hess_inverse_apply(self, x, v) -> np.ndarray:
        """Solve  (grad^2 psi(x)) w = v  for w, in closed form."""
        x, v = _as_vector(x), _as_vector(v)
        if x.shape != v.shape:
            raise ShapeError("x and v must have equal length")
        z = self._scaled(x)
        self._check_domain(z)
        w = v if self._gamma is None else v / self._gamma
        h = self._hess_inverse_apply(z, w)
        return h if self._gamma is None else h / self._gamma

    def bregman(self, y, x) -> float:
        """Bregman divergence d(y, x) = psi(y) - psi(x) - (y - x)^T grad(x)."""
        y, x = _as_vector(y), _as_vector(x)
        if y.shape != x.shape:
            raise ShapeError(f"shape mismatch {y.shape} vs {x.shape}")
        zy, zx = self._scaled(y), self._scaled(x)
        self._check_domain(zy)
        self._check_domain(zx)
        return self._bregman(zy, zx)

    # -- hooks ---------------------------------------------------------------

    def _check_domain(self, z: np.ndarray) -> None:
        if not np.all(np.isfinite(z)):
            raise DomainError(f"{self.kind}: non-finite argument")

    def _bregman(self, zy: np.ndarray, zx: np.ndarray) -> float:
        return float(self._value(zy) - self._value(zx) - (zy - zx) @ self._grad(zx))

    def _value(self, z):
        raise NotImplementedError

    def _grad(self, z):
        raise NotImplementedError

    def _grad_inverse(self, w):
        raise CapabilityError(f"{self.kind}: no closed-form inverse gradient")

    def _hess_apply(self, z, v):
        raise NotImplementedError

    def _hess_inverse_apply(self, z, v):
        raise NotImplementedError

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self._gamma is not None:
            cfg["gamma_diag"] = self._gamma.tolist()
        return cfg


def _pnorm(z: np.ndarray, p: float) -> float:
    # max-normalized to stay finite for extreme exponents (p up to ~100+)
    m = float(np.max(np.abs(z), initial=0.0))
    if m == 0.0:
        return 0.0
    return m * float(np.sum((np.abs(z) / m) ** p)) ** (1.0 / p)


def _pnorm_map(z: np.ndarray, p: float) -> np.ndarray:
    """The gradient of 1/2 ||.||_p^2:  ||z||_p^(2-p) |z|^(p-1) sign(z)."""
    a = np.abs(z)
    m = float(np.max(a, initial=0.0))
    if m == 0.0:
        return np.zeros_like(z)
    zn = a / m
    nrm = float(np.sum(zn**p)) ** (1.0 / p)  # ||z||_p / m, in [1, n^(1/p)]
    return m * nrm ** (2.0 - p) * zn ** (p - 1.0) * np.sign(z)


class SquaredPNorm(Potential):
    """psi(x) = 1/2 ||x||_p^2 for p > 1.

    The inverse gradient is the same map with the dual exponent
    q = p / (p - 1), and the inverse Hessian at x equals the Hessian of the
    dual potential 1/2 ||.||_q^2 evaluated at grad(x) (conjugacy), so every
    operation stays closed-form.
    """

    kind = "squared-p-norm"

    def __init__(self, p: float, gamma_diag=None):
        super().__init__(gamma_diag)
        if not np.isfinite(p) or p <= 1.0:
            raise ConfigError(f"p must be > 1, got {p}")
        self.p = float(p)
        self.q = p / (p - 1.0)

    def _value(self, z):
        return 0.5 * _pnorm(z, self.p) ** 2

    def _grad(self, z):
        if self.p == 2.0:
            return z.copy()
        return _pnorm_map(z, self.p)

    def _grad_inverse(self, w):
        if self.p == 2.0:
            return w.copy()
        w = np.where(np.abs(w) < _PNORM_TINY, 0.0, w)
        return _pnorm_map(w, self.q)

    @staticmethod
    def _hess_apply_exponent(z: np.ndarray, p: float, v: np.ndarray) -> np.ndarray:
        # grad^2(1/2||z||_p^2) = (2-p) n^(2-2p) phi phi^T + (p-1) n^(2-p) diag(|z|^(p-2))
        # with n = ||z||_p and phi = |z|^(p-1) sign(z); evaluated max-normalized.
        if p == 2.0:
            return v.copy()
        a = np.abs(z)
        m = float(np.max(a, initial=0.0))
        if m == 0.0:
            raise NumericalError("p-norm Hessian is degenerate at the origin")
        zn = a / m
        dpow = zn ** (p - 2.0)
        if not np.all(np.isfinite(dpow)):
            raise NumericalError("p-norm Hessian singular: zero coordinate with p < 2")
        nrm = float(np.sum(zn**p)) ** (1.0 / p)  # ||z||_p / m
        rho = zn ** (p - 1.0) * np.sign(z)
        diag = (p - 1.0) * nrm ** (2.0 - p) * dpow
        # the Hessian of a 2-homogeneous function is scale-free, so m drops out
        return (2.0 - p) * nrm ** (2.0 - 2.0 * p) * rho * float(rho @ v) + diag * v

    def _hess_apply(self, z, v):
        return self._hess_apply_exponent(z, self.p, v)

    def _hess_inverse_apply(self, z, v):
        if self.p == 2.0:
            return v.copy()
        a = np.abs(z)
        mn = float(np.min(a, initial=np.inf))
        mx = float(np.max(a, initial=0.0))
        if self.p > 2.0:
            # the inverse Hessian diverges on sparse vectors for p > 2
            if mx == 0.0 or mn == 0.0 or (mx / mn) ** (self.p - 2.0) > _COND_LIMIT:
                raise NumericalError("p-norm inverse Hessian too ill-conditioned")
            w = self._grad(z)
            return self._hess_apply_exponent(w, self.q, v)
        if mx == 0.0:
            raise NumericalError("p-norm inverse Hessian is degenerate at the origin")
        # p < 2: the inverse Hessian stays bounded as coordinates vanish
        # (dual-Hessian of the mirrored point, with vanished entries pinned)
        w = self._grad(z)
        out = self._hess_apply_exponent(np.where(a == 0.0, 0.0, w), self.q, v)
        return np.where(a == 0.0, 0.0, out)


class QuadraticForm(Potential):
    """psi(x) = 1/2 x^T Q x with Q symmetric positive definite."""

    kind = "quadratic-form"

    def __init__(self, q_matrix, gamma_diag=None):
        super().__init__(gamma_diag)
        Q = np.asarray(q_matrix, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigError("q_matrix must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(Q).max()))):
            raise ConfigError("q_matrix must be symmetric")
        try:
            self._chol = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("q_matrix must be positive definite") from exc
        self.Q = Q

    def _solve(self, v):
        w = np.linalg.solve(self._chol, v)
        return np.linalg.solve(self._chol.T, w)

    def _value(self, z):
        return 0.5 * float(z @ self.Q @ z)

    def _grad(self, z):
        return self.Q @ z

    def _grad_inverse(self, w):
        return self._solve(w)

    def _hess_apply(self, z, v):
        return self.Q @ v

    def _hess_inverse_apply(self, z, v):
        return self._solve(v)

    def _bregman(self, zy, zx):
        d = zy - zx
        return 0.5 * float(d @ self.Q @ d)

    def to_config(self):
        cfg = super().to_config()
        cfg["q_matrix"] = self.Q.tolist()
        return cfg


class NegativeEntropy(Potential):
    """psi(x) = sum_i x_i log x_i on x > 0 (the multiplicative-weights geometry)."""

    kind = "negative-entropy"

    def _check_domain(self, z):
        super()._check_domain(z)
        if np.any(z <= 0):
            raise DomainError("negative-entropy requires strictly positive entries")

    def _value(self, z):
        return float(np.sum(z * np.log(z)))

    def _grad(self, z):
        return 1.0 + np.log(z)

    def _grad_inverse(self, w):
        return np.exp(w - 1.0)

    def _hess_apply(self, z, v):
        return v / z

    def _hess_inverse_apply(self, z, v):
        return z * v

    def _bregman(self, zy, zx):
        # KL form: stable for nearly coincident arguments
        return float(np.sum(zy * np.log(zy / zx)) - np.sum(zy) + np.sum(zx))


class LogBarrier(Potential):
    """psi(x) = -sum_i log x_i on x > 0; keeps estimates in the orthant without projection."""

    kind = "log-barrier"

    def _check_domain(self, z):
        super()._check_domain(z)
        if np.any(z <= 0):
            raise DomainError("log-barrier requires strictly positive entries")

    def _value(self, z):
        return -float(np.sum(np.log(z)))

    def _grad(self, z):
        return -1.0 / z

    def _grad_inverse(self, w):
        if np.any(w >= 0):
            raise DomainError("log-barrier inverse gradient requires strictly negative entries")
        return -1.0 / w

    def _hess_apply(self, z, v):
        return v / z**2

    def _hess_inverse_apply(self, z, v):
        return z**2 * v

    def _bregman(self, zy, zx):
        r = zy / zx
        return float(np.sum(r - np.log(r) - 1.0))


def make_potential(kind: str, p: float | None = None, q_matrix=None, gamma_diag=None) -> Potential:
    """Build a potential from its config fields {kind, p, q_matrix, gamma_diag}."""
    if kind == "squared-p-norm":
        if p is None:
            raise ConfigError("squared-p-norm requires p")
        return SquaredPNorm(p, gamma_diag)
    if kind == "quadratic-form":
        if q_matrix is None:
            raise ConfigError("quadratic-form requires q_matrix")
        return QuadraticForm(q_matrix, gamma_diag)
    if kind == "negative-entropy":
        return NegativeEntropy(gamma_diag)
    if kind == "log-barrier":
        return LogBarrier(gamma_diag)
    raise ConfigError(f"unknown potential kind {kind!r}")


def euclidean() -> SquaredPNorm:
    """The self-dual potential 1/2 ||.||_2^2 (identity mirror map)."""
    return SquaredPNorm(2.0)


def bregman(psi: Potential, y, x) -> float:
    """Free-function alias for psi.bregman(y, x)."""
    return psi.bregman(y, x)
