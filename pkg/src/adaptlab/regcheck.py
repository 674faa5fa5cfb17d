"""Brute-force oracle for the implicit-regularization claims.

When many parameter vectors interpolate the dynamics along a trajectory, the
non-Euclidean laws converge to the Bregman projection of the initial estimate
onto the interpolation set.  This module builds that set from sampled
constraint rows, computes the projection independently of any adaptation
machinery, and audits converged runs against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSetError, StaleAuditError
from .potentials import Potential

_MAX_NEWTON = 200


@dataclass
class InterpolationSet:
    """Affine constraints A theta = b collected from trajectory samples."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, float))
        self.b = np.atleast_1d(np.asarray(self.b, float))
        if self.A.shape[0] != self.b.shape[0]:
            raise InfeasibleSetError("constraint rows and rhs differ in length")

    @property
    def is_empty(self) -> bool:
        return self.A.shape[0] == 0 or self.A.size == 0

    def reduced(self, tol: float = 1e-10) -> "InterpolationSet":
        """Independent-row reduction via SVD with a feasibility check."""
        if self.is_empty:
            return self
        theta_ls, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        residual = float(np.linalg.norm(self.A @ theta_ls - self.b))
        if residual > max(tol, 1e-8 * max(1.0, float(np.linalg.norm(self.b)))):
            raise InfeasibleSetError(f"constraints inconsistent, residual {residual:.3g}")
        U, sing, Vt = np.linalg.svd(self.A, full_matrices=False)
        keep = sing > max(tol, 1e-12) * (sing[0] if sing.size else 1.0)
        rank = int(np.sum(keep))
        A_r = Vt[:rank] * sing[:rank, None] if rank else np.zeros((0, self.A.shape[1]))
        b_r = U[:, :rank].T @ self.b * 1.0 if rank else np.zeros(0)
        return InterpolationSet(A_r, b_r)

    @staticmethod
    def from_samples(rows, values, t=None, t_burn: float | None = None) -> "InterpolationSet":
        """Stack (regressor row, dynamics value) samples, optionally dropping
        the transient t <= t_burn."""
        rows = np.atleast_2d(np.asarray(rows, float))
        values = np.atleast_1d(np.asarray(values, float))
        if t is not None and t_burn is not None:
            keep = np.asarray(t, float) > t_burn
            rows, values = rows[keep], values[keep]
        return InterpolationSet(rows, values)


def oracle_argmin_bregman(psi: Potential, theta0, iset: InterpolationSet,
                          tol: float = 1e-10) -> np.ndarray:
    """argmin_{A theta = b} d_psi(theta, theta0), independent of any law.

    Solves the projection's first-order conditions

        grad psi(theta) = grad psi(theta0) + A^T nu,   A theta = b

    by damped Newton iteration on the dual variable nu (the fixed point of
    projected mirror descent).  The iterate theta = grad_inverse(...) stays in
    the potential's domain by construction.  Stops when both the constraint
    residual and the dual step are below tol.
    """
    theta0 = np.asarray(theta0, float)
    if iset.is_empty:
        return theta0.copy()
    red = iset.reduced()
    if red.is_empty:
        return theta0.copy()
    A, b = red.A, red.b
    g0 = psi.grad(theta0)
    nu = np.zeros(A.shape[0])

    def theta_of(nu):
        return psi.grad_inverse(g0 + A.T @ nu)

    theta = theta_of(nu)
    res = A @ theta - b
    res_norm = float(np.linalg.norm(res, np.inf))
    for it in range(_MAX_NEWTON):
        if res_norm <= tol:
            break
        try:
            # J = A [hess psi(theta)]^-1 A^T, small and positive definite
            Hinv_At = np.stack([psi.hess_inverse_apply(theta, a) for a in A], axis=1)
        except Exception:
            # degenerate start (e.g. the p-norm origin): nudge the dual
            # variable toward feasibility and retry
            nu = nu - np.linalg.lstsq(A @ A.T, res, rcond=None)[0] * 1e-3
            theta = theta_of(nu)
            res = A @ theta - b
            res_norm = float(np.linalg.norm(res, np.inf))
            continue
        J = A @ Hinv_At
        step = np.linalg.solve(J + 1e-14 * np.eye(J.shape[0]), res)
        scale = 1.0
        for _ in range(60):
            cand = nu - scale * step
            try:
                th_c = theta_of(cand)
            except Exception:
                scale *= 0.5
                continue
            r_c = A @ th_c - b
            if float(np.linalg.norm(r_c, np.inf)) < res_norm:
                nu, theta, res = cand, th_c, r_c
                res_norm = float(np.linalg.norm(res, np.inf))
                break
            scale *= 0.5
        else:
            raise InfeasibleSetError("Bregman projection line search stalled")
    if res_norm > tol:
        raise InfeasibleSetError(f"projection did not reach tolerance ({res_norm:.3g})")
    return theta


def regularization_audit(psi: Potential, theta_init, theta_final, iset: InterpolationSet,
                         tol: float = 1e-10, converged: bool = True) -> dict:
    """Compare a converged estimate against the independent Bregman projection.

    Reports the headline gap |d(theta_final, init) - d(theta*, init)|, the
    three-point identity residual d(theta*, init) - d(theta*, final)
    - d(theta_final, init), the potential-value gap, and norms.
    """
    if not converged:
        raise StaleAuditError("run did not meet the convergence criterion")
    theta_init = np.asarray(theta_init, float)
    theta_final = np.asarray(theta_final, float)
    star = oracle_argmin_bregman(psi, theta_init, iset, tol=tol)
    d_law = psi.bregman(theta_final, theta_init)
    d_star = psi.bregman(star, theta_init)
    three_point = d_star - psi.bregman(star, theta_final) - d_law
    return {
        "psi_kind": psi.kind,
        "bregman_gap": abs(d_law - d_star),
        "three_point_residual": three_point,
        "psi_value_law": psi.value(theta_final),
        "psi_value_oracle": psi.value(star),
        "psi_gap": abs(psi.value(theta_final) - psi.value(star)),
        "oracle": star,
        "l1": float(np.linalg.norm(theta_final, 1)),
        "l2": float(np.linalg.norm(theta_final, 2)),
        "linf": float(np.linalg.norm(theta_final, np.inf)),
    }


def min_norm_interpolant(iset: InterpolationSet) -> np.ndarray:
    """Analytic least-norm solution (pseudo-inverse), the Euclidean reference."""
    red = iset.reduced()
    if red.is_empty:
        raise InfeasibleSetError("no constraints")
    return np.linalg.pinv(red.A) @ red.b
