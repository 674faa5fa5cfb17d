"""Adaptive dynamics predictors, observers, and the Lagrangian controller.

All estimators here share one construction: the parameter-error cross term in
the certificate derivative is cancelled skew-symmetrically by the adaptation
law, so convergence reduces to contraction of the nominal (known-parameter)
error system.  ``contraction_check`` samples that condition.

Laws are written in mirror form d/dt grad psi(theta) = ... where integration
benefits from it (sparsity-inducing psi); the primal forms through the inverse
Hessian are available for unit checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .potentials import Potential, euclidean


@dataclass(frozen=True)
class PredictorConfig:
    k: float = 1.0
    gamma: float = 1.0
    metric: np.ndarray | None = None  # Gamma, symmetric positive definite

    def metric_matrix(self, n: int) -> np.ndarray:
        if self.metric is None:
            return np.eye(n)
        G = np.asarray(self.metric, float)
        if G.shape != (n, n) or not np.allclose(G, G.T):
            raise ConfigError("metric must be a symmetric (n, n) matrix")
        if np.any(np.linalg.eigvalsh(G) <= 0):
            raise ConfigError("metric must be positive definite")
        return G


def predictor_rates(config: PredictorConfig, psi: Potential, x_hat, x, c, Y, theta_hat,
                    mirror: bool = False):
    """Observer-like predictor  x_hat_dot = -k e + Y(x_hat) theta + c(t).

    Returns (x_hat_dot, theta_dot) with theta_dot the primal natural-gradient
    law -gamma [hess psi]^-1 Y^T Gamma e, or the mirrored rate when requested.
    """
    x_hat = np.asarray(x_hat, float)
    e = x_hat - np.asarray(x, float)
    Y = np.asarray(Y, float)
    G = config.metric_matrix(e.size)
    x_hat_dot = -config.k * e + Y @ theta_hat + np.asarray(c, float)
    drive = config.gamma * (Y.T @ (G @ e))
    theta_dot = -drive if mirror else -psi.hess_inverse_apply(theta_hat, drive)
    return x_hat_dot, theta_dot


def contraction_check(jacobian_sampler, Gamma, k: float, rate_margin: float,
                      samples: int = 10_000) -> tuple[bool, float]:
    """Sampled check of  J^T Gamma + Gamma J <= 2 (k - rate_margin) Gamma.

    ``jacobian_sampler(i)`` yields system Jacobians on the caller's state box.
    Returns (passed, worst_eigenvalue); evidence, not a proof.
    """
    Gamma = np.asarray(Gamma, float)
    worst = -np.inf
    for i in range(samples):
        J = np.asarray(jacobian_sampler(i), float)
        M = J.T @ Gamma + Gamma @ J - 2.0 * (k - rate_margin) * Gamma
        worst = max(worst, float(np.linalg.eigvalsh(M)[-1]))
    return worst <= 0.0, worst


# ---------------------------------------------------------------------------
# Hamiltonian predictors
# ---------------------------------------------------------------------------


def hamiltonian_predictor_rates(k_p: float, k_q: float, gamma: float, psi: Potential,
                                basis, p_hat, q_hat, p, q, theta_hat,
                                mirror: bool = False):
    """Symplectic-structured predictor sharing one parameter vector:

        p_hat_dot = -(dY/dq at hat) theta + k_p (p - p_hat)
        q_hat_dot = +(dY/dp at hat) theta + k_q (q - q_hat)
        theta_dot = +gamma [hess psi]^-1 ((dY/dq)^T p~ - (dY/dp)^T q~)

    with p~ = p_hat - p, q~ = q_hat - q (note the plus sign on the law).
    """
    p_hat, q_hat = np.asarray(p_hat, float), np.asarray(q_hat, float)
    p_t, q_t = p_hat - np.asarray(p, float), q_hat - np.asarray(q, float)
    Gq = basis.grad_q(q_hat, p_hat)
    Gp = basis.grad_p(q_hat, p_hat)
    p_hat_dot = -Gq @ theta_hat - k_p * p_t
    q_hat_dot = Gp @ theta_hat - k_q * q_t
    if gamma == 0.0:
        return p_hat_dot, q_hat_dot, np.zeros_like(np.asarray(theta_hat, float))
    drive = gamma * (Gq.T @ p_t - Gp.T @ q_t)
    theta_dot = drive if mirror else psi.hess_inverse_apply(theta_hat, drive)
    return p_hat_dot, q_hat_dot, theta_dot


def separable_hamiltonian_rates(k_p: float, k_q: float, gamma_p: float, gamma_q: float,
                                psi_p: Potential, psi_q: Potential,
                                kinetic_basis, potential_basis,
                                p_hat, q_hat, p, q, theta_p, theta_q,
                                general_kinetic: bool = False, mirror: bool = False):
    """Kinetic and potential energies estimated separately.

    Separable T(p): theta_p_dot = -gamma_p [hess psi_p]^-1 (dYp/dp)^T q~ and
    theta_q_dot = +gamma_q [hess psi_q]^-1 (dYq/dq)^T p~.  With
    ``general_kinetic`` the T(p, q) form adds the (dYp/dq)^T p~ term.
    """
    p_hat, q_hat = np.asarray(p_hat, float), np.asarray(q_hat, float)
    p_t, q_t = p_hat - np.asarray(p, float), q_hat - np.asarray(q, float)
    Gp_T = kinetic_basis.grad_p(q_hat, p_hat)
    Gq_U = potential_basis.grad_q(q_hat, p_hat)
    p_hat_dot = -Gq_U @ theta_q - k_p * p_t
    q_hat_dot = Gp_T @ theta_p - k_q * q_t
    if general_kinetic:
        Gq_T = kinetic_basis.grad_q(q_hat, p_hat)
        p_hat_dot = p_hat_dot - Gq_T @ theta_p
        drive_p = gamma_p * (Gq_T.T @ p_t - Gp_T.T @ q_t)
    else:
        drive_p = -gamma_p * (Gp_T.T @ q_t)
    drive_q = gamma_q * (Gq_U.T @ p_t)
    if mirror:
        return p_hat_dot, q_hat_dot, drive_p, drive_q
    return (
        p_hat_dot,
        q_hat_dot,
        psi_p.hess_inverse_apply(theta_p, drive_p),
        psi_q.hess_inverse_apply(theta_q, drive_q),
    )


# ---------------------------------------------------------------------------
# Lagrangian systems: basis expansion, Coriolis choice, adaptive controller
# ---------------------------------------------------------------------------


class LagrangianBasis:
    """Inertia and potential expansions H(q) = sum_l aK_l M^l(q),
    U(q) = sum_l aP_l phi^l(q) with analytic derivatives.

    ``inertia(q)`` -> list of (d, d) SPD matrices; ``d_inertia(q)`` -> list of
    (d, d, d) arrays dM[i, j, k] = dM_ij/dq_k; ``potential_grad(q)`` -> list of
    (d,) gradients.
    """

    def __init__(self, inertia, d_inertia, potential, potential_grad, n_joints: int):
        self.inertia = inertia
        self.d_inertia = d_inertia
        self.potential = potential
        self.potential_grad = potential_grad
        self.n_joints = n_joints

    def n_kinetic(self, q) -> int:
        return len(self.inertia(q))

    def n_potential(self, q) -> int:
        return len(self.potential_grad(q))


def _coriolis_from_dM(dM_list, a_K, qdot):
    """The Coriolis-matrix choice making d/dt H - 2C skew-symmetric:

    C_ij = sum_{k,l} aK_l/2 [dM^l_ij/dq_k - (dM^l_kj/dq_i - dM^l_ki/dq_j)] qdot_k
    """
    d = qdot.size
    C = np.zeros((d, d))
    for a_l, dM in zip(a_K, dM_list):
        # term[i, j, k] = dM_ij/dq_k - (dM_kj/dq_i - dM_ki/dq_j)
        term = dM - (np.transpose(dM, (2, 1, 0)) - np.transpose(dM, (1, 2, 0)))
        C += 0.5 * a_l * np.einsum("ijk,k->ij", term, qdot)
    return C


def lagrangian_matrices(basis: LagrangianBasis, q, qdot, a_K, a_P):
    """(H, C, g) for given expansion coefficients."""
    Ms = basis.inertia(q)
    dMs = basis.d_inertia(q)
    H = sum(a_l * M for a_l, M in zip(a_K, Ms))
    C = _coriolis_from_dM(dMs, a_K, np.asarray(qdot, float))
    g = sum(a_l * gr for a_l, gr in zip(a_P, basis.potential_grad(q)))
    return H, C, np.asarray(g, float)


def lagrangian_regressors(basis: LagrangianBasis, q, qdot, qdot_r, qddot_r):
    """Kinetic and potential regressor matrices for the linear expansion.

    Y_K columns combine the Coriolis-consistent velocity term with the inertia
    term M^l qddot_r; Y_P columns are the potential gradients.
    """
    qdot = np.asarray(qdot, float)
    qdot_r = np.asarray(qdot_r, float)
    qddot_r = np.asarray(qddot_r, float)
    Ms = basis.inertia(q)
    dMs = basis.d_inertia(q)
    cols = []
    for M, dM in zip(Ms, dMs):
        term = dM - (np.transpose(dM, (2, 1, 0)) - np.transpose(dM, (1, 2, 0)))
        vel = 0.5 * np.einsum("ijk,k,j->i", term, qdot, qdot_r)
        cols.append(vel + M @ qddot_r)
    Y_K = np.stack(cols, axis=1) if cols else np.zeros((qdot.size, 0))
    grads = basis.potential_grad(q)
    Y_P = np.stack(grads, axis=1) if grads else np.zeros((qdot.size, 0))
    return Y_K, Y_P


def lagrangian_controller_step(basis: LagrangianBasis, q, qdot, q_d, qd_dot, qd_ddot,
                               theta_K, theta_P, K, lam, gamma_K: float, gamma_P: float,
                               psi_K: Potential | None = None,
                               psi_P: Potential | None = None,
                               mirror: bool = False):
    """Adaptive tracking controller estimating the Lagrangian itself.

    Computes s = qdot - qdot_r with qdot_r = qd_dot - lam q~, the control
    u = -K s + Y_P theta_P + Y_K theta_K, and the two natural adaptation laws
    theta_dot = -gamma [hess psi]^-1 Y^T s.  Returns (u, s, thK_dot, thP_dot).
    """
    q, qdot = np.asarray(q, float), np.asarray(qdot, float)
    lam = np.asarray(lam, float) * np.ones_like(q)
    q_t = q - np.asarray(q_d, float)
    qdot_r = np.asarray(qd_dot, float) - lam * q_t
    qddot_r = np.asarray(qd_ddot, float) - lam * (qdot - np.asarray(qd_dot, float))
    s = qdot - qdot_r
    Y_K, Y_P = lagrangian_regressors(basis, q, qdot, qdot_r, qddot_r)
    u = -np.asarray(K, float) @ s + Y_P @ theta_P + Y_K @ theta_K
    psi_K = psi_K or euclidean()
    psi_P = psi_P or euclidean()
    drive_K = gamma_K * (Y_K.T @ s)
    drive_P = gamma_P * (Y_P.T @ s)
    if mirror:
        return u, s, -drive_K, -drive_P
    return (
        u,
        s,
        -psi_K.hess_inverse_apply(theta_K, drive_K),
        -psi_P.hess_inverse_apply(theta_P, drive_P),
    )


def lagrangian_forward_dynamics(basis: LagrangianBasis, q, qdot, u, a_K, a_P):
    """True plant acceleration  qddot = H^-1 (u - C qdot - g)."""
    H, C, g = lagrangian_matrices(basis, q, qdot, a_K, a_P)
    return np.linalg.solve(H, np.asarray(u, float) - C @ np.asarray(qdot, float) - g)


# ---------------------------------------------------------------------------
# output-feedback observer
# ---------------------------------------------------------------------------


def observer_rates(C, Y_fn, theta_hat, x_hat, y, c, k: float, gamma: float,
                   psi: Potential, Gamma=None, g_fn=None, mirror: bool = False):
    """Adaptive observer from a linear readout y = C x:

        x_hat_dot = Y(y_hat) theta + c + g(y_hat) - g(y)
        theta_dot = -gamma [hess psi]^-1 Y(y_hat)^T C^T Gamma (y_hat - y)

    Default injection g(y) = -k C^T y (requires C C^T full rank).
    """
    C = np.asarray(C, float)
    x_hat = np.asarray(x_hat, float)
    y = np.asarray(y, float)
    y_hat = C @ x_hat
    m = C.shape[0]
    G = np.eye(m) if Gamma is None else np.asarray(Gamma, float)
    if g_fn is None:
        if np.linalg.matrix_rank(C @ C.T) < m:
            raise ConfigError("default output injection needs C C^T full rank")
        g_fn = lambda yy: -k * (C.T @ yy)  # noqa: E731
    y_t = y_hat - y
    Yh = np.asarray(Y_fn(y_hat), float)
    x_hat_dot = Yh @ theta_hat + np.asarray(c, float) + g_fn(y_hat) - g_fn(y)
    drive = gamma * (Yh.T @ (C.T @ (G @ y_t)))
    theta_dot = -drive if mirror else -psi.hess_inverse_apply(theta_hat, drive)
    return x_hat_dot, theta_dot


# ---------------------------------------------------------------------------
# recurrent-network weight estimation
# ---------------------------------------------------------------------------


def rnn_predictor_rates(tau: float, k: float, gamma: float, psi: Potential,
                        sigma, x_hat, x, theta_hat: np.ndarray, theta_true: np.ndarray,
                        mirror: bool = False):
    """Oracle-form weight estimator (reads sigma(Theta x); testing only):

        tau x_hat_dot = -x_hat + sigma(Th_hat x) + k (x - x_hat)
        d/dt grad psi(vec Th_hat) = -gamma vec[(sigma(Th_hat x) - sigma(Th x)) x^T]
    """
    x = np.asarray(x, float)
    x_hat = np.asarray(x_hat, float)
    delta = sigma(theta_hat @ x) - sigma(theta_true @ x)
    x_hat_dot = (-x_hat + sigma(theta_hat @ x) + k * (x - x_hat)) / tau
    drive = gamma * np.outer(delta, x)
    if mirror:
        return x_hat_dot, -drive
    w = psi.hess_inverse_apply(theta_hat.ravel(), drive.ravel())
    return x_hat_dot, -w.reshape(theta_hat.shape)


def rnn_approx_pi_rates(tau: float, k: float, gamma: float, lam_f: float,
                        sigma, x_hat, x, x_bar, theta_bar):
    """Deployable approximate-PI realization with a filtered state x_bar:

        x_bar_dot   = lam_f (x - x_bar)
        grad psi(vec Th_hat) = gamma vec(Th_bar - tau e x_bar^T),  e = x_hat - x
        Th_bar_dot  = -(k + 1) e x_bar^T + tau lam_f e (x - x_bar)^T

    Requires lam_f fast relative to adaptation so x_bar tracks x.  Returns
    (x_hat_dot, x_bar_dot, theta_bar_dot, w_hat) where w_hat is the mirrored
    weight estimate grad psi(vec Th_hat).
    """
    x = np.asarray(x, float)
    x_hat = np.asarray(x_hat, float)
    x_bar = np.asarray(x_bar, float)
    e = x_hat - x
    w_hat = gamma * (theta_bar - tau * np.outer(e, x_bar))
    x_bar_dot = lam_f * (x - x_bar)
    theta_bar_dot = -(k + 1.0) * np.outer(e, x_bar) + tau * lam_f * np.outer(e, x - x_bar)
    return x_bar_dot, theta_bar_dot, w_hat


def separable_contraction_margin(hess_T, hess_U, k_p: float, k_q: float) -> float:
    """k_p k_q - lambda_max^2(hess T - hess U) / 4 (> 0 means contracting)."""
    M = np.asarray(hess_T, float) - np.asarray(hess_U, float)
    lam = float(np.max(np.abs(np.linalg.eigvalsh(M))))
    return k_p * k_q - 0.25 * lam**2
