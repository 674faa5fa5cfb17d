"""Geometry engine checks: closed forms against independent numerics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from adaptlab.errors import ConfigError, DomainError, NumericalError, ShapeError
from adaptlab.potentials import (
    LogBarrier,
    NegativeEntropy,
    QuadraticForm,
    SquaredPNorm,
    euclidean,
    make_potential,
)

RNG = np.random.default_rng(20240817)

ALL_KINDS = [
    SquaredPNorm(1.1),
    SquaredPNorm(1.5),
    SquaredPNorm(2.0),
    SquaredPNorm(4.0),
    SquaredPNorm(10.0),
    SquaredPNorm(3.0, gamma_diag=[0.5, 2.0, 1.0, 1.5]),
    QuadraticForm(np.diag([2.0, 4.0, 1.0, 0.5])),
    NegativeEntropy(),
    LogBarrier(),
]


def sample_domain_point(psi, dim=4, rng=RNG):
    x = rng.normal(size=dim)
    if psi.kind in ("negative-entropy", "log-barrier"):
        return np.abs(x) + 0.1
    return x


def sample_smooth_point(psi, dim=4, rng=RNG):
    """In-domain point away from coordinate zeros, where p-norm Hessians
    are smooth enough for finite-difference and quadrature oracles."""
    x = sample_domain_point(psi, dim=dim, rng=rng)
    small = np.abs(x) < 0.25
    x[small] = np.sign(x[small] + 1e-12) * (0.25 + np.abs(x[small]))
    return x


# -- worked examples ---------------------------------------------------------


def test_bregman_euclidean_half_square_distance():
    assert euclidean().bregman([1.0, 0.0], [0.0, 0.0]) == pytest.approx(0.5)


def test_bregman_identity_is_zero():
    for psi in ALL_KINDS:
        x = sample_domain_point(psi)
        assert psi.bregman(x, x) == 0.0


def test_bregman_quadratic_form():
    q = QuadraticForm(np.diag([2.0, 2.0]))
    assert q.bregman([1.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)


def test_grad_euclidean_identity():
    assert np.allclose(euclidean().grad([3.0, -4.0]), [3.0, -4.0])


def test_grad_entropy_at_ones():
    assert np.allclose(NegativeEntropy().grad([1.0, 1.0]), [1.0, 1.0])


def test_grad_p4_diagonal_point():
    # evaluate the closed form at (sqrt 2, sqrt 2); finite differences agree
    psi = SquaredPNorm(4.0)
    x = np.array([math.sqrt(2.0), math.sqrt(2.0)])
    g = psi.grad(x)
    assert np.allclose(g, [1.0, 1.0], atol=1e-12)
    h = 1e-6
    fd = [(psi.value(x + h * e) - psi.value(x - h * e)) / (2 * h) for e in np.eye(2)]
    assert np.allclose(g, fd, atol=1e-6)


def test_grad_inverse_self_dual():
    assert np.allclose(euclidean().grad_inverse([3.0, 4.0]), [3.0, 4.0])


def test_grad_inverse_p4():
    psi = SquaredPNorm(4.0)
    out = psi.grad_inverse([1.0, 1.0])
    assert np.allclose(out, [math.sqrt(2.0), math.sqrt(2.0)], atol=1e-12)
    assert np.allclose(psi.grad(out), [1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("p", [1.1, 1.7, 3.0, 6.0])
def test_grad_inverse_axis_vectors_fixed(p):
    # on a single-axis vector the dual map collapses to the identity
    psi = SquaredPNorm(p)
    for c in (0.3, -2.0, 7.5):
        y = np.zeros(3)
        y[1] = c
        assert np.allclose(psi.grad_inverse(y), y, atol=1e-12)


def test_hess_inverse_identity_for_euclidean():
    assert np.allclose(euclidean().hess_inverse_apply([9.0, -1.0], [2.0, 5.0]), [2.0, 5.0])


def test_hess_inverse_diagonal_quadratic():
    q = QuadraticForm(np.diag([2.0, 4.0]))
    assert np.allclose(q.hess_inverse_apply([0.3, 0.4], [2.0, 4.0]), [1.0, 1.0])


def test_hess_inverse_entropy_matches_state():
    psi = NegativeEntropy()
    x = np.array([0.5, 0.25])
    assert np.allclose(psi.hess_inverse_apply(x, [1.0, 1.0]), x)


# -- invariants ---------------------------------------------------------------


def test_nonnegativity_thousand_pairs_per_kind():
    for psi in ALL_KINDS:
        for _ in range(1000):
            x = sample_domain_point(psi)
            y = sample_domain_point(psi)
            if np.max(np.abs(x - y)) < 1e-12:
                continue
            assert psi.bregman(y, x) > 0.0, psi.kind


def test_round_trip_thousand_points_per_kind():
    for psi in ALL_KINDS:
        worst = 0.0
        for _ in range(1000):
            x = sample_domain_point(psi)
            back = psi.grad_inverse(psi.grad(x))
            worst = max(worst, float(np.max(np.abs(back - x))))
        assert worst < 1e-8, (psi.kind, worst)


def test_round_trip_tolerance_on_grad_inverse_post():
    # grad(grad_inverse(y)) = y to 1e-10
    for psi in ALL_KINDS:
        for _ in range(200):
            y = psi.grad(sample_domain_point(psi))
            assert np.max(np.abs(psi.grad(psi.grad_inverse(y)) - y)) < 1e-10


def fd_hess_apply(psi, x, v, h=1e-6):
    return (psi.grad(x + h * v) - psi.grad(x - h * v)) / (2 * h)


def test_hessian_consistency_finite_difference():
    for psi in ALL_KINDS:
        fixed = isinstance(psi, QuadraticForm) or psi._gamma is not None
        for dim in (4,) if fixed else (2, 5, 10):
            x = sample_smooth_point(psi, dim=dim)
            v = RNG.normal(size=dim)
            hv = psi.hess_apply(x, v)
            assert np.max(np.abs(hv - fd_hess_apply(psi, x, v))) < 1e-5, psi.kind
            back = psi.hess_inverse_apply(x, hv)
            assert np.max(np.abs(back - v)) < 1e-5, psi.kind


def test_taylor_integral_remainder_quadrature():
    # d(y, x) equals the integral-remainder form computed by quadrature
    for psi in ALL_KINDS:
        x = sample_smooth_point(psi)
        # same orthant and bounded ratio: the segment stays clear of the
        # p-norm Hessian's coordinate singularities
        y = x * (1.0 + 0.4 * RNG.uniform(-1.0, 1.0, size=x.size))
        d = y - x

        def integrand(s):
            return float(d @ psi.hess_apply(x + s * d, d)) * (1.0 - s)

        val, _ = quad(integrand, 0.0, 1.0, limit=200)
        assert abs(psi.bregman(y, x) - val) < 1e-6, psi.kind


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=8),
    st.lists(st.floats(-5, 5), min_size=2, max_size=8),
    st.floats(1.05, 8.0),
)
def test_pnorm_bregman_nonnegative_property(xs, ys, p):
    n = min(len(xs), len(ys))
    x, y = np.array(xs[:n]), np.array(ys[:n])
    psi = SquaredPNorm(p)
    assert psi.bregman(y, x) >= -1e-12


# -- errors and domains -------------------------------------------------------


def test_entropy_domain_error():
    with pytest.raises(DomainError):
        NegativeEntropy().bregman([0.5, -0.1], [0.5, 0.5])
    with pytest.raises(DomainError):
        LogBarrier().grad([1.0, 0.0])


def test_dimension_mismatch_error():
    with pytest.raises(ShapeError):
        euclidean().bregman([1.0, 2.0], [1.0, 2.0, 3.0])


def test_pnorm_inverse_hessian_condition_guard():
    psi = SquaredPNorm(6.0)
    with pytest.raises(NumericalError):
        psi.hess_inverse_apply([1.0, 0.0, 2.0], [1.0, 1.0, 1.0])


def test_make_potential_config_round_trip():
    psi = make_potential("squared-p-norm", p=1.1, gamma_diag=[1.0, 2.0])
    cfg = psi.to_config()
    assert cfg["kind"] == "squared-p-norm"
    with pytest.raises(ConfigError):
        make_potential("squared-p-norm")  # missing p
    with pytest.raises(ConfigError):
        make_potential("no-such-kind")
    with pytest.raises(ConfigError):
        QuadraticForm(np.array([[1.0, 2.0], [0.0, 1.0]]))  # not symmetric


def test_pnorm_inverse_treats_tiny_entries_as_zero():
    psi = SquaredPNorm(1.1)
    y = np.array([1.0, 1e-305])
    out = psi.grad_inverse(y)
    assert out[1] == 0.0
    assert np.isfinite(out).all()


def test_gamma_scaling_changes_geometry():
    base = SquaredPNorm(3.0)
    scaled = SquaredPNorm(3.0, gamma_diag=[2.0, 1.0])
    x = np.array([0.7, -0.4])
    assert scaled.value(x) == pytest.approx(base.value(np.array([1.4, -0.4])))
    # gradient chain rule
    g = scaled.grad(x)
    fd = [(scaled.value(x + 1e-7 * e) - scaled.value(x - 1e-7 * e)) / 2e-7 for e in np.eye(2)]
    assert np.allclose(g, fd, atol=1e-6)
