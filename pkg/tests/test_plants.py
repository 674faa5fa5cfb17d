"""True-system checks: oracles, bases, conservation, monotonicity."""

import math

import numpy as np
import pytest

from adaptlab.errors import SingularityError
from adaptlab.integrator import rk4_step
from adaptlab.plants import (
    ACTIVATIONS,
    ChemicalNetworkPlant,
    GLMParams,
    HamiltonianBasis,
    MonomialFeatures,
    MonotoneLink,
    RnnPlant,
    ThreeBodyPlant,
    chemical_derivative,
    exp_link,
    glm_alpha,
    hamiltonian_basis,
    monomial_basis,
    nn_plant_dynamics,
    nn_tracking_plant,
    three_body_derivative,
)

RNG = np.random.default_rng(7)


# -- GLM construction ----------------------------------------------------------


def make_glm(D1=3.0, nondecreasing=True):
    link = MonotoneLink(lambda z: z, lipschitz=1.0, nondecreasing=nondecreasing)
    return GLMParams(lambda x, t: 1.0, lambda x, t: np.array([1.0, 2.0]), link, D1, 2)


def test_glm_alpha_direct_substitution():
    assert np.allclose(glm_alpha(make_glm(), None, 0.0), [3.0, 6.0])


def test_glm_alpha_sign_flip_for_nonincreasing():
    assert np.allclose(glm_alpha(make_glm(nondecreasing=False), None, 0.0), [-3.0, -6.0])


def test_glm_alpha_nn_plant_is_scaled_tanh_features():
    V = RNG.normal(size=(6, 2)) * 0.3
    plant = nn_tracking_plant(V, np.zeros(6), testing=True)
    x = np.array([0.4, -1.0])
    alpha = plant.param.alpha(x, 0.0)
    assert np.allclose(alpha, plant.param.D1 * np.tanh(V @ x))


def test_glm_monotonicity_assumption_sampled():
    """(alpha^T a~) f~ >= 0 and D1 |alpha^T a~| >= |f~| on 1000 samples."""
    V = RNG.normal(size=(8, 2)) * 0.25
    link = exp_link(0.1, z_max=20.0)
    plant = nn_tracking_plant(V, RNG.normal(size=8), testing=True)
    for _ in range(1000):
        x = RNG.normal(size=2) * 2.0
        a = RNG.normal(size=8)
        a_hat = RNG.normal(size=8)
        alpha = plant.param.alpha(x, 0.0)
        f_t = plant.param.f(x, a_hat, 0.0) - plant.param.f(x, a, 0.0)
        proj = float(alpha @ (a_hat - a))
        assert proj * f_t >= -1e-12
        assert plant.param.D1 * abs(proj) >= abs(f_t) - 1e-12


# -- the exp-of-network plant ---------------------------------------------------


def test_nn_plant_zero_weights():
    V = RNG.normal(size=(5, 2))
    assert nn_plant_dynamics([0.3, -0.2], np.zeros(5), V) == pytest.approx(1.0)


def test_nn_plant_zero_features():
    assert nn_plant_dynamics([0.3, -0.2], RNG.normal(size=5), np.zeros((5, 2))) == pytest.approx(1.0)


def test_nn_plant_duplicate_evaluation_oracle():
    for _ in range(50):
        x = RNG.normal(size=2)
        a = RNG.normal(size=7)
        V = RNG.normal(size=(7, 2))
        direct = nn_plant_dynamics(x, a, V)
        layered = math.exp(0.1 * float(np.tanh(V @ x) @ a))
        assert direct == pytest.approx(layered, abs=1e-14)


def test_true_parameter_oracle_is_gated():
    plant = nn_tracking_plant(RNG.normal(size=(4, 2)), np.ones(4), testing=False)
    with pytest.raises(PermissionError):
        plant.true_params
    with pytest.raises(PermissionError):
        plant.f_tilde([0.0, 0.0], np.zeros(4), 0.0)


# -- three-body plant -----------------------------------------------------------


def test_three_body_zero_momentum_gives_zero_qdot():
    plant = ThreeBodyPlant()
    q = np.array([1.0, 0.0, -0.5, 0.8, -0.5, -0.8])
    qdot, pdot = three_body_derivative(plant, q, np.zeros(6))
    assert np.allclose(qdot, 0.0)


def test_three_body_forces_sum_to_zero():
    plant = ThreeBodyPlant()
    # equilateral triangle, zero momenta: internal forces cancel in total
    L = 1.0
    ang = np.deg2rad([90, 210, 330])
    q = np.concatenate([[L * math.cos(a), L * math.sin(a)] for a in ang])
    _, pdot = three_body_derivative(plant, q, np.zeros(6))
    total = pdot.reshape(3, 2).sum(axis=0)
    assert np.allclose(total, 0.0, atol=1e-14)


def test_three_body_gradient_matches_finite_differences():
    plant = ThreeBodyPlant(masses=(1.0, 1.3, 0.8))
    q = RNG.normal(size=6) * 2.0
    p = RNG.normal(size=6)
    qdot, pdot = plant.derivative(q, p)
    h = 1e-6
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        fd_q = (plant.hamiltonian(q, p + e) - plant.hamiltonian(q, p - e)) / (2 * h)
        fd_p = (plant.hamiltonian(q + e, p) - plant.hamiltonian(q - e, p)) / (2 * h)
        assert abs(qdot[i] - fd_q) < 1e-6
        assert abs(pdot[i] + fd_p) < 1e-6


def test_three_body_collision_error():
    plant = ThreeBodyPlant()
    q = np.array([0.0, 0.0, 1e-12, 0.0, 1.0, 1.0])
    with pytest.raises(SingularityError):
        plant.derivative(q, np.zeros(6))


def test_three_body_energy_conservation_figure_eight():
    from adaptlab.experiments.three_body import default_config

    cfg = default_config()
    plant = ThreeBodyPlant(cfg["masses"])
    q = np.asarray(cfg["q0"], float)
    p = np.asarray(cfg["v0"], float)
    H0 = plant.hamiltonian(q, p)
    y = np.concatenate([q, p])

    def f(t, y):
        qd, pd = plant.derivative(y[:6], y[6:])
        return np.concatenate([qd, pd])

    t, h = 0.0, 1e-3
    drift = 0.0
    while t < 10.0:
        y = rk4_step(f, t, y, h)
        t += h
        drift = max(drift, abs(plant.hamiltonian(y[:6], y[6:]) - H0))
    assert drift < 1e-4


# -- Hamiltonian basis ----------------------------------------------------------


def test_hamiltonian_basis_count():
    basis = hamiltonian_basis()
    assert basis.size == 21
    assert len(basis.names) == 21
    q = RNG.normal(size=6)
    p = RNG.normal(size=6)
    assert basis.value(q, p).shape == (21,)


def test_true_hamiltonian_lies_in_span():
    """Linear solve of sampled H against the basis recovers 1/2 on kinetic
    quadratics and -1 on the inverse-distance terms."""
    plant = ThreeBodyPlant()
    basis = hamiltonian_basis()
    rows, vals = [], []
    for _ in range(120):
        q = RNG.normal(size=6) * 1.5
        p = RNG.normal(size=6)
        try:
            rows.append(basis.value(q, p))
        except SingularityError:
            continue
        vals.append(plant.hamiltonian(q, p))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(vals), rcond=None)
    expected = np.zeros(21)
    expected[:3] = 0.5
    expected[12:15] = -1.0
    assert np.allclose(coef, expected, atol=1e-8)


def test_basis_sign_structure_at_rest():
    basis = hamiltonian_basis()
    q = np.array([3.0, 0.0, -3.0, 0.0, 0.0, 4.0])
    vals = basis.value(q, np.zeros(6))
    assert np.allclose(vals[:6], 0.0)  # kinetic entries vanish
    assert np.all(vals[12:] > 0.0) and np.all(vals[12:] < 1.0)


def test_basis_gradients_match_finite_differences():
    basis = hamiltonian_basis()
    q = RNG.normal(size=6) * 2.0
    p = RNG.normal(size=6)
    Gq, Gp = basis.grad_q(q, p), basis.grad_p(q, p)
    h = 1e-6
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        fd_q = (basis.value(q + e, p) - basis.value(q - e, p)) / (2 * h)
        fd_p = (basis.value(q, p + e) - basis.value(q, p - e)) / (2 * h)
        assert np.max(np.abs(Gq[i] - fd_q)) < 1e-5
        assert np.max(np.abs(Gp[i] - fd_p)) < 1e-5


# -- chemical network ------------------------------------------------------------


def test_chemical_zero_state():
    plant = ChemicalNetworkPlant()
    assert np.allclose(chemical_derivative(plant, np.zeros(4)), 0.0)


def test_chemical_hand_substitution():
    plant = ChemicalNetworkPlant(1.0, 1.0)
    assert np.allclose(chemical_derivative(plant, [1.0, 1.0, 1.0, 0.0]),
                       [-1.0, -2.0, -3.0, 1.0])


def test_chemical_common_factor_x2():
    plant = ChemicalNetworkPlant(2.0, 3.0)
    assert np.allclose(chemical_derivative(plant, [0.7, 0.0, 1.9, 0.4]), 0.0)


def test_chemical_nonnegative_trajectory_from_default_config():
    from adaptlab.experiments.chemical import default_config

    cfg = default_config()
    plant = ChemicalNetworkPlant(cfg["k1"], cfg["k2"])
    y = np.asarray(cfg["x0"], float)
    t, h = 0.0, 1e-3
    low = y.min()
    while t < 20.0:
        y = rk4_step(lambda tt, yy: plant.derivative(yy), t, y, h)
        t += h
        low = min(low, float(y.min()))
    assert low >= -1e-12


# -- monomial basis --------------------------------------------------------------


def test_monomial_counts():
    assert len(monomial_basis(4, 3)) == 35  # x4 state rows -> 140 parameters
    assert monomial_basis(1, 0) == [(0,)]
    assert len(monomial_basis(2, 2)) == 6


def test_monomial_enumeration_brute_force():
    expected = {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)}
    assert set(monomial_basis(2, 2)) == expected


def test_monomial_graded_order_and_values():
    exps = monomial_basis(3, 2)
    degrees = [sum(e) for e in exps]
    assert degrees == sorted(degrees)
    feats = MonomialFeatures(exps)
    x = np.array([2.0, 3.0, 0.5])
    vals = feats.value(x)
    assert vals[0] == 1.0
    idx = exps.index((1, 1, 0))
    assert vals[idx] == pytest.approx(6.0)


# -- recurrent network plant ------------------------------------------------------


@pytest.mark.parametrize("name", sorted(ACTIVATIONS))
def test_activation_monotone_and_lipschitz(name):
    sigma, L = ACTIVATIONS[name]
    for _ in range(500):
        x, y = RNG.normal(size=2) * 5.0
        dx, dy = float(sigma(np.array([x]))[0]), float(sigma(np.array([y]))[0])
        assert (x - y) * (dx - dy) >= 0.0
        assert abs(dx - dy) <= L * abs(x - y) + 1e-12


def test_rnn_derivative_shape_and_fixed_point():
    theta = np.zeros((3, 3))
    plant = RnnPlant(2.0, theta, "tanh")
    x = np.array([0.5, -0.2, 0.1])
    assert np.allclose(plant.derivative(x), -x / 2.0)
