"""Core port-Hamiltonian structure: energies, gradients, drift, bracket."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phsafe.errors import SingularModelError
from phsafe.models import cartpole, point_mass
from phsafe.numdiff import central_gradient, relative_error
from phsafe.phsys import MechanicalPHSystem, StateVector, poisson_bracket
from phsafe.sim import rk4_step
from phsafe.validation import random_mechanical_system, random_state


def cartpole_energy_oracle(q, p):
    """Hamiltonian of the unity cart-pole written out from scratch."""
    c = np.cos(q[1])
    m = np.array([[2.0, c], [c, 1.0]])
    det = 2.0 - c * c
    minv = np.array([[1.0, -c], [-c, 2.0]]) / det
    assert np.allclose(minv, np.linalg.inv(m))
    return 0.5 * p @ minv @ p + (1.0 - np.cos(q[1]))


class TestStateVector:
    def test_roundtrip(self):
        x = StateVector(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert np.array_equal(StateVector.from_array(x.as_array()).q, x.q)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 2.0]), np.array([3.0]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            StateVector(np.array([np.nan]), np.array([0.0]))
        with pytest.raises(ValueError):
            StateVector(np.array([0.0]), np.array([np.inf]))


class TestHamiltonian:
    def test_zero_momentum_gives_potential(self):
        sys = cartpole()
        x = StateVector(np.zeros(2), np.zeros(2))
        assert sys.hamiltonian(x) == pytest.approx(sys.potential(np.zeros(2)), abs=1e-15)

    def test_free_unit_mass(self):
        sys = MechanicalPHSystem(
            n=1,
            mass_matrix=lambda q: np.eye(1),
            mass_matrix_grad=lambda q: np.zeros((1, 1, 1)),
            potential=lambda q: 0.0,
            potential_grad=lambda q: np.zeros(1),
            dissipation=np.zeros((1, 1)),
            input_matrix=np.eye(1),
        )
        x = StateVector(np.array([0.3]), np.array([2.0]))
        assert sys.hamiltonian(x) == pytest.approx(2.0, abs=1e-14)

    def test_matches_independent_expression(self):
        sys = cartpole()
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = random_state(rng, 2)
            assert sys.hamiltonian(x) == pytest.approx(
                cartpole_energy_oracle(x.q, x.p), rel=1e-12, abs=1e-12
            )

    def test_singular_mass_raises(self):
        sys = MechanicalPHSystem(
            n=1,
            mass_matrix=lambda q: np.zeros((1, 1)),
            mass_matrix_grad=lambda q: np.zeros((1, 1, 1)),
            potential=lambda q: 0.0,
            potential_grad=lambda q: np.zeros(1),
            dissipation=np.zeros((1, 1)),
            input_matrix=np.eye(1),
        )
        with pytest.raises(SingularModelError):
            sys.hamiltonian(StateVector(np.zeros(1), np.ones(1)))

    def test_dimension_mismatch_rejected(self):
        sys = cartpole()
        with pytest.raises(ValueError):
            sys.hamiltonian(StateVector(np.zeros(3), np.zeros(3)))


class TestHamiltonianGrad:
    def test_momentum_gradient_vanishes_at_rest(self):
        sys = cartpole()
        _, gp = sys.hamiltonian_grad(StateVector(np.array([0.4, 1.1]), np.zeros(2)))
        assert np.allclose(gp, 0.0)

    def test_constant_mass_reduces_to_potential_gradient(self):
        sys = point_mass(2.0, 3.0)
        x = StateVector(np.array([0.7]), np.array([-1.2]))
        gq, _ = sys.hamiltonian_grad(x)
        assert np.allclose(gq, sys.potential_grad(x.q))

    def test_matches_finite_differences(self):
        sys = cartpole()
        rng = np.random.default_rng(11)
        for _ in range(100):
            x = random_state(rng, 2)
            gq, gp = sys.hamiltonian_grad(x)
            fd = central_gradient(lambda z: sys.hamiltonian(StateVector.from_array(z)), x.as_array())
            assert relative_error(np.concatenate([gq, gp]), fd) <= 1e-6


class TestDrift:
    def test_symplectic_flow_without_dissipation(self):
        sys = point_mass(1.0, 1.0)
        a, b = np.array([0.8]), np.array([-0.3])
        assert np.allclose(sys.drift((a, b)), np.concatenate([b, -a]))

    def test_zero_gradient_gives_zero_flow(self):
        sys = cartpole()
        assert np.array_equal(sys.drift((np.zeros(2), np.zeros(2))), np.zeros(4))

    def test_lossless_trajectory_conserves_energy(self):
        sys = cartpole()
        x = np.array([0.0, 0.5, 0.3, -0.2])
        h0 = sys.hamiltonian(StateVector.from_array(x))
        field = lambda z: sys.drift(sys.gradient_arrays(z[:2], z[2:]))
        for _ in range(2000):
            x = rk4_step(field, x, 1e-3)
        assert sys.hamiltonian(StateVector.from_array(x)) == pytest.approx(h0, abs=1e-8)

    def test_damped_trajectory_dissipates(self):
        rng = np.random.default_rng(3)
        sys = random_mechanical_system(rng, n=2, damping=1.0)
        x = np.array([0.4, -0.3, 0.8, 0.5])
        field = lambda z: sys.drift(sys.gradient_arrays(z[:2], z[2:]))
        prev = sys.hamiltonian(StateVector.from_array(x))
        for _ in range(500):
            x = rk4_step(field, x, 1e-3)
            h = sys.hamiltonian(StateVector.from_array(x))
            assert h <= prev + 1e-12 * (1.0 + abs(prev))
            prev = h


small = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
grad2 = st.tuples(
    st.tuples(small, small).map(np.array), st.tuples(small, small).map(np.array)
)


class TestPoissonBracket:
    def test_self_bracket_vanishes(self):
        g = (np.array([1.0, -2.0]), np.array([0.5, 3.0]))
        assert poisson_bracket(g, g) == 0.0

    def test_canonical_pairs(self):
        eye = np.eye(3)
        zero = np.zeros(3)
        for i in range(3):
            for j in range(3):
                value = poisson_bracket((eye[i], zero), (zero, eye[j]))
                assert value == (1.0 if i == j else 0.0)

    def test_matches_expanded_sum(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            a = (rng.normal(size=n), rng.normal(size=n))
            b = (rng.normal(size=n), rng.normal(size=n))
            expanded = sum(a[0][i] * b[1][i] - a[1][i] * b[0][i] for i in range(n))
            assert poisson_bracket(a, b) == pytest.approx(expanded, abs=1e-12)

    @given(grad2, grad2)
    def test_antisymmetry(self, a, b):
        assert abs(poisson_bracket(a, b) + poisson_bracket(b, a)) <= 1e-12

    @given(grad2, grad2, grad2, st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
    def test_bilinearity(self, a, b, c, scale):
        combo = (scale * a[0] + c[0], scale * a[1] + c[1])
        lhs = poisson_bracket(combo, b)
        rhs = scale * poisson_bracket(a, b) + poisson_bracket(c, b)
        assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(rhs))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            poisson_bracket(
                (np.zeros(2), np.zeros(2)), (np.zeros(3), np.zeros(3))
            )


class TestKineticEnergy:
    def test_zero_at_rest(self):
        assert cartpole().kinetic_energy(StateVector(np.ones(2), np.zeros(2))) == 0.0

    def test_unit_mass_half_p_squared(self):
        sys = point_mass(1.0, 1.0)
        assert sys.kinetic_energy(StateVector(np.zeros(1), np.ones(1))) == pytest.approx(0.5)

    def test_energy_split_identity(self):
        sys = cartpole()
        rng = np.random.default_rng(13)
        for _ in range(100):
            x = random_state(rng, 2)
            gap = sys.hamiltonian(x) - sys.kinetic_energy(x) - sys.potential(x.q)
            assert abs(gap) <= 1e-12


class TestGeneralForm:
    def test_lift_has_canonical_structure(self):
        rng = np.random.default_rng(17)
        sys = random_mechanical_system(rng, n=2, damping=0.7)
        gen = sys.as_general()
        x = random_state(rng, 2).as_array()
        j = gen.interconnection(x)
        r = gen.resistive(x)
        assert np.max(np.abs(j + j.T)) <= 1e-12
        assert np.linalg.eigvalsh(r).min() >= -1e-12
        assert gen.hamiltonian(x) == pytest.approx(sys.hamiltonian(StateVector.from_array(x)))

    def test_nonnegative_hamiltonian_on_samples(self):
        gen = cartpole().as_general()
        rng = np.random.default_rng(19)
        for _ in range(100):
            assert gen.hamiltonian(random_state(rng, 2).as_array()) >= 0.0

    def test_output_is_actuated_velocity(self):
        sys = cartpole()
        gen = sys.as_general()
        rng = np.random.default_rng(23)
        x = random_state(rng, 2)
        y = gen.output(x.as_array())
        assert y == pytest.approx(sys.velocity(x.q, x.p)[0])
