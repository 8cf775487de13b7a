"""Barrier evaluation, Lie derivatives, and the constraint functional."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phsafe.barriers import (
    BarrierSpec,
    ExtendedClassK,
    GeneralizedEnergyCBF,
    evaluate,
    kinetic_limit_barrier,
    lie_derivatives,
    position_limit_barrier,
    psi,
    psi_via_bracket,
    psi_via_energy_bracket,
    total_energy_limit_barrier,
)
from phsafe.models import cartpole, point_mass
from phsafe.numdiff import central_gradient, directional_derivative, relative_error
from phsafe.pbc import closed_loop, eb_pbc_mechanical, quadratic_added_energy, zero_added_energy
from phsafe.phsys import StateVector
from phsafe.validation import (
    random_closed_loop,
    random_energy_barrier,
    random_generic_barrier,
    random_state,
)

ALPHA10 = ExtendedClassK(gamma=10.0)


def reference_loop(k=6.0, d_i=None):
    plant = cartpole()
    ctrl = eb_pbc_mechanical(plant, quadratic_added_energy(k, 1.0, 2), d_i)
    return closed_loop(plant, ctrl)


class TestExtendedClassK:
    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(ValueError):
            ExtendedClassK(gamma=0.0)
        with pytest.raises(ValueError):
            ExtendedClassK(gamma=-1.0)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ExtendedClassK(gamma=1.0, kind="cubic")

    def test_zero_maps_to_zero(self):
        assert ALPHA10(0.0) == 0.0

    @given(
        st.floats(min_value=-20, max_value=20, allow_nan=False),
        st.floats(min_value=-5, max_value=5, allow_nan=False),
    )
    def test_linear_homogeneity(self, h, c):
        assert ALPHA10(c * h) == pytest.approx(c * ALPHA10(h), abs=1e-12)

    def test_strictly_increasing_on_samples(self):
        values = np.linspace(-4, 4, 101)
        mapped = [ALPHA10(v) for v in values]
        assert all(b > a for a, b in zip(mapped, mapped[1:]))


class TestEvaluate:
    def test_rest_with_budget_only(self):
        b = kinetic_limit_barrier(cartpole(), ebar=2.0, alpha=ALPHA10)
        assert evaluate(b, StateVector(np.zeros(2), np.zeros(2))) == pytest.approx(2.0)

    def test_kinetic_excess_goes_negative(self):
        sys = cartpole()
        b = kinetic_limit_barrier(sys, ebar=1.0, alpha=ALPHA10)
        qdot = np.array([np.sqrt(1.5), 0.0])
        x = StateVector(np.zeros(2), sys.mass_matrix(np.zeros(2)) @ qdot)
        assert sys.kinetic_energy(x) == pytest.approx(1.5, abs=1e-12)
        assert evaluate(b, x) == pytest.approx(-0.5, abs=1e-12)

    def test_position_limit_matches_independent_expression(self):
        sys = cartpole()
        b = position_limit_barrier(sys, qbar=0.6, alpha_e=10.0, alpha=ALPHA10)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = random_state(rng, 2)
            # independent expression written from the definition
            c = np.cos(x.q[1])
            minv = np.array([[1.0, -c], [-c, 2.0]]) / (2.0 - c * c)
            expected = -0.5 * x.p @ minv @ x.p + 10.0 * (0.6 - x.q[0])
            assert evaluate(b, x) == pytest.approx(expected, abs=1e-12)

    def test_energy_form_identity(self):
        sys = cartpole()
        rng = np.random.default_rng(1)
        form = GeneralizedEnergyCBF(
            hbar=lambda q: float(q[0] ** 2 - q[1]),
            hbar_grad=lambda q: np.array([2.0 * q[0], -1.0]),
            alpha_e=3.5,
            ebar=0.7,
        )
        b = form.bind(sys, ALPHA10)
        for _ in range(50):
            x = random_state(rng, 2)
            expected = -sys.kinetic_energy(x) + 3.5 * (x.q[0] ** 2 - x.q[1]) + 0.7
            assert b.h(x) == pytest.approx(expected, abs=1e-13)

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            GeneralizedEnergyCBF(
                hbar=lambda q: 0.0, hbar_grad=lambda q: np.zeros(2), alpha_e=0.0, ebar=-0.1
            )


class TestLieDerivatives:
    def test_position_only_barrier_has_no_input_gain(self):
        loop = reference_loop()

        def h(x):
            return 0.5 - x.q[0]

        def h_grad(x):
            return np.array([-1.0, 0.0]), np.zeros(2)

        b = BarrierSpec(h=h, h_grad=h_grad, alpha=ALPHA10)
        rng = np.random.default_rng(2)
        for _ in range(20):
            _, lgh = lie_derivatives(b, loop, random_state(rng, 2))
            assert np.allclose(lgh, 0.0)

    def test_energy_barrier_gain_is_negative_actuated_velocity(self):
        loop = reference_loop()
        b = kinetic_limit_barrier(loop.plant, ebar=1.0, alpha=ALPHA10)
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = random_state(rng, 2)
            _, lgh = lie_derivatives(b, loop, x)
            qdot = loop.velocity(x)
            assert np.allclose(lgh, -(qdot @ loop.input_matrix), atol=1e-13)

    def test_drift_term_matches_directional_difference(self):
        loop = reference_loop(d_i=np.array([[0.3]]))
        rng = np.random.default_rng(4)
        specs = [
            kinetic_limit_barrier(loop.plant, 1.0, ALPHA10),
            random_generic_barrier(rng, 2),
        ]
        for b in specs:
            for _ in range(25):
                x = random_state(rng, 2)
                lfh, _ = lie_derivatives(b, loop, x)
                flow = loop.drift(x)
                fd = directional_derivative(
                    lambda z: b.h(StateVector.from_array(z)), x.as_array(), flow
                )
                assert relative_error(np.array([lfh]), np.array([fd])) <= 1e-5

    def test_momentum_gradient_matches_negative_kinetic(self):
        sys = cartpole()
        rng = np.random.default_rng(5)
        for _ in range(50):
            b = random_energy_barrier(rng, sys)
            x = random_state(rng, 2)
            _, hp = b.h_grad(x)
            assert np.max(np.abs(hp + sys.kinetic_grad(x)[1])) <= 1e-12


class TestPsi:
    def test_rest_at_minimum_reduces_to_class_k_of_budget(self):
        loop = reference_loop(k=6.0)
        b = kinetic_limit_barrier(loop.plant, ebar=0.75, alpha=ALPHA10)
        x = StateVector(np.array([1.0, 0.0]), np.zeros(2))  # storage minimum, at rest
        assert psi(b, loop, x) == pytest.approx(10.0 * 0.75, abs=1e-12)

    def test_lossless_bracket_form(self):
        loop = reference_loop()  # D = 0, no injection
        rng = np.random.default_rng(6)
        for _ in range(50):
            b = random_generic_barrier(rng, 2)
            x = random_state(rng, 2)
            h_grad = b.h_grad(x)
            s_grad = loop.storage_grad(x)
            bracket = h_grad[0] @ s_grad[1] - h_grad[1] @ s_grad[0]
            assert psi(b, loop, x) == pytest.approx(bracket + b.alpha(b.h(x)), abs=1e-10)

    def test_dual_path_equivalence_on_reference_model(self):
        rng = np.random.default_rng(7)
        loops = [reference_loop(), random_closed_loop(rng, damping=0.9)]
        worst = 0.0
        for i in range(1000):
            loop = loops[i % 2]
            b = random_energy_barrier(rng, loop.plant) if i % 2 else random_generic_barrier(rng, 2)
            x = random_state(rng, 2)
            direct = psi(b, loop, x)
            worst = max(worst, abs(direct - psi_via_bracket(b, loop, x)))
            if b.energy_form is not None:
                worst = max(worst, abs(direct - psi_via_energy_bracket(b, loop, x)))
        assert worst <= 1e-10

    def test_energy_bracket_requires_energy_form(self):
        loop = reference_loop()
        b = random_generic_barrier(np.random.default_rng(8), 2)
        with pytest.raises(ValueError):
            psi_via_energy_bracket(b, loop, StateVector(np.zeros(2), np.zeros(2)))


class TestBuilders:
    def test_total_energy_barrier_caps_storage(self):
        loop = reference_loop()
        b = total_energy_limit_barrier(loop, ebar=2.5, alpha=ALPHA10)
        rng = np.random.default_rng(9)
        for _ in range(50):
            x = random_state(rng, 2)
            assert b.h(x) == pytest.approx(2.5 - loop.storage(x), abs=1e-12)

    def test_boundary_regularity_of_study_barriers(self):
        """Gradient stays away from zero on constructed boundary states."""
        sys = cartpole()
        rng = np.random.default_rng(10)
        kinetic = kinetic_limit_barrier(sys, ebar=1.0, alpha=ALPHA10)
        wall = position_limit_barrier(sys, qbar=0.6, alpha_e=10.0, alpha=ALPHA10)
        for _ in range(100):
            seed = random_state(rng, 2)
            # scale the momentum so the kinetic energy hits the budget exactly
            scale = np.sqrt(1.0 / max(sys.kinetic_energy(seed), 1e-12))
            x = StateVector(seed.q, scale * seed.p)
            assert abs(kinetic.h(x)) <= 1e-9
            hq, hp = kinetic.h_grad(x)
            assert np.linalg.norm(np.concatenate([hq, hp])) >= 1e-6
            # slide the cart to the wall distance matching the kinetic energy
            q = seed.q.copy()
            q[0] = 0.6 - sys.kinetic_energy(seed) / 10.0
            x = StateVector(q, seed.p)
            assert abs(wall.h(x)) <= 1e-9
            hq, hp = wall.h_grad(x)
            assert np.linalg.norm(np.concatenate([hq, hp])) >= 1e-6

    def test_gradient_consistency_of_builders(self):
        sys = cartpole()
        loop = reference_loop()
        rng = np.random.default_rng(11)
        specs = [
            kinetic_limit_barrier(sys, 1.0, ALPHA10),
            position_limit_barrier(sys, 0.6, 10.0, ALPHA10),
            total_energy_limit_barrier(loop, 2.0, ALPHA10),
        ]
        for b in specs:
            for _ in range(50):
                x = random_state(rng, 2)
                hq, hp = b.h_grad(x)
                fd = central_gradient(lambda z: b.h(StateVector.from_array(z)), x.as_array())
                assert relative_error(np.concatenate([hq, hp]), fd) <= 1e-6

    def test_point_mass_kinetic_barrier(self):
        sys = point_mass(1.0, 1.0)
        b = kinetic_limit_barrier(sys, ebar=0.25, alpha=ALPHA10)
        assert b.h(StateVector(np.zeros(1), np.array([1.0]))) == pytest.approx(-0.25)
