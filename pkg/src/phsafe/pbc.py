"""Energy-balancing passive control.

The controller shapes the closed-loop storage to S_cl = H + Vbar by feeding
back the gradient of an added potential Vbar, optionally completed with
damping injection on the natural output.  For mechanical systems the shaped
loop is again a canonical port-Hamiltonian system whose Hamiltonian is S_cl
and whose dissipation absorbs the injected damping, which is how
`ClosedLoopSystem` represents it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import MatchingViolationError, RankDeficientInputError
from .phsys import GeneralPHSystem, Gradient, MechanicalPHSystem, StateVector

_RANK_RTOL = 1e-10
_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class AddedEnergy:
    """Potential added by the controller, with its analytic gradient.

    `lower_bound` is the model author's claim of a lower bound on vbar; it
    qualifies the shaped storage as a valid storage function and is verified
    by sampling in the validation suite.
    """

    vbar: Callable[[np.ndarray], float]
    vbar_grad: Callable[[np.ndarray], np.ndarray]
    lower_bound: float = 0.0


def zero_added_energy(n: int) -> AddedEnergy:
    zeros = np.zeros(n)
    return AddedEnergy(vbar=lambda q: 0.0, vbar_grad=lambda q: zeros, lower_bound=0.0)


def quadratic_added_energy(stiffness: float, reference: float, n: int, joint: int = 0) -> AddedEnergy:
    """Spring 0.5 k (q_joint - reference)^2 pulling one coordinate to a setpoint."""
    if stiffness < 0:
        raise ValueError("stiffness must be nonnegative")

    def vbar(q: np.ndarray) -> float:
        return 0.5 * stiffness * (q[joint] - reference) ** 2

    def vbar_grad(q: np.ndarray) -> np.ndarray:
        g = np.zeros(n)
        g[joint] = stiffness * (q[joint] - reference)
        return g

    return AddedEnergy(vbar=vbar, vbar_grad=vbar_grad, lower_bound=0.0)


@dataclass(frozen=True)
class PassiveController:
    """State feedback realising the energy-balancing design."""

    beta: Callable[[StateVector], np.ndarray]
    storage: Callable[[StateVector], float]
    storage_grad: Callable[[StateVector], Gradient]
    d_i: np.ndarray
    vbar: AddedEnergy


def _left_annihilator(g: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the left null space of g (annihilator rows)."""
    _, s, vh = np.linalg.svd(g.T)
    rank = int(np.sum(s > max(g.shape) * np.finfo(float).eps * (s[0] if s.size else 1.0)))
    return vh[rank:]


def eb_pbc_general(
    sys: GeneralPHSystem, vbar_grad: Callable[[np.ndarray], np.ndarray]
) -> Callable[[np.ndarray], np.ndarray]:
    """Feedback beta(x) = g*(x) (J(x) + R(x)) dVbar/dx with g* the left pseudo-inverse."""

    def beta(x: np.ndarray) -> np.ndarray:
        g = np.atleast_2d(sys.input_map(x))
        s = np.linalg.svd(g, compute_uv=False)
        if s[-1] <= _RANK_RTOL * max(s[0], 1.0):
            raise RankDeficientInputError(f"input map rank-deficient at x={x!r} (singular values {s})")
        rhs = (sys.interconnection(x) + sys.resistive(x)) @ vbar_grad(x)
        return np.linalg.solve(g.T @ g, g.T @ rhs)

    return beta


def matching_residual(
    sys: GeneralPHSystem, vbar_grad: Callable[[np.ndarray], np.ndarray], x: np.ndarray
) -> np.ndarray:
    """Stacked matching-condition residual [g_perp (-J + R); g^T] dVbar/dx.

    A zero vector certifies, at this state, that the added energy is
    realisable through the available inputs.
    """
    g = np.atleast_2d(sys.input_map(x))
    dv = vbar_grad(x)
    top = _left_annihilator(g) @ (-sys.interconnection(x) + sys.resistive(x)) @ dv
    bottom = g.T @ dv
    return np.concatenate([top, bottom])


def lift_to_state(vbar: AddedEnergy, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Gradient of a position-only added energy over the full state (q, p)."""

    def grad(x: np.ndarray) -> np.ndarray:
        return np.concatenate([vbar.vbar_grad(x[:n]), np.zeros(n)])

    return grad


def beta_mechanical(vbar: AddedEnergy, q: np.ndarray, input_matrix: np.ndarray) -> np.ndarray:
    """Force u solving B u = -dVbar/dq.

    Raises MatchingViolationError when the potential gradient leaves the
    range of B (the shaping is not realisable on the actuated directions).
    """
    b = np.atleast_2d(input_matrix)
    target = -vbar.vbar_grad(q)
    u, *_ = np.linalg.lstsq(b, target, rcond=None)
    residual = float(np.linalg.norm(b @ u - target))
    if residual > _MATCH_TOL * (1.0 + float(np.linalg.norm(target))):
        raise MatchingViolationError(
            f"dVbar/dq not in range of the input matrix (residual {residual:.3e})"
        )
    return u


def damping_injection(controller: PassiveController, y: np.ndarray) -> np.ndarray:
    """Negative output feedback -D_i y."""
    return -controller.d_i @ y


def eb_pbc_mechanical(
    sys: MechanicalPHSystem, vbar: AddedEnergy, d_i: np.ndarray | None = None
) -> PassiveController:
    """Build the energy-balancing controller for a mechanical system."""
    m = sys.m_inputs
    d_i = np.zeros((m, m)) if d_i is None else np.atleast_2d(np.asarray(d_i, dtype=float))
    if d_i.shape != (m, m):
        raise ValueError(f"damping injection matrix must be {m}x{m}, got {d_i.shape}")
    if not np.allclose(d_i, d_i.T) or np.linalg.eigvalsh(d_i).min() < -1e-12:
        raise ValueError("damping injection matrix must be symmetric positive semidefinite")

    # the pseudo-inverse of the (constant) input matrix is hoisted out of the
    # per-step feedback; the realisability check stays per-call
    b_mat = np.atleast_2d(sys.input_matrix)
    b_pinv = np.linalg.pinv(b_mat)

    def beta(x: StateVector) -> np.ndarray:
        target = -vbar.vbar_grad(x.q)
        u = b_pinv @ target
        gap = b_mat @ u - target
        residual = float(np.sqrt(gap @ gap))
        if residual > _MATCH_TOL * (1.0 + float(np.sqrt(target @ target))):
            raise MatchingViolationError(
                f"dVbar/dq not in range of the input matrix (residual {residual:.3e})"
            )
        return u

    def storage(x: StateVector) -> float:
        return sys.hamiltonian(x) + float(vbar.vbar(x.q))

    def storage_grad(x: StateVector) -> Gradient:
        gq, gp = sys.hamiltonian_grad(x)
        return gq + vbar.vbar_grad(x.q), gp

    return PassiveController(beta=beta, storage=storage, storage_grad=storage_grad, d_i=d_i, vbar=vbar)


@dataclass(frozen=True)
class ClosedLoopSystem:
    """Passively controlled mechanical system with its storage bookkeeping.

    `shaped` is the plant with potential V + Vbar and dissipation
    D + B D_i B^T; its Hamiltonian is exactly the closed-loop storage S_cl.
    """

    plant: MechanicalPHSystem
    controller: PassiveController
    shaped: MechanicalPHSystem

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def input_matrix(self) -> np.ndarray:
        return self.plant.input_matrix

    def storage(self, x: StateVector) -> float:
        return self.shaped.hamiltonian(x)

    def storage_grad(self, x: StateVector) -> Gradient:
        return self.shaped.hamiltonian_grad(x)

    def drift(self, x: StateVector) -> np.ndarray:
        """Nominal closed-loop flow (PBC folded in, safety input zero)."""
        return self.shaped.drift(self.shaped.hamiltonian_grad(x))

    def velocity(self, x: StateVector) -> np.ndarray:
        return self.shaped.velocity(x.q, x.p)

    def output(self, x: StateVector) -> np.ndarray:
        """Natural passive output y = B^T qdot."""
        return self.input_matrix.T @ self.velocity(x)

    def dissipation_rate(self, x: StateVector) -> float:
        """d_p = dS_cl/dp^T (D + B D_i B^T) dS_cl/dp >= 0."""
        gp = self.velocity(x)
        return float(gp @ self.shaped.dissipation @ gp)

    def flow_and_powers(self, x: np.ndarray, u_extra: np.ndarray) -> tuple[np.ndarray, float, float]:
        """State derivative plus the two power channels, for a held safety input.

        Returns (xdot, y^T u_extra, d_p).  Along this flow the storage rate is
        exactly the first power minus the second, which is what the per-step
        energy audit integrates.
        """
        n = self.n
        gq, gp = self.shaped.gradient_arrays(x[:n], x[n:])
        d_cl = self.shaped.dissipation
        force = self.input_matrix @ u_extra
        xdot = np.concatenate([gp, -gq - d_cl @ gp + force])
        return xdot, float(gp @ force), float(gp @ (d_cl @ gp))

    def augmented_field(self, z: np.ndarray, u_extra: np.ndarray) -> np.ndarray:
        """flow_and_powers fused into one (2n + 2)-vector for the integrator."""
        n = self.n
        gq, gp = self.shaped.gradient_arrays(z[:n], z[n : 2 * n])
        d_gp = self.shaped.dissipation @ gp
        force = self.input_matrix @ u_extra
        out = np.empty(2 * n + 2)
        out[:n] = gp
        out[n : 2 * n] = -gq - d_gp + force
        out[2 * n] = gp @ force
        out[2 * n + 1] = gp @ d_gp
        return out


def closed_loop(sys: MechanicalPHSystem, controller: PassiveController) -> ClosedLoopSystem:
    """Fold the controller into the plant: shaped potential, injected damping."""
    vbar = controller.vbar
    b = sys.input_matrix
    d_cl = sys.dissipation + b @ controller.d_i @ b.T

    def potential(q: np.ndarray) -> float:
        return float(sys.potential(q)) + float(vbar.vbar(q))

    def potential_grad(q: np.ndarray) -> np.ndarray:
        return sys.potential_grad(q) + vbar.vbar_grad(q)

    shaped = replace(sys, potential=potential, potential_grad=potential_grad, dissipation=d_cl)
    return ClosedLoopSystem(plant=sys, controller=controller, shaped=shaped)
