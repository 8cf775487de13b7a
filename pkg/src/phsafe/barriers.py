"""Control barrier functions over canonical mechanical states.

The central family is h(q, p) = -K_e(q, p) + alpha_E hbar(q) + Ebar: a
kinetic-energy deficit plus a weighted position term plus an energy budget.
Filtering through such a barrier can only extract energy from the shaped
storage, which is what makes it compatible with a passive design.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .pbc import ClosedLoopSystem
from .phsys import Gradient, MechanicalPHSystem, StateVector, poisson_bracket


@dataclass(frozen=True)
class ExtendedClassK:
    """Strictly increasing gain with alpha(0) = 0; only the linear family is built in."""

    gamma: float
    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise ValueError(f"unsupported class-K kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be strictly positive")

    def __call__(self, h: float) -> float:
        return self.gamma * h


@dataclass(frozen=True)
class GeneralizedEnergyCBF:
    """Data of a barrier h = -K_e + alpha_E hbar(q) + Ebar, before binding to a system."""

    hbar: Callable[[np.ndarray], float]
    hbar_grad: Callable[[np.ndarray], np.ndarray]
    alpha_e: float
    ebar: float

    def __post_init__(self):
        if self.ebar < 0:
            raise ValueError("energy offset Ebar must be nonnegative")

    def bind(self, sys: MechanicalPHSystem, alpha: ExtendedClassK) -> "BarrierSpec":
        """Close over a system's kinetic energy to obtain an evaluable barrier."""

        def h(x: StateVector) -> float:
            return -sys.kinetic_energy(x) + self.alpha_e * float(self.hbar(x.q)) + self.ebar

        def h_grad(x: StateVector) -> Gradient:
            kq, kp = sys.kinetic_grad(x)
            return -kq + self.alpha_e * self.hbar_grad(x.q), -kp

        return BarrierSpec(h=h, h_grad=h_grad, alpha=alpha, energy_form=self)


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier value, analytic gradient and class-K gain.

    `energy_form` is set when the barrier belongs to the generalized energy
    family above; it unlocks the bracket-form constraint evaluation used for
    cross-checking.
    """

    h: Callable[[StateVector], float]
    h_grad: Callable[[StateVector], Gradient]
    alpha: ExtendedClassK
    energy_form: GeneralizedEnergyCBF | None = None


class ConstraintTerms(NamedTuple):
    """Everything the safety filter needs about the constraint at one state."""

    h: float
    grad: Gradient
    lie_f: float
    lie_g: np.ndarray
    psi: float


def constraint_terms(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> ConstraintTerms:
    """Evaluate h, its Lie derivatives along the nominal closed loop, and psi."""
    h_val = b.h(x)
    hq, hp = b.h_grad(x)
    flow = cl.drift(x)
    n = cl.n
    lie_f = float(hq @ flow[:n] + hp @ flow[n:])
    lie_g = hp @ cl.input_matrix
    return ConstraintTerms(h=h_val, grad=(hq, hp), lie_f=lie_f, lie_g=lie_g, psi=lie_f + b.alpha(h_val))


def evaluate(b: BarrierSpec, x: StateVector) -> float:
    """h(x); positive inside the safe set, zero on its boundary."""
    return b.h(x)


def lie_derivatives(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> tuple[float, np.ndarray]:
    """(L_f h, L_g h) with f the nominal closed-loop drift and g = (0; B)."""
    terms = constraint_terms(b, cl, x)
    return terms.lie_f, terms.lie_g


def psi(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> float:
    """Constraint functional L_f h + alpha(h); its sign decides filter activation."""
    return constraint_terms(b, cl, x).psi


def psi_via_bracket(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> float:
    """psi assembled from the symplectic bracket and the dissipation coupling.

    Identical to `psi` for any barrier: L_f h = {h, S_cl} - dh/dp^T D_cl
    dS_cl/dp under the dissipative drift sign.
    """
    h_val = b.h(x)
    h_grad = b.h_grad(x)
    s_grad = cl.storage_grad(x)
    coupling = float(h_grad[1] @ cl.shaped.dissipation @ s_grad[1])
    return poisson_bracket(h_grad, s_grad) - coupling + b.alpha(h_val)


def psi_via_energy_bracket(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> float:
    """psi via the reduced bracket {alpha_E hbar + V_total, K_e} for energy-family barriers.

    The kinetic terms of {h, S_cl} cancel pairwise, leaving only the bracket
    of the total shaped potential and weighted position term against K_e,
    plus the (velocity-quadratic) dissipation coupling.
    """
    form = b.energy_form
    if form is None:
        raise ValueError("bracket reduction only applies to generalized energy barriers")
    w = cl.velocity(x)
    potential_part = form.alpha_e * form.hbar_grad(x.q) + cl.shaped.potential_grad(x.q)
    bracket = float(potential_part @ w)
    coupling = float(w @ cl.shaped.dissipation @ w)
    h_val = -cl.shaped.kinetic_energy(x) + form.alpha_e * float(form.hbar(x.q)) + form.ebar
    return bracket + coupling + b.alpha(h_val)


# -- barrier builders used by the scenario layer --


def kinetic_limit_barrier(sys: MechanicalPHSystem, ebar: float, alpha: ExtendedClassK) -> BarrierSpec:
    """Safe set K_e <= Ebar: caps the kinetic energy at a fixed budget."""
    n = sys.n
    form = GeneralizedEnergyCBF(
        hbar=lambda q: 0.0, hbar_grad=lambda q: np.zeros(n), alpha_e=0.0, ebar=ebar
    )
    return form.bind(sys, alpha)


def position_limit_barrier(
    sys: MechanicalPHSystem,
    qbar: float,
    alpha_e: float,
    alpha: ExtendedClassK,
    joint: int = 0,
    ebar: float = 0.0,
) -> BarrierSpec:
    """Kinematic wall q_joint <= qbar, encoded through the energy family.

    Larger alpha_e makes the safe set a tighter approximation of the pure
    position constraint.
    """
    n = sys.n
    grad = np.zeros(n)
    grad[joint] = -1.0
    form = GeneralizedEnergyCBF(
        hbar=lambda q: qbar - float(q[joint]),
        hbar_grad=lambda q: grad,
        alpha_e=alpha_e,
        ebar=ebar,
    )
    return form.bind(sys, alpha)


def total_energy_limit_barrier(cl: ClosedLoopSystem, ebar: float, alpha: ExtendedClassK) -> BarrierSpec:
    """Safe set S_cl <= Ebar: caps the full shaped storage."""
    shaped = cl.shaped
    form = GeneralizedEnergyCBF(
        hbar=lambda q: -float(shaped.potential(q)),
        hbar_grad=lambda q: -shaped.potential_grad(q),
        alpha_e=1.0,
        ebar=ebar,
    )
    return form.bind(shaped, alpha)


def kinetic_floor_barrier(sys: MechanicalPHSystem, ebar: float, alpha: ExtendedClassK) -> BarrierSpec:
    """Keeps K_e >= Ebar by pumping energy in; deliberately outside the
    energy family, so filtering through it is not passivity-preserving.

    Exists to exercise the runtime monitor: a correct monitor must flag it.
    """

    def h(x: StateVector) -> float:
        return sys.kinetic_energy(x) - ebar

    def h_grad(x: StateVector) -> Gradient:
        return sys.kinetic_grad(x)

    return BarrierSpec(h=h, h_grad=h_grad, alpha=alpha, energy_form=None)
