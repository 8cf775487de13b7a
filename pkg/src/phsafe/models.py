"""Concrete mechanical models: the cart-pole test plant and a 1-DOF point mass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phsys import MechanicalPHSystem


@dataclass(frozen=True)
class CartPoleParams:
    cart_mass: float = 1.0
    pole_mass: float = 1.0
    pole_length: float = 1.0
    gravity: float = 1.0

    def __post_init__(self):
        for name in ("cart_mass", "pole_mass", "pole_length", "gravity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def cartpole(params: CartPoleParams = CartPoleParams(), pole: str = "hanging") -> MechanicalPHSystem:
    """Cart-pole in canonical coordinates q = (cart position, pole angle).

    The potential is normalised to vanish at q = 0.  With `pole="hanging"`
    the zero angle is the stable, downward configuration (V >= 0); with
    `pole="upright"` the zero angle is the inverted configuration and the
    potential decreases away from it.  The single force input acts on the
    cart, so the system is underactuated.
    """
    if pole not in ("hanging", "upright"):
        raise ValueError(f"pole must be 'hanging' or 'upright', got {pole!r}")
    m_c, m_p, ell, grav = params.cart_mass, params.pole_mass, params.pole_length, params.gravity
    sign = 1.0 if pole == "hanging" else -1.0
    ml = m_p * ell
    mgl = m_p * grav * ell

    def mass(q: np.ndarray) -> np.ndarray:
        c = ml * np.cos(q[1])
        return np.array([[m_c + m_p, c], [c, ml * ell]])

    def mass_grad(q: np.ndarray) -> np.ndarray:
        s = -ml * np.sin(q[1])
        out = np.zeros((2, 2, 2))
        out[1, 0, 1] = s
        out[1, 1, 0] = s
        return out

    def potential(q: np.ndarray) -> float:
        return sign * mgl * (1.0 - np.cos(q[1]))

    def potential_grad(q: np.ndarray) -> np.ndarray:
        return np.array([0.0, sign * mgl * np.sin(q[1])])

    return MechanicalPHSystem(
        n=2,
        mass_matrix=mass,
        mass_matrix_grad=mass_grad,
        potential=potential,
        potential_grad=potential_grad,
        dissipation=np.zeros((2, 2)),
        input_matrix=np.array([[1.0], [0.0]]),
    )


def point_mass(mass: float, stiffness: float) -> MechanicalPHSystem:
    """1-DOF mass on a linear spring; trajectories are ellipses in (q, p)."""
    if mass <= 0 or stiffness <= 0:
        raise ValueError("mass and stiffness must be strictly positive")
    m_arr = np.array([[mass]])
    zero_grad = np.zeros((1, 1, 1))
    return MechanicalPHSystem(
        n=1,
        mass_matrix=lambda q: m_arr,
        mass_matrix_grad=lambda q: zero_grad,
        potential=lambda q: 0.5 * stiffness * float(q[0]) ** 2,
        potential_grad=lambda q: stiffness * q,
        dissipation=np.zeros((1, 1)),
        input_matrix=np.array([[1.0]]),
    )
