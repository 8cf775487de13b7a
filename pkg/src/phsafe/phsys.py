"""Port-Hamiltonian system structures in canonical coordinates.

Mechanical systems are described by a configuration-dependent mass matrix,
a potential, a constant dissipation matrix and an input matrix; the state is
the canonical pair (q, p).  A generic input-state-output form with maps
J(x), R(x), H(x), g(x) is provided for structure checks and for the general
energy-balancing controller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SingularModelError

# (d/dq, d/dp) pair of a scalar function of the canonical state
Gradient = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class StateVector:
    """Canonical state (q, p) of a mechanical system."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError(f"q and p must be 1-d arrays of equal length, got {q.shape} and {p.shape}")
        if not (np.isfinite(q).all() and np.isfinite(p).all()):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.size % 2:
            raise ValueError("flat state must have even length")
        n = x.size // 2
        return cls(x[:n], x[n:])


@dataclass(frozen=True)
class MechanicalPHSystem:
    """Mechanical system in canonical port-Hamiltonian form.

    `mass_matrix_grad(q)` returns an (n, n, n) array whose [i] slice is the
    partial derivative of M with respect to q_i; it is supplied analytically
    by each model (finite-difference fallbacks live in `numdiff` and are for
    testing only).
    """

    n: int
    mass_matrix: Callable[[np.ndarray], np.ndarray]
    mass_matrix_grad: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], float]
    potential_grad: Callable[[np.ndarray], np.ndarray]
    dissipation: np.ndarray
    input_matrix: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.dissipation, dtype=float))
        b = np.asarray(self.input_matrix, dtype=float)
        if b.ndim == 1:
            b = b.reshape(self.n, -1)
        if d.shape != (self.n, self.n):
            raise ValueError(f"dissipation must be {self.n}x{self.n}, got {d.shape}")
        if b.shape[0] != self.n:
            raise ValueError(f"input matrix must have {self.n} rows, got {b.shape}")
        object.__setattr__(self, "dissipation", d)
        object.__setattr__(self, "input_matrix", b)
        object.__setattr__(self, "_vel_cache", (None, None))

    @property
    def m_inputs(self) -> int:
        return self.input_matrix.shape[1]

    # -- array-level building blocks (hot path) --

    def velocity(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        """qdot = M(q)^-1 p.  Returned arrays are shared via a memo; do not mutate."""
        cache = self._vel_cache
        key = (q.tobytes(), p.tobytes())
        if cache[0] == key:
            return cache[1]
        m = self.mass_matrix(q)
        # hand-rolled solves for the small sizes the simulator loops over;
        # LAPACK dispatch costs more than the arithmetic there
        if self.n == 1:
            det = m[0, 0]
            if det == 0.0:
                raise SingularModelError(f"mass matrix singular at q={q!r}")
            w = p / det
        elif self.n == 2:
            a, b = m[0, 0], m[0, 1]
            c, d = m[1, 0], m[1, 1]
            det = a * d - b * c
            if det == 0.0:
                raise SingularModelError(f"mass matrix singular at q={q!r}")
            w = np.array([(d * p[0] - b * p[1]) / det, (a * p[1] - c * p[0]) / det])
        else:
            try:
                w = np.linalg.solve(m, p)
            except np.linalg.LinAlgError as exc:
                raise SingularModelError(f"mass matrix singular at q={q!r}") from exc
        object.__setattr__(self, "_vel_cache", (key, w))
        return w

    def gradient_arrays(self, q: np.ndarray, p: np.ndarray) -> Gradient:
        """(dH/dq, dH/dp) from arrays; dH/dp is the velocity."""
        w = self.velocity(q, p)
        dmass = self.mass_matrix_grad(q)
        # d(M^-1)/dq_i = -M^-1 (dM/dq_i) M^-1, so the kinetic part of dH/dq_i
        # is -0.5 w^T (dM/dq_i) w with w = M^-1 p.
        gq = -0.5 * ((dmass @ w) @ w) + self.potential_grad(q)
        return gq, w

    # -- canonical operations --

    def kinetic_energy(self, x: StateVector) -> float:
        self._check_dims(x)
        return 0.5 * float(x.p @ self.velocity(x.q, x.p))

    def hamiltonian(self, x: StateVector) -> float:
        """Total energy 0.5 p^T M(q)^-1 p + V(q)."""
        self._check_dims(x)
        return 0.5 * float(x.p @ self.velocity(x.q, x.p)) + float(self.potential(x.q))

    def hamiltonian_grad(self, x: StateVector) -> Gradient:
        self._check_dims(x)
        return self.gradient_arrays(x.q, x.p)

    def kinetic_grad(self, x: StateVector) -> Gradient:
        """Gradients of the kinetic energy alone (potential excluded)."""
        self._check_dims(x)
        w = self.velocity(x.q, x.p)
        dmass = self.mass_matrix_grad(x.q)
        gq = -0.5 * ((dmass @ w) @ w)
        return gq, w

    def drift(self, grad: Gradient) -> np.ndarray:
        """Unforced flow for a storage gradient pair.

        qdot = dS/dp, pdot = -dS/dq - D dS/dp; the dissipative sign is chosen
        so the storage decays (dS/dt <= 0) without input.
        """
        gq, gp = grad
        if gq.shape != (self.n,) or gp.shape != (self.n,):
            raise ValueError("gradient pair has wrong dimensions")
        return np.concatenate([gp, -gq - self.dissipation @ gp])

    def as_general(self) -> "GeneralPHSystem":
        """Lift to the generic J/R/H/g form (J symplectic, R carries D)."""
        n = self.n
        j = np.zeros((2 * n, 2 * n))
        j[:n, n:] = np.eye(n)
        j[n:, :n] = -np.eye(n)
        r = np.zeros((2 * n, 2 * n))
        r[n:, n:] = self.dissipation
        g = np.vstack([np.zeros_like(self.input_matrix), self.input_matrix])

        def ham(x: np.ndarray) -> float:
            return self.hamiltonian(StateVector.from_array(x))

        def ham_grad(x: np.ndarray) -> np.ndarray:
            gq, gp = self.gradient_arrays(x[:n], x[n:])
            return np.concatenate([gq, gp])

        return GeneralPHSystem(
            dim=2 * n,
            interconnection=lambda x: j,
            resistive=lambda x: r,
            hamiltonian=ham,
            hamiltonian_grad=ham_grad,
            input_map=lambda x: g,
        )

    def _check_dims(self, x: StateVector) -> None:
        if x.n != self.n:
            raise ValueError(f"state has {x.n} coordinates, system has {self.n}")


@dataclass(frozen=True)
class GeneralPHSystem:
    """Input-state-output port-Hamiltonian system xdot = (J - R) dH/dx + g u."""

    dim: int
    interconnection: Callable[[np.ndarray], np.ndarray]
    resistive: Callable[[np.ndarray], np.ndarray]
    hamiltonian: Callable[[np.ndarray], float]
    hamiltonian_grad: Callable[[np.ndarray], np.ndarray]
    input_map: Callable[[np.ndarray], np.ndarray]

    def output(self, x: np.ndarray) -> np.ndarray:
        """y = g(x)^T dH/dx."""
        return self.input_map(x).T @ self.hamiltonian_grad(x)


def poisson_bracket(phi_grad: Gradient, xi_grad: Gradient) -> float:
    """Canonical bracket {phi, xi} = dphi/dq . dxi/dp - dphi/dp . dxi/dq."""
    phi_q, phi_p = phi_grad
    xi_q, xi_p = xi_grad
    if phi_q.shape != xi_q.shape or phi_p.shape != xi_p.shape:
        raise ValueError("bracket arguments must share dimensions")
    return float(phi_q @ xi_p - phi_p @ xi_q)
