"""Closed-form safety filtering and the passivity-preservation monitor.

The filter solves, in closed form, the single-constraint least-deviation
problem: keep the barrier derivative above -alpha(h) while staying as close
as possible to the nominal feedback.  An independent KKT-based projection of
the same program is provided as a cross-validation oracle.  Every filtered
state is audited: the power injected by the safety component must not exceed
the dissipation of the passive loop, or passivity is lost and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import BarrierSpec, constraint_terms
from .errors import ConstraintSingularError
from .pbc import ClosedLoopSystem
from .phsys import StateVector

#: below this constraint-row norm the filter cannot act (no input moves h)
EPS_SINGULAR = 1e-9

_MONITOR_RTOL = 1e-12


@dataclass(frozen=True)
class FilterResult:
    """One filtering decision with its full energy audit."""

    u_des: np.ndarray
    u_safe: np.ndarray
    u_star: np.ndarray
    h: float
    psi: float
    active: bool
    p_safe: float
    d_p: float
    passivity_ok: bool
    margin: float


def _monitor(psi: float, p_safe: float, d_p: float) -> tuple[bool, float]:
    margin = d_p - p_safe
    if psi >= 0:
        return True, margin
    return margin >= -_MONITOR_RTOL * (1.0 + abs(d_p)), margin


def filter_closed_form(
    b: BarrierSpec,
    cl: ClosedLoopSystem,
    x: StateVector,
    u_des: np.ndarray,
    eps_singular: float = EPS_SINGULAR,
) -> FilterResult:
    """Apply the closed-form safety filter at one state.

    The correction -L_g h^T psi / (L_g h L_g h^T) is added only when psi < 0;
    it is the minimum-norm input restoring the barrier condition.  Raises
    ConstraintSingularError when the constraint is violated but no input can
    act on it (L_g h ~ 0).
    """
    u_des = np.atleast_1d(np.asarray(u_des, dtype=float))
    terms = constraint_terms(b, cl, x)
    d_p = cl.dissipation_rate(x)
    if terms.psi < 0:
        lgh = terms.lie_g
        norm2 = float(lgh @ lgh)
        if np.sqrt(norm2) <= eps_singular:
            raise ConstraintSingularError(
                f"constraint violated (psi={terms.psi:.3e}) with vanishing L_g h"
            )
        u_safe = -lgh * (terms.psi / norm2)
        active = True
        p_safe = float(cl.output(x) @ u_safe)
    else:
        u_safe = np.zeros_like(u_des)
        active = False
        p_safe = 0.0
    ok, margin = _monitor(terms.psi, p_safe, d_p)
    return FilterResult(
        u_des=u_des,
        u_safe=u_safe,
        u_star=u_des + u_safe,
        h=terms.h,
        psi=terms.psi,
        active=active,
        p_safe=p_safe,
        d_p=d_p,
        passivity_ok=ok,
        margin=margin,
    )


def project_halfspace(point: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """argmin ||u - point||^2 s.t. normal . u >= offset, via the KKT system.

    Deliberately avoids the ratio form of the closed-form filter: the active
    case is solved as a dense linear system in (u, lambda).
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    normal = np.atleast_1d(np.asarray(normal, dtype=float))
    if float(normal @ point) >= offset:
        return point.copy()
    m = point.size
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = 2.0 * np.eye(m)
    kkt[:m, m] = -normal
    kkt[m, :m] = normal
    rhs = np.concatenate([2.0 * point, [offset]])
    return np.linalg.solve(kkt, rhs)[:m]


def filter_qp_oracle(
    b: BarrierSpec,
    cl: ClosedLoopSystem,
    x: StateVector,
    u_des: np.ndarray,
    eps_singular: float = EPS_SINGULAR,
) -> np.ndarray:
    """Filtered input from the quadratic program, solved by half-space projection.

    Cross-validation path for `filter_closed_form`; returns the full input
    u* (nominal plus safety component).
    """
    u_des = np.atleast_1d(np.asarray(u_des, dtype=float))
    terms = constraint_terms(b, cl, x)
    normal = terms.lie_g
    if terms.psi < 0 and float(np.linalg.norm(normal)) <= eps_singular:
        raise ConstraintSingularError(
            f"constraint violated (psi={terms.psi:.3e}) with vanishing L_g h"
        )
    offset = float(normal @ u_des) - terms.psi
    return project_halfspace(u_des, normal, offset)


def injected_power(cl: ClosedLoopSystem, x: StateVector, u_safe: np.ndarray) -> float:
    """Power the safety component feeds into the shaped storage: L_g S_cl u_safe."""
    return float(cl.output(x) @ np.atleast_1d(np.asarray(u_safe, dtype=float)))


def injected_power_ratio(b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector) -> float:
    """Injected power via the mechanical ratio formula (active branch).

    Evaluates -(qdot^T B B^T dh/dp) / (dh/dp^T B B^T dh/dp) * psi, which must
    agree with `injected_power` of the closed-form correction whenever the
    filter is active.
    """
    terms = constraint_terms(b, cl, x)
    bmat = cl.input_matrix
    hp = terms.grad[1]
    qdot = cl.velocity(x)
    denom = float(hp @ bmat @ bmat.T @ hp)
    if abs(denom) < EPS_SINGULAR**2:
        raise ConstraintSingularError("ratio formula undefined: B^T dh/dp vanishes")
    return -float(qdot @ bmat @ bmat.T @ hp) / denom * terms.psi


def passivity_check(
    b: BarrierSpec, cl: ClosedLoopSystem, x: StateVector, result: FilterResult
) -> tuple[bool, float]:
    """Re-evaluate the preservation condition p_safe <= d_p at this state.

    Returns (flag, margin) with margin = d_p - p_safe; a violated flag means
    the filtered step injected more power than the loop dissipates, so the
    filtered system is not passive with respect to the shaped storage there.
    """
    d_p = cl.dissipation_rate(x)
    return _monitor(result.psi, result.p_safe, d_p)
