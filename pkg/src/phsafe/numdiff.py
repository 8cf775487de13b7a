"""Central finite-difference helpers.

Used by the validation suites and the test oracles; the library itself never
differentiates numerically on the hot path (all model gradients are analytic).
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def central_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (f(hi) - f(lo)) / (2.0 * step)
    return grad


def central_matrix_gradient(
    m: Callable[[np.ndarray], np.ndarray], q: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Per-coordinate central differences of a matrix-valued map.

    Returns an array of shape (len(q), *m(q).shape) with entry [i] = dM/dq_i.
    Serves as the testing fallback for analytically supplied mass-matrix
    gradients.
    """
    q = np.asarray(q, dtype=float)
    base = np.asarray(m(q), dtype=float)
    out = np.empty((q.size,) + base.shape)
    for i in range(q.size):
        hi = q.copy()
        lo = q.copy()
        hi[i] += step
        lo[i] -= step
        out[i] = (np.asarray(m(hi)) - np.asarray(m(lo))) / (2.0 * step)
    return out


def directional_derivative(
    f: Callable[[np.ndarray], float], x: np.ndarray, direction: np.ndarray, step: float = 1e-6
) -> float:
    """Central-difference derivative of f along a (non-normalised) direction."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    return (f(x + step * d) - f(x - step * d)) / (2.0 * step)


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Max elementwise error of `approx` against `exact`, relative where exact is large."""
    approx = np.atleast_1d(np.asarray(approx, dtype=float))
    exact = np.atleast_1d(np.asarray(exact, dtype=float))
    scale = np.maximum(1.0, np.abs(exact))
    return float(np.max(np.abs(approx - exact) / scale))
