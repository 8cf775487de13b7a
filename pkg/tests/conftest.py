"""Shared fixtures: the expensive study-campaign trajectories are simulated
once per session and reused by the behavioural and acceptance tests."""

from __future__ import annotations

import numpy as np
import pytest

from phsafe.scenario import (
    build_scenario,
    kinematic_scenario,
    kinetic_limit_scenario,
)
from phsafe.sim import simulate

KINETIC_LIMITS = (0.5, 1.0, 2.0)
POSITION_WALLS = (0.4, 0.6, 0.8)


def _run(cfg):
    return simulate(build_scenario(cfg))


@pytest.fixture(scope="session")
def campaign_runs():
    """All six study scenarios at the default dt = 1e-3."""
    runs = {}
    for ebar in KINETIC_LIMITS:
        runs[("kinetic-limit", ebar)] = _run(kinetic_limit_scenario(ebar))
    for qbar in POSITION_WALLS:
        runs[("kinematic", qbar)] = _run(kinematic_scenario(qbar))
    return runs


@pytest.fixture(scope="session")
def campaign_runs_half_dt():
    """The same six scenarios at dt = 5e-4 (invariance scaling check)."""
    runs = {}
    for ebar in KINETIC_LIMITS:
        runs[("kinetic-limit", ebar)] = _run(kinetic_limit_scenario(ebar, dt=5e-4))
    for qbar in POSITION_WALLS:
        runs[("kinematic", qbar)] = _run(kinematic_scenario(qbar, dt=5e-4))
    return runs


def active_steps(records):
    """Steps where the filter actually corrected the input."""
    return [r for r in records if np.isfinite(r.psi) and r.psi < 0 and not r.singular_step]
