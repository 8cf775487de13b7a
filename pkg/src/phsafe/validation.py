"""Sampled certification suites behind the `validate` CLI verb.

Each suite draws randomized instances from a seeded generator, evaluates an
independent oracle (finite differences, direct summation, a KKT solve, or a
re-derived identity) against the library path, and reports the worst
discrepancy against its tolerance.  The suites accept the objects they check
so tests can feed them deliberately corrupted models.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import barriers, numdiff, pbc, safety
from .models import cartpole, point_mass
from .phsys import MechanicalPHSystem, StateVector, poisson_bracket
from .scenario import build_scenario, reference_campaigns
from .sim import energy_audit, simulate


@dataclass(frozen=True)
class SuiteResult:
    name: str
    checks: int
    worst: float
    tol: float
    passed: bool


# -- randomized instance generators (shared with the test suite) --


def random_state(rng: np.random.Generator, n: int, scale: float = 1.5) -> StateVector:
    return StateVector(rng.uniform(-scale, scale, n), rng.uniform(-scale, scale, n))


def random_mechanical_system(
    rng: np.random.Generator, n: int = 2, damping: float = 0.0, actuation: str = "full"
) -> MechanicalPHSystem:
    """Random smooth mechanical system with exact analytic gradients.

    The mass matrix is a fixed rotation of a positive diagonal whose entries
    oscillate with the matching coordinate, so positive definiteness holds
    globally and the gradient is known in closed form.
    """
    rot, _ = np.linalg.qr(rng.normal(size=(n, n)))
    base = rng.uniform(0.8, 2.0, n)
    amp = rng.uniform(0.0, 0.4, n) * base
    grav = rng.uniform(0.0, 2.0, n)
    chol = rng.normal(size=(n, n)) * 0.5
    stiff = chol @ chol.T + 0.2 * np.eye(n)

    def mass(q):
        return rot.T @ np.diag(base + amp * np.sin(q)) @ rot

    def mass_grad(q):
        out = np.empty((n, n, n))
        cosq = np.cos(q)
        for k in range(n):
            d = np.zeros(n)
            d[k] = amp[k] * cosq[k]
            out[k] = rot.T @ np.diag(d) @ rot
        return out

    def potential(q):
        return float(grav @ (1.0 - np.cos(q))) + 0.5 * float(q @ stiff @ q)

    def potential_grad(q):
        return grav * np.sin(q) + stiff @ q

    if damping > 0.0:
        seed_mat = rng.normal(size=(n, n))
        diss = damping * (seed_mat @ seed_mat.T / n + 0.1 * np.eye(n))
    else:
        diss = np.zeros((n, n))

    if actuation == "full":
        b = np.eye(n) + 0.3 * rng.normal(size=(n, n))
        while np.linalg.cond(b) > 50:
            b = np.eye(n) + 0.3 * rng.normal(size=(n, n))
    else:
        b = np.zeros((n, 1))
        b[0, 0] = 1.0

    return MechanicalPHSystem(
        n=n,
        mass_matrix=mass,
        mass_matrix_grad=mass_grad,
        potential=potential,
        potential_grad=potential_grad,
        dissipation=diss,
        input_matrix=b,
    )


def random_quadratic_vbar(rng: np.random.Generator, n: int) -> pbc.AddedEnergy:
    chol = rng.normal(size=(n, n)) * 0.6
    stiff = chol @ chol.T + 0.1 * np.eye(n)
    ref = rng.uniform(-1.0, 1.0, n)

    def vbar(q):
        d = q - ref
        return 0.5 * float(d @ stiff @ d)

    return pbc.AddedEnergy(vbar=vbar, vbar_grad=lambda q: stiff @ (q - ref), lower_bound=0.0)


def random_generic_barrier(
    rng: np.random.Generator, n: int, gamma: float | None = None
) -> barriers.BarrierSpec:
    """Quadratic-plus-linear barrier in (q, p) with exact gradients."""
    c0 = rng.uniform(-2.0, 2.0)
    a = rng.normal(size=n)
    bvec = rng.normal(size=n)
    sym_a = rng.normal(size=(n, n))
    sym_c = rng.normal(size=(n, n))
    quad_q = 0.25 * (sym_a + sym_a.T)
    quad_p = 0.25 * (sym_c + sym_c.T)
    cross = 0.3 * rng.normal(size=(n, n))
    alpha = barriers.ExtendedClassK(gamma=float(rng.uniform(0.5, 15.0)) if gamma is None else gamma)

    def h(x: StateVector) -> float:
        q, p = x.q, x.p
        return (
            c0
            + float(a @ q)
            + float(bvec @ p)
            + 0.5 * float(q @ quad_q @ q)
            + 0.5 * float(p @ quad_p @ p)
            + float(q @ cross @ p)
        )

    def h_grad(x: StateVector):
        return a + quad_q @ x.q + cross @ x.p, bvec + quad_p @ x.p + cross.T @ x.q

    return barriers.BarrierSpec(h=h, h_grad=h_grad, alpha=alpha)


def random_energy_barrier(
    rng: np.random.Generator, sys: MechanicalPHSystem, gamma: float | None = None
) -> barriers.BarrierSpec:
    """Random member of the generalized energy family, bound to `sys`."""
    n = sys.n
    lin = rng.normal(size=n)
    sym = rng.normal(size=(n, n))
    quad = 0.3 * (sym + sym.T)
    form = barriers.GeneralizedEnergyCBF(
        hbar=lambda q: float(lin @ q) + 0.5 * float(q @ quad @ q),
        hbar_grad=lambda q: lin + quad @ q,
        alpha_e=float(rng.uniform(-8.0, 12.0)),
        ebar=float(rng.uniform(0.0, 3.0)),
    )
    alpha = barriers.ExtendedClassK(gamma=float(rng.uniform(0.5, 15.0)) if gamma is None else gamma)
    return form.bind(sys, alpha)


def random_closed_loop(rng: np.random.Generator, damping: float = 0.0) -> pbc.ClosedLoopSystem:
    """Cart-pole-based closed loop with randomized spring and injection."""
    plant = cartpole()
    vbar = pbc.quadratic_added_energy(float(rng.uniform(0.5, 12.0)), float(rng.uniform(-1.0, 1.5)), 2)
    d_i = damping * rng.uniform(0.0, 1.0) * np.eye(1)
    controller = pbc.eb_pbc_mechanical(plant, vbar, d_i)
    return pbc.closed_loop(plant, controller)


# -- suites --


def default_gradient_subjects(rng: np.random.Generator) -> list[tuple[str, MechanicalPHSystem]]:
    return [
        ("cart-pole-hanging", cartpole()),
        ("cart-pole-upright", cartpole(pole="upright")),
        ("point-mass", point_mass(1.3, 2.1)),
        ("random-full", random_mechanical_system(rng, n=3)),
        ("random-damped", random_mechanical_system(rng, n=2, damping=0.5)),
    ]


def gradient_suite(
    rng: np.random.Generator,
    systems: list[tuple[str, MechanicalPHSystem]] | None = None,
    states_per_subject: int = 100,
    tol: float = 1e-6,
) -> SuiteResult:
    """Every analytic gradient against central finite differences."""
    systems = default_gradient_subjects(rng) if systems is None else systems
    worst = 0.0
    checks = 0
    for _, sys in systems:
        vbar = random_quadratic_vbar(rng, sys.n)
        controller = pbc.eb_pbc_mechanical(sys, vbar)
        loop = pbc.closed_loop(sys, controller)
        specs = [
            random_generic_barrier(rng, sys.n),
            random_energy_barrier(rng, sys),
            barriers.kinetic_limit_barrier(sys, 1.0, barriers.ExtendedClassK(10.0)),
        ]
        for _ in range(states_per_subject):
            x = random_state(rng, sys.n)
            flat = x.as_array()

            # potential and added-energy gradients
            worst = max(worst, numdiff.relative_error(sys.potential_grad(x.q), numdiff.central_gradient(sys.potential, x.q)))
            worst = max(worst, numdiff.relative_error(vbar.vbar_grad(x.q), numdiff.central_gradient(vbar.vbar, x.q)))
            # mass-matrix gradient (testing fallback oracle)
            worst = max(
                worst,
                numdiff.relative_error(
                    np.asarray(sys.mass_matrix_grad(x.q)).ravel(),
                    numdiff.central_matrix_gradient(sys.mass_matrix, x.q).ravel(),
                ),
            )
            # Hamiltonian and storage gradients over the full state
            gq, gp = sys.hamiltonian_grad(x)
            fd = numdiff.central_gradient(lambda z: sys.hamiltonian(StateVector.from_array(z)), flat)
            worst = max(worst, numdiff.relative_error(np.concatenate([gq, gp]), fd))
            sq, sp = loop.storage_grad(x)
            fd = numdiff.central_gradient(lambda z: loop.storage(StateVector.from_array(z)), flat)
            worst = max(worst, numdiff.relative_error(np.concatenate([sq, sp]), fd))
            # barrier gradients
            for spec in specs:
                hq, hp = spec.h_grad(x)
                fd = numdiff.central_gradient(lambda z: spec.h(StateVector.from_array(z)), flat)
                worst = max(worst, numdiff.relative_error(np.concatenate([hq, hp]), fd))
            checks += 5 + len(specs)
    return SuiteResult("gradient-consistency", checks, worst, tol, worst <= tol)


def bracket_suite(rng: np.random.Generator, samples: int = 1000, tol: float = 1e-12) -> SuiteResult:
    """Antisymmetry, bilinearity and canonical pairs of the Poisson bracket."""
    worst = 0.0
    checks = 0
    for _ in range(samples):
        n = int(rng.integers(1, 5))
        g1 = (rng.normal(size=n), rng.normal(size=n))
        g2 = (rng.normal(size=n), rng.normal(size=n))
        g3 = (rng.normal(size=n), rng.normal(size=n))
        c = float(rng.uniform(-2.0, 2.0))
        worst = max(worst, abs(poisson_bracket(g1, g2) + poisson_bracket(g2, g1)))
        combo = (c * g1[0] + g3[0], c * g1[1] + g3[1])
        worst = max(
            worst,
            abs(poisson_bracket(combo, g2) - c * poisson_bracket(g1, g2) - poisson_bracket(g3, g2)),
        )
        checks += 2
    n = 3
    eye = np.eye(n)
    zero = np.zeros(n)
    for i in range(n):
        for j in range(n):
            got = poisson_bracket((eye[i], zero), (zero, eye[j]))
            worst = max(worst, abs(got - (1.0 if i == j else 0.0)))
            checks += 1
    return SuiteResult("poisson-bracket-algebra", checks, worst, tol, worst <= tol)


def identity_suite(rng: np.random.Generator, samples: int = 200, tol: float = 1e-12) -> SuiteResult:
    """Structural identities: energy split, storage split, class-K linearity,
    energy-barrier momentum gradient, and lifted J/R/H structure."""
    worst = 0.0
    checks = 0
    subjects = [cartpole(), point_mass(0.7, 3.0), random_mechanical_system(rng, n=2, damping=0.3)]
    alpha = barriers.ExtendedClassK(gamma=7.5)
    for sys in subjects:
        vbar = random_quadratic_vbar(rng, sys.n)
        loop = pbc.closed_loop(sys, pbc.eb_pbc_mechanical(sys, vbar))
        spec = random_energy_barrier(rng, sys)
        general = sys.as_general()
        for _ in range(samples // len(subjects)):
            x = random_state(rng, sys.n)
            worst = max(worst, abs(sys.hamiltonian(x) - sys.kinetic_energy(x) - float(sys.potential(x.q))))
            worst = max(worst, abs(loop.storage(x) - sys.hamiltonian(x) - float(vbar.vbar(x.q))))
            hq, hp = spec.h_grad(x)
            worst = max(worst, float(np.max(np.abs(hp + sys.kinetic_grad(x)[1]))))
            c = float(rng.uniform(-3.0, 3.0))
            hval = float(rng.uniform(-5.0, 5.0))
            worst = max(worst, abs(alpha(c * hval) - c * alpha(hval)))
            worst = max(worst, abs(alpha(0.0)))
            flat = x.as_array()
            j = general.interconnection(flat)
            r = general.resistive(flat)
            worst = max(worst, float(np.max(np.abs(j + j.T))))
            worst = max(worst, max(0.0, -float(np.linalg.eigvalsh(r).min())))
            checks += 7
    return SuiteResult("structural-identities", checks, worst, tol, worst <= tol)


def matching_suite(rng: np.random.Generator, samples: int = 100, tol: float = 1e-10) -> SuiteResult:
    """Zero matching residual for position-only added energy (realisable cases)."""
    worst = 0.0
    checks = 0
    for _ in range(samples):
        sys = random_mechanical_system(rng, n=int(rng.integers(1, 4)), damping=0.4, actuation="full")
        vbar = random_quadratic_vbar(rng, sys.n)
        x = random_state(rng, sys.n).as_array()
        res = pbc.matching_residual(sys.as_general(), pbc.lift_to_state(vbar, sys.n), x)
        worst = max(worst, float(np.linalg.norm(res)))
        checks += 1
    plant = cartpole()
    vbar1 = pbc.quadratic_added_energy(6.0, 1.0, 2)
    for _ in range(samples):
        x = random_state(rng, 2).as_array()
        res = pbc.matching_residual(plant.as_general(), pbc.lift_to_state(vbar1, 2), x)
        worst = max(worst, float(np.linalg.norm(res)))
        checks += 1
    return SuiteResult("matching-conditions", checks, worst, tol, worst <= tol)


def dual_path_suite(rng: np.random.Generator, samples: int = 1000, tol: float = 1e-10) -> SuiteResult:
    """Constraint functional via Lie derivative vs bracket vs reduced bracket."""
    worst = 0.0
    checks = 0
    loops = [random_closed_loop(rng), random_closed_loop(rng, damping=0.8)]
    damped_plant = random_mechanical_system(rng, n=2, damping=0.6)
    loops.append(
        pbc.closed_loop(
            damped_plant,
            pbc.eb_pbc_mechanical(damped_plant, random_quadratic_vbar(rng, 2), 0.5 * np.eye(damped_plant.m_inputs)),
        )
    )
    for i in range(samples):
        loop = loops[i % len(loops)]
        if i % 2:
            spec = random_energy_barrier(rng, loop.plant)
        else:
            spec = random_generic_barrier(rng, loop.n)
        x = random_state(rng, loop.n)
        direct = barriers.psi(spec, loop, x)
        worst = max(worst, abs(direct - barriers.psi_via_bracket(spec, loop, x)))
        checks += 1
        if spec.energy_form is not None:
            worst = max(worst, abs(direct - barriers.psi_via_energy_bracket(spec, loop, x)))
            checks += 1
    return SuiteResult("constraint-dual-path", checks, worst, tol, worst <= tol)


def filter_oracle_suite(
    rng: np.random.Generator, instances: int = 10000, tol: float = 1e-8
) -> SuiteResult:
    """Closed-form filter against the KKT projection oracle.

    Instances with a nearly vanishing constraint row are resampled: there the
    program is ill-posed in double precision and the filter's own singularity
    guard takes over instead.
    """
    loops = [random_closed_loop(rng), random_closed_loop(rng, damping=0.5)]
    worst = 0.0
    checks = 0
    attempts = 0
    while checks < instances and attempts < instances * 20:
        attempts += 1
        loop = loops[attempts % len(loops)]
        if attempts % 2:
            spec = random_energy_barrier(rng, loop.plant)
        else:
            spec = random_generic_barrier(rng, loop.n)
        x = random_state(rng, loop.n)
        terms = barriers.constraint_terms(spec, loop, x)
        if float(np.linalg.norm(terms.lie_g)) < 1e-2:
            continue
        u_des = rng.normal(scale=3.0, size=loop.plant.m_inputs)
        closed = safety.filter_closed_form(spec, loop, x, u_des)
        oracle = safety.filter_qp_oracle(spec, loop, x, u_des)
        worst = max(worst, float(np.max(np.abs(closed.u_star - oracle))))
        checks += 1
    return SuiteResult("filter-vs-qp-oracle", checks, worst, tol, worst <= tol and checks == instances)


def campaign_suite(t_final: float = 6.0, tol: float = 1e-10) -> SuiteResult:
    """Study scenarios: injected power equals the constraint value at every
    active step, is never positive, and the passivity monitor never trips."""
    worst = 0.0
    checks = 0
    for cfg in reference_campaigns():
        records = simulate(build_scenario(replace(cfg, t_final=t_final)))
        audit = energy_audit(records)
        if audit.passivity_failures:
            worst = max(worst, float("inf"))
        for r in records:
            if np.isfinite(r.psi) and r.psi < 0 and not r.singular_step:
                worst = max(worst, abs(r.p_safe - r.psi))
                worst = max(worst, r.p_safe)  # must stay nonpositive
                checks += 1
    return SuiteResult("campaign-injected-power", checks, worst, tol, worst <= tol)


def run_all(seed: int = 0, oracle_instances: int = 10000, campaign_t_final: float = 6.0) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    return [
        gradient_suite(rng),
        bracket_suite(rng),
        identity_suite(rng),
        matching_suite(rng),
        dual_path_suite(rng),
        filter_oracle_suite(rng, instances=oracle_instances),
        campaign_suite(t_final=campaign_t_final),
    ]


def render_report(results: list[SuiteResult]) -> str:
    lines = [f"{'suite':30s} {'checks':>8s} {'worst':>12s} {'tol':>10s}  status"]
    for r in results:
        lines.append(
            f"{r.name:30s} {r.checks:8d} {r.worst:12.3e} {r.tol:10.0e}  {'pass' if r.passed else 'FAIL'}"
        )
    n_pass = sum(1 for r in results if r.passed)
    lines.append(f"overall: {'PASS' if n_pass == len(results) else 'FAIL'} ({n_pass}/{len(results)} suites)")
    return "\n".join(lines)
