"""Scenario configuration: schema, YAML loading, canonical hashing, assembly.

A scenario is one simulation: a model, an energy-balancing controller, an
optional barrier, a class-K gain and the integrator settings.  Configuration
files are strict: unknown keys and missing required fields are errors.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
import yaml

from . import barriers, models, pbc
from .errors import ConfigError
from .phsys import MechanicalPHSystem, StateVector

MODEL_IDS = ("cart-pole", "point-mass")
BARRIER_KINDS = ("none", "kinetic-limit", "kinematic", "total-energy", "kinetic-floor")

#: sweepable parameter name -> ScenarioConfig field
SWEEP_PARAMS = {
    "Ebar": "ebar",
    "qbar": "qbar",
    "k": "k",
    "gamma": "gamma",
    "alpha_E": "alpha_e",
}

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model_id: str = "cart-pole"
    # cart-pole parameters (unity by default)
    cart_mass: float = 1.0
    pole_mass: float = 1.0
    pole_length: float = 1.0
    gravity: float = 1.0
    pole: str = "hanging"
    # point-mass parameters
    mass: float = 1.0
    stiffness: float = 1.0
    # controller
    k: float = 0.0
    q_ref: float = 0.0
    d_i: float = 0.0
    # barrier
    barrier_kind: str = "none"
    ebar: float = 0.0
    alpha_e: float = 10.0
    qbar: float = 0.0
    # class-K gain and integrator
    gamma: float = 10.0
    dt: float = 1e-3
    t_final: float = 20.0
    x0: tuple[float, ...] = ()

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ConfigError(f"scenario name {self.name!r} must match {_NAME_RE.pattern}")
        if self.model_id not in MODEL_IDS:
            raise ConfigError(f"unknown model id {self.model_id!r}; expected one of {MODEL_IDS}")
        if self.barrier_kind not in BARRIER_KINDS:
            raise ConfigError(f"unknown barrier kind {self.barrier_kind!r}; expected one of {BARRIER_KINDS}")
        if self.pole not in ("hanging", "upright"):
            raise ConfigError(f"model.pole must be 'hanging' or 'upright', got {self.pole!r}")
        if not self.dt > 0:
            raise ConfigError("integrator.dt must be strictly positive")
        if self.t_final < self.dt:
            raise ConfigError("integrator.t_final must be at least one step long")
        if not self.gamma > 0:
            raise ConfigError("class_k.gamma must be strictly positive")
        if self.k < 0:
            raise ConfigError("controller.k must be nonnegative")
        if self.d_i < 0:
            raise ConfigError("controller.d_i must be nonnegative")
        if self.barrier_kind in ("kinetic-limit", "total-energy", "kinetic-floor") and self.ebar <= 0:
            raise ConfigError(f"barrier kind {self.barrier_kind!r} requires a positive ebar")
        if self.ebar < 0:
            raise ConfigError("barrier.ebar must be nonnegative")
        n = self.dof
        x0 = tuple(float(v) for v in self.x0) if self.x0 else (0.0,) * (2 * n)
        if len(x0) != 2 * n:
            raise ConfigError(f"initial_state must have {2 * n} entries for model {self.model_id!r}")
        object.__setattr__(self, "x0", x0)

    @property
    def dof(self) -> int:
        return 2 if self.model_id == "cart-pole" else 1

    @property
    def steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    def to_dict(self) -> dict[str, Any]:
        """Canonical nested form; only the active model's parameters appear."""
        if self.model_id == "cart-pole":
            model: dict[str, Any] = {
                "id": self.model_id,
                "cart_mass": self.cart_mass,
                "pole_mass": self.pole_mass,
                "pole_length": self.pole_length,
                "gravity": self.gravity,
                "pole": self.pole,
            }
        else:
            model = {"id": self.model_id, "mass": self.mass, "stiffness": self.stiffness}
        barrier: dict[str, Any] = {"kind": self.barrier_kind}
        if self.barrier_kind in ("kinetic-limit", "total-energy", "kinetic-floor"):
            barrier["ebar"] = self.ebar
        elif self.barrier_kind == "kinematic":
            barrier.update(qbar=self.qbar, alpha_e=self.alpha_e, ebar=self.ebar)
        return {
            "name": self.name,
            "model": model,
            "controller": {"k": self.k, "q_ref": self.q_ref, "d_i": self.d_i},
            "barrier": barrier,
            "class_k": {"gamma": self.gamma},
            "integrator": {"dt": self.dt, "t_final": self.t_final},
            "initial_state": list(self.x0),
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _require_mapping(data: Any, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(data).__name__}")
    return data


def _take_number(section: dict, key: str, where: str, default: float | None = None) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required field {where}.{key}")
        return default
    value = section.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _reject_unknown(section: dict, where: str) -> None:
    if section:
        unknown = ", ".join(sorted(map(str, section)))
        raise ConfigError(f"unknown field(s) in {where}: {unknown}")


def scenario_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Validate a parsed configuration mapping and produce a ScenarioConfig."""
    data = dict(_require_mapping(data, "config"))
    name = data.pop("name", None)
    if not isinstance(name, str):
        raise ConfigError("missing or non-string required field: name")

    fields: dict[str, Any] = {"name": name}

    model = dict(_require_mapping(data.pop("model", None), "model"))
    model_id = model.pop("id", None)
    if model_id not in MODEL_IDS:
        raise ConfigError(f"model.id must be one of {MODEL_IDS}, got {model_id!r}")
    fields["model_id"] = model_id
    if model_id == "cart-pole":
        for key in ("cart_mass", "pole_mass", "pole_length", "gravity"):
            fields[key] = _take_number(model, key, "model", default=1.0)
        pole = model.pop("pole", "hanging")
        if not isinstance(pole, str):
            raise ConfigError(f"model.pole must be a string, got {pole!r}")
        fields["pole"] = pole
    else:
        fields["mass"] = _take_number(model, "mass", "model", default=1.0)
        fields["stiffness"] = _take_number(model, "stiffness", "model", default=1.0)
    _reject_unknown(model, "model")

    controller = dict(_require_mapping(data.pop("controller", {}), "controller"))
    fields["k"] = _take_number(controller, "k", "controller", default=0.0)
    fields["q_ref"] = _take_number(controller, "q_ref", "controller", default=0.0)
    fields["d_i"] = _take_number(controller, "d_i", "controller", default=0.0)
    _reject_unknown(controller, "controller")

    barrier = dict(_require_mapping(data.pop("barrier", {"kind": "none"}), "barrier"))
    kind = barrier.pop("kind", None)
    if kind not in BARRIER_KINDS:
        raise ConfigError(f"barrier.kind must be one of {BARRIER_KINDS}, got {kind!r}")
    fields["barrier_kind"] = kind
    if kind in ("kinetic-limit", "total-energy", "kinetic-floor"):
        fields["ebar"] = _take_number(barrier, "ebar", "barrier")
    elif kind == "kinematic":
        fields["qbar"] = _take_number(barrier, "qbar", "barrier")
        fields["alpha_e"] = _take_number(barrier, "alpha_e", "barrier", default=10.0)
        fields["ebar"] = _take_number(barrier, "ebar", "barrier", default=0.0)
    _reject_unknown(barrier, "barrier")

    class_k = dict(_require_mapping(data.pop("class_k", {}), "class_k"))
    fields["gamma"] = _take_number(class_k, "gamma", "class_k", default=10.0)
    _reject_unknown(class_k, "class_k")

    integrator = dict(_require_mapping(data.pop("integrator", {}), "integrator"))
    fields["dt"] = _take_number(integrator, "dt", "integrator", default=1e-3)
    fields["t_final"] = _take_number(integrator, "t_final", "integrator", default=20.0)
    _reject_unknown(integrator, "integrator")

    x0 = data.pop("initial_state", None)
    if x0 is not None:
        if not isinstance(x0, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x0
        ):
            raise ConfigError("initial_state must be a list of numbers")
        fields["x0"] = tuple(float(v) for v in x0)

    _reject_unknown(data, "config")
    return ScenarioConfig(**fields)


def load_scenario(path: str) -> ScenarioConfig:
    """Parse a YAML scenario file; all schema problems raise ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return scenario_from_dict(data if data is not None else {})


def with_sweep_value(cfg: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    """One sweep member: override a named parameter and tag the name."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {sorted(SWEEP_PARAMS)}")
    tag = f"{value:g}".replace("-", "m").replace(".", "p")
    name = f"{cfg.name}_{param}_{tag}"
    return replace(cfg, name=name, **{SWEEP_PARAMS[param]: float(value)})


@dataclass(frozen=True)
class ScenarioSetup:
    """Instantiated objects of one scenario."""

    config: ScenarioConfig
    plant: MechanicalPHSystem
    controller: pbc.PassiveController
    loop: pbc.ClosedLoopSystem
    barrier: barriers.BarrierSpec | None
    x0: StateVector


def build_scenario(cfg: ScenarioConfig) -> ScenarioSetup:
    """Instantiate model, controller, closed loop and barrier from a config."""
    try:
        if cfg.model_id == "cart-pole":
            params = models.CartPoleParams(
                cart_mass=cfg.cart_mass,
                pole_mass=cfg.pole_mass,
                pole_length=cfg.pole_length,
                gravity=cfg.gravity,
            )
            plant = models.cartpole(params, pole=cfg.pole)
        else:
            plant = models.point_mass(cfg.mass, cfg.stiffness)
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc

    vbar = pbc.quadratic_added_energy(cfg.k, cfg.q_ref, plant.n)
    controller = pbc.eb_pbc_mechanical(plant, vbar, cfg.d_i * np.eye(plant.m_inputs))
    loop = pbc.closed_loop(plant, controller)

    alpha = barriers.ExtendedClassK(gamma=cfg.gamma)
    barrier: barriers.BarrierSpec | None
    if cfg.barrier_kind == "none":
        barrier = None
    elif cfg.barrier_kind == "kinetic-limit":
        barrier = barriers.kinetic_limit_barrier(plant, cfg.ebar, alpha)
    elif cfg.barrier_kind == "kinematic":
        barrier = barriers.position_limit_barrier(plant, cfg.qbar, cfg.alpha_e, alpha, ebar=cfg.ebar)
    elif cfg.barrier_kind == "total-energy":
        barrier = barriers.total_energy_limit_barrier(loop, cfg.ebar, alpha)
    else:
        barrier = barriers.kinetic_floor_barrier(plant, cfg.ebar, alpha)

    x0 = StateVector(np.array(cfg.x0[: plant.n]), np.array(cfg.x0[plant.n :]))
    return ScenarioSetup(config=cfg, plant=plant, controller=controller, loop=loop, barrier=barrier, x0=x0)


# -- reference campaign configurations --


def kinetic_limit_scenario(ebar: float = 1.0, **overrides: Any) -> ScenarioConfig:
    """Cart-pole with the k = 6 N/m setpoint spring and a kinetic-energy cap."""
    base = dict(
        name=f"kinetic_limit_E{ebar:g}".replace(".", "p"),
        model_id="cart-pole",
        k=6.0,
        q_ref=1.0,
        barrier_kind="kinetic-limit",
        ebar=ebar,
        gamma=10.0,
        dt=1e-3,
        t_final=20.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def kinematic_scenario(qbar: float = 0.6, **overrides: Any) -> ScenarioConfig:
    """Cart-pole with the k = 12 N/m spring and a position wall at qbar."""
    base = dict(
        name=f"kinematic_q{qbar:g}".replace(".", "p"),
        model_id="cart-pole",
        k=12.0,
        q_ref=1.0,
        barrier_kind="kinematic",
        qbar=qbar,
        alpha_e=10.0,
        gamma=10.0,
        dt=1e-3,
        t_final=20.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def unfiltered_scenario(**overrides: Any) -> ScenarioConfig:
    """Lossless baseline: spring controller, no barrier."""
    base = dict(
        name="unfiltered",
        model_id="cart-pole",
        k=6.0,
        q_ref=1.0,
        barrier_kind="none",
        dt=1e-3,
        t_final=10.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def kinetic_floor_scenario(ebar: float = 1.0, **overrides: Any) -> ScenarioConfig:
    """Adversarial barrier that pumps energy in; the monitor must flag it."""
    base = dict(
        name=f"kinetic_floor_E{ebar:g}".replace(".", "p"),
        model_id="cart-pole",
        k=6.0,
        q_ref=1.0,
        barrier_kind="kinetic-floor",
        ebar=ebar,
        gamma=10.0,
        dt=1e-3,
        t_final=10.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def reference_campaigns() -> list[ScenarioConfig]:
    """The six study scenarios: three kinetic-energy caps, three position walls."""
    return [kinetic_limit_scenario(e) for e in (0.5, 1.0, 2.0)] + [
        kinematic_scenario(q) for q in (0.4, 0.6, 0.8)
    ]
