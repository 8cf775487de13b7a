"""Batch front end: run scenarios, sweep parameters, run the validation suites.

Exit codes: 0 success, 1 configuration error, 2 divergence, 3 passivity
violation detected (the monitor flagged at least one step).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, DivergenceError
from .reporting import write_audit_json, write_trajectory_csv
from .scenario import SWEEP_PARAMS, ScenarioConfig, load_scenario, with_sweep_value
from .sim import energy_audit, run_scenario
from .validation import render_report, run_all

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGENCE = 2
EXIT_PASSIVITY = 3


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one run: scenario name, config hash, emitted files."""

    scenario: str
    config_hash: str
    outputs: tuple[str, ...]
    suite: str

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "outputs": list(self.outputs),
            "suite": self.suite,
        }


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    overrides = {}
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        overrides["t_final"] = args.t_final
    return replace(cfg, **overrides) if overrides else cfg


def _execute(cfg: ScenarioConfig, out_dir: Path, suite: str):
    """Run one scenario, write its trajectory and audit files.

    Returns (exit_code, records, audit); records/audit are None on divergence.
    """
    try:
        records = run_scenario(cfg)
    except DivergenceError as exc:
        print(f"error: scenario {cfg.name}: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE, None, None
    audit = energy_audit(records)
    csv_path = out_dir / f"{cfg.name}_trajectory.csv"
    audit_path = out_dir / f"{cfg.name}_audit.json"
    manifest = RunManifest(
        scenario=cfg.name,
        config_hash=cfg.config_hash(),
        outputs=(csv_path.name, audit_path.name),
        suite=suite,
    )
    write_trajectory_csv(records, csv_path)
    write_audit_json(audit, audit_path, manifest=manifest.to_dict())
    status = "ok"
    code = EXIT_OK
    if audit.passivity_failures:
        status = f"passivity violations: {audit.passivity_failures}"
        code = EXIT_PASSIVITY
    print(
        f"{cfg.name}: {audit.steps} steps, S_cl {audit.storage_initial:.6g} -> "
        f"{audit.storage_final:.6g} J, filter removed {audit.filter_energy_removed:.6g} J, "
        f"min h {audit.min_h:.6g}, {status}"
    )
    return code, records, audit


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_overrides(load_scenario(args.config), args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, _, _ = _execute(cfg, out_dir, suite="simulate")
    return code


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        base = _apply_overrides(load_scenario(args.config), args)
        values = [float(v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise ConfigError("sweep needs at least one value")
        members = [with_sweep_value(base, args.param, v) for v in values]
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    worst = EXIT_OK
    lines = [
        "param,value,scenario,config_hash,S_cl_initial,S_cl_final,max_K_e,max_q1,min_h,"
        "filter_energy_removed,passivity_failures,singular_steps"
    ]
    for value, cfg in zip(values, members):
        code, records, audit = _execute(cfg, out_dir, suite="sweep")
        worst = max(worst, code)
        if records is None:
            continue
        lines.append(
            ",".join(
                [
                    args.param,
                    repr(float(value)),
                    cfg.name,
                    cfg.config_hash(),
                    repr(audit.storage_initial),
                    repr(audit.storage_final),
                    repr(max(r.k_e for r in records)),
                    repr(max(float(r.q[0]) for r in records)),
                    repr(audit.min_h),
                    repr(audit.filter_energy_removed),
                    str(audit.passivity_failures),
                    str(audit.singular_steps),
                ]
            )
        )
    summary_path = out_dir / f"{base.name}_sweep_summary.csv"
    summary_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"sweep summary: {summary_path}")
    return worst


def _cmd_validate(args: argparse.Namespace) -> int:
    results = run_all(seed=args.seed)
    print(render_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phsafe",
        description="Passive control with barrier-based safety filtering: batch simulation and validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario and write trajectory + audit files")
    run_p.add_argument("--config", required=True, help="scenario YAML file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--dt", type=float, help="override integrator.dt")
    run_p.add_argument("--t-final", dest="t_final", type=float, help="override integrator.t_final")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a family of scenarios over one parameter")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    sweep_p.add_argument("--values", required=True, help="comma-separated numbers")
    sweep_p.add_argument("--dt", type=float)
    sweep_p.add_argument("--t-final", dest="t_final", type=float)
    sweep_p.set_defaults(func=_cmd_sweep)

    val_p = sub.add_parser("validate", help="run the sampled certification suites")
    val_p.add_argument("--seed", type=int, default=0)
    val_p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
