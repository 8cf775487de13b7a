"""Trajectory CSV and audit JSON emission.

The CSV schema is fixed:

    t,q1,q2,p1,p2,u_des,u_safe,u_star,h,psi,S_cl,K_e,H,p_safe,d_p,passivity_ok,singular_step

Numbers are written with shortest round-trip formatting (no locale), flags as
0/1, and runs without a barrier report `h`/`psi` as nan.  One-DOF models fill
the unused q2/p2 columns with 0.0.  Identical trajectories therefore always
serialise to byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .sim import AuditSummary, StepRecord

CSV_COLUMNS = (
    "t,q1,q2,p1,p2,u_des,u_safe,u_star,h,psi,S_cl,K_e,H,p_safe,d_p,passivity_ok,singular_step"
)


def _fmt(value: float) -> str:
    return repr(float(value))


def _coord(vec, i: int) -> str:
    return _fmt(vec[i]) if i < vec.size else _fmt(0.0)


def render_trajectory_csv(records: list[StepRecord]) -> str:
    """Serialise a trajectory to the documented CSV schema."""
    lines = [CSV_COLUMNS]
    for r in records:
        if r.u_des.size != 1:
            raise ValueError("the CSV schema carries one input channel; model has more")
        lines.append(
            ",".join(
                [
                    _fmt(r.t),
                    _coord(r.q, 0),
                    _coord(r.q, 1),
                    _coord(r.p, 0),
                    _coord(r.p, 1),
                    _fmt(r.u_des[0]),
                    _fmt(r.u_safe[0]),
                    _fmt(r.u_star[0]),
                    _fmt(r.h),
                    _fmt(r.psi),
                    _fmt(r.s_cl),
                    _fmt(r.k_e),
                    _fmt(r.ham),
                    _fmt(r.p_safe),
                    _fmt(r.d_p),
                    "1" if r.passivity_ok else "0",
                    "1" if r.singular_step else "0",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_trajectory_csv(records: list[StepRecord], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(render_trajectory_csv(records), encoding="utf-8", newline="\n")
    return path


def write_audit_json(
    audit: AuditSummary, path: str | Path, manifest: dict | None = None
) -> Path:
    path = Path(path)
    payload: dict = {}
    if manifest is not None:
        payload["manifest"] = manifest
    payload["audit"] = audit.to_dict()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
