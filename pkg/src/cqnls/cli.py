"""Command-line front end: ``cqnls {ground-state,mc-curve,classify,evolve,verify}``.

Reports go to stdout as JSON.  Floats are written with ``repr``, the shortest
decimal string that round-trips the double exactly (at most 17 significant
digits).  Non-finite values become the strings ``"inf"``, ``"-inf"`` and
``"nan"``.  Failures print ``{"error": ..., "message": ...}`` and exit 1; bad
flags exit 2.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

DEFAULTS = {
    "grid": {"n_points": None, "box_length": None},
    "tolerances": {"shoot": 1e-12, "minimize": 1e-9},
    "paths": {"out": None, "data_dir": None},
    "seed": None,
}


@dataclass
class RunConfig:
    n_points: Optional[int] = None
    box_length: Optional[float] = None
    tolerances: dict = field(default_factory=dict)
    out: Optional[str] = None
    data_dir: Optional[str] = None
    seed: Optional[int] = None

    def spec(self):
        from .grid import make_grid

        if self.n_points is None and self.box_length is None:
            return None
        if self.n_points is None or self.box_length is None:
            raise ValueError("--grid-n and --grid-l must be given together")
        return make_grid(self.n_points, self.box_length)

    def curve_path(self) -> Path:
        base = self.data_dir or os.environ.get("CQNLS_DATA_DIR") or "."
        return Path(base) / "mc_curve.json"


def load_config(args) -> RunConfig:
    """Flags override the config file, which overrides the defaults."""
    doc = json.loads(json.dumps(DEFAULTS))
    if args.config:
        user = json.loads(Path(args.config).read_text())
        for key, val in user.items():
            if isinstance(val, dict) and isinstance(doc.get(key), dict):
                doc[key].update(val)
            else:
                doc[key] = val
    cfg = RunConfig(
        n_points=doc["grid"]["n_points"],
        box_length=doc["grid"]["box_length"],
        tolerances=dict(doc["tolerances"]),
        out=doc["paths"]["out"],
        data_dir=doc["paths"]["data_dir"],
        seed=doc["seed"],
    )
    if args.grid_n is not None:
        cfg.n_points = args.grid_n
    if args.grid_l is not None:
        cfg.box_length = args.grid_l
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    bad = {k: v for k, v in cfg.tolerances.items() if not (isinstance(v, (int, float)) and v >= 0)}
    if bad:
        raise ValueError(f"tolerances must be nonnegative numbers: {bad}")
    if cfg.out is not None:
        parent = Path(cfg.out).resolve().parent
        if not os.access(parent, os.W_OK):
            raise PermissionError(f"output directory {parent} is not writable")
    return cfg


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        x = float(v)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return v


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=1, sort_keys=True, allow_nan=False)


def emit(doc: dict, path: Optional[str] = None) -> None:
    doc = dict(doc, timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat())
    text = dumps(doc)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


# ------------------------------------------------------------------ commands


def cmd_ground_state(args, cfg: RunConfig) -> int:
    from .functionals import gn_quotient_quartic
    from .groundstate import critical_mass, gn_constants, minimize_mc, shoot_Q

    spec = cfg.spec()
    if args.which == "q":
        tol = args.tol if args.tol is not None else cfg.tolerances["shoot"]
        gs = shoot_Q(tol, spec)
        if cfg.out:
            gs.save(cfg.out)
        mq2 = gs.extras["radial_mass_sq"]
        report = {
            "profile": "Q",
            "tolerance": tol,
            "Q0": gs.central_value,
            "M_Q": math.sqrt(mq2),
            "M_Q_sq": mq2,
            "C_GN": 0.5 * mq2,
            "gn_quotient_on_grid": gn_quotient_quartic(gs.profile),
            "equation_residual": gs.equation_residual,
            "grid": gs.profile.spec.to_dict(),
            "field_file": cfg.out,
            "constants": gn_constants(),
        }
        emit(report)
        return 0

    tol = args.tol if args.tol is not None else cfg.tolerances["minimize"]
    gs = minimize_mc(args.c, tolerance=tol, spec=spec)
    if cfg.out:
        gs.save(cfg.out)
    point = {
        "c": args.c,
        "c_over_MQ": args.c / critical_mass(),
        "m_c": gs.energy,
        "omega": gs.omega,
        "grad_norm_sq": gs.extras.get("grad_norm_sq"),
        "virial_residual": gs.virial_residual,
        "equation_residual": gs.equation_residual,
        "central_value": gs.central_value,
        "grid": gs.profile.spec.to_dict(),
        "field_file": cfg.out,
    }
    if args.mc_out:
        Path(args.mc_out).write_text(dumps(point) + "\n")
    emit(point)
    return 0


def cmd_mc_curve(args, cfg: RunConfig) -> int:
    from .groundstate import critical_mass, tabulate_mc

    mq = critical_mass()
    cs = np.array([args.lo]) if args.points == 1 else np.linspace(args.lo, args.hi, args.points)
    tol = args.tol if args.tol is not None else cfg.tolerances["minimize"]
    curve = tabulate_mc(cs * mq, tolerance=tol, spec=cfg.spec(), workers=args.workers)
    out = Path(cfg.out) if cfg.out else cfg.curve_path()
    out.parent.mkdir(parents=True, exist_ok=True)
    curve.save(out)
    emit({
        "curve_file": str(out),
        "points": len(curve.points),
        "c_range": list(curve.c_range),
        "M_Q": mq,
        "strictly_decreasing": curve.is_strictly_decreasing() if len(curve.points) > 1 else None,
        "m_c": [p.m_c for p in curve.points],
        "c": [p.c for p in curve.points],
    })
    return 0


def _prediction(rep) -> str:
    if rep.in_A is True:
        return "scatter"
    if rep.blowup_criterion:
        return "blowup"
    return "undecided"


def cmd_classify(args, cfg: RunConfig) -> int:
    from .functionals import scale
    from .grid import load_field
    from .groundstate import McCurve
    from .mei import Region, in_set_A

    u, _ = load_field(args.field)
    if args.scale != 1.0:
        u = scale(u, args.scale)
    curve = McCurve.load(args.mc or cfg.curve_path())
    rep = in_set_A(Region(curve), u)
    doc = rep.to_dict()
    doc["prediction"] = _prediction(rep)
    doc["field_file"] = args.field
    emit(doc, cfg.out)
    return 0


def cmd_evolve(args, cfg: RunConfig) -> int:
    from .dynamics import evolve
    from .functionals import scale
    from .grid import load_field
    from .groundstate import McCurve
    from .mei import Region

    u, _ = load_field(args.field)
    if args.scale != 1.0:
        u = scale(u, args.scale)
    region = None
    mc = args.mc or (cfg.curve_path() if cfg.curve_path().exists() else None)
    if mc:
        region = Region(McCurve.load(mc))
    trace = evolve(u, args.t_end, args.dt, R=args.R, sample_every=args.sample_every, region=region, order=args.order)
    trace_path = args.trace or (cfg.out and str(Path(cfg.out).with_suffix(".csv")))
    if trace_path:
        trace.write_csv(trace_path)
    emit({
        "fate": trace.fate,
        "valid": trace.valid,
        "flags": trace.flags,
        "aborted_at": trace.aborted_at,
        "mass_drift": trace.mass_drift(),
        "energy_drift": trace.energy_drift(),
        "R_used": trace.R_used,
        "dt": trace.dt,
        "order": trace.order,
        "samples": len(trace.times),
        "t_final": trace.times[-1],
        "evidence": trace.evidence,
        "trace_file": trace_path,
    }, cfg.out)
    return 0


def cmd_verify(args, cfg: RunConfig) -> int:
    from .verify import SLOW, SUITES, run_suite

    if args.suite == "all":
        names = list(SUITES)
    elif args.suite == "fast":
        names = [n for n in SUITES if n not in SLOW]
    else:
        names = [args.suite]
    results = []
    for name in names:
        res = run_suite(name, seed=cfg.seed)
        stream = sys.stderr if args.json else sys.stdout
        print(res.report(), file=stream, flush=True)
        if "table" in res.details:
            print("  M/M(Q)      lambda_star  sign changes", file=stream)
            for mass, lam, changes in res.details["table"]:
                print(f"  {mass:.6f}  {lam:.6e}  {changes}", file=stream)
        results.append(res)
    ok = all(r.passed for r in results)
    if args.json or cfg.out:
        doc = {"passed": ok, "seed": cfg.seed, "suites": [r.to_dict() for r in results]}
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        text = dumps(doc)
        if cfg.out:
            Path(cfg.out).write_text(text + "\n")
        if args.json:
            print(text)
    return 0 if ok else 1


# -------------------------------------------------------------------- parser


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    d = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    p.add_argument("--grid-n", type=int, help="grid points per side", **d)
    p.add_argument("--grid-l", type=float, help="box side length", **d)
    p.add_argument("--config", help="JSON config file", **d)
    p.add_argument("--seed", type=int, help="seed for randomized suites", **d)
    p.add_argument("--out", help="output path", **d)
    return p


def build_parser() -> argparse.ArgumentParser:
    from .verify import ALIASES, SUITES

    parser = argparse.ArgumentParser(prog="cqnls", description=__doc__.splitlines()[0], parents=[_global_flags(False)])
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True)

    gs = sub.add_parser("ground-state", parents=[common], help="Townes profile Q or constrained minimizer S_c")
    gs.add_argument("which", choices=("q", "sc"))
    gs.add_argument("--tol", type=float, help="shooting or minimization tolerance")
    gs.add_argument("--c", type=float, help="mass for sc")
    gs.add_argument("--mc-out", help="write the (c, m_c) point JSON here")
    gs.set_defaults(func=cmd_ground_state)

    mc = sub.add_parser("mc-curve", parents=[common], help="tabulate m_c")
    mc.add_argument("--lo", type=float, default=0.1, help="lowest c as a fraction of M(Q)")
    mc.add_argument("--hi", type=float, default=0.95, help="highest c as a fraction of M(Q)")
    mc.add_argument("--points", type=int, default=32)
    mc.add_argument("--tol", type=float)
    mc.add_argument("--workers", type=int, default=1)
    mc.set_defaults(func=cmd_mc_curve)

    cl = sub.add_parser("classify", parents=[common], help="static classification of a field")
    cl.add_argument("field", help="field file")
    cl.add_argument("mc", nargs="?", help="curve JSON (default $CQNLS_DATA_DIR/mc_curve.json)")
    cl.add_argument("--scale", type=float, default=1.0, help="apply T_lambda to the field first")
    cl.set_defaults(func=cmd_classify)

    ev = sub.add_parser("evolve", parents=[common], help="split-step evolution with fate classification")
    ev.add_argument("field", help="initial field file")
    ev.add_argument("--t-end", type=float, required=True)
    ev.add_argument("--dt", type=float, default=1e-3)
    ev.add_argument("--R", type=float, help="virial cutoff radius (default L/4)")
    ev.add_argument("--order", type=int, choices=(2, 4), default=2)
    ev.add_argument("--sample-every", type=int, default=10)
    ev.add_argument("--scale", type=float, default=1.0, help="apply T_lambda to the initial field")
    ev.add_argument("--mc", help="curve JSON for the static classification")
    ev.add_argument("--trace", help="trace CSV path")
    ev.set_defaults(func=cmd_evolve)

    ve = sub.add_parser("verify", parents=[common], help="property suites")
    ve.add_argument("--suite", choices=sorted(SUITES) + sorted(ALIASES) + ["all", "fast"], default="fast")
    ve.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    ve.set_defaults(func=cmd_verify)
    return parser


def _validate(parser, args) -> None:
    if args.command == "ground-state" and args.which == "sc" and args.c is None:
        parser.error("ground-state sc requires --c")
    if args.command == "mc-curve":
        if args.points < 1:
            parser.error("--points must be at least 1")
        if args.points > 1 and not args.lo < args.hi:
            parser.error(f"reversed or empty range: --lo {args.lo} >= --hi {args.hi}")
        if not (0 < args.lo and args.hi < 1):
            parser.error("range must lie inside (0, 1) in units of M(Q)")
    for name in ("tol", "dt", "t_end"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            parser.error(f"--{name.replace('_', '-')} must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        cfg = load_config(args)
        return args.func(args, cfg)
    except Exception as exc:  # report every module failure as JSON
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
