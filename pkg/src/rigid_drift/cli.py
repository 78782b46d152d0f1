"""Command-line front end: ``rigid-drift {simulate,stress-test,order-study}``."""
import argparse
from dataclasses import asdict, dataclass, field, fields
import json
import logging
import math
from pathlib import Path
import sys
from typing import List, Optional

import numpy as np

from . import experiments as ex
from .dynamics import InertiaMatrix, PotentialParams, make_state
from .integrators import SolverConfig
from .io import write_order_csv, write_trajectory_csv
from .so3 import expmap

log = logging.getLogger("rigid_drift")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a run needs. Rotations are axis-angle vectors mapped through exp."""

    integrator: str = "vlv"
    h: float = 0.25
    h_list: Optional[List[float]] = None
    t_final: Optional[float] = None
    stride: int = 10
    inertia: List[float] = field(default_factory=lambda: list(ex.STRESS_INERTIA))
    alpha: float = ex.STRESS_ALPHA
    attraction_axis_angle: List[float] = field(default_factory=lambda: list(ex.STRESS_ATTRACTION_AXIS_ANGLE))
    initial_axis_angle: List[float] = field(default_factory=lambda: list(ex.STRESS_INITIAL_AXIS_ANGLE))
    initial_velocity: List[float] = field(default_factory=lambda: list(ex.STRESS_INITIAL_VELOCITY))
    solver_tol: float = 1e-12
    max_iters: int = 50
    out: Optional[str] = None
    only: Optional[List[str]] = None

    def validate(self):
        if self.integrator not in ex.INTEGRATORS:
            raise ConfigError(f"integrator: unknown {self.integrator!r}, expected one of {', '.join(ex.INTEGRATORS)}")
        _positive("h", self.h)
        if self.t_final is not None:
            _positive("t_final", self.t_final)
        if self.h_list is not None:
            for h in self.h_list:
                _positive("h_list", h)
        if self.stride < 1:
            raise ConfigError(f"stride: must be >= 1, got {self.stride}")
        for name in ("inertia", "attraction_axis_angle", "initial_axis_angle", "initial_velocity"):
            value = getattr(self, name)
            if len(value) != 3 or not all(math.isfinite(v) for v in value):
                raise ConfigError(f"{name}: expected 3 finite numbers, got {value!r}")
        if min(self.inertia) <= 0:
            raise ConfigError(f"inertia: entries must be positive, got {self.inertia!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigError(f"alpha: must be >= 0, got {self.alpha!r}")
        _positive("solver_tol", self.solver_tol)
        if self.max_iters < 1:
            raise ConfigError(f"max_iters: must be >= 1, got {self.max_iters}")
        if self.only is not None:
            for name in self.only:
                if name not in ex.INTEGRATORS:
                    raise ConfigError(f"only: unknown integrator {name!r}")
        return self

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def solver(self):
        return SolverConfig(self.solver_tol, self.max_iters)

    def spec(self, integrator=None, h=None, t_final=None):
        try:
            return ex.ExperimentSpec(
                integrator=integrator or self.integrator,
                h=h if h is not None else self.h,
                t_final=t_final if t_final is not None else self.t_final,
                inertia=InertiaMatrix(*self.inertia),
                potential=PotentialParams(self.alpha, expmap(np.array(self.attraction_axis_angle, dtype=float))),
                initial=make_state(expmap(np.array(self.initial_axis_angle, dtype=float)), self.initial_velocity),
                sample_stride=self.stride,
                solver=self.solver(),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name}: must be positive, got {value!r}")


_FIELD_TYPES = {
    "integrator": str, "h": float, "h_list": "floats", "t_final": float, "stride": int,
    "inertia": "floats", "alpha": float, "attraction_axis_angle": "floats",
    "initial_axis_angle": "floats", "initial_velocity": "floats", "solver_tol": float,
    "max_iters": int, "out": str, "only": "strs",
}
_OPTIONAL = {"h_list", "t_final", "out", "only"}


def _coerce(key, value):
    kind = _FIELD_TYPES[key]
    if value is None and key in _OPTIONAL:
        return None
    number = (int, float)
    if kind is float and isinstance(value, number) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind == "floats" and isinstance(value, list) and all(
        isinstance(v, number) and not isinstance(v, bool) for v in value
    ):
        return [float(v) for v in value]
    if kind == "strs" and isinstance(value, list) and all(isinstance(v, str) for v in value):
        return list(value)
    raise ConfigError(f"{key}: invalid value {value!r}")


def parse_config(text, source="<config>"):
    """Parse a JSON RunConfig; unknown keys and wrongly typed values are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s): {', '.join(unknown)}")
    try:
        values = {key: _coerce(key, value) for key, value in raw.items()}
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(**values).validate()


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


SUBCOMMAND_DEFAULTS = {
    "simulate": {"t_final": ex.STRESS_T_FINAL},
    "stress-test": {"t_final": ex.STRESS_T_FINAL, "h_list": list(ex.STRESS_STEP_SIZES), "only": list(ex.LIE_INTEGRATORS)},
    "order-study": {"t_final": ex.ORDER_T_FINAL, "h_list": list(ex.ORDER_STEP_SIZES), "only": list(ex.LIE_INTEGRATORS)},
}


def _split_names(values):
    names = []
    for v in values:
        names.extend(x for x in v.split(",") if x)
    return names


def resolve_config(args):
    """Config file (if any), then subcommand defaults for unset fields, then flags."""
    cfg = load_config(args.config) if args.config else RunConfig()
    for key, value in SUBCOMMAND_DEFAULTS[args.command].items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)
    if args.integrator is not None:
        cfg.integrator = args.integrator
    if args.h is not None:
        if args.command == "simulate":
            if len(args.h) != 1:
                raise ConfigError("--h: simulate takes a single step size")
            cfg.h = args.h[0]
        else:
            cfg.h_list = list(args.h)
    for attr in ("t_final", "stride", "solver_tol", "max_iters", "out"):
        value = getattr(args, attr)
        if value is not None:
            setattr(cfg, attr, value)
    if args.only:
        cfg.only = _split_names(args.only)
    return cfg.validate()


def cmd_simulate(cfg):
    spec = cfg.spec()
    stats = ex.RunStats()
    samples = ex.simulate(spec, stats)
    if cfg.out:
        rows = write_trajectory_csv(samples, cfg.out)
        log.info("wrote %d rows to %s", rows, cfg.out)
    else:
        write_trajectory_csv(samples, sys.stdout)
    log.info(
        "%s h=%g: %d steps, max |energy error| %.3e, max orthogonality defect %.3e",
        spec.integrator, spec.h, stats.steps, stats.max_abs_energy_error, stats.max_orth_defect,
    )
    return 0


def cmd_stress_test(cfg):
    out_dir = Path(cfg.out or "stress_test")
    out_dir.mkdir(parents=True, exist_ok=True)
    report, _ = ex.stress_test_suite(
        integrators=cfg.only,
        step_sizes=tuple(cfg.h_list),
        t_final=cfg.t_final,
        solver=cfg.solver(),
        sample_stride=cfg.stride,
        csv_dir=out_dir,
    )
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"{'integrator':<10} {'h':>6} {'slope':>12} {'r^2':>6} {'max|dE|':>10}  verdict")
    for r in report["runs"]:
        if r["verdict"] == "error":
            print(f"{r['integrator']:<10} {r['h']:>6g}  error: {r['error']}")
            continue
        print(
            f"{r['integrator']:<10} {r['h']:>6g} {r['slope']:>12.4e} {r['r_squared']:>6.3f} "
            f"{r['max_abs_energy_error']:>10.3e}  {r['verdict']}"
        )
    if "robustness" in report:
        print(f"slope change at solver tolerance {report['robustness']['tolerance']:g}: "
              f"{100 * report['robustness']['relative_slope_change']:.3f}%")
    for name, ok in report["acceptance"].items():
        if ok is not None:
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    failed_runs = any(r["verdict"] == "error" for r in report["runs"])
    failed_checks = any(ok is False for ok in report["acceptance"].values())
    return 1 if failed_runs or failed_checks else 0


ORDER_WINDOW = (1.8, 2.2)
RK4_ORDER_WINDOW = (3.5, 4.5)
REFERENCE_TOLERANCE = 1e-11


def cmd_order_study(cfg):
    if len(cfg.h_list) < 3:
        raise ex.InsufficientData(f"order fit needs at least 3 step sizes, got {len(cfg.h_list)}")
    base = cfg.spec(t_final=cfg.t_final)
    reference, halving_change = ex.reference_solution(base, cfg.t_final)
    fits = [ex.order_study(name, cfg.h_list, cfg.t_final, base, reference) for name in cfg.only]
    summary = {
        "t_final": cfg.t_final,
        "reference_step": ex.REFERENCE_STEP,
        "reference_halving_change": halving_change,
        "reference_valid": halving_change <= REFERENCE_TOLERANCE,
        "integrators": {},
    }
    ok = summary["reference_valid"]
    for fit in fits:
        lo, hi = RK4_ORDER_WINDOW if fit.integrator == "rk4" else ORDER_WINDOW
        passed = lo <= fit.config_order <= hi and lo <= fit.velocity_order <= hi
        ok = ok and passed
        summary["integrators"][fit.integrator] = {
            "config_order": fit.config_order,
            "velocity_order": fit.velocity_order,
            "error_points": [list(p) for p in fit.error_points],
            "order_in_range": passed,
        }
    if cfg.out:
        csv_path = Path(cfg.out)
        write_order_csv(fits, csv_path)
        csv_path.with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary, indent=2))
    return 0 if ok else 1


COMMANDS = {"simulate": cmd_simulate, "stress-test": cmd_stress_test, "order-study": cmd_order_study}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration; flags override it")
    common.add_argument("--integrator", choices=ex.INTEGRATORS)
    common.add_argument("--h", type=float, nargs="+", metavar="H", help="step size (a list for the studies)")
    common.add_argument("--t-final", dest="t_final", type=float)
    common.add_argument("--stride", type=int, help="sample every STRIDE steps")
    common.add_argument("--solver-tol", dest="solver_tol", type=float)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--only", action="append", metavar="NAMES", help="comma-separated integrators")
    common.add_argument("--dump-config", dest="dump_config", action="store_true",
                        help="print the resolved configuration as JSON and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rigid-drift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory to CSV")
    sub.add_parser("stress-test", parents=[common], help="long-time energy drift matrix")
    sub.add_parser("order-study", parents=[common], help="global error at fixed time vs step size")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.to_json())
            return 0
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ex.SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
