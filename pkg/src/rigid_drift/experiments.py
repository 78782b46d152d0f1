"""Trajectory simulation, energy-drift stress test and time-precision studies."""
from dataclasses import dataclass, replace
import logging
import math
from typing import Iterator, Optional

import numpy as np

from .dynamics import InertiaMatrix, PotentialParams, State, make_state, total_energy
from .integrators import DEFAULT_SOLVER, STEPPERS, SolverConfig, step_rk4_reference
from .io import write_trajectory_csv
from .so3 import expmap, logmap, orthogonality_defect

log = logging.getLogger(__name__)

INTEGRATORS = ("nmb", "vlv", "liemid-ea", "rk4")
LIE_INTEGRATORS = ("nmb", "vlv", "liemid-ea")

# Parameters of the stress test: an inertia-asymmetric body started close to the
# dist(Q, I) == 1 shell and spinning about its symmetry axis.
STRESS_INERTIA = (2.0, 2.0, 4.0)
STRESS_ALPHA = 0.3
STRESS_ATTRACTION_AXIS_ANGLE = (2.5 / math.sqrt(2.0), 0.0, 2.5 / math.sqrt(2.0))
STRESS_INITIAL_AXIS_ANGLE = (0.0, 0.7227, 0.0)
STRESS_INITIAL_VELOCITY = (0.0, 0.0, 0.625)

STRESS_T_FINAL = 15000.0
STRESS_STEP_SIZES = (0.125, 0.25)
ORDER_T_FINAL = 5.0
ORDER_STEP_SIZES = (0.2, 0.1, 0.05, 0.025)
REFERENCE_STEP = 1e-3

MIN_DRIFT_SAMPLES = 100
DRIFT_MARGIN = 5.0
DRIFT_MIN_R2 = 0.9


class InsufficientData(ValueError):
    pass


class SimulationError(RuntimeError):
    """A stepper failed; ``step`` is the index of the step being taken."""

    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class ExperimentSpec:
    integrator: str
    h: float
    t_final: float
    inertia: InertiaMatrix
    potential: Optional[PotentialParams]
    initial: State
    sample_stride: int = 10
    solver: SolverConfig = DEFAULT_SOLVER

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError(f"h must be positive, got {self.h!r}")
        if not (math.isfinite(self.t_final) and self.t_final > 0):
            raise ValueError(f"t_final must be positive, got {self.t_final!r}")
        if self.t_final / self.h > 2 ** 53:
            raise ValueError("t_final / h is not a representable step count")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be an integer >= 1, got {self.sample_stride!r}")

    @property
    def n_steps(self):
        # guard against 15000/0.1 landing just below an integer
        return int(math.floor(self.t_final / self.h + 1e-9))


def stress_spec(integrator="vlv", h=0.25, t_final=STRESS_T_FINAL, sample_stride=10, solver=DEFAULT_SOLVER):
    """ExperimentSpec with the stress-test body, potential and initial data."""
    return ExperimentSpec(
        integrator=integrator,
        h=h,
        t_final=t_final,
        inertia=InertiaMatrix(*STRESS_INERTIA),
        potential=PotentialParams(STRESS_ALPHA, expmap(np.array(STRESS_ATTRACTION_AXIS_ANGLE))),
        initial=make_state(expmap(np.array(STRESS_INITIAL_AXIS_ANGLE)), STRESS_INITIAL_VELOCITY),
        sample_stride=sample_stride,
        solver=solver,
    )


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    Q: np.ndarray
    W: np.ndarray
    energy: float
    energy_error: float
    orth_defect: float
    axis_angle: np.ndarray


@dataclass
class RunStats:
    """Per-step extrema, tracked regardless of the sampling stride."""

    steps: int = 0
    max_abs_energy_error: float = 0.0
    # maximum over the first tenth of the steps
    early_max_abs_energy_error: float = 0.0
    max_orth_defect: float = 0.0
    max_solver_iterations: int = 0


def _stepper(spec):
    if spec.integrator == "rk4":
        return lambda inertia, p, s, h, cfg: (step_rk4_reference(inertia, p, s, h), 0)

    step = STEPPERS[spec.integrator]

    def advance(inertia, p, s, h, cfg):
        result = step(inertia, p, s, h, cfg)
        return result.state, result.solver_iterations

    return advance


def _sample(spec, t, s, e0):
    energy = total_energy(spec.inertia, spec.potential, s)
    return TrajectorySample(
        t=t,
        Q=s.Q,
        W=s.W,
        energy=energy,
        energy_error=energy - e0,
        orth_defect=orthogonality_defect(s.Q),
        axis_angle=logmap(s.Q),
    )


def simulate(spec, stats=None) -> Iterator[TrajectorySample]:
    """Integrate ``spec`` for ``floor(t_final / h)`` steps, yielding samples.

    A sample is emitted at t = 0, after every ``sample_stride`` steps, and
    after the last step. If ``stats`` is given it is updated every step.

    Raises:
        SimulationError: wrapping any stepper failure, with the step index.
    """
    if stats is None:
        stats = RunStats()
    advance = _stepper(spec)
    n = spec.n_steps
    early = max(1, n // 10)
    s = spec.initial
    e0 = total_energy(spec.inertia, spec.potential, s)
    yield _sample(spec, 0.0, s, e0)
    for k in range(1, n + 1):
        try:
            s, iters = advance(spec.inertia, spec.potential, s, spec.h, spec.solver)
            err = abs(total_energy(spec.inertia, spec.potential, s) - e0)
        except Exception as exc:
            raise SimulationError(k, exc) from exc
        stats.steps = k
        if err > stats.max_abs_energy_error:
            stats.max_abs_energy_error = err
        if k <= early:
            stats.early_max_abs_energy_error = stats.max_abs_energy_error
        stats.max_orth_defect = max(stats.max_orth_defect, orthogonality_defect(s.Q))
        stats.max_solver_iterations = max(stats.max_solver_iterations, iters)
        if k % spec.sample_stride == 0 or k == n:
            try:
                sample = _sample(spec, k * spec.h, s, e0)
            except Exception as exc:
                raise SimulationError(k, exc) from exc
            yield sample


@dataclass
class Trajectory:
    spec: ExperimentSpec
    samples: list
    stats: RunStats

    @property
    def t(self):
        return np.array([x.t for x in self.samples])

    @property
    def energy_error(self):
        return np.array([x.energy_error for x in self.samples])

    @property
    def final_state(self):
        last = self.samples[-1]
        return State(last.Q, last.W)


def run(spec):
    """Collect :func:`simulate` into a :class:`Trajectory`."""
    stats = RunStats()
    samples = list(simulate(spec, stats))
    return Trajectory(spec, samples, stats)


def final_state(spec):
    """Endpoint of ``spec`` without keeping samples."""
    advance = _stepper(spec)
    s = spec.initial
    for k in range(1, spec.n_steps + 1):
        try:
            s, _ = advance(spec.inertia, spec.potential, s, spec.h, spec.solver)
        except Exception as exc:
            raise SimulationError(k, exc) from exc
    return s


@dataclass(frozen=True)
class DriftFit:
    slope: float
    intercept: float
    r_squared: float
    residual_max: float
    t_span: float

    @property
    def trend(self):
        """Net change of the fitted line over the fitted time span."""
        return abs(self.slope) * self.t_span

    @property
    def drifting(self):
        return self.r_squared > DRIFT_MIN_R2 and self.trend > DRIFT_MARGIN * self.residual_max

    @property
    def verdict(self):
        return "drifting" if self.drifting else "bounded"


def drift_fit(samples, energy_error=None):
    """Least-squares line through the energy error versus time.

    Accepts either a sequence of :class:`TrajectorySample` or two arrays
    ``(t, energy_error)``.
    """
    if energy_error is None:
        t = np.array([x.t for x in samples], dtype=float)
        e = np.array([x.energy_error for x in samples], dtype=float)
    else:
        t = np.asarray(samples, dtype=float)
        e = np.asarray(energy_error, dtype=float)
    if t.size < MIN_DRIFT_SAMPLES:
        raise InsufficientData(f"drift fit needs at least {MIN_DRIFT_SAMPLES} samples, got {t.size}")
    A = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(A, e, rcond=None)
    resid = e - (slope * t + intercept)
    centered = e - e.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return DriftFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(1.0, max(0.0, r2)),
        residual_max=float(np.max(np.abs(resid))),
        t_span=float(t[-1] - t[0]),
    )


def log_log_slope(hs, errors):
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


@dataclass(frozen=True)
class OrderFit:
    integrator: str
    config_order: float
    velocity_order: float
    # (h, config_error, velocity_error)
    error_points: tuple

    @property
    def observed_order(self):
        return min(self.config_order, self.velocity_order)


def state_distance(a, b):
    """Frobenius distance of configurations plus Euclidean distance of velocities."""
    return float(np.linalg.norm(a.Q - b.Q) + np.linalg.norm(a.W - b.W))


def reference_solution(spec_base, t_final=ORDER_T_FINAL, h_ref=REFERENCE_STEP):
    """RK4 endpoint at ``h_ref`` and its distance to the run at ``h_ref / 2``."""
    coarse = final_state(replace(spec_base, integrator="rk4", h=h_ref, t_final=t_final))
    fine = final_state(replace(spec_base, integrator="rk4", h=h_ref / 2, t_final=t_final))
    return coarse, state_distance(coarse, fine)


def order_study(integrator, h_list=ORDER_STEP_SIZES, t_final=ORDER_T_FINAL, spec_base=None, reference=None):
    """Global error at ``t_final`` against an RK4 reference, and the fitted orders."""
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise InsufficientData(f"order fit needs at least 3 step sizes, got {len(h_list)}")
    for h in h_list:
        steps = t_final / h
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError(f"h = {h} does not divide t_final = {t_final}")
    if spec_base is None:
        spec_base = stress_spec()
    if reference is None:
        reference, _ = reference_solution(spec_base, t_final)
    points = []
    for h in h_list:
        end = final_state(replace(spec_base, integrator=integrator, h=h, t_final=t_final))
        points.append((h, float(np.linalg.norm(end.Q - reference.Q)), float(np.linalg.norm(end.W - reference.W))))
    hs = [x[0] for x in points]
    return OrderFit(
        integrator=integrator,
        config_order=log_log_slope(hs, [x[1] for x in points]),
        velocity_order=log_log_slope(hs, [x[2] for x in points]),
        error_points=tuple(points),
    )


@dataclass
class RunReport:
    integrator: str
    h: float
    fit: Optional[DriftFit] = None
    stats: Optional[RunStats] = None
    error: Optional[str] = None

    def to_json(self):
        out = {"integrator": self.integrator, "h": self.h}
        if self.fit is not None:
            out.update(
                slope=self.fit.slope,
                intercept=self.fit.intercept,
                r_squared=self.fit.r_squared,
                residual_max=self.fit.residual_max,
                max_abs_energy_error=self.stats.max_abs_energy_error,
                early_max_abs_energy_error=self.stats.early_max_abs_energy_error,
                max_orth_defect=self.stats.max_orth_defect,
                verdict=self.fit.verdict,
            )
        else:
            out.update(verdict="error", error=self.error)
        return out


def slope_ratio(coarse, fine):
    """``slope(coarse) / slope(fine)``, or None when signs differ or a slope vanishes."""
    if coarse.slope == 0 or fine.slope == 0 or math.copysign(1, coarse.slope) != math.copysign(1, fine.slope):
        return None
    return coarse.slope / fine.slope


def acceptance_checks(runs, robustness=None):
    """Evaluate the drift criteria on a finished run matrix.

    ``runs`` maps ``(integrator, h)`` to :class:`RunReport`. A check whose runs
    are missing or failed is reported as None.
    """
    def fit(name, h):
        r = runs.get((name, h))
        return r.fit if r is not None else None

    fine, coarse = STRESS_STEP_SIZES
    checks = {}

    nmb = [fit("nmb", h) for h in STRESS_STEP_SIZES]
    checks["nmb_drifting"] = None if None in nmb else all(f.drifting for f in nmb)

    if None in nmb:
        checks["nmb_quadratic_scaling"] = None
    else:
        ratio = slope_ratio(nmb[1], nmb[0])
        checks["nmb_quadratic_scaling"] = ratio is not None and 3.0 <= ratio <= 5.0

    vlv = [fit("vlv", h) for h in STRESS_STEP_SIZES]
    if None in vlv or None in nmb:
        checks["vlv_bounded"] = None
    else:
        small = all(abs(v.slope) <= 0.02 * abs(n.slope) for v, n in zip(vlv, nmb))
        stats = runs[("vlv", coarse)].stats
        no_growth = stats.max_abs_energy_error <= 3.0 * stats.early_max_abs_energy_error
        checks["vlv_bounded"] = small and no_growth

    mid = [fit("liemid-ea", h) for h in STRESS_STEP_SIZES]
    if None in mid or None in nmb:
        checks["liemid_drift_ordering"] = None
    else:
        ordered = all(0 < abs(m.slope) < abs(n.slope) for m, n in zip(mid, nmb))
        ratio = slope_ratio(mid[1], mid[0])
        scaled = ratio is not None and 3.0 <= ratio <= 5.0
        checks["liemid_drift_ordering"] = all(m.drifting for m in mid) and ordered and scaled

    if robustness is not None:
        checks["solver_tolerance_insensitive"] = robustness["relative_slope_change"] < 0.01
    return checks


def _run_one(spec, csv_dir=None):
    traj = run(spec)
    if csv_dir is not None:
        write_trajectory_csv(traj.samples, csv_dir / f"{spec.integrator}_h{spec.h:g}.csv")
    return traj


def stress_test_suite(
    integrators=LIE_INTEGRATORS,
    step_sizes=STRESS_STEP_SIZES,
    t_final=STRESS_T_FINAL,
    solver=DEFAULT_SOLVER,
    sample_stride=10,
    csv_dir=None,
    robustness_tolerance=1e-10,
):
    """Run the long-time energy test for every (integrator, h) pair.

    Failures of single runs are recorded and the rest of the matrix still
    runs. When the NMB h=0.25 run is part of the matrix and
    ``robustness_tolerance`` is set, that run is repeated at the looser
    solver tolerance and the relative change of the drift slope is reported.
    """
    runs = {}
    for name in integrators:
        for h in step_sizes:
            spec = stress_spec(name, h, t_final, sample_stride, solver)
            log.info("stress test: %s h=%g over [0, %g]", name, h, t_final)
            try:
                traj = _run_one(spec, csv_dir)
                runs[(name, h)] = RunReport(name, h, drift_fit(traj.samples), traj.stats)
            except Exception as exc:
                log.error("run %s h=%g failed: %s", name, h, exc)
                runs[(name, h)] = RunReport(name, h, error=str(exc))

    robustness = None
    base = runs.get(("nmb", 0.25))
    if robustness_tolerance is not None and base is not None and base.fit is not None:
        loose = replace(solver, tolerance=robustness_tolerance)
        try:
            fit = drift_fit(run(stress_spec("nmb", 0.25, t_final, sample_stride, loose)).samples)
            robustness = {
                "integrator": "nmb",
                "h": 0.25,
                "tolerance": robustness_tolerance,
                "slope": fit.slope,
                "reference_slope": base.fit.slope,
                "relative_slope_change": abs(fit.slope - base.fit.slope) / abs(base.fit.slope),
            }
        except Exception as exc:
            log.error("robustness rerun failed: %s", exc)

    report = {
        "t_final": t_final,
        "solver_tolerance": solver.tolerance,
        "runs": [r.to_json() for r in runs.values()],
        "acceptance": acceptance_checks(runs, robustness),
    }
    if robustness is not None:
        report["robustness"] = robustness
    return report, runs
