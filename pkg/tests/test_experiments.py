from dataclasses import replace

import numpy as np
import pytest

from rigid_drift import experiments as ex
from rigid_drift.dynamics import State, total_energy


def short(integrator="vlv", h=0.25, t_final=10.0, stride=4):
    return ex.stress_spec(integrator, h, t_final, sample_stride=stride)


def test_spec_validation():
    with pytest.raises(ValueError):
        short(h=0.0)
    with pytest.raises(ValueError):
        short(t_final=-1.0)
    with pytest.raises(ValueError):
        short(integrator="euler")
    with pytest.raises(ValueError):
        short(stride=0)


def test_step_count_and_sampling():
    spec = short(h=0.25, t_final=10.0, stride=4)
    assert spec.n_steps == 40
    samples = list(ex.simulate(spec))
    assert [s.t for s in samples] == [0.25 * k for k in range(0, 41, 4)]
    # the final step is always emitted even off-stride
    spec = short(h=0.25, t_final=10.0, stride=7)
    times = [s.t for s in ex.simulate(spec)]
    assert times[-1] == 10.0 and times[-2] == 0.25 * 35
    assert ex.stress_spec("nmb", 0.1, 15000.0).n_steps == 150000


def test_energy_accounting():
    spec = short("nmb")
    samples = list(ex.simulate(spec))
    assert samples[0].energy_error == 0.0
    for s in samples:
        recomputed = total_energy(spec.inertia, spec.potential, State(s.Q, s.W))
        assert s.energy == pytest.approx(recomputed, rel=1e-15)
        assert s.energy_error == s.energy - samples[0].energy
    assert all(a.t <= b.t for a, b in zip(samples, samples[1:]))


def test_simulation_is_deterministic():
    a = list(ex.simulate(short("liemid-ea")))
    b = list(ex.simulate(short("liemid-ea")))
    for x, y in zip(a, b):
        assert x.energy == y.energy
        assert np.array_equal(x.Q, y.Q) and np.array_equal(x.W, y.W)


def test_stats_track_every_step():
    spec = short("nmb", stride=1000)
    stats = ex.RunStats()
    samples = list(ex.simulate(spec, stats))
    assert len(samples) == 2
    every = ex.run(replace(spec, sample_stride=1))
    assert stats.max_abs_energy_error == pytest.approx(np.max(np.abs(every.energy_error)), rel=0, abs=0)
    assert stats.steps == spec.n_steps


def test_simulation_error_carries_step_index():
    spec = replace(short("nmb"), solver=ex.SolverConfig(tolerance=1e-12, max_iterations=1))
    with pytest.raises(ex.SimulationError) as info:
        list(ex.simulate(spec))
    assert info.value.step == 1


def test_drift_fit_exact_line():
    t = np.linspace(0, 15000, 1001)
    fit = ex.drift_fit(t, 3e-6 * t)
    assert fit.slope == pytest.approx(3e-6, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.verdict == "drifting"


def test_drift_fit_oscillation_has_no_slope():
    t = np.linspace(0, 15000, 12001)
    fit = ex.drift_fit(t, 1e-4 * np.sin(t))
    assert abs(fit.slope) <= 1e-9
    assert fit.verdict == "bounded"


def test_drift_fit_needs_data():
    with pytest.raises(ex.InsufficientData):
        ex.drift_fit(np.arange(10.0), np.zeros(10))


def test_drift_fit_accepts_samples():
    samples = list(ex.simulate(ex.stress_spec("vlv", 0.25, 100.0, sample_stride=1)))
    fit = ex.drift_fit(samples)
    direct = ex.drift_fit([s.t for s in samples], [s.energy_error for s in samples])
    assert fit == direct


def test_reference_is_richardson_consistent(reference):
    _, change = reference
    assert change <= 1e-11


def test_order_study_needs_three_points(base_spec):
    with pytest.raises(ex.InsufficientData):
        ex.order_study("nmb", [0.1], spec_base=base_spec)


def test_order_study_rejects_non_dividing_step(base_spec):
    with pytest.raises(ValueError):
        ex.order_study("nmb", [0.3, 0.2, 0.1], spec_base=base_spec)


def test_rk4_order_is_four(base_spec, reference):
    fit = ex.order_study("rk4", spec_base=base_spec, reference=reference[0])
    assert 3.7 <= fit.config_order <= 4.3
    assert 3.7 <= fit.velocity_order <= 4.3


@pytest.mark.parametrize("name", ex.LIE_INTEGRATORS)
def test_lie_methods_are_second_order(name, base_spec, reference):
    fit = ex.order_study(name, spec_base=base_spec, reference=reference[0])
    assert 1.8 <= fit.config_order <= 2.2
    assert 1.8 <= fit.velocity_order <= 2.2
    assert len(fit.error_points) == 4


def test_stress_matrix_group_closure(stress_results):
    _, runs = stress_results
    for report in runs.values():
        assert report.error is None
        assert report.stats.max_orth_defect <= 1e-8


def test_stress_matrix_verdicts_nmb_and_vlv(stress_results):
    _, runs = stress_results
    for h in ex.STRESS_STEP_SIZES:
        assert runs[("nmb", h)].fit.verdict == "drifting"
        assert runs[("vlv", h)].fit.verdict == "bounded"


def test_vlv_slope_within_oscillation_scale(stress_results):
    _, runs = stress_results
    for h in ex.STRESS_STEP_SIZES:
        r = runs[("vlv", h)]
        assert abs(r.fit.slope) * 15000 <= 0.02 * r.stats.max_abs_energy_error


def test_nmb_drift_ratio(stress_results):
    _, runs = stress_results
    ratio = ex.slope_ratio(runs[("nmb", 0.25)].fit, runs[("nmb", 0.125)].fit)
    assert ratio is not None and 3 <= ratio <= 5


def test_liemid_drift_smaller_than_nmb(stress_results):
    _, runs = stress_results
    for h in ex.STRESS_STEP_SIZES:
        assert 0 < abs(runs[("liemid-ea", h)].fit.slope) < abs(runs[("nmb", h)].fit.slope)
    ratio = ex.slope_ratio(runs[("liemid-ea", 0.25)].fit, runs[("liemid-ea", 0.125)].fit)
    assert ratio is not None and 3 <= ratio <= 5


def test_report_schema(stress_results):
    report, _ = stress_results
    keys = {"integrator", "h", "slope", "intercept", "r_squared", "max_abs_energy_error", "verdict"}
    assert len(report["runs"]) == 6
    for run in report["runs"]:
        assert keys <= set(run)
    assert set(report["acceptance"]) >= {
        "nmb_drifting", "nmb_quadratic_scaling", "vlv_bounded", "liemid_drift_ordering",
        "solver_tolerance_insensitive",
    }


def test_suite_keeps_going_after_a_failed_run():
    report, runs = ex.stress_test_suite(
        integrators=("nmb", "vlv"), step_sizes=(0.25,), t_final=30.0,
        solver=ex.SolverConfig(tolerance=1e-12, max_iterations=1), robustness_tolerance=None,
    )
    assert runs[("nmb", 0.25)].error is not None
    assert [r["verdict"] for r in report["runs"]] == ["error", "error"]
    assert report["acceptance"]["nmb_drifting"] is None
