"""Grid sweeps, derivative-free optimization, protocol comparison."""

import numpy as np
import pytest

from photongun import (
    ConfigError,
    SweepSpec,
    compare_protocols,
    evaluate_objective,
    grid_sweep,
    mapping_success_rate,
    optimize_inner,
)
from photongun.sweep import _golden_maximize
from conftest import raman_mapping_config


def test_single_point_grid_matches_direct_evaluation():
    baseline = raman_mapping_config(omega_over_delta=0.3)
    spec = SweepSpec(
        baseline=baseline,
        parameters=("omega_over_delta",),
        grids=((0.3,),),
        objective="success_rate",
    )
    result = grid_sweep(spec)
    direct = mapping_success_rate(baseline)
    assert result.values[0] == direct
    assert result.diagnostics == ("",)


def test_grid_sweep_deterministic():
    baseline = raman_mapping_config()
    spec = SweepSpec(
        baseline=baseline,
        parameters=("omega_over_delta",),
        grids=((0.2, 0.4, 0.6),),
        objective="success_rate",
    )
    first = grid_sweep(spec)
    second = grid_sweep(spec)
    assert np.array_equal(first.values, second.values)
    assert first.coordinates == second.coordinates


def test_grid_sweep_reports_holes_not_zeros():
    baseline = raman_mapping_config()
    spec = SweepSpec(
        baseline=baseline,
        parameters=("omega_over_delta",),
        grids=((1e-7, 0.3),),
        objective="success_rate",
    )
    result = grid_sweep(spec)
    assert np.isnan(result.values[0])
    assert result.diagnostics[0] != ""
    assert np.isfinite(result.values[1])
    assert result.holes == (0,)


def test_sweep_spec_validation():
    baseline = raman_mapping_config()
    with pytest.raises(ConfigError):
        SweepSpec(baseline, ("bogus",), ((1.0,),), "success_rate")
    with pytest.raises(ConfigError):
        SweepSpec(baseline, ("omega_over_delta",), ((0.3, 0.2),), "success_rate")
    with pytest.raises(ConfigError):
        SweepSpec(baseline, ("omega_over_delta",), ((0.2, 0.3),), "fidelity")


def test_optimum_window_per_kappa_over_gamma():
    """The best constant-drive mapping sits at intermediate Omega/Delta."""
    for ratio in (0.25, 0.5, 1.0):
        baseline = raman_mapping_config(kappa_over_gamma=ratio)
        result = optimize_inner(
            baseline, ("omega_over_delta",), ((0.05, 1.0),), "success_rate"
        )
        assert 0.2 <= result.argmax[0] <= 0.75, (ratio, result.argmax)


def test_cooperativity_trend_with_inner_optimization():
    baseline = raman_mapping_config()
    spec = SweepSpec(
        baseline=baseline,
        parameters=("cooperativity",),
        grids=((1.0, 3.0, 10.0, 30.0),),
        objective="success_rate",
        inner_free=("omega_over_delta",),
        inner_bounds=((0.05, 1.0),),
    )
    result = grid_sweep(spec)
    assert result.diagnostics == ("", "", "", "")
    values = result.values
    assert np.all(np.diff(values) > 0.0)
    # every point records the inner argmax tuple
    assert all(len(arg) == 1 for arg in result.inner_argmax)


def test_golden_section_recovers_analytic_peak():
    # transfer population of a lossless pi pulse peaks at t = pi/(2*Omega_eff)
    omega_eff = 0.37

    def pop(t):
        return np.sin(omega_eff * t) ** 2

    t_pi = np.pi / (2.0 * omega_eff)
    x, fx = _golden_maximize(pop, 0.0, 1.8 * t_pi, rel_tol=1e-5)
    assert x == pytest.approx(t_pi, rel=1e-3)
    assert fx == pytest.approx(1.0, abs=1e-6)


def test_optimizer_fixed_point_reseed():
    baseline = raman_mapping_config()
    first = optimize_inner(baseline, ("omega_over_delta",), ((0.05, 1.0),), "success_rate")
    again = optimize_inner(
        baseline, ("omega_over_delta",), ((0.05, 1.0),), "success_rate",
        start=first.argmax,
    )
    assert again.value == pytest.approx(first.value, abs=1e-6)


def test_optimizer_validation_and_failure():
    baseline = raman_mapping_config()
    with pytest.raises(ConfigError):
        optimize_inner(baseline, (), (), "success_rate")
    with pytest.raises(ConfigError):
        optimize_inner(baseline, ("omega_over_delta",), ((0.5, 0.1),), "success_rate")
    with pytest.raises(ConfigError):
        optimize_inner(baseline, ("omega_over_delta",), ((0.05, 1.0),), "bogus")


def test_evaluate_objective_rejects_entangler():
    from photongun import ModelConfig, Pulse

    config = ModelConfig(
        kind="four-level", g=1.0, kappa=1.0, gamma=0.1, pulse=Pulse("sin2", 1.0, 100.0)
    )
    with pytest.raises(ConfigError):
        evaluate_objective(config, "success_rate")


def test_sweep_optimum_bracketed_by_fine_grid():
    """grid_sweep on a fine grid brackets optimize_inner's optimum."""
    baseline = raman_mapping_config()
    grid = tuple(np.round(np.linspace(0.4, 1.0, 13), 10))
    swept = grid_sweep(
        SweepSpec(
            baseline=baseline,
            parameters=("omega_over_delta",),
            grids=(grid,),
            objective="success_rate",
        )
    )
    opt = optimize_inner(baseline, ("omega_over_delta",), ((0.4, 1.0),), "success_rate")
    grid_best = swept.coordinates[int(np.argmax(swept.values))][0]
    cell = grid[1] - grid[0]
    assert abs(opt.argmax[0] - grid_best) <= cell + 1e-12


def test_compare_protocols_smoke_table():
    baseline = raman_mapping_config()
    rows = compare_protocols(baseline, (1.0,))
    assert {r.objective for r in rows} == {"success_rate", "emission_rate"}
    for row in rows:
        assert row.diagnostics == ""
        for value in (row.constant_value, row.adiabatic_value):
            assert 0.0 <= value <= 1.0
