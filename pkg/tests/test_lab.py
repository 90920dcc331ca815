import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dirichlet_heat.lab import (ExperimentConfig, Record, bound_violations, calibrate_constant,
                                export, fit_rate, import_records, is_monotone, median_errors,
                                rate_shape, run_experiment)

GRID = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]


def _synthetic(model, exponent, C=2.0, grid=GRID):
    return [Record(e, 0, 0, repr(C * rate_shape(model, e, exponent)), 1, "ok", 0.0) for e in grid]


def test_fit_log_self_consistent():
    fit = fit_rate(_synthetic("log", 1.0), "log")
    assert fit.exponent == pytest.approx(1.0, abs=1e-6)
    assert fit.C == pytest.approx(2.0, rel=1e-6)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_holder_half():
    fit = fit_rate(_synthetic("holder", 0.5), "holder")
    assert fit.exponent == pytest.approx(0.5, abs=1e-6)


@given(st.sampled_from(["log", "doublelog", "holder"]), st.floats(0.1, 3.0), st.floats(0.01, 100))
def test_fit_recovers_exponent(model, exponent, C):
    fit = fit_rate(_synthetic(model, exponent, C), model)
    assert fit.exponent == pytest.approx(exponent, abs=1e-4)
    assert 0 <= fit.r2 <= 1


def test_fit_needs_four_levels():
    with pytest.raises(ValueError):
        fit_rate(_synthetic("log", 1, grid=GRID[:3]), "log")


def test_degenerate_fit_flagged():
    recs = [Record(e, 0, 0, "0.5", 1, "ok", 0.0) for e in GRID]
    assert fit_rate(recs, "log").degenerate


def test_median_and_envelope():
    recs = [Record(1e-2, t, t, repr(v), 1, "ok", 0.0) for t, v in enumerate([1.0, 3.0, 2.0])]
    recs += [Record(1e-4, t, t, repr(v), 1, "ok", 0.0) for t, v in enumerate([0.5, 0.1, 0.2])]
    recs.append(Record(1e-4, 3, 3, "nan", 0, "IllConditionedError: x", 0.0))
    assert median_errors(recs) == {1e-2: 2.0, 1e-4: 0.2}
    C = calibrate_constant(recs, "log", 1.0)
    assert not bound_violations(recs, "log", 1.0, C, use_median=False)
    assert is_monotone(recs)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(noise_grid=[1e-4, 1e-2])
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"scenario": "series_recovery", "colour": "red"})


def _small(**kw):
    base = dict(scenario="series_recovery", method="biortho", datum={"kind": "h_theta", "modes": 6},
                noise_grid=[1e-2, 1e-4, 1e-6, 1e-8, 1e-10], trials=10, seed=0, n_max=8)
    base.update(kw)
    return ExperimentConfig(**base)


def test_zero_noise_grid():
    recs = run_experiment(_small(noise_grid=[0.0], trials=2))
    assert all(r.status == "ok" and float(r.error) < 1e-8 for r in recs)


def test_sweep_shape_and_monotone_medians():
    recs = run_experiment(_small())
    assert len(recs) == 50
    assert all(r.status == "ok" for r in recs)
    assert is_monotone(recs)


def test_same_seed_identical_csv(tmp_path):
    cfg = _small(noise_grid=[1e-3, 1e-6], trials=2)
    a = export(run_experiment(cfg), {}, tmp_path / "a", cfg)[0].read_bytes()
    b = export(run_experiment(cfg), {}, tmp_path / "b", cfg)[0].read_bytes()
    assert a == b


def test_export_empty_is_header_only(tmp_path):
    csv_path, json_path = export([], {}, tmp_path / "empty")
    assert csv_path.read_text() == "epsilon,trial,seed,error,N,status\n"
    assert json.loads(json_path.read_text())["runtimes"] == []


def test_export_round_trip(tmp_path):
    recs = run_experiment(_small(noise_grid=[1e-3, 1e-5], trials=2))
    fits = {"log": {"note": "too few levels"}}
    csv_path, _ = export(recs, fits, tmp_path / "sweep.csv")
    assert import_records(csv_path) == recs


def test_failures_recorded_not_raised():
    # the biorthogonal route refuses a divergent exponent sequence in every trial
    recs = run_experiment(_small(eigen={"alpha": 0.5, "mu": 1}, noise_grid=[1e-3], trials=2))
    assert len(recs) == 2
    assert all(r.status.startswith("RegimeError") and r.error == "nan" for r in recs)


def test_parallel_matches_serial():
    cfg = _small(noise_grid=[1e-3, 1e-6], trials=2)
    serial = run_experiment(cfg)
    cfg.workers = 2
    par = run_experiment(cfg)
    assert [(r.epsilon, r.trial, r.error, r.N) for r in serial] == \
        [(r.epsilon, r.trial, r.error, r.N) for r in par]
