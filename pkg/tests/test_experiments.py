import numpy as np
import pytest
from oracles import gd_iterations_to_tolerance

from frodo.experiments import (
    FederatedSpec,
    SweepSpec,
    draw_hyperparameters,
    rounds_to_target,
    run_experiment1,
    run_experiment2,
)
from frodo.stats import summarize


def test_single_no_memory_run_matches_closed_form_count():
    spec = SweepSpec(variants=("no_memory",), draws=1, start_points=((0.6, 0.8),), uniform_starts=0, seed=5)
    report = run_experiment1(spec)
    assert report["total_runs"] == 1
    (run,) = report["runs"]
    alpha = run["optimizer"]["alpha"]
    expected = gd_iterations_to_tolerance([1.0, 0.01], (0.6, 0.8), alpha, 1e-3)
    assert run["status"] == "converged"
    assert run["iterations"] == expected


def test_draws_follow_ranges_and_seed():
    spec = SweepSpec(draws=200, seed=9)
    draws = draw_hyperparameters(spec)
    assert draws == draw_hyperparameters(SweepSpec(draws=200, seed=9))
    assert draws != draw_hyperparameters(SweepSpec(draws=200, seed=10))
    for d in draws:
        assert 0.6 <= d.alpha <= 1.0
        assert d.alpha / 2.5 <= d.beta <= d.alpha / 1.5
        assert 0.1 <= d.lam <= 0.2
        assert 80 <= d.horizon <= 100 and isinstance(d.horizon, int)
    assert {d.horizon for d in draws} >= {80, 100}


@pytest.fixture(scope="module")
def small_sweep():
    spec = SweepSpec(draws=4, uniform_starts=2, rounds=4000, seed=3)
    return spec, run_experiment1(spec)


def test_report_totals_and_pairing(small_sweep):
    spec, report = small_sweep
    runs = report["runs"]
    assert report["total_runs"] == len(runs) == 3 * 4 * (4 + 2)
    for draw in range(4):
        per_variant = {r["variant"]: r["optimizer"] for r in runs if r["draw"] == draw}
        assert len({o["alpha"] for o in per_variant.values()}) == 1
        assert per_variant["fractional"]["beta"] == per_variant["heavy_ball"]["beta"]
        assert per_variant["heavy_ball"]["horizon"] == 1
        assert "beta" not in per_variant["no_memory"]


def test_summaries_recompute_from_runs(small_sweep):
    spec, report = small_sweep
    for variant, groups in report["summaries"].items():
        uni = [r for r in report["runs"] if r["variant"] == variant and r["start_label"].startswith("uniform")]
        conv = [r["iterations"] for r in uni if r["status"] == "converged"]
        assert groups["uniform"]["iterations"] == summarize(conv).to_dict()
        assert groups["uniform"]["runs"] == len(uni)
        assert groups["1,0"]["runs"] == 4


def test_report_states_convergence_tolerance(small_sweep):
    _, report = small_sweep
    assert "0.001" in report["convergence_criterion"]


def test_parallel_matches_serial(small_sweep):
    spec, report = small_sweep
    assert run_experiment1(spec, parallel=2) == report


def test_rounds_to_target():
    assert rounds_to_target([5.0, 3.0, 2.0, 1.0], 2.5) == 2
    assert rounds_to_target([1.0, 3.0, 2.0], 2.5) == 2  # round 0 never counts
    assert rounds_to_target([5.0, 4.0], 1.0) is None


def test_small_federated_run_is_deterministic_and_recorded():
    spec = FederatedSpec(repetitions=3, rounds=15, samples_per_agent=100, hidden=(8,), batch_size=16,
                         n_features=20, data_source="synthetic", seed=4)
    a = run_experiment2(spec)
    b = run_experiment2(spec)
    assert a == b
    assert len(a["runs"]) == 5 * 3
    reps = a["repetitions"]
    assert len({r["partition_fingerprint"] for r in reps}) == 3
    assert len({r["init_fingerprint"] for r in reps}) == 3
    # within a repetition every variant shares data and initial weights
    for rep in range(3):
        prints = {(r["partition_fingerprint"], r["init_fingerprint"]) for r in a["runs"] if r["repetition"] == rep}
        assert len(prints) == 1
    curves = [r["loss_curve"] for r in a["runs"]]
    assert all(len(c) == 16 for c in curves)
    assert all(np.isfinite(c).all() for c in curves)
