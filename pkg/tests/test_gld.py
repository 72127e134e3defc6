"""Simplex projection, Langevin multistart, and the local polish step."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from portdim import comoments as cm
from portdim import gld

from conftest import iid_comoments

free_points = arrays(
    np.float64,
    st.integers(min_value=1, max_value=6),
    elements=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
)


def test_projection_known_cases():
    assert np.allclose(gld.project_simplex(np.array([2.0, 0.0, 0.0])), [1.0, 0.0, 0.0])
    assert np.allclose(gld.project_simplex(np.full(3, 0.5)), np.full(3, 1.0 / 3.0))
    w = np.array([0.2, 0.3, 0.5])
    assert np.allclose(gld.project_simplex(w), w)  # already feasible: fixed point


@given(free_points)
@settings(max_examples=100, deadline=None)
def test_projection_is_feasible_and_optimal(v):
    p = np.asarray(gld.project_simplex(v), dtype=float)
    assert np.all(p >= 0.0)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    # optimality of a Euclidean projection: (v - p)'(z - p) <= 0 for every
    # feasible z; checking the simplex vertices suffices by convexity
    inner = (v - p) @ (np.eye(v.size) - p).T
    assert np.max(inner) <= 1e-9


@given(free_points)
@settings(max_examples=50, deadline=None)
def test_project_rows_matches_single(v):
    stacked = np.vstack([v, 2.0 * v, v - 1.0])
    rows = gld.project_rows(stacked)
    for k in range(3):
        assert np.allclose(rows[k], gld.project_simplex(stacked[k]), atol=1e-12)


def test_uniform_simplex_sampling_statistics():
    rng = np.random.default_rng(0)
    draws = np.array([np.asarray(gld.sample_uniform_simplex(4, rng)) for _ in range(4000)])
    assert np.all(draws >= 0.0)
    assert np.allclose(draws.sum(axis=1), 1.0, atol=1e-12)
    # the flat Dirichlet has mean 1/n and variance (n-1)/(n^2 (n+1))
    assert np.allclose(draws.mean(axis=0), 0.25, atol=0.01)
    assert np.allclose(draws.var(axis=0), 3.0 / (16.0 * 5.0), atol=0.005)


def test_temperature_heuristic():
    assert gld.temperature(0.01, 5, 0.06) == pytest.approx(2 * 0.01 * 25 / 0.0036, rel=1e-12)


def test_gld_step_stays_feasible(c_n3):
    rng = np.random.default_rng(1)
    w = np.full(3, 1.0 / 3.0)
    for _ in range(50):
        w = np.asarray(gld.gld_step(w, c_n3, gld.GldConfig(), rng))
        assert np.all(w >= 0.0)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        gld.GldConfig(lam=0.0)
    with pytest.raises(ValueError):
        gld.GldConfig(c=-1.0)
    with pytest.raises(ValueError):
        gld.GldConfig(n_sim=0)
    with pytest.raises(ValueError):
        gld.GldConfig(n_iter=-1)


def test_local_descent_finds_iid_pair_optimum(c2_iid):
    w, value, evaluations = gld.local_descent(c2_iid, np.array([0.9, 0.1]))
    assert np.allclose(w, [0.5, 0.5], atol=1e-6)
    assert value == pytest.approx(4.5, rel=1e-10)
    assert evaluations > 0


def test_local_descent_is_monotone_from_any_start(c_n3):
    rng = np.random.default_rng(7)
    for _ in range(10):
        w0 = rng.dirichlet(np.ones(3))
        w, value, _ = gld.local_descent(c_n3, w0)
        assert value <= cm.portfolio_kurtosis(w0, c_n3) + 1e-12
        assert np.all(w >= 0.0) and w.sum() == pytest.approx(1.0, abs=1e-12)
        # first-order stationarity of the projected point
        mapped = gld.project_simplex(w - cm.kurtosis_gradient(w, c_n3))
        assert np.linalg.norm(w - np.asarray(mapped)) < 1e-6


def test_barrier_descent_finds_iid_pair_optimum(c2_iid):
    w, value, evaluations = gld.barrier_descent(c2_iid, np.array([0.9, 0.1]))
    assert np.allclose(w, [0.5, 0.5], atol=1e-7)
    assert value == pytest.approx(4.5, rel=1e-10)
    assert evaluations > 0


def test_barrier_descent_stays_interior_and_stationary(c_n3):
    rng = np.random.default_rng(11)
    for _ in range(10):
        w0 = rng.dirichlet(np.ones(3))
        w, value, _ = gld.barrier_descent(c_n3, w0)
        assert np.all(w > 0.0)  # iterates never touch a face exactly
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        # the endpoint is a critical point of kappa restricted to the
        # simplex hyperplane, up to the residual barrier force mu_end/w
        grad = cm.kurtosis_gradient(w, c_n3) - 1e-9 / w
        reduced = grad - grad.mean()
        assert np.linalg.norm(reduced) < 1e-5


def test_barrier_descent_deterministic(c_n3):
    w0 = np.array([0.2, 0.5, 0.3])
    first = gld.barrier_descent(c_n3, w0)
    second = gld.barrier_descent(c_n3, w0)
    assert np.array_equal(first[0], second[0])
    assert first[1] == second[1]


def test_barrier_descent_rejects_boundary_start(c_n3):
    with pytest.raises(ValueError):
        gld.barrier_descent(c_n3, np.array([0.5, 0.5, 0.0]))


def small_cfg(**kw):
    base = dict(n_sim=40, n_iter=300, seed=3)
    base.update(kw)
    return gld.GldConfig(**base)


def test_multistart_finds_iid_pair_optimum(c2_iid):
    result = gld.multistart(c2_iid, small_cfg())
    assert np.allclose(np.asarray(result.best_weights), [0.5, 0.5], atol=1e-4)
    assert result.best_kurtosis == pytest.approx(4.5, rel=1e-6)
    assert result.evaluations > 0


def test_multistart_is_deterministic(c_n3):
    a = gld.multistart(c_n3, small_cfg())
    b = gld.multistart(c_n3, small_cfg())
    assert np.array_equal(np.asarray(a.best_weights), np.asarray(b.best_weights))
    assert a.best_kurtosis == b.best_kurtosis
    assert np.array_equal(a.path_best_values, b.path_best_values)
    c = gld.multistart(c_n3, small_cfg(seed=4))
    assert not np.array_equal(a.path_best_values, c.path_best_values)


def test_paths_own_independent_substreams(c_n3):
    # growing n_sim appends new paths without disturbing existing ones
    small = gld.multistart(c_n3, small_cfg(n_sim=8))
    large = gld.multistart(c_n3, small_cfg(n_sim=16))
    assert np.array_equal(large.path_best_values[:8], small.path_best_values)


def test_recorded_paths_share_prefix_across_budgets(c_n3):
    short = gld.multistart(c_n3, small_cfg(n_iter=100), record_paths=(2,))
    long = gld.multistart(c_n3, small_cfg(n_iter=200), record_paths=(2,))
    trace_short = short.recorded_paths[2]
    trace_long = long.recorded_paths[2]
    assert trace_short.shape == (101, 3)
    assert trace_long.shape == (201, 3)
    assert np.array_equal(trace_long[:101], trace_short)


def test_polish_never_hurts(c_n3):
    polished = gld.multistart(c_n3, small_cfg())
    raw = gld.multistart(c_n3, small_cfg(polish=False))
    assert polished.best_kurtosis <= polished.pre_polish_kurtosis + 1e-15
    assert raw.best_kurtosis == raw.pre_polish_kurtosis
    assert not raw.polish_applied
    # both runs see identical paths, so the pre-polish values agree
    assert raw.pre_polish_kurtosis == polished.pre_polish_kurtosis


def test_final_iterate_summary_shape(c_n3):
    result = gld.multistart(c_n3, small_cfg(n_sim=25))
    summary = result.final_summary
    assert summary.bin_edges.shape == (201,)
    assert summary.counts.shape == (3, 200)
    assert np.all(summary.counts.sum(axis=1) == 25)


def test_multistart_result_weights_are_feasible(c_n3):
    result = gld.multistart(c_n3, small_cfg())
    w = np.asarray(result.best_weights)
    assert np.all(w >= 0.0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert 0 <= result.best_path < 40
