"""Simplex partition geometry, cell bounds, and the branch-and-bound loop."""

import itertools
import math

import numpy as np
import pytest

from portdim import bbsolve as bb
from portdim import comoments as cm

from conftest import iid_comoments

EW_GRID_STEP = 0.01


def barycentric_grid(vertices, step=0.1):
    """All points with barycentric coordinates on a uniform grid inside the cell."""
    m = vertices.shape[0]
    k = round(1.0 / step)
    combos = [
        np.array(c, dtype=float) / k
        for c in itertools.product(range(k + 1), repeat=m)
        if sum(c) == k
    ]
    return np.array(combos) @ vertices


def grid_max_h(c, vertices, step):
    pts = barycentric_grid(vertices, step)
    variance, _, mu4 = cm.batch_moments(pts, c)
    return float(np.max(variance**2 / mu4))


# ---------------------------------------------------------------------------
# geometry


def test_cell_barycenter_and_validation():
    cell = bb.SimplexCell(np.eye(3))
    assert np.allclose(cell.barycenter, np.full(3, 1.0 / 3.0))
    assert cell.n_vertices == 3
    with pytest.raises(ValueError):
        bb.SimplexCell(np.ones((2, 3)))


def test_longest_edge_tie_breaks_to_smallest_pair():
    # the unit simplex has all edges equal: the (0, 1) pair must win
    cell = bb.SimplexCell(np.eye(4))
    i, j, length = cell.longest_edge()
    assert (i, j) == (0, 1)
    assert length == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_unit_simplex_volume():
    # the 2-simplex spanned by e1, e2, e3 is an equilateral triangle with
    # side sqrt(2): area sqrt(3)/2
    assert bb.SimplexCell(np.eye(3)).volume() == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-12)
    assert bb.SimplexCell(np.eye(2)).volume() == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_bisect_children_tile_parent():
    parent = bb.SimplexCell(np.eye(3), id=0)
    a, b = bb.bisect(parent, first_child_id=1)
    assert a.id == 1 and b.id == 2
    assert a.depth == b.depth == 1
    assert a.volume() + b.volume() == pytest.approx(parent.volume(), rel=1e-12)
    # both children contain the split-edge midpoint as a vertex
    mid = 0.5 * (parent.vertices[0] + parent.vertices[1])
    assert any(np.allclose(v, mid) for v in a.vertices)
    assert any(np.allclose(v, mid) for v in b.vertices)


def test_repeated_bisection_shrinks_cells():
    cell = bb.SimplexCell(np.eye(3))
    first_length = cell.longest_edge()[2]
    for _ in range(20):
        cell, _ = bb.bisect(cell)
    assert cell.longest_edge()[2] < 0.01 * first_length


def test_bisect_rejects_degenerate_cell():
    flat = np.array([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError, match="degenerate"):
        bb.bisect(bb.SimplexCell(flat))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_barycentric_subdivision_counts_and_volume(m):
    cell = bb.SimplexCell(np.eye(m))
    children = bb.barycentric_subdivide(cell)
    assert len(children) == math.factorial(m)
    total = sum(child.volume() for child in children)
    assert total == pytest.approx(cell.volume(), rel=1e-10)
    # every child vertex set contains the parent barycenter
    for child in children:
        assert any(np.allclose(v, cell.barycenter) for v in child.vertices)


def test_barycentric_subdivision_guard():
    with pytest.raises(ValueError):
        bb.barycentric_subdivide(bb.SimplexCell(np.eye(7)))


def test_cut_points_layout():
    cell = bb.SimplexCell(np.eye(3))
    assert np.array_equal(bb.cut_points(cell, 1), cell.vertices)
    pts = bb.cut_points(cell, 2)
    assert pts.shape == (6, 3)
    # the extra three points are vertex-barycenter midpoints
    expected = 0.5 * cell.vertices + 0.5 * cell.barycenter[None, :]
    assert np.allclose(pts[3:], expected)
    # all points stay inside the cell (valid barycentric coordinates)
    assert np.all(pts >= -1e-15) and np.allclose(pts.sum(axis=1), 1.0)


# ---------------------------------------------------------------------------
# alpha floor and cell bounds


def test_alpha_floor_exact_on_iid_pair(c2_iid):
    # min of mu4 over the 2-simplex: at equal weights, mu4 = 1.125
    alpha = bb.alpha_floor(c2_iid, bb.BbConfig())
    assert alpha == pytest.approx(0.999 * 1.125, abs=1e-9)


def test_alpha_floor_is_a_true_floor(c_n3):
    alpha = bb.alpha_floor(c_n3, bb.BbConfig())
    pts = barycentric_grid(np.eye(3), step=0.05)
    mu4 = cm.batch_moments(pts, c_n3)[2]
    assert alpha <= mu4.min() + 1e-12


def test_bound_soundness_and_dominance_on_root(c_n3):
    alpha = bb.alpha_floor(c_n3, bb.BbConfig())
    root = bb.SimplexCell(np.eye(3))
    ub_lp1, cand1 = bb.bound_lp1(root, c_n3, alpha)
    ub_lp2_1, _ = bb.bound_lp2(root, c_n3, alpha, 1)
    ub_lp2_2, _ = bb.bound_lp2(root, c_n3, alpha, 2)
    ub_lp2_4, _ = bb.bound_lp2(root, c_n3, alpha, 4)
    ub_milp, cand_m = bb.bound_milp(root, c_n3, alpha)
    h_max = grid_max_h(c_n3, root.vertices, step=0.02)
    for ub in (ub_lp1, ub_lp2_1, ub_lp2_2, ub_lp2_4, ub_milp):
        assert ub >= h_max - 1e-9
    # more tangent cuts never loosen the bound
    assert ub_lp2_1 <= ub_lp1 + 1e-12
    assert ub_lp2_2 <= ub_lp2_1 + 1e-12
    assert ub_lp2_4 <= ub_lp2_2 + 1e-12
    # piecewise envelope beats the affine one under the same single cut,
    # and on the root cell it beats the multi-cut bounds as well
    assert ub_milp <= ub_lp1 + 1e-12
    assert ub_milp <= ub_lp2_2 + 1e-12
    # candidates are feasible points
    for cand in (cand1, cand_m):
        assert cand is not None
        assert np.all(cand >= 0.0) and cand.sum() == pytest.approx(1.0, abs=1e-12)


def test_milp_dominates_lp1_on_descendants(c_n3):
    # the structural half of the dominance story holds on every cell
    alpha = bb.alpha_floor(c_n3, bb.BbConfig())
    cells = [bb.SimplexCell(np.eye(3))]
    for _ in range(2):
        cells.extend(child for cell in list(cells) for child in bb.bisect(cell))
    for cell in cells:
        ub_lp1, _ = bb.bound_lp1(cell, c_n3, alpha)
        ub_milp, _ = bb.bound_milp(cell, c_n3, alpha)
        assert ub_milp <= ub_lp1 + 1e-9


def test_bound_is_tight_on_tiny_cell(c_n3):
    # the gap closes linearly with the cell diameter (the bound tracks the
    # cell max of h, which moves away from the center value at first order)
    w = np.array([0.2, 0.5, 0.3])
    alpha = bb.alpha_floor(c_n3, bb.BbConfig())
    variance, _, mu4 = cm.portfolio_moments(w, c_n3)
    h_w = variance**2 / mu4
    gaps = []
    for eps in (1e-4, 1e-7):
        vertices = w[None, :] + eps * (np.eye(3) - w[None, :])
        ub, _ = bb.bound_lp1(bb.SimplexCell(vertices), c_n3, alpha)
        assert ub >= h_w - 1e-12
        gaps.append(ub / h_w - 1.0)
    assert gaps[0] < 1e-3
    assert gaps[1] == pytest.approx(0.0, abs=1e-6)


def test_bound_requires_positive_alpha(c_n3):
    root = bb.SimplexCell(np.eye(3))
    with pytest.raises(ValueError):
        bb.bound_lp1(root, c_n3, 0.0)
    with pytest.raises(ValueError):
        bb.bound_milp(root, c_n3, -1.0)


def test_milp_guard_on_large_cells():
    c = iid_comoments(7)
    with pytest.raises(ValueError, match="binary budget"):
        bb.bound_milp(bb.SimplexCell(np.eye(7)), c, 1.0)


# ---------------------------------------------------------------------------
# solver


def test_config_validation():
    with pytest.raises(ValueError):
        bb.BbConfig(rho_tol=1.0)
    with pytest.raises(ValueError):
        bb.BbConfig(bound_mode="lp3")
    with pytest.raises(ValueError):
        bb.BbConfig(n_c=0)
    with pytest.raises(ValueError):
        bb.BbConfig(max_seconds=0.0)
    with pytest.raises(ValueError):
        bb.BbConfig(alpha_safety=1.5)


def test_single_asset_is_trivial():
    c = iid_comoments(1, kurt=6.0)
    result = bb.solve(c)
    assert result.status == "optimal"
    assert result.iterations == 0
    assert np.array_equal(np.asarray(result.incumbent), np.array([1.0]))
    assert result.kurtosis == pytest.approx(6.0, rel=1e-12)
    assert result.fraction_deleted[-1] == 1.0


@pytest.mark.parametrize("mode,n_c", [("lp1", 1), ("lp2", 1), ("lp2", 3), ("milp", 1)])
def test_iid_pair_optimum_is_equal_weight(c2_iid, mode, n_c):
    cfg = bb.BbConfig(rho_tol=1e-4, bound_mode=mode, n_c=n_c)
    result = bb.solve(c2_iid, cfg)
    assert result.status == "optimal"
    assert np.allclose(np.asarray(result.incumbent), [0.5, 0.5], atol=1e-3)
    assert result.kurtosis == pytest.approx(4.5, rel=1e-4)


def test_solve_histories_and_certificate(c_n3):
    cfg = bb.BbConfig(rho_tol=1e-2, bound_mode="lp2", n_c=1)
    result = bb.solve(c_n3, cfg)
    assert result.status == "optimal"
    # init row + one per iteration + terminal row
    assert len(result.lower_bounds) == result.iterations + 2
    assert np.all(np.diff(result.lower_bounds) >= 0.0)
    assert np.all(np.diff(result.upper_bounds) <= 0.0)
    assert (1.0 - cfg.rho_tol) * result.upper_bounds[-1] <= result.lower_bounds[-1] + 1e-15
    assert result.fraction_deleted[-1] == 1.0
    assert np.all((result.fraction_deleted >= 0.0) & (result.fraction_deleted <= 1.0))
    # kurtosis-space views are the inverses, in matching order
    assert np.allclose(result.kurtosis_lower_bounds, 1.0 / result.upper_bounds)
    assert result.kurtosis == pytest.approx(1.0 / result.incumbent_value, rel=1e-15)
    w = np.asarray(result.incumbent)
    assert np.all(w >= 0.0) and w.sum() == pytest.approx(1.0, abs=1e-12)


def test_solve_matches_grid_oracle(c_n3):
    cfg = bb.BbConfig(rho_tol=1e-3, bound_mode="lp2", n_c=1)
    result = bb.solve(c_n3, cfg)
    grid_min_kurt = 1.0 / grid_max_h(c_n3, np.eye(3), step=EW_GRID_STEP)
    assert result.kurtosis <= grid_min_kurt * (1.0 + cfg.rho_tol + 1e-9)


def test_solve_is_deterministic(c_n3):
    cfg = bb.BbConfig(rho_tol=1e-2)
    a = bb.solve(c_n3, cfg)
    b = bb.solve(c_n3, cfg)
    assert np.array_equal(a.lower_bounds, b.lower_bounds)
    assert np.array_equal(a.upper_bounds, b.upper_bounds)
    assert np.array_equal(np.asarray(a.incumbent), np.asarray(b.incumbent))
    assert a.iterations == b.iterations and a.cells_fathomed == b.cells_fathomed


def test_fathomed_cells_never_hide_the_optimum(c_n3):
    # audit: inside every fathomed cell, a grid search stays below the
    # fathoming threshold LB / (1 - rho_tol)
    cfg = bb.BbConfig(rho_tol=1e-2, collect_cells=True)
    result = bb.solve(c_n3, cfg)
    assert result.fathomed_cells
    assert not result.live_cells  # everything is deleted on optimal exit
    for cell, lb_at_deletion in result.fathomed_cells:
        cell_max = grid_max_h(c_n3, cell.vertices, step=0.1)
        assert cell_max <= lb_at_deletion / (1.0 - cfg.rho_tol) + 1e-9


def test_lp1_needs_more_iterations_than_lp2(c_n3):
    lp1 = bb.solve(c_n3, bb.BbConfig(rho_tol=1e-3, bound_mode="lp1"))
    lp2 = bb.solve(c_n3, bb.BbConfig(rho_tol=1e-3, bound_mode="lp2", n_c=1))
    assert lp2.iterations < lp1.iterations
    assert lp1.kurtosis == pytest.approx(lp2.kurtosis, rel=2e-3)


def test_iteration_limit_status(c_n3):
    result = bb.solve(c_n3, bb.BbConfig(rho_tol=1e-6, max_iterations=3))
    assert result.status == "iteration_limit"
    assert result.iterations == 3
    w = np.asarray(result.incumbent)
    assert np.all(w >= 0.0) and w.sum() == pytest.approx(1.0, abs=1e-12)
    # the gap is honest: bounds still bracket the unknown optimum
    assert result.lower_bounds[-1] <= result.upper_bounds[-1]


def test_time_limit_status(c_n3):
    result = bb.solve(c_n3, bb.BbConfig(rho_tol=1e-9, max_seconds=1e-6))
    assert result.status == "time_limit"
    assert result.lower_bounds[-1] <= result.upper_bounds[-1]


def test_milp_mode_solves_small_instance(c2_iid):
    result = bb.solve(c2_iid, bb.BbConfig(rho_tol=1e-3, bound_mode="milp"))
    assert result.status == "optimal"
    assert result.kurtosis == pytest.approx(4.5, rel=1e-3)
