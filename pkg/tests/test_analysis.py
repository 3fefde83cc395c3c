import numpy as np
import pandas as pd
import pytest

from analysis.boundary import ActiveSetMask, active_sets, waiting_connected
from analysis.errors import convergence_table, errors_vs, merge_reports, reference_values
from analysis.profiles import convexity_gap, pointwise_gap, profiles, scenario_average, snapshot
from analysis.regularity import regularity_constants
from mesh.field import SolutionField


def _field(problem, grids, values):
    return SolutionField(np.asarray(values, dtype=float), grids)


def test_errors_vs_examples(exp2, make_grids):
    grids = make_grids(exp2, 2, 4, 2)
    zero = _field(exp2, grids, np.zeros(grids.shape))
    assert errors_vs(zero, np.zeros(grids.shape)) == (0.0, 0.0)

    ref = np.zeros(grids.shape)
    ref[1, 2, 0] = 0.3
    mx, rms = errors_vs(zero, ref)
    assert mx == pytest.approx(0.3)
    assert rms == pytest.approx(0.3 / np.sqrt(ref.size))

    with pytest.raises(ValueError):
        errors_vs(zero, np.zeros((1, 1, 1)))


def test_errors_vs_is_symmetric(exp2, make_grids, rng):
    grids = make_grids(exp2, 2, 4, 2)
    a = _field(exp2, grids, rng.normal(size=grids.shape))
    b = _field(exp2, grids, rng.normal(size=grids.shape))
    assert errors_vs(a, b.values) == errors_vs(b, a.values)
    assert errors_vs(a, b) == errors_vs(a, b.values)


def test_nested_reference_is_read_at_the_coarse_nodes(exp2, make_grids, rng):
    fine = _field(exp2, make_grids(exp2, 4, 8, 4), rng.normal(size=(5, 9, 5)))
    coarse = _field(exp2, make_grids(exp2, 2, 4, 2), np.zeros((3, 5, 3)))
    assert np.array_equal(reference_values(coarse, fine), fine.values[::2, ::2, ::2])


def test_callable_reference_broadcasts(exp1, make_grids):
    grids = make_grids(exp1, 4, 8, 1)
    exact = exp1.exact(grids.time.nodes[:, None, None], grids.space.nodes[None, :, None])
    field = _field(exp1, grids, np.broadcast_to(exact, grids.shape))
    mx, rms = errors_vs(field, exp1.exact)
    assert mx == pytest.approx(0.0, abs=1e-15) and rms == pytest.approx(0.0, abs=1e-15)


def test_convergence_table_rates():
    report = convergence_table([(4e-2, 0.4, 0.2), (2e-2, 0.2, 0.1), (1e-2, 0.1, 0.05)], "sl", "t")
    assert list(report.frame.columns) == ["delta", "max_error", "max_rate", "rms_error", "rms_rate"]
    assert np.isnan(report.frame["max_rate"].iloc[0])
    max_rates, rms_rates = report.rates
    assert np.allclose(max_rates, 1.0) and np.allclose(rms_rates, 1.0)

    two = convergence_table([(1.5625e-2, 6.21e-2, 3.0e-2), (7.8125e-3, 2.87e-2, 1.5e-2)])
    assert two.rates[0][0] == pytest.approx(1.11, abs=0.01)

    flat = convergence_table([(0.5, 1e-3, 1e-3), (0.25, 1e-3, 1e-3)])
    assert flat.rates[0][0] == 0.0


def test_convergence_table_rejects_bad_rows():
    with pytest.raises(ValueError):
        convergence_table([(0.1, 1.0, 1.0), (0.04, 0.5, 0.5)])
    with pytest.raises(ValueError):
        convergence_table([])
    with pytest.raises(ValueError):
        convergence_table([(0.1, 1.0)])


def test_convergence_markdown_and_merge():
    sl = convergence_table([(0.5, 0.2, 0.1), (0.25, 0.1, 0.05)], "sl", "t")
    md = sl.to_markdown()
    assert "–" in md and "max_error" in md
    nn = convergence_table([(0.5, 0.3, 0.2), (0.25, 0.2, 0.1)], "nn", "t")
    merged = merge_reports([sl, nn])
    assert "sl_max_error" in merged.columns and "nn_rms_rate" in merged.columns
    assert merge_reports([sl]).equals(sl.frame)


def test_field_on_the_upper_obstacle_is_upper_active(exp3, make_grids):
    grids = make_grids(exp3, 4, 8, 4)
    x, P = grids.space.nodes, grids.simplex.nodes
    values = np.stack([exp3.obstacle_bounds(t, x, P)[1] for t in grids.time.nodes])
    mask = active_sets(_field(exp3, grids, values), exp3, 0)
    assert mask.upper.all()
    assert not mask.lower.any()
    assert mask.counts() == {"lower": 0, "upper": grids.shape[0] * grids.shape[1], "waiting": 0}


def test_terminal_level_is_lower_active(exp3, solve_sl):
    field = solve_sl(exp3, 16, 32, 4)
    for m in range(field.grids.simplex.size):
        assert active_sets(field, exp3, m).lower[-1].all()


def test_masks_grow_with_the_tolerance(exp3, solve_sl):
    field = solve_sl(exp3, 8, 16, 4)
    prev = None
    for tol in (0.0, 1e-8, 2e-5, 1e-3, 1e-1):
        mask = active_sets(field, exp3, 0, tol=tol)
        if tol == 0.0:
            assert not mask.lower.any() and not mask.upper.any()
        if prev is not None:
            assert np.all(mask.lower[prev.lower]) and np.all(mask.upper[prev.upper])
        prev = mask
    with pytest.raises(ValueError):
        active_sets(field, exp3, 0, tol=-1.0)


def test_float_belief_matches_the_node_index(exp3, solve_sl):
    field = solve_sl(exp3, 8, 16, 4)
    by_index = active_sets(field, exp3, 1)
    by_point = active_sets(field, exp3, 0.25)
    assert np.array_equal(by_index.lower, by_point.lower)
    assert np.array_equal(by_index.upper, by_point.upper)
    with pytest.raises(ValueError):
        active_sets(field, exp3, 99)


def test_active_sets_need_obstacles(exp2, solve_sl):
    with pytest.raises(ValueError):
        active_sets(solve_sl(exp2, 2, 4, 2), exp2, 0)


def _mask(lower, upper):
    lower, upper = np.asarray(lower, dtype=bool), np.asarray(upper, dtype=bool)
    N1, L1 = lower.shape
    return ActiveSetMask(lower, upper, 2e-5, np.array([0.0, 1.0]), np.linspace(0, 1, N1), np.linspace(0, 1, L1))


def test_mask_states_and_frame():
    mask = _mask([[1, 0, 0], [1, 0, 1]], [[0, 0, 1], [0, 0, 1]])
    assert mask.states().tolist() == [["lower", "waiting", "upper"], ["lower", "waiting", "lower"]]
    frame = mask.to_frame()
    assert list(frame.columns) == ["t", "x", "state"]
    assert len(frame) == 6
    assert frame["state"].tolist()[:3] == ["lower", "waiting", "upper"]


def test_waiting_connected():
    mask = _mask(
        [[1, 0, 0, 0, 0], [1, 0, 1, 0, 0], [1, 1, 1, 1, 1]],
        [[0, 0, 0, 0, 1], [0, 0, 0, 0, 1], [0, 0, 0, 0, 0]],
    )
    assert waiting_connected(mask).tolist() == [True, False, True]


def test_upper_band_inside_the_waiting_region_keeps_it_connected():
    mask = _mask(
        [[1, 1, 0, 0, 0, 0, 0, 1], [1, 0, 1, 0, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0, 0, 0]],
        [[0, 0, 0, 1, 1, 0, 0, 0], [0, 0, 0, 0, 1, 0, 0, 0], [0, 0, 1, 1, 1, 1, 1, 1]],
    )
    assert mask.waiting[0].tolist() == [False, False, True, False, False, True, True, False]
    assert waiting_connected(mask).tolist() == [True, False, True]


@pytest.mark.slow
def test_exp3_upper_contact_near_log_strike(exp3, solve_sl):
    field = solve_sl(exp3, 64, 128, 16)
    mask = active_sets(field, exp3, 0)
    x = field.grids.space.nodes
    band = (x >= 0.65) & (x <= 0.75)
    assert mask.upper[:, band].any()
    assert mask.lower[:, x < 0.2].any()
    assert waiting_connected(mask).all()


def test_regularity_of_simple_fields(exp2, make_grids):
    grids = make_grids(exp2, 4, 8, 4)
    flat = regularity_constants(_field(exp2, grids, np.full(grids.shape, 2.0)))
    assert flat.as_dict() == {"lip_x": 0.0, "lip_p": 0.0, "hol_t": 0.0}

    c = -1.7
    affine = np.broadcast_to(c * grids.simplex.first_coordinate, grids.shape)
    report = regularity_constants(_field(exp2, grids, affine))
    assert report.lip_p == pytest.approx(abs(c))
    assert report.lip_x == 0.0 and report.hol_t == 0.0


def test_exp2_convexity_gap(exp2, solve_sl):
    constrained = solve_sl(exp2, 32, 32, 8)
    free = solve_sl(exp2, 32, 32, 8, convexify=False)
    assert convexity_gap(constrained).min() >= -1e-10
    assert convexity_gap(free).min() < -1e-3


def test_profiles_and_snapshots(exp1, exp3, solve_sl):
    field = solve_sl(exp1, 8, 16, 1)
    along_t = profiles(field, 0.25, 0.75, 1.0, "t")
    assert list(along_t.columns) == ["t", "u"] and len(along_t) == 9
    assert len(profiles(field, 0.25, 0.75, 1.0, "x")) == 17
    with pytest.raises(ValueError):
        profiles(field, 0.25, 0.75, 1.0, "q")
    with pytest.raises(ValueError):
        convexity_gap(field)

    put = solve_sl(exp3, 8, 16, 4)
    snap = snapshot(put, exp3, 0.0, 0.5)
    assert list(snap.columns) == ["x", "u", "lower", "upper"]
    assert np.all(snap["u"] >= snap["lower"] - 1e-12) and np.all(snap["u"] <= snap["upper"] + 1e-12)
    avg = scenario_average(put, exp3, 0.0)
    assert len(avg) == 17
    gap = pointwise_gap(put, put, 0.5, 0.25)
    assert isinstance(gap, pd.DataFrame) and np.all(gap["gap"] == 0.0)
