import numpy as np
import pytest

from analysis.errors import errors_vs
from analysis.profiles import scheme_gap_bound
from nn.trainers import TrainConfig, TrainingError
from schemes.solver_nn import InterpolantRegressor, NNSolverConfig, residual_audit, solve_nn
from schemes.solver_sl import SolverConfig, solve


def _nn_config(problem, grids, **kw):
    return NNSolverConfig(SolverConfig.for_problem(problem, grids), **kw)


@pytest.mark.parametrize("preset", ["exp1", "exp2", "exp3"])
def test_interpolant_regressor_reproduces_sl(preset, request, make_grids):
    problem = request.getfixturevalue(preset)
    grids = make_grids(problem, 8, 16, 4)
    sl = solve(problem, SolverConfig.for_problem(problem, grids))
    nn, trace = solve_nn(problem, _nn_config(problem, grids, regressor=InterpolantRegressor(grids.space)))
    assert np.max(np.abs(nn.values - sl.values)) <= 1e-12
    assert np.max(trace.eps) <= 1e-12
    assert nn.diagnostics["regressor"] == "InterpolantRegressor"


def test_constant_data_is_fitted_exactly(constant_problem, make_grids):
    grids = make_grids(constant_problem, 4, 8, 2)
    cfg = _nn_config(constant_problem, grids, hidden=3, train=TrainConfig())
    field, trace = solve_nn(constant_problem, cfg)
    assert np.all(trace.eps >= 0.0)
    assert np.max(trace.eps) <= 1e-8
    assert np.allclose(field.values, 3.0, atol=1e-6)


def test_residual_trace_matches_audit(exp3, make_grids):
    grids = make_grids(exp3, 3, 8, 2)
    cfg = _nn_config(exp3, grids, hidden=4, train=TrainConfig(max_iters=30), seed=11)
    field, trace = solve_nn(exp3, cfg)
    assert np.array_equal(residual_audit(field, trace), trace.eps)
    assert np.all(trace.eps >= 0.0)
    frame = trace.training_frame()
    assert list(frame.columns) == ["n", "m", "iters", "mse", "max_residual"]
    assert len(frame) == 3 * grids.simplex.size
    assert list(trace.to_frame().columns) == ["n", "eps"]
    assert trace.total == pytest.approx(float(np.sum(trace.eps)))


def test_obstacle_sandwich_holds_for_nn(exp3, make_grids):
    grids = make_grids(exp3, 3, 8, 2)
    field, _ = solve_nn(exp3, _nn_config(exp3, grids, hidden=4, train=TrainConfig(max_iters=20)))
    x, P = grids.space.nodes, grids.simplex.nodes
    for n, t in enumerate(grids.time.nodes):
        lower, upper = exp3.obstacle_bounds(t, x, P)
        assert np.all(field.values[n] >= lower - 1e-12)
        assert np.all(field.values[n] <= upper + 1e-12)


def test_results_do_not_depend_on_worker_count(exp3, make_grids):
    grids = make_grids(exp3, 2, 8, 2)
    kw = dict(hidden=4, train=TrainConfig(max_iters=25), seed=3)
    one, _ = solve_nn(exp3, _nn_config(exp3, grids, workers=1, **kw))
    many, _ = solve_nn(exp3, _nn_config(exp3, grids, workers=3, **kw))
    assert np.array_equal(one.values, many.values)


def test_training_failure_names_the_node(exp3, make_grids):
    def broken(x, y, warm, seed):
        raise TrainingError("diverged", np.zeros(1))

    grids = make_grids(exp3, 3, 4, 2)
    with pytest.raises(TrainingError) as info:
        solve_nn(exp3, _nn_config(exp3, grids, regressor=broken))
    assert (info.value.n, info.value.m) == (2, 0)


@pytest.mark.slow
def test_exp1_network_scheme_rates(exp1, make_grids):
    errors = []
    for size in (32, 64, 128):
        grids = make_grids(exp1, size, size, 1)
        field, _ = solve_nn(exp1, _nn_config(exp1, grids, hidden=10, seed=0))
        errors.append(errors_vs(field, exp1.exact))
    mx, rms = np.array(errors).T
    assert 7.47e-2 / 3 <= mx[1] <= 3 * 7.47e-2
    for e in (mx, rms):
        rates = np.log2(e[:-1] / e[1:])
        assert np.all((rates >= 0.6) & (rates <= 1.5)), rates


@pytest.mark.slow
@pytest.mark.parametrize("optimizer", ["br", "lm"])
def test_scheme_gap_is_within_the_error_bound(exp3, make_grids, optimizer):
    grids = make_grids(exp3, 32, 32, 32)
    sl = solve(exp3, SolverConfig.for_problem(exp3, grids))
    nn, trace = solve_nn(exp3, _nn_config(exp3, grids, hidden=10, train=TrainConfig(optimizer=optimizer)))
    assert scheme_gap_bound(nn, sl, trace.eps)["holds"]
