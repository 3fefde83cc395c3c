import numpy as np
import pytest

from analysis.errors import errors_vs
from analysis.regularity import lip_p_bound, regularity_constants
from problem import problem_from_mapping
from problem.spec import ProblemSpec
from schemes.envelope import is_discretely_convex
from schemes.solver_sl import SolverConfig, SolverError, one_step_dpp, solve


def test_constants_are_preserved(constant_problem, solve_sl):
    field = solve_sl(constant_problem, 8, 8, 4)
    assert np.allclose(field.values, 3.0, atol=1e-12)
    assert field.diagnostics["scheme"] == "sl"
    assert field.diagnostics["extrapolation"] == "clamp"


def test_default_flags_follow_the_problem(exp1, exp2, exp3, make_grids):
    c1 = SolverConfig.for_problem(exp1, make_grids(exp1, 4, 4, 1))
    c2 = SolverConfig.for_problem(exp2, make_grids(exp2, 4, 4, 4))
    c3 = SolverConfig.for_problem(exp3, make_grids(exp3, 4, 4, 4))
    assert (c1.clamp_obstacles, c1.convexify, c1.source) == (False, False, True)
    assert (c2.clamp_obstacles, c2.convexify, c2.source) == (False, True, True)
    assert (c3.clamp_obstacles, c3.convexify, c3.source) == (True, True, False)
    with pytest.raises(ValueError):
        SolverConfig.for_problem(exp1, make_grids(exp1, 4, 4, 1), convexify=True)
    with pytest.raises(ValueError):
        SolverConfig.for_problem(exp2, make_grids(exp2, 4, 4, 4), clamp=True)


def test_grids_must_match_the_problem(exp2, make_grids):
    cfg = SolverConfig.for_problem(exp2, make_grids(exp2, 4, 4, 4))
    args = (exp2.drift, exp2.diffusion, exp2.terminal)
    with pytest.raises(ValueError, match="horizon"):
        cfg.check(ProblemSpec("longer", 2.0, 2, *args, exp2.domain))
    with pytest.raises(ValueError, match="domain"):
        cfg.check(ProblemSpec("wider", 1.0, 2, *args, (0.0, 2.0)))
    with pytest.raises(ValueError, match="scenario count"):
        cfg.check(ProblemSpec("three", 1.0, 3, *args, exp2.domain))


def test_exp3_sandwich_and_convexity(exp3, solve_sl):
    field = solve_sl(exp3, 16, 32, 8)
    g = field.grids
    x, P = g.space.nodes, g.simplex.nodes
    assert np.array_equal(field.values[-1], exp3.terminal_values(x, P))
    for n, t in enumerate(g.time.nodes):
        lower, upper = exp3.obstacle_bounds(t, x, P)
        assert np.all(field.values[n] >= lower - 1e-12)
        assert np.all(field.values[n] <= upper + 1e-12)
        for l in range(len(x)):
            assert is_discretely_convex(g.simplex, field.values[n, l], atol=1e-10)
    assert np.max(np.abs(field.values)) <= 1.0 + max(0.125, 0.065) + 1e-12


def test_exp3_lipschitz_in_p_is_bounded_by_the_data(exp3, solve_sl):
    field = solve_sl(exp3, 16, 32, 8)
    assert regularity_constants(field).lip_p <= lip_p_bound(exp3, field) + 1e-8


def test_raising_terminal_data_never_lowers_the_solution(solve_sl):
    base = {"scenarios": "2", "drift": "0.05", "diffusion": "0.3"}
    low = problem_from_mapping({**base, "terminal_1": "x", "terminal_2": "1 - x"})
    high = problem_from_mapping({**base, "terminal_1": "x + 0.1", "terminal_2": "1 - x + 0.2*x*x"})
    u_low = solve_sl(low, 8, 16, 6).values
    u_high = solve_sl(high, 8, 16, 6).values
    assert np.all(u_high >= u_low - 1e-12)


@pytest.mark.parametrize("preset", ["exp2", "exp3"])
def test_one_step_programming_identity(preset, request, make_grids):
    problem = request.getfixturevalue(preset)
    grids = make_grids(problem, 2, 8, 4)
    config = SolverConfig.for_problem(problem, grids)
    field = solve(problem, config)
    for n in range(grids.time.steps):
        assert np.max(np.abs(one_step_dpp(problem, config, field, n) - field.values[n])) <= 1e-10


def _random_obstacle_problem(rng):
    a, b, c = rng.normal(size=(3, 2))
    k = rng.integers(1, 4, size=2)
    below, above = rng.uniform(0.01, 0.3, size=(2, 2))
    mu, sigma = rng.uniform(-0.2, 0.2), rng.uniform(0.05, 0.5)

    def g(x):
        x = np.asarray(x, dtype=float)[..., None]
        return a + b * x + c * np.sin(k * np.pi * x)

    return ProblemSpec(
        "random", float(rng.uniform(0.5, 2.0)), 2,
        drift=lambda t, x: np.full_like(x, mu),
        diffusion=lambda t, x: np.full_like(x, sigma),
        terminal=g, domain=(0.0, 1.0),
        lower_obstacle=lambda t, x: g(x) - below,
        upper_obstacle=lambda t, x: g(x) + above,
    )


@pytest.mark.parametrize("seed", range(6))
def test_one_step_programming_identity_on_random_problems(seed, make_grids):
    problem = _random_obstacle_problem(np.random.default_rng(seed))
    grids = make_grids(problem, 2, 8, 5)
    config = SolverConfig.for_problem(problem, grids)
    assert config.convexify and config.clamp_obstacles
    field = solve(problem, config)
    for n in range(grids.time.steps):
        assert np.max(np.abs(one_step_dpp(problem, config, field, n) - field.values[n])) <= 1e-10


def test_exp2_envelope_is_active(exp2, make_grids):
    grids = make_grids(exp2, 8, 16, 8)
    free = solve(exp2, SolverConfig.for_problem(exp2, grids, convexify=False))
    assert not all(is_discretely_convex(grids.simplex, free.values[0, l]) for l in range(17))


def test_exp1_error_against_exact_solution(exp1, solve_sl):
    field = solve_sl(exp1, 64, 1024, 1)
    mx, rms = errors_vs(field, exp1.exact)
    assert 6.21e-2 / 2 <= mx <= 6.21e-2 * 2
    assert rms < mx
    assert field.diagnostics["clamped_successors"] == 0
    assert abs(field.value_at(0.25, 0.75, 1.0) - float(exp1.exact(0.25, 0.75))) <= 0.1


def test_exp2_successors_never_leave_the_domain(exp2, solve_sl):
    assert solve_sl(exp2, 16, 32, 4).diagnostics["clamped_successors"] == 0


def test_nan_terminal_data_reports_the_node(solve_sl):
    bad = ProblemSpec(
        "bad", 1.0, 1,
        drift=lambda t, x: np.zeros_like(x), diffusion=lambda t, x: np.zeros_like(x),
        terminal=lambda x: np.where(x > 0.5, np.nan, 0.0)[:, None], domain=(0.0, 1.0),
    )
    with pytest.raises(SolverError) as info:
        solve_sl(bad, 4, 4, 1)
    assert (info.value.n, info.value.l, info.value.m) == (4, 3, 0)


def test_nan_coefficients_abort_at_the_level(solve_sl):
    bad = ProblemSpec(
        "bad", 1.0, 1,
        drift=lambda t, x: np.where(t < 0.5, np.nan, 0.0) * np.ones_like(x),
        diffusion=lambda t, x: np.zeros_like(x),
        terminal=lambda x: np.zeros((len(x), 1)), domain=(0.0, 1.0),
    )
    with pytest.raises(SolverError) as info:
        solve_sl(bad, 4, 4, 1)
    assert info.value.n == 1 and info.value.l == 0
