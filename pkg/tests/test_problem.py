import numpy as np
import pytest

from problem import check_compatibility, get_preset, problem_from_mapping, put_payoff
from problem.presets import PUT_PENALTIES


def test_exp1_exact_solution_values(exp1):
    assert exp1.exact(0.0, 0.0) == pytest.approx(1.0)
    x = np.linspace(0, 1, 11)
    assert np.allclose(exp1.exact(1.0 / 3.0, x), -np.cos(3 * np.pi * x), atol=1e-12)
    assert exp1.diffusion(0.0, np.array([0.5]))[0] == pytest.approx(0.05)
    assert exp1.scenario_count == 1 and not exp1.has_obstacles


def test_exp1_terminal_matches_exact(exp1):
    x = np.linspace(0, 1, 17)
    g = exp1.terminal_values(x, np.ones((1, 1)))[:, 0]
    assert np.allclose(g, exp1.exact(1.0, x), atol=1e-12)


@pytest.mark.parametrize("t", [0.1, 0.3, 0.77])
def test_exp1_exact_solution_solves_the_pde(exp1, t):
    x = np.linspace(0.05, 0.95, 19)
    ht, hx = 1e-5, 1e-4
    u_t = (exp1.exact(t + ht, x) - exp1.exact(t - ht, x)) / (2 * ht)
    u_xx = (exp1.exact(t, x + hx) - 2 * exp1.exact(t, x) + exp1.exact(t, x - hx)) / hx ** 2
    a = exp1.diffusion(t, x)
    H = exp1.source_values(t, x, np.ones((1, 1)))[:, 0]
    assert np.max(np.abs(u_t + 0.5 * a ** 2 * u_xx + H)) < 1e-4


def test_exp2_source_examples(exp2):
    x = np.linspace(0, 1, 5)
    P = np.array([[0.0, 1.0], [0.3, 0.7], [1.0, 0.0]])
    assert np.allclose(exp2.source_values(0.0, x, P), 0.0)
    one = exp2.source_values(0.5, np.array([0.0]), np.array([[1 / 6, 5 / 6]]))
    assert one[0, 0] == pytest.approx(1.0)
    assert np.all(exp2.terminal_values(x, P) == 0.0)
    assert not exp2.has_obstacles


def test_exp3_payoff_and_penalty_gap(exp3):
    assert put_payoff(0.0) == pytest.approx(1.0)
    assert put_payoff(np.log(2.0)) == pytest.approx(0.0, abs=1e-15)
    assert np.all(put_payoff(np.linspace(np.log(2.0) + 1e-9, 1.0, 7)) == 0.0)

    x = np.linspace(0, 1, 9)
    P = np.array([[1.0, 0.0], [0.25, 0.75], [0.0, 1.0]])
    lower, upper = exp3.obstacle_bounds(0.4, x, P)
    assert upper[0, 0] - lower[0, 0] == pytest.approx(0.125)
    assert np.allclose(upper - lower, (P @ np.asarray(PUT_PENALTIES))[None, :], atol=1e-14)


def test_exp3_terminal_data_is_compatible_with_obstacles(exp3):
    x = np.linspace(0, 1, 33)
    P = np.stack([np.linspace(0, 1, 9), 1 - np.linspace(0, 1, 9)], axis=1)
    assert check_compatibility(exp3, x, P)


def test_unknown_preset_raises():
    with pytest.raises(ValueError, match="unknown preset"):
        get_preset("exp9")


def test_inline_problem_evaluates_expressions():
    problem = problem_from_mapping({
        "scenarios": "2", "horizon": "2", "x_lo": "0", "x_hi": "1",
        "terminal_1": "x", "terminal_2": "1 - x",
        "drift": "0.5*t", "diffusion": "x",
        "source_term": "p1*x",
    })
    x = np.array([0.0, 0.5, 1.0])
    P = np.eye(2)
    assert problem.horizon == 2.0 and problem.scenario_count == 2
    assert np.allclose(problem.terminal_values(x, P), np.stack([x, 1 - x], axis=1))
    assert np.allclose(problem.source_values(0.0, x, P), [[0, 0], [0.5, 0], [1, 0]])
    assert np.allclose(problem.drift(1.0, x), 0.5)
    assert np.allclose(problem.diffusion(0.0, x), x)
    assert not problem.has_obstacles


def test_inline_problem_obstacles_are_all_or_nothing():
    with pytest.raises(ValueError, match="upper_2"):
        problem_from_mapping({
            "scenarios": "2", "terminal_1": "x", "terminal_2": "x", "upper_1": "x + 1",
        })


def test_inline_problem_rejects_bad_expression():
    with pytest.raises(ValueError, match="terminal_1"):
        problem_from_mapping({"scenarios": "1", "terminal_1": "x +* 2"})


def test_inline_source_sees_every_belief_coordinate():
    data = {"scenarios": "11", "source_term": "p11*x + p10"}
    data.update({f"terminal_{i}": "x" for i in range(1, 12)})
    problem = problem_from_mapping(data)
    x = np.array([0.0, 0.5, 1.0])
    out = problem.source_values(0.0, x, np.eye(11))
    expected = np.zeros((3, 11))
    expected[:, 9] = 1.0
    expected[:, 10] = x
    assert np.allclose(out, expected)


def test_inline_source_rejects_coordinates_past_the_scenario_count():
    with pytest.raises(ValueError, match="source_term"):
        problem_from_mapping({"scenarios": "2", "terminal_1": "x", "terminal_2": "x", "source_term": "p3"})
