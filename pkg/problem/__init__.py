from problem.spec import ProblemSpec, check_compatibility
from problem.presets import (
    PRESETS,
    get_preset,
    preset_experiment1,
    preset_experiment2,
    preset_experiment3,
    put_payoff,
)
from problem.inline import problem_from_mapping

__all__ = [
    "ProblemSpec", "check_compatibility",
    "PRESETS", "get_preset", "preset_experiment1", "preset_experiment2",
    "preset_experiment3", "put_payoff", "problem_from_mapping",
]
