import numpy as np
import pytest

from config import ConfigError, RunConfig
from pipeline.table import TABLE_PLAN, reference_sizes, refinement_sizes, run_table


def _table(tmp_path, preset, axis, **kw):
    cfg = RunConfig(preset=preset, axis=axis, out=tmp_path, **kw).validate()
    return run_table(cfg, verbose=False)


def test_exp1_plan_holds_x_finer_than_the_finest_row():
    sizes, plan = refinement_sizes("exp1", None)
    assert sizes == [64, 128, 256, 512, 1024]
    assert plan.sizes("t", 64) == (64, 4096, 1)
    assert plan.sizes("t", 1024)[1] == 4 * sizes[-1]
    # x drags t along
    assert plan.sizes("x", 128) == (128, 128, 1)


def test_exp2_plan_and_reference():
    sizes, plan = refinement_sizes("exp2", None)
    assert sizes == [8, 16, 32]
    assert plan.sizes("t", 16) == (16, 256, 8)
    assert plan.sizes("x", 16) == (16, 16, 8)
    assert plan.sizes("p", 16) == (16, 64, 16)
    # refined axes at the reference size, held axes as in the rows
    assert reference_sizes(plan, "t", 256) == (256, 256, 8)
    assert reference_sizes(plan, "x", 256) == (256, 256, 8)
    assert reference_sizes(plan, "p", 256) == (256, 64, 256)
    for steps in (128, 200):
        with pytest.raises(ConfigError):
            reference_sizes(plan, "t", steps)


def test_levels_trim_from_the_coarse_end():
    sizes, _ = refinement_sizes("exp1", 2)
    assert sizes == [512, 1024]
    with pytest.raises(ConfigError):
        refinement_sizes("exp2", 7)


def test_every_plan_names_all_three_axes():
    for plan in TABLE_PLAN.values():
        for axis in ("t", "x", "p"):
            assert len(plan.sizes(axis, plan.finest)) == 3


@pytest.mark.slow
@pytest.mark.parametrize("axis", ["t", "x"])
def test_exp1_sl_rates_are_first_order(tmp_path, axis):
    report = _table(tmp_path, "exp1", axis)
    frame = report.frame
    assert frame["delta"].iloc[0] == pytest.approx(1.5625e-2)
    assert 6.21e-2 / 2 <= frame["max_error"].iloc[0] <= 6.21e-2 * 2
    for rates in report.rates:
        assert np.all((rates[-3:] >= 0.75) & (rates[-3:] <= 1.30)), rates


@pytest.mark.slow
@pytest.mark.parametrize("axis, band", [("t", (0.8, 1.3)), ("x", (0.4, 1.9)), ("p", (0.4, 1.9))])
def test_exp2_sl_rates_against_the_fine_reference(tmp_path, axis, band):
    report = _table(tmp_path, "exp2", axis)
    lo, hi = band
    for rates in report.rates:
        assert np.all((rates >= lo) & (rates <= hi)), rates
