import math

import pytest

from gausstest.bench import BenchResult, run_bench
from gausstest.exceptions import ConfigurationError
from gausstest.simulate import ScenarioSpec


def test_power_cell_small():
    res = run_bench(ScenarioSpec(1, 50, 40, signal=2, seed=1), 6, "ind", ("rademacher",), 300)
    assert res[0].rejection_rate == 1.0 and res[0].row()["rate_pct"] == 100.0


def test_worker_invariance():
    spec = ScenarioSpec(2, 40, 10, seed=5)
    one = run_bench(spec, 8, "ind", ("rademacher", "mammen"), 200, workers=1)
    two = run_bench(spec, 8, "ind", ("rademacher", "mammen"), 200, workers=2)
    assert [r.rejections for r in one] == [r.rejections for r in two]


def test_ci_cells_run():
    spec = ScenarioSpec(7, 60, 6, m=2, seed=2)
    lasso = run_bench(spec, 2, "ci-lasso", "rademacher", 200)
    assert lasso[0].replications == 2
    fnn = run_bench(ScenarioSpec(8, 60, 4, m=2), 2, "ci-fnn", ("rademacher",), 200,
                    n3_mode="remainder")
    assert 0 <= fnn[0].rejection_rate <= 1


def test_std_error_and_row():
    r = BenchResult(ScenarioSpec(2, 100, 100), "ind", "rademacher", 500, 25, 1.234)
    assert r.rejection_rate == 0.05
    assert r.std_error == pytest.approx(math.sqrt(0.05 * 0.95 / 500))
    row = r.row()
    assert row["rate_pct"] == 5.0 and row["se_pct"] == 1.0 and row["wall_time"] == 1.23


@pytest.mark.parametrize("kwargs", [dict(replications=0), dict(test="ci-lasso"),
                                    dict(test="anova"), dict(multipliers=("uniform",))])
def test_errors(kwargs):
    args = dict(spec=ScenarioSpec(2, 40, 10), replications=2, test="ind",
                multipliers=("rademacher",), n_bootstrap=200)
    args.update(kwargs)
    with pytest.raises(ConfigurationError):
        run_bench(**args)


def test_ind_test_rejected_for_ci_example():
    with pytest.raises(ConfigurationError):
        run_bench(ScenarioSpec(6, 40, 10, m=2), 2, "ind", ("rademacher",), 200)
