import numpy as np
import pytest

from dipm import opcheck


def test_battery_passes_on_small_grid():
    results = opcheck.run_battery(seed=3, n_fields=10, n=64)
    assert [r.name for r in results] == list(opcheck.CHECKS)
    for r in results:
        assert r.passed, r.line()


@pytest.mark.parametrize("name", opcheck.CHECKS)
def test_injected_fault_fails_only_that_check(name):
    results = opcheck.run_battery(seed=1, n_fields=4, n=32, inject=(name,))
    failed = [r.name for r in results if not r.passed]
    assert failed == [name]


def test_unknown_check_name():
    with pytest.raises(ValueError, match="unknown check"):
        opcheck.run_battery(n_fields=1, n=16, inject=("nope",))


def test_random_field_is_band_limited(grid64):
    f = opcheck.random_field(grid64, np.random.default_rng(0))
    assert np.all(f.data[~grid64.dealias_mask(2 / 3)] == 0)


def test_result_formatting():
    r = opcheck.CheckResult("x", 1e-13, 1e-11, True, "n=3")
    assert r.line() == "PASS x: error=1.000e-13 tol=1.0e-11 n=3"
    assert r.as_dict()["passed"] is True
