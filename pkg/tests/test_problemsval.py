import numpy as np
import pytest

from sdetaylor.problemsval import (
    binomial_relation_holds,
    check_identity,
    identity_catalog,
)


def test_catalog_contents():
    cat = identity_catalog()
    assert "mixed-double-12" in cat
    assert "mixed-quadruple-11" in cat
    assert "trivial-12" in cat


def test_exact_coefficient_identities():
    cat = identity_catalog()
    assert cat["mixed-double-12"].exact_check(6)
    assert cat["mixed-quadruple-12"].exact_check(4)


def test_trivial_case_zero_difference():
    rep = check_identity(identity_catalog()["trivial-12"], (2, 4), trials=500, seed=1)
    assert rep["ms_difference"][2] == 0.0
    assert rep["ms_difference"][4] == 0.0


@pytest.mark.parametrize("name", ["mixed-double-12", "mixed-double-11",
                                  "mixed-quadruple-12", "mixed-quadruple-11"])
def test_identity_monte_carlo(name):
    rep = check_identity(identity_catalog()[name], (2, 4, 8), trials=4000, seed=3)
    assert rep["exact_coefficients_equal"]
    # matched truncations agree up to float accumulation
    scale = max(rep["ms_scale"][8], 1e-30)
    for p in (2, 4, 8):
        assert rep["ms_difference"][p] <= 1e-22 * scale + 1e-26


@pytest.mark.parametrize(
    "l",
    [(0,), (1,), (2,), (0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)],
)
def test_binomial_relation(l):
    assert binomial_relation_holds(l, p=6)
