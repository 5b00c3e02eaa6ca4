"""Validation of the integration-order-replacement identities and the
binomial relation between the two weighted integral families.

Each identity equates a mixed integral (one with deterministic time
differentials, i.e. component index 0) with a combination of pure-Wiener
weighted integrals: integrating the time variables out deterministically
(Fubini) turns the time columns into polynomial weights.  Both sides are
checked two ways:

* exactly, at the level of unit-interval Fourier coefficients (rational
  arithmetic, interval-length independent), and
* empirically, by evaluating both sides on shared bases and reporting the
  mean-square difference for increasing truncation levels.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from .coeffs import coefficient_tensor, unit_coefficient, weight_vector
from .stochint import (
    GaussianBasis,
    IntegralLabel,
    expansion_value,
    sample_basis,
    step_rng,
)

Side = Callable[[GaussianBasis], np.ndarray]


@dataclass(frozen=True)
class IdentityCase:
    """Two equivalent integral expressions plus their exact-check hook."""

    name: str
    lhs: Callable[[GaussianBasis, int], np.ndarray]
    rhs: Callable[[GaussianBasis, int], np.ndarray]
    exact_check: Callable[[int], bool]
    min_p: int = 0


def _eval(i, l, kind, basis, p):
    lab = IntegralLabel(tuple(i), tuple(l), kind)
    tensor = coefficient_tensor(lab.weight, p)
    return expansion_value(lab, basis, tensor)


def _mixed_double_case(i1: int, i2: int) -> IdentityCase:
    """Triple integral with outer time differential == weighted double:
    the (i1, i2, time) unweighted triple equals Delta * I_(00) + I_(01)."""

    def lhs(basis, p):
        return _eval((i1, i2, 0), (0, 0, 0), "ito", basis, p)

    def rhs(basis, p):
        d = basis.delta
        return d * _eval((i1, i2), (0, 0), "ito", basis, p) + _eval(
            (i1, i2), (0, 1), "ito", basis, p
        )

    def exact(p):
        w3 = weight_vector((0, 0, 0))
        w00 = weight_vector((0, 0))
        w01 = weight_vector((0, 1))
        for j1 in range(p + 1):
            for j2 in range(p + 1):
                lhs_u = unit_coefficient(w3, (j1, j2, 0))
                rhs_u = 2 * unit_coefficient(w00, (j1, j2)) + unit_coefficient(
                    w01, (j1, j2)
                )
                if lhs_u != rhs_u:
                    return False
        return True

    return IdentityCase(f"mixed-double-{i1}{i2}", lhs, rhs, exact)


def _mixed_quadruple_case(i1: int, i2: int) -> IdentityCase:
    """Quadruple with alternating time differentials == weighted double:
    (i1, time, i2, time) unweighted equals
    Delta*(I_(10) - I_(01)) + I_(11) - I_(02)."""

    def lhs(basis, p):
        return _eval((i1, 0, i2, 0), (0, 0, 0, 0), "ito", basis, p)

    def rhs(basis, p):
        d = basis.delta
        return (
            d * _eval((i1, i2), (1, 0), "ito", basis, p)
            - d * _eval((i1, i2), (0, 1), "ito", basis, p)
            + _eval((i1, i2), (1, 1), "ito", basis, p)
            - _eval((i1, i2), (0, 2), "ito", basis, p)
        )

    def exact(p):
        w4 = weight_vector((0, 0, 0, 0))
        pairs = {
            (1, 0): 2,
            (0, 1): -2,
            (1, 1): 1,
            (0, 2): -1,
        }
        for j1 in range(p + 1):
            for j3 in range(p + 1):
                lhs_u = unit_coefficient(w4, (j1, 0, j3, 0))
                rhs_u = Fraction(0)
                for l, c in pairs.items():
                    rhs_u += c * unit_coefficient(weight_vector(l), (j1, j3))
                if lhs_u != rhs_u:
                    return False
        return True

    return IdentityCase(f"mixed-quadruple-{i1}{i2}", lhs, rhs, exact)


def _trivial_case(i1: int, i2: int) -> IdentityCase:
    def side(basis, p):
        return _eval((i1, i2), (0, 0), "ito", basis, p)

    return IdentityCase(f"trivial-{i1}{i2}", side, side, lambda p: True)


def identity_catalog() -> Dict[str, IdentityCase]:
    cases = [
        _mixed_double_case(1, 2),
        _mixed_double_case(1, 1),
        _mixed_quadruple_case(1, 2),
        _mixed_quadruple_case(1, 1),
        _trivial_case(1, 2),
    ]
    return {c.name: c for c in cases}


def check_identity(
    case: IdentityCase,
    p_values: Sequence[int] = (2, 4, 8),
    trials: int = 10_000,
    seed: int = 0,
    delta: float = 1.0,
    m: int = 2,
) -> dict:
    """Exact coefficient check plus shared-basis empirical differences."""
    report = {
        "case": case.name,
        "exact_coefficients_equal": bool(case.exact_check(max(p_values))),
        "delta": delta,
        "trials": trials,
        "ms_difference": {},
        "ms_scale": {},
    }
    for p in p_values:
        rng = step_rng(seed, p)
        basis = sample_basis(rng, m, p, delta, batch=trials)
        a = case.lhs(basis, p)
        b = case.rhs(basis, p)
        report["ms_difference"][p] = float(np.mean((a - b) ** 2))
        report["ms_scale"][p] = float(np.mean(a ** 2))
    return report


# ---------------------------------------------------------------------------
# binomial relation between the two weight families

def binomial_relation_holds(l: Sequence[int], p: int) -> bool:
    """Exact coefficient-level identity relating the (t - t_g)-weighted
    family to the terminal-weighted family:

        ubar_I(l) = sum_{j <= l} prod C(l_g, j_g) (-2)^{sum l - sum j} ubar_J(j)

    checked for every basis tuple up to index p.
    """
    l = tuple(int(x) for x in l)
    k = len(l)
    w = weight_vector(l)
    import itertools

    for beta in itertools.product(range(p + 1), repeat=k):
        lhs = unit_coefficient(w, beta, kind="unified")
        rhs = Fraction(0)
        for j in itertools.product(*[range(x + 1) for x in l]):
            c = Fraction(1)
            for lg, jg in zip(l, j):
                c *= comb(lg, jg)
            c *= Fraction(-2) ** (sum(l) - sum(j))
            rhs += c * unit_coefficient(weight_vector(j), beta, kind="terminal")
        if lhs != rhs:
            return False
    return True
