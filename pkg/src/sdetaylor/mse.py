"""Exact mean-square error calculus for truncated expansions.

Everything here reduces to exact rational arithmetic in units of a power of
the interval length: the squared kernel norm of a weighted simplex integral
is Delta^{k+2L} times a rational, and so is every coefficient product, so
exact errors are computed as rationals and converted to float only at the
API boundary.

The exact Ito error follows the permutation rule: the subtracted bilinear
term pairs each coefficient with the sum of coefficients over all index
permutations that fix the component pattern.  For pairwise distinct
components this collapses to the plain sum of squared coefficients, which
is also the exact Stratonovich error in that case.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

from .coeffs import (
    UnsupportedShapeError,
    WeightVector,
    coefficient_tensor,
    weight_vector,
)
from .exactpoly import RationalPoly, antiderivative, monomial_weight
from .stochint import IntegralLabel

DEFAULT_P_MAX = 256
PERMUTATION_BUDGET = 20_000_000


@dataclass(frozen=True)
class ErrorQuery:
    """One truncation-error evaluation request."""

    label: IntegralLabel
    p: int
    delta: float = 1.0


class RepeatedIndexError(ValueError):
    """Signals that only a bound is available for this index pattern."""


def kernel_norm_unit(weight: WeightVector) -> Fraction:
    """Exact ||K||^2 in units Delta^{k+2L}.

    Nested simplex integral of prod (t - t_g)^{2 l_g}; on the unit cube each
    factor becomes ((1+x)/2)^{2l} and each variable contributes 1/2.
    """
    prev = RationalPoly([1])
    for ll in weight.l:
        integrand = monomial_weight(2 * ll, +1) * prev
        prev = antiderivative(integrand, Fraction(-1))
    total = prev(Fraction(1))
    return total / Fraction(2) ** (weight.k + 2 * weight.total_weight)


def kernel_norm(weight: WeightVector, delta: float = 1.0) -> float:
    return float(kernel_norm_unit(weight)) * delta ** (
        weight.k + 2 * weight.total_weight
    )


def _index_permutations(i: Sequence[int]) -> list[Tuple[int, ...]]:
    """Permutations of positions that leave the component pattern fixed."""
    k = len(i)
    return [
        perm
        for perm in itertools.permutations(range(k))
        if all(i[perm[g]] == i[g] for g in range(k))
    ]


def _sq_normalization(j: Sequence[int], weight: WeightVector) -> Fraction:
    acc = Fraction(1)
    for jj in j:
        acc *= 2 * jj + 1
    return acc / Fraction(4) ** (weight.k + weight.total_weight)


def exact_mse_ito_unit(weight: WeightVector, i: Sequence[int], p: int) -> Fraction:
    """Exact Ito truncation error in units Delta^{k+2L} (rational)."""
    if any(x == 0 for x in i):
        raise UnsupportedShapeError(
            "exact Ito errors are stated for Wiener components only (no index 0)"
        )
    if len(i) != weight.k:
        raise ValueError("component pattern length must match multiplicity")
    perms = _index_permutations(i)
    k = weight.k
    if len(perms) * (p + 1) ** k > PERMUTATION_BUDGET:
        raise ValueError("permutation sum exceeds the computation budget")
    tensor = coefficient_tensor(weight, p)
    total = kernel_norm_unit(weight)
    if len(perms) == 1:
        for j in itertools.product(range(p + 1), repeat=k):
            u = tensor.unit(j)
            if u:
                total -= _sq_normalization(j, weight) * u * u
        return total
    for j in itertools.product(range(p + 1), repeat=k):
        u = tensor.unit(j)
        if not u:
            continue
        inner = Fraction(0)
        for perm in perms:
            inner += tensor.unit(tuple(j[perm[g]] for g in range(k)))
        if inner:
            total -= _sq_normalization(j, weight) * u * inner
    return total


def exact_mse_ito(q: ErrorQuery) -> float:
    lab = q.label
    unit = exact_mse_ito_unit(lab.weight, lab.i, q.p)
    return float(unit) * q.delta ** (lab.k + 2 * lab.weight.total_weight)


def tail_unit(weight: WeightVector, p: int | Sequence[int]) -> Fraction:
    """||K||^2 - sum of squared coefficients, per-index truncations allowed."""
    if isinstance(p, int):
        limits = (p,) * weight.k
    else:
        limits = tuple(p)
        if len(limits) != weight.k:
            raise ValueError("one truncation level per index required")
    tensor = coefficient_tensor(weight, max(limits))
    total = kernel_norm_unit(weight)
    for j in itertools.product(*[range(x + 1) for x in limits]):
        u = tensor.unit(j)
        if u:
            total -= _sq_normalization(j, weight) * u * u
    return total


def mse_bound(q: ErrorQuery, p: int | Sequence[int] | None = None) -> float:
    """k! times the Parseval tail - upper bound for the exact Ito error."""
    lab = q.label
    trunc = q.p if p is None else p
    unit = tail_unit(lab.weight, trunc)
    scale = q.delta ** (lab.k + 2 * lab.weight.total_weight)
    return float(factorial_int(lab.k) * unit) * scale


def factorial_int(k: int) -> int:
    out = 1
    for x in range(2, k + 1):
        out *= x
    return out


def exact_mse_strat_distinct(q: ErrorQuery) -> float:
    """Exact Stratonovich error for pairwise distinct Wiener components."""
    lab = q.label
    if any(x == 0 for x in lab.i):
        raise UnsupportedShapeError("Wiener components only")
    if len(set(lab.i)) != lab.k:
        raise RepeatedIndexError(
            "exact Stratonovich errors are only available for pairwise "
            "distinct components; use strat_mse_estimate"
        )
    unit = tail_unit(lab.weight, q.p)
    return float(unit) * q.delta ** (lab.k + 2 * lab.weight.total_weight)


def strat_mse_estimate(q: ErrorQuery, c: float = 1.0) -> float:
    """Heuristic order-of-magnitude bound C * Delta^2 / q for repeated-index
    Stratonovich truncations (no exact value is claimed for these)."""
    if q.p < 1:
        return c * q.delta ** 2
    return c * q.delta ** 2 / q.p


def minimal_p(
    lab: IntegralLabel,
    delta: float,
    target_mse: float,
    p_max: int = DEFAULT_P_MAX,
) -> int:
    """Smallest truncation level whose error is at or below the target.

    Ito labels and distinct-index Stratonovich labels use the exact error;
    repeated-index Stratonovich labels fall back to the k!-tail bound.
    """
    if target_mse <= 0:
        raise ValueError("target must be positive")
    lab_distinct = len(set(lab.i)) == lab.k and all(x != 0 for x in lab.i)
    for p in range(p_max + 1):
        q = ErrorQuery(lab, p, delta)
        if lab.kind == "ito":
            err = exact_mse_ito(q)
        elif lab_distinct:
            err = exact_mse_strat_distinct(q)
        else:
            err = mse_bound(q)
        if err <= target_mse:
            return p
    raise ValueError(
        f"no truncation at or below p_max={p_max} reaches target {target_mse}"
    )


# ---------------------------------------------------------------------------
# printed reference series for the weighted pair shapes

def offdiag_pair_series_mse(q: int, delta: float = 1.0) -> float:
    """Closed form Delta^2/(4(2q+1)) for the unweighted pair, distinct
    components (telescoped Parseval tail)."""
    return delta ** 2 / (4 * (2 * q + 1))


def weighted_pair_series_mse(q: int, delta: float = 1.0) -> float:
    """Printed error of the banded-series truncation of the weighted pair
    shape (1,0) with equal components.

    This is the error of the series truncation (band pairs up to index q),
    which is a different truncation set from the uniform box used by
    exact_mse_ito; both are exact for their own truncations.
    """
    t = Fraction(1, 9)
    for i in range(0, q + 1):
        t -= Fraction(1, (2 * i + 1) * (2 * i + 5) * (2 * i + 3) ** 2)
    for i in range(1, q + 1):
        t -= 2 * Fraction(1, (2 * i - 1) ** 2 * (2 * i + 3) ** 2)
    return float(t) / 16 * delta ** 4
