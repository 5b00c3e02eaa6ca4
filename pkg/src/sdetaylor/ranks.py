"""Combinatorics of the unified expansions: term-set enumeration and the
closed-form rank/count formulas, cross-checked against each other.

A term is keyed by (k, j, l_1..l_k): multiplicity k of the iterated
integral, power j of the deterministic interval factor, and the weight
exponents.  The first-form sets are

    A_q: k + j + sum(l) == q            (weak-scheme grading)
    D_q: k + 2*(j + sum(l)) == q        (mean-square smallness grading)
    U_r: k + j + sum(l) <= r  and  k + 2*(j + sum(l)) >= r + 1

Enumerations return canonical lexicographic order so golden files diff
deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, Tuple


@dataclass(frozen=True, order=True)
class TermKey:
    k: int
    j: int
    l: Tuple[int, ...]

    def __post_init__(self):
        if self.k < 0 or self.j < 0 or any(x < 0 for x in self.l):
            raise ValueError("term keys are nonnegative")
        if len(self.l) != self.k:
            raise ValueError("need one weight exponent per multiplicity slot")

    @property
    def total_weight(self) -> int:
        return sum(self.l)


def _l_vectors(k: int, total: int) -> Iterator[Tuple[int, ...]]:
    """All l-vectors of length k with sum exactly `total`, lexicographic."""
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _l_vectors(k - 1, total - first):
            yield (first,) + rest


def enumerate_Aq(q: int) -> list[TermKey]:
    """All terms with k + j + sum(l) == q (empty for q <= 0)."""
    out = []
    for k in range(0, q + 1):
        for j in range(0, q - k + 1):
            for l in _l_vectors(k, q - k - j):
                out.append(TermKey(k, j, l))
    out.sort()
    return out if q >= 1 else []


def enumerate_Dq(q: int) -> list[TermKey]:
    """All terms with k + 2*(j + sum(l)) == q."""
    out = []
    for k in range(0, q + 1):
        rem = q - k
        if rem % 2:
            continue
        half = rem // 2
        for j in range(0, half + 1):
            for l in _l_vectors(k, half - j):
                out.append(TermKey(k, j, l))
    out.sort()
    return out if q >= 1 else []


def enumerate_Ur(r: int) -> list[TermKey]:
    """Remainder-group terms: k + j + sum(l) <= r, k + 2*(j + sum(l)) >= r+1."""
    out = []
    for k in range(0, r + 1):
        for j in range(0, r - k + 1):
            for total_l in range(0, r - k - j + 1):
                if k + 2 * (j + total_l) >= r + 1:
                    for l in _l_vectors(k, total_l):
                        out.append(TermKey(k, j, l))
    out.sort()
    return out


def rank_A(r: int) -> int:
    """Count of distinct iterated integrals in the A-graded expansion."""
    return 2 ** r - 1


def n_M(r: int) -> int:
    """Count of distinct iterated integrals in the classical expansion
    (deterministic pure-time terms excluded)."""
    return 2 * (2 ** r - 1) - r


def rank_D(r: int) -> int:
    """Closed form with the printed parity split."""
    if r % 2:
        return sum(
            comb(l, s)
            for s in range(0, r)
            for l in range(s, (r - 1) // 2 + s // 2 + 1)
        )
    return sum(
        comb(l, s)
        for s in range(0, r)
        for l in range(s, r // 2 - 1 + (s + 1) // 2 + 1)
    )


def n_E(r: int) -> int:
    """Closed form for the count of distinct integrals in the classical
    expansion under the mean-square grading."""
    return sum(
        comb((r - s) // 2 + s - l, s)
        for s in range(1, r + 1)
        for l in range(0, (r - s) // 2 + 1)
    )


# ---------------------------------------------------------------------------
# enumeration cross-checks

def distinct_A_integrals(r: int) -> list[Tuple[int, Tuple[int, ...]]]:
    """Distinct (k, l) integral shapes appearing in A_q terms for q <= r.

    The interval power j does not change which integral a term carries, so
    the rank counts distinct (k, l) pairs with k >= 1.
    """
    seen = {
        (t.k, t.l)
        for q in range(1, r + 1)
        for t in enumerate_Aq(q)
        if t.k >= 1
    }
    return sorted(seen)


def distinct_D_integrals(r: int) -> list[Tuple[int, Tuple[int, ...]]]:
    """Distinct (k, l) integral shapes appearing in D_q terms for q <= r."""
    seen = {
        (t.k, t.l)
        for q in range(1, r + 1)
        for t in enumerate_Dq(q)
        if t.k >= 1
    }
    return sorted(seen)


def count_A_wiener(r: int) -> int:
    return len(distinct_A_integrals(r))


def count_D_wiener(r: int) -> int:
    return len(distinct_D_integrals(r))


def count_classical_M(r: int) -> int:
    """Distinct classical-expansion integrals with at least one Wiener
    differential, multiplicity <= r (lambda-pattern count)."""
    total = 0
    for w in range(1, r + 1):
        for z in range(0, r - w + 1):
            total += comb(w + z, z)
    return total


def count_classical_E(r: int) -> int:
    """Same count under the grading w + 2z <= r."""
    total = 0
    for w in range(1, r + 1):
        for z in range(0, (r - w) // 2 + 1):
            total += comb(w + z, z)
    return total


def f_ratio(r: int) -> float:
    return n_M(r) / rank_A(r)


def g_ratio(r: int) -> float:
    return n_E(r) / rank_D(r)


def rank_table(r_max: int = 10) -> dict:
    """Both printed tables as a dict of rows for r = 1..r_max."""
    rows = list(range(1, r_max + 1))
    return {
        "r": rows,
        "rank_A": [rank_A(r) for r in rows],
        "n_M": [n_M(r) for r in rows],
        "f": [round(f_ratio(r), 4) for r in rows],
        "rank_D": [rank_D(r) for r in rows],
        "n_E": [n_E(r) for r in rows],
        "g": [round(g_ratio(r), 4) for r in rows],
    }
