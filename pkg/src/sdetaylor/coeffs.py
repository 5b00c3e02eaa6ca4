"""Exact Fourier-Legendre coefficients of weighted simplex kernels.

The kernel of an iterated integral of multiplicity k with weight exponents
(l_1, ..., l_k) lives on the simplex t <= t_1 < ... < t_k <= T, weighted by
prod_g (t - t_g)^{l_g}.  Mapped to the unit cube, its Fourier coefficient
against the product Legendre basis factorises into

    C = sign * prod_g sqrt(2 j_g + 1) / 2^{k + L} * Delta^{(k + 2L)/2} * ubar

where L = sum(l), sign = (-1)^L, Delta = T - t, and ubar is the exact
rational nested integral

    ubar = int_{-1}^{1} P_{j_k}(x_k) (1+x_k)^{l_k}
           int_{-1}^{x_k} ... int_{-1}^{x_2} P_{j_1}(x_1) (1+x_1)^{l_1} dx...

`unit_coefficient` returns sign * ubar (the value the reference tables
print); `scaled_coefficient` applies the normalisation and interval power.

Index convention: j = (j_1, ..., j_k) and l = (l_1, ..., l_k) are both
innermost-first (position 1 is the innermost integration variable).
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .exactpoly import (
    RationalPoly,
    antiderivative,
    legendre,
    monomial_weight,
)

MAX_MULTIPLICITY = 6
MAX_TOTAL_WEIGHT = 2
DEFAULT_ENTRY_BUDGET = 4_000_000

# weight kinds: "unified" attaches (1+x)^l (weights (t-s)^l of the unified
# expansions); "terminal" attaches (1-x)^l (weights (s-t_g)^l), used only by
# the identity-validation module.
WEIGHT_SIGNS = {"unified": +1, "terminal": -1}


class UnsupportedShapeError(ValueError):
    """Raised for (k, l) combinations outside the supported catalog."""


class EntryBudgetError(ValueError):
    """Raised when a dense tensor would exceed the entry budget."""


@dataclass(frozen=True)
class WeightVector:
    """Multiplicity and per-position weight exponents of an iterated integral."""

    l: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.k <= MAX_MULTIPLICITY:
            raise UnsupportedShapeError(
                f"multiplicity {self.k} outside supported range 1..{MAX_MULTIPLICITY}"
            )
        if any(x < 0 for x in self.l):
            raise UnsupportedShapeError("weight exponents must be nonnegative")
        if sum(self.l) > MAX_TOTAL_WEIGHT and self.k > 1:
            raise UnsupportedShapeError(
                f"total weight {sum(self.l)} beyond catalog cap {MAX_TOTAL_WEIGHT}"
            )

    @property
    def k(self) -> int:
        return len(self.l)

    @property
    def total_weight(self) -> int:
        return sum(self.l)

    @property
    def scale_exponent(self) -> Fraction:
        """Power of the interval length carried by scaled coefficients."""
        return Fraction(self.k + 2 * self.total_weight, 2)


def weight_vector(l: Sequence[int]) -> WeightVector:
    return WeightVector(tuple(int(x) for x in l))


def _nested_unit_integral(
    j: Sequence[int], l: Sequence[int], sign: int
) -> Fraction:
    """Nested integral over -1 <= x_1 <= ... <= x_k <= 1 (exact)."""
    prev = RationalPoly([1])
    for g, (jj, ll) in enumerate(zip(j, l)):
        term = legendre(jj) * monomial_weight(ll, sign)
        integrand = term * prev if g else term
        prev = antiderivative(integrand, Fraction(-1))
    return prev(Fraction(1))


def unit_coefficient(
    weight: WeightVector, j: Sequence[int], kind: str = "unified"
) -> Fraction:
    """Exact unit-interval coefficient including the printed sign convention.

    For the "unified" family this is (-1)^{sum l} times the nested integral
    with (1+x)^l factors; families with odd total weight therefore carry a
    leading minus, exactly as the reference tables do.
    """
    if len(j) != weight.k:
        raise UnsupportedShapeError(
            f"index tuple length {len(j)} does not match multiplicity {weight.k}"
        )
    if any(x < 0 for x in j):
        raise ValueError("basis indices must be nonnegative")
    sign = WEIGHT_SIGNS[kind]
    val = _nested_unit_integral(j, weight.l, sign)
    if weight.total_weight % 2 and kind == "unified":
        val = -val
    return val


def normalization(weight: WeightVector, j: Sequence[int]) -> float:
    """prod sqrt(2 j_g + 1) / 2^{k + sum l}."""
    acc = 1.0
    for jj in j:
        acc *= 2 * jj + 1
    return sqrt(acc) / 2.0 ** (weight.k + weight.total_weight)


def scaled_coefficient(
    weight: WeightVector,
    j: Sequence[int],
    interval_length: float,
    kind: str = "unified",
) -> float:
    """Real coefficient on an interval of the given length."""
    if interval_length <= 0:
        raise ValueError("interval length must be positive")
    unit = unit_coefficient(weight, j, kind)
    return (
        float(unit)
        * normalization(weight, j)
        * interval_length ** float(weight.scale_exponent)
    )


@dataclass(frozen=True)
class CoefficientTensor:
    """Dense exact coefficient tensor for one (k, l) shape up to truncation p.

    ``unit_values`` holds the exact rationals (object ndarray, shape
    (p+1,)*k, index order (j_1, ..., j_k)); ``normalized`` holds the float
    coefficients with the sqrt/2-power normalisation applied, so the scaled
    tensor on an interval of length D is ``normalized * D**scale_exponent``.
    """

    weight: WeightVector
    p: int
    kind: str
    unit_values: np.ndarray
    normalized: np.ndarray

    @property
    def scale_exponent(self) -> float:
        return float(self.weight.scale_exponent)

    def scaled(self, interval_length: float) -> np.ndarray:
        return self.normalized * interval_length ** self.scale_exponent

    def unit(self, j: Sequence[int]) -> Fraction:
        return self.unit_values[tuple(j)]


_tensor_cache: Dict[tuple, CoefficientTensor] = {}
_tensor_lock = threading.Lock()


def coefficient_tensor(
    weight: WeightVector,
    p: int,
    kind: str = "unified",
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> CoefficientTensor:
    """Memoised dense tensor of exact coefficients for indices 0..p."""
    if p < 0:
        raise ValueError("truncation level must be nonnegative")
    key = (weight.l, p, kind)
    got = _tensor_cache.get(key)
    if got is not None:
        return got
    k = weight.k
    if (p + 1) ** k > entry_budget:
        raise EntryBudgetError(
            f"tensor with {(p + 1) ** k} entries exceeds budget {entry_budget}"
        )
    with _tensor_lock:
        got = _tensor_cache.get(key)
        if got is not None:
            return got
        base = None
        for (l2, p2, kind2), t in _tensor_cache.items():
            if l2 == weight.l and kind2 == kind and p2 < p:
                if base is None or p2 > base.p:
                    base = t
        shape = (p + 1,) * k
        unit = np.empty(shape, dtype=object)
        norm = np.empty(shape, dtype=np.float64)
        sign = WEIGHT_SIGNS[kind]
        flip = -1 if (weight.total_weight % 2 and kind == "unified") else 1
        # one weighted factor per (position g, index j); inner antiderivatives
        # are shared across all outer-index branches
        factors = [
            [legendre(jj) * monomial_weight(weight.l[g], sign) for jj in range(p + 1)]
            for g in range(k)
        ]
        base_p = base.p if base is not None else -1

        def fill(g: int, prefix: tuple, inner: RationalPoly, inside: bool):
            for jj in range(p + 1):
                idx = prefix + (jj,)
                sub_inside = inside and jj <= base_p
                if g + 1 == k:
                    if sub_inside:
                        u = base.unit_values[idx]
                    else:
                        term = factors[g][jj]
                        integrand = term * inner if g else term
                        u = flip * antiderivative(integrand, Fraction(-1))(Fraction(1))
                    unit[idx] = u
                    norm[idx] = float(u) * normalization(weight, idx)
                else:
                    term = factors[g][jj]
                    integrand = term * inner if g else term
                    nxt = antiderivative(integrand, Fraction(-1))
                    fill(g + 1, idx, nxt, sub_inside)

        fill(0, (), RationalPoly([1]), base is not None)
        tensor = CoefficientTensor(weight, p, kind, unit, norm)
        _tensor_cache[key] = tensor
        return tensor


def clear_tensor_cache() -> None:
    with _tensor_lock:
        _tensor_cache.clear()


# ---------------------------------------------------------------------------
# on-disk cache

class CacheFormatError(ValueError):
    """Raised for malformed cache files; the message names the offending key."""


def _entry_key(l: Sequence[int], j: Sequence[int]) -> str:
    k = len(l)
    return "k={};l={};j={}".format(
        k, ",".join(map(str, l)), ",".join(map(str, j))
    )


def export_cache(path, tensors: Iterable[CoefficientTensor]) -> None:
    """Write tensors as a JSON document of exact decimal-string rationals."""
    entries = {}
    meta = []
    for t in tensors:
        if t.kind != "unified":
            raise ValueError("only the unified weight family is cached on disk")
        meta.append({"l": list(t.weight.l), "p": t.p})
        for j in np.ndindex(*t.unit_values.shape):
            v = t.unit_values[j]
            entries[_entry_key(t.weight.l, j)] = {
                "num": str(v.numerator),
                "den": str(v.denominator),
            }
    doc = {"format": "sdetaylor-coeff-cache-v1", "tensors": meta, "entries": entries}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def import_cache(path) -> list[CoefficientTensor]:
    """Load tensors previously written by export_cache (bit-exact round trip)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "sdetaylor-coeff-cache-v1":
        raise CacheFormatError("unrecognised cache format marker")
    entries = doc["entries"]

    def parse(key: str) -> Fraction:
        ent = entries[key]
        try:
            num, den = int(ent["num"]), int(ent["den"])
        except (KeyError, ValueError) as exc:
            raise CacheFormatError(f"malformed rational at key {key!r}") from exc
        if den <= 0:
            raise CacheFormatError(f"nonpositive denominator at key {key!r}")
        return Fraction(num, den)

    out = []
    for meta in doc["tensors"]:
        w = weight_vector(meta["l"])
        p = int(meta["p"])
        shape = (p + 1,) * w.k
        unit = np.empty(shape, dtype=object)
        norm = np.empty(shape, dtype=np.float64)
        for j in np.ndindex(*shape):
            key = _entry_key(w.l, j)
            if key not in entries:
                raise CacheFormatError(f"missing entry for key {key!r}")
            u = parse(key)
            unit[j] = u
            norm[j] = float(u) * normalization(w, j)
        tensor = CoefficientTensor(w, p, "unified", unit, norm)
        out.append(tensor)
        with _tensor_lock:
            _tensor_cache.setdefault((w.l, p, "unified"), tensor)
    return out
