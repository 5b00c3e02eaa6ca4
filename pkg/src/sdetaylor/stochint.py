"""Sampling of the shared Gaussian basis and evaluation of iterated
stochastic integrals from truncated multiple Fourier-Legendre series.

An integral is named by an IntegralLabel: component indices i_1..i_k (0 is
the time component), weight exponents l_1..l_k, and the calculus ("ito" or
"strat").  All integrals of one time step must be evaluated against the
same GaussianBasis; the within-step correlations between integrals are
carried entirely by the shared columns zeta_j^{(i)}.

Stratonovich values are plain multi-sums of coefficients against products
of basis columns.  Ito values subtract one correction term per partial
pairing of positions (r, q) with i_r == i_q != 0 and j_r == j_q, signed by
(-1)^{number of pairs}; the explicit low-multiplicity formulas are kept in
the test suite as transcribed oracles of this single generic rule.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import backend
from .coeffs import (
    CoefficientTensor,
    UnsupportedShapeError,
    WeightVector,
    coefficient_tensor,
    weight_vector,
)

Matching = Tuple[Tuple[Tuple[int, int], ...], Tuple[int, ...]]


@dataclass(frozen=True)
class IntegralLabel:
    """Identity of one iterated stochastic integral."""

    i: Tuple[int, ...]
    l: Tuple[int, ...]
    kind: str  # "ito" | "strat"

    def __post_init__(self):
        if self.kind not in ("ito", "strat"):
            raise ValueError("kind must be 'ito' or 'strat'")
        if len(self.i) != len(self.l):
            raise ValueError("component and weight tuples must have equal length")
        if any(x < 0 for x in self.i):
            raise ValueError("component indices must be nonnegative")
        self.weight  # validates the (k, l) shape

    @property
    def k(self) -> int:
        return len(self.i)

    @property
    def weight(self) -> WeightVector:
        return weight_vector(self.l)


def label(i: Sequence[int], l: Sequence[int] | None = None, kind: str = "ito") -> IntegralLabel:
    i = tuple(int(x) for x in i)
    if l is None:
        l = (0,) * len(i)
    return IntegralLabel(i, tuple(int(x) for x in l), kind)


def strat_expansion_is_proven(lab: IntegralLabel) -> bool:
    """Whether the plain-sum Stratonovich expansion for this label is covered
    by the proven multiplicity <= 5 results (False means it rests on the
    stated multiplicity-6 hypothesis)."""
    return lab.k <= 5


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianBasis:
    """Shared per-step basis columns zeta_j^{(i)}.

    ``values`` has shape (batch, m, p+1) (batch may be 1); the time column
    i=0 is implicit: zeta_j^{(0)} = sqrt(delta) * [j == 0].
    """

    delta: float
    values: np.ndarray

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("interval length must be positive")
        if self.values.ndim != 3:
            raise ValueError("values must have shape (batch, m, p+1)")

    @property
    def batch(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def p(self) -> int:
        return self.values.shape[2] - 1

    def column(self, i: int, p: int | None = None) -> np.ndarray:
        """Batch column for component i, truncated/padded to index p."""
        p = self.p if p is None else p
        if i == 0:
            out = np.zeros((self.batch, p + 1))
            out[:, 0] = sqrt(self.delta)
            return out
        if not 1 <= i <= self.m:
            raise ShapeMismatchError(f"component index {i} outside 0..{self.m}")
        if p <= self.p:
            return self.values[:, i - 1, : p + 1]
        out = np.zeros((self.batch, p + 1))
        out[:, : self.p + 1] = self.values[:, i - 1, :]
        return out

    def zeta(self, i: int, j: int) -> np.ndarray:
        return self.column(i, j)[:, j]

    def increments(self) -> np.ndarray:
        """Wiener increments sqrt(delta) * zeta_0^{(i)}, shape (batch, m)."""
        return sqrt(self.delta) * self.values[:, :, 0]


def sample_basis(
    rng: np.random.Generator, m: int, p: int, delta: float, batch: int = 1
) -> GaussianBasis:
    """(p+1)*m fresh i.i.d. standard normals per batch element."""
    if m < 1 or p < 0:
        raise ValueError("need m >= 1 and p >= 0")
    return GaussianBasis(delta, rng.standard_normal((batch, m, p + 1)))


def step_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for (seed, key...) - reproducible across runs."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# pairing combinatorics

def partial_pairings(k: int) -> list[Matching]:
    """All partial pairings of positions 0..k-1 (the empty one first)."""

    def rec(positions: tuple[int, ...]) -> list[Matching]:
        if not positions:
            return [((), ())]
        a, rest = positions[0], positions[1:]
        out = [(pairs, (a,) + free) for pairs, free in rec(rest)]
        for idx, b in enumerate(rest):
            rem = rest[:idx] + rest[idx + 1 :]
            out.extend((((a, b),) + pairs, free) for pairs, free in rec(rem))
        return out

    out = rec(tuple(range(k)))
    out.sort(key=lambda m: (len(m[0]), m[0]))
    return out


def correction_plan(i: Sequence[int], kind: str) -> list[Matching]:
    """Matchings active for the given component pattern.

    Stratonovich values use only the empty matching; Ito values keep every
    pairing whose pairs all join equal nonzero components.
    """
    k = len(i)
    all_match = partial_pairings(k)
    if kind == "strat":
        return [all_match[0]]
    plan = []
    for pairs, free in all_match:
        if all(i[r] == i[q] != 0 for r, q in pairs):
            plan.append((pairs, free))
    return plan


# ---------------------------------------------------------------------------
# evaluation

def _check_tensor(lab: IntegralLabel, tensor: CoefficientTensor) -> None:
    if tensor.weight.l != lab.l:
        raise ShapeMismatchError(
            f"tensor weight {tensor.weight.l} does not match label weight {lab.l}"
        )


def _columns(lab: IntegralLabel, basis: GaussianBasis, p: int) -> list[np.ndarray]:
    return [basis.column(i, p) for i in lab.i]


def strat_value(
    lab: IntegralLabel, basis: GaussianBasis, tensor: CoefficientTensor
) -> np.ndarray:
    """Plain multi-sum expansion value (batch array)."""
    _check_tensor(lab, tensor)
    C = tensor.scaled(basis.delta)
    cols = _columns(lab, basis, tensor.p)
    return backend.contract_batch(C, cols, [((), tuple(range(lab.k)))])


def ito_value(
    lab: IntegralLabel, basis: GaussianBasis, tensor: CoefficientTensor
) -> np.ndarray:
    """Multi-sum with pairing corrections (batch array)."""
    _check_tensor(lab, tensor)
    C = tensor.scaled(basis.delta)
    cols = _columns(lab, basis, tensor.p)
    return backend.contract_batch(C, cols, correction_plan(lab.i, "ito"))


def expansion_value(
    lab: IntegralLabel, basis: GaussianBasis, tensor: CoefficientTensor
) -> np.ndarray:
    if lab.kind == "ito":
        return ito_value(lab, basis, tensor)
    return strat_value(lab, basis, tensor)


def contract_reference(C_at, k: int, zetas, plan: Sequence[Matching]):
    """Generic-precision reference contraction (works on Fractions).

    C_at(j_tuple) returns the coefficient; zetas[g][j] the column values.
    Used as the exact-mode oracle in tests and kept independent of the
    float kernels.
    """
    p = len(zetas[0]) - 1
    total = None
    for pairs, free in plan:
        sign = -1 if len(pairs) % 2 else 1
        for j in itertools.product(range(p + 1), repeat=k):
            if any(j[r] != j[q] for r, q in pairs):
                continue
            c = C_at(j)
            if not c:
                continue
            term = c
            for g in free:
                term = term * zetas[g][j[g]]
            term = sign * term
            total = term if total is None else total + term
    return 0 if total is None else total


# ---------------------------------------------------------------------------
# closed forms

def _single_value(l: int, i: int, basis: GaussianBasis) -> np.ndarray:
    """I_(l) = sum_{j<=l} C_j zeta_j^{(i)} - exactly representable at p=l."""
    w = weight_vector((l,))
    tensor = coefficient_tensor(w, l)
    col = basis.column(i, l)
    C = tensor.scaled(basis.delta)
    return col @ C


def _hermite_diag(power: int, x: np.ndarray, var: float) -> np.ndarray:
    """He_n-type diagonal polynomials entering repeated-index closed forms."""
    if power == 2:
        return (x ** 2 - var) / 2
    if power == 3:
        return (x ** 3 - 3 * var * x) / 6
    if power == 4:
        return (x ** 4 - 6 * var * x ** 2 + 3 * var ** 2) / 24
    if power == 5:
        return (x ** 5 - 10 * var * x ** 3 + 15 * var ** 2 * x) / 120
    if power == 6:
        return (x ** 6 - 15 * var * x ** 4 + 45 * var ** 2 * x ** 2 - 15 * var ** 3) / 720
    raise ValueError(power)


def closed_form(lab: IntegralLabel) -> Optional[Callable[[GaussianBasis], np.ndarray]]:
    """Exact-in-distribution evaluator using only low-index columns.

    Returns None for labels without a catalogued closed form (e.g. the
    off-diagonal double integral).
    """
    k = lab.k
    if k == 1:
        l0, i0 = lab.l[0], lab.i[0]
        if i0 == 0:
            # deterministic time integral of (t-s)^l: (-1)^l delta^{l+1}/(l+1)
            def time_val(basis: GaussianBasis, _l=l0) -> np.ndarray:
                v = (-1.0) ** _l * basis.delta ** (_l + 1) / (_l + 1)
                return np.full(basis.batch, v)

            return time_val
        return lambda basis, _l=l0, _i=i0: _single_value(_l, _i, basis)

    # repeated-index diagonals with equal weights (the catalog prints the
    # unweighted powers through multiplicity 6 and the weighted ones through
    # multiplicity 4; the weight cap keeps weighted cases at k=2, l=1 here)
    if len(set(lab.i)) == 1 and lab.i[0] != 0 and len(set(lab.l)) == 1:
        l0, i0 = lab.l[0], lab.i[0]
        if l0 > 0 and k > 4:
            return None

        def diag_val(basis: GaussianBasis, _k=k, _l=l0, _i=i0, _kind=lab.kind) -> np.ndarray:
            base = _single_value(_l, _i, basis)
            if _kind == "strat":
                return base ** _k / float(factorial(_k))
            var = basis.delta ** (2 * _l + 1) / (2 * _l + 1)
            return _hermite_diag(_k, base, var)

        return diag_val
    return None


# ---------------------------------------------------------------------------
# Ito <-> Stratonovich conversions

_K2_CONVERSIONS = {
    # l -> (coefficient, delta power) of the indicator correction in
    #   I_l = I*_l + coeff * 1{i1==i2} * delta**power
    (0, 0): (Fraction(-1, 2), 1),
    (0, 1): (Fraction(1, 4), 2),
    (1, 0): (Fraction(1, 4), 2),
    (0, 2): (Fraction(-1, 6), 3),
    (2, 0): (Fraction(-1, 6), 3),
    (1, 1): (Fraction(-1, 6), 3),
}


class UnsupportedConversionError(ValueError):
    pass


def ito_strat_convert(
    lab: IntegralLabel,
    value: np.ndarray | float,
    delta: float,
    basis: GaussianBasis | None = None,
):
    """Convert a value of this label to the opposite calculus.

    For the double-integral shapes the correction is the printed
    deterministic indicator term.  For the triple unweighted shape the
    correction involves the step's own single integrals, so the shared
    basis must be supplied.  Involutive: converting back recovers the
    input.
    """
    k = lab.k
    sign = 1 if lab.kind == "strat" else -1  # strat value -> ito adds printed term
    if k == 2 and lab.l in _K2_CONVERSIONS:
        coeff, power = _K2_CONVERSIONS[lab.l]
        if lab.i[0] == lab.i[1] != 0:
            return value + sign * float(coeff) * delta ** power
        return value
    if k == 3 and lab.l == (0, 0, 0):
        i1, i2, i3 = lab.i
        corr = 0.0
        if i1 == i2 != 0 or i2 == i3 != 0:
            if basis is None:
                raise UnsupportedConversionError(
                    "triple-shape conversion needs the step basis"
                )
            if i1 == i2 != 0:
                corr = corr + 0.5 * _single_value(1, i3, basis)
            if i2 == i3 != 0:
                corr = corr - 0.5 * (
                    delta * _single_value(0, i1, basis) + _single_value(1, i1, basis)
                )
        return value + sign * corr
    raise UnsupportedConversionError(f"no printed conversion for shape {lab.l} at k={k}")


def default_tensor(lab: IntegralLabel, p: int) -> CoefficientTensor:
    return coefficient_tensor(lab.weight, p)
