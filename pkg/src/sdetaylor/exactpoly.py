"""Exact rational polynomial arithmetic and Legendre polynomials on [-1, 1].

Everything in this module is exact: coefficients are `fractions.Fraction`
(arbitrary precision, always reduced, positive denominator), and all
operations (sum, product, antiderivative, definite integral) stay in the
rationals.  This is the substrate for the nested simplex integrals that
produce Fourier-Legendre coefficients elsewhere in the package.

Legendre polynomials are generated by the Bonnet three-term recurrence
    (n+1) P_{n+1}(x) = (2n+1) x P_n(x) - n P_{n-1}(x)
and memoised.  A configurable degree cap guards against runaway memory in
coefficient enumeration.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from typing import Iterable, Sequence, Union

BigRational = Fraction
RationalLike = Union[Fraction, int]

DEFAULT_DEGREE_CAP = 64


class DegreeCapError(ValueError):
    """Raised when an operation would exceed the configured degree cap."""


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class RationalPoly:
    """Univariate polynomial with exact rational coefficients.

    Immutable.  ``coefficients[i]`` is the coefficient of x**i; the
    representation is canonical (no trailing zeros, the zero polynomial is
    the empty tuple), so ``==`` is exact structural equality.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable[RationalLike] = ()):
        coeffs = [_as_fraction(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("RationalPoly is immutable")

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def __bool__(self) -> bool:
        return bool(self.coefficients)

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPoly):
            return self.coefficients == other.coefficients
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __repr__(self) -> str:
        return f"RationalPoly({list(self.coefficients)!r})"

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return RationalPoly(out)

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        return self + (-other)

    def __neg__(self) -> "RationalPoly":
        return RationalPoly([-c for c in self.coefficients])

    def __mul__(self, other: Union["RationalPoly", RationalLike]) -> "RationalPoly":
        if isinstance(other, RationalPoly):
            a, b = self.coefficients, other.coefficients
            if not a or not b:
                return RationalPoly()
            out = [Fraction(0)] * (len(a) + len(b) - 1)
            for i, ca in enumerate(a):
                if ca:
                    for j, cb in enumerate(b):
                        out[i + j] += ca * cb
            return RationalPoly(out)
        return RationalPoly([c * _as_fraction(other) for c in self.coefficients])

    __rmul__ = __mul__

    def __call__(self, x: RationalLike) -> Fraction:
        """Evaluate exactly at a rational point (Horner)."""
        acc = Fraction(0)
        xf = _as_fraction(x)
        for c in reversed(self.coefficients):
            acc = acc * xf + c
        return acc

    def eval_float(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + float(c)
        return acc

    def derivative(self) -> "RationalPoly":
        return RationalPoly(
            [i * c for i, c in enumerate(self.coefficients)][1:]
        )


def antiderivative(p: RationalPoly, lower: RationalLike = Fraction(-1)) -> RationalPoly:
    """Antiderivative F of p with F(lower) = 0, exactly."""
    out = [Fraction(0)] + [c / (i + 1) for i, c in enumerate(p.coefficients)]
    f = RationalPoly(out)
    return RationalPoly([out[0] - f(lower)] + out[1:])


def definite_integral(
    p: RationalPoly,
    a: RationalLike = Fraction(-1),
    b: RationalLike = Fraction(1),
) -> Fraction:
    """Exact integral of p over [a, b]."""
    f = antiderivative(p, a)
    return f(b)


_legendre_cache: list[RationalPoly] = [
    RationalPoly([1]),
    RationalPoly([0, 1]),
]
_legendre_lock = threading.Lock()


def legendre(n: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> RationalPoly:
    """Degree-n Legendre polynomial on [-1, 1], exact coefficients.

    Computed by the Bonnet recurrence and cached.  Raises DegreeCapError
    for n beyond ``degree_cap``.
    """
    if n < 0:
        raise ValueError("Legendre degree must be nonnegative")
    if n > degree_cap:
        raise DegreeCapError(f"Legendre degree {n} exceeds cap {degree_cap}")
    if n < len(_legendre_cache):
        return _legendre_cache[n]
    with _legendre_lock:
        while len(_legendre_cache) <= n:
            m = len(_legendre_cache) - 1
            p_m, p_m1 = _legendre_cache[m], _legendre_cache[m - 1]
            nxt = RationalPoly([0, Fraction(2 * m + 1, m + 1)]) * p_m - Fraction(
                m, m + 1
            ) * p_m1
            _legendre_cache.append(nxt)
    return _legendre_cache[n]


def monomial_weight(power: int, sign: int = +1) -> RationalPoly:
    """(1 + sign*x)**power as an exact polynomial (sign is +1 or -1)."""
    if power < 0:
        raise ValueError("power must be nonnegative")
    base = RationalPoly([1, sign])
    out = RationalPoly([1])
    for _ in range(power):
        out = out * base
    return out


def poly_from_coeffs(coeffs: Sequence[RationalLike]) -> RationalPoly:
    return RationalPoly(coeffs)
