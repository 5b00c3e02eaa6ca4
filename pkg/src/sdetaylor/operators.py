"""Operator calculus for the one-step schemes.

Scheme terms apply compositions like G_{l_1}^{(i_1)} ... G_{l_k}^{(i_k)} L^j
to the identity map.  The higher operators satisfy the commutator recursion

    G_p = (G_{p-1} L - L G_{p-1}) / p,      G_0 given,

(with the bar variants using the Stratonovich generator), so every
composition expands into a rational combination of words over the alphabet
{L, Lbar, G^{(i)}}.  This module performs that expansion symbolically; an
operator oracle then evaluates concrete words against a problem.

Word convention: a word (s_1, ..., s_n) is the composition s_1 after ... after
s_n applied to the identity, i.e. the rightmost symbol acts first.  G symbols
in expansions carry slot numbers 0..k-1, substituted with concrete component
indices at evaluation time.

Oracles: `AffineOracle` evaluates any word in closed form for problems with
affine drift/diffusion (every word maps the identity to an affine function).
`FiniteDifferenceOracle` builds words from the drift and diffusion callables
alone with nested central differences; accuracy degrades with nesting depth,
so it is restricted to short words unless explicitly widened.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Sequence, Tuple, Union

import numpy as np

Symbol = Union[str, Tuple[str, int]]  # "L" | "Lb" | ("G", slot-or-index)
Word = Tuple[Symbol, ...]
WordExpr = Dict[Word, Fraction]

L_SYM: Symbol = "L"
LBAR_SYM: Symbol = "Lb"


def gsym(idx: int) -> Symbol:
    return ("G", idx)


def _scale(expr: WordExpr, c: Fraction) -> WordExpr:
    return {w: v * c for w, v in expr.items() if v}


def _add(a: WordExpr, b: WordExpr) -> WordExpr:
    out = dict(a)
    for w, v in b.items():
        out[w] = out.get(w, Fraction(0)) + v
        if not out[w]:
            del out[w]
    return out


def _concat(a: WordExpr, b: WordExpr) -> WordExpr:
    """Composition: every word of `a` applied after every word of `b`."""
    out: WordExpr = {}
    for wa, va in a.items():
        for wb, vb in b.items():
            w = wa + wb
            out[w] = out.get(w, Fraction(0)) + va * vb
            if not out[w]:
                del out[w]
    return out


def weighted_operator(p: int, slot: int, family: str) -> WordExpr:
    """Expansion of G_p (or the bar variant) as words over {L/Lb, G(slot)}."""
    lsym = L_SYM if family == "ito" else LBAR_SYM
    g0: WordExpr = {(gsym(slot),): Fraction(1)}
    expr = g0
    lexpr: WordExpr = {(lsym,): Fraction(1)}
    for step in range(1, p + 1):
        expr = _scale(
            _add(_concat(expr, lexpr), _scale(_concat(lexpr, expr), Fraction(-1))),
            Fraction(1, step),
        )
    return expr


def weighted_operator_closed(p: int, slot: int, family: str) -> WordExpr:
    """Binomial closed form of the same expansion (cross-check path):
    G_p = 1/p! sum_q (-1)^q C(p,q) L^q G_0 L^{p-q}."""
    from math import comb, factorial

    lsym = L_SYM if family == "ito" else LBAR_SYM
    out: WordExpr = {}
    for q in range(p + 1):
        word = (lsym,) * q + (gsym(slot),) + (lsym,) * (p - q)
        out[word] = Fraction((-1) ** q * comb(p, q), factorial(p))
    return out


def composition_words(l: Sequence[int], j: int, family: str) -> WordExpr:
    """Words for G_{l_1}^{(slot 0)} ... G_{l_k}^{(slot k-1)} L^j (identity)."""
    lsym = L_SYM if family == "ito" else LBAR_SYM
    expr: WordExpr = {(lsym,) * j: Fraction(1)} if j else {(): Fraction(1)}
    for slot in range(len(l) - 1, -1, -1):
        expr = _concat(weighted_operator(l[slot], slot, family), expr)
    return expr


def substitute(word: Word, indices: Sequence[int]) -> Word:
    """Replace slot numbers in G symbols with concrete component indices."""
    out = []
    for s in word:
        if isinstance(s, tuple):
            out.append(("G", indices[s[1]]))
        else:
            out.append(s)
    return tuple(out)


class OracleGapError(ValueError):
    """Raised when an oracle cannot evaluate a required composition."""


def format_word(word: Word) -> str:
    parts = []
    for s in word:
        parts.append(f"G0^({s[1]})" if isinstance(s, tuple) else ("L" if s == "L" else "Lbar"))
    return " ".join(parts) + " x" if parts else "x"


# ---------------------------------------------------------------------------
# affine closed-form oracle

@dataclass
class AffineOracle:
    """Exact word evaluation for dx = (A x + b) dt + sum_i (C_i x + d_i) df_i.

    Any word maps the identity to an affine function of the state; the
    (matrix, vector) pair per word is cached, so evaluation is one matmul.
    """

    A: np.ndarray
    b: np.ndarray
    C: Sequence[np.ndarray]
    d: Sequence[np.ndarray]
    _cache: Dict[Word, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return len(self.C)

    def supports(self, word: Word) -> bool:
        return True

    def _affine(self, word: Word) -> Tuple[np.ndarray, np.ndarray]:
        got = self._cache.get(word)
        if got is not None:
            return got
        if not word:
            out = (np.eye(self.n), np.zeros(self.n))
        else:
            M, v = self._affine(word[1:])
            s = word[0]
            if s == "L":
                out = (M @ self.A, M @ self.b)
            elif s == "Lb":
                M2 = M @ self.A - 0.5 * sum(M @ Ci @ Ci for Ci in self.C)
                v2 = M @ self.b - 0.5 * sum(
                    (M @ Ci) @ di for Ci, di in zip(self.C, self.d)
                )
                out = (M2, v2)
            else:
                i = s[1]
                if not 1 <= i <= self.m:
                    raise OracleGapError(f"component {i} outside 1..{self.m}")
                Ci, di = self.C[i - 1], self.d[i - 1]
                out = (M @ Ci, M @ di)
        self._cache[word] = out
        return out

    def apply(self, word: Word, x: np.ndarray, t: float) -> np.ndarray:
        M, v = self._affine(word)
        return x @ M.T + v

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        return x @ self.A.T + self.b

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        cols = [x @ Ci.T + di for Ci, di in zip(self.C, self.d)]
        return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# finite-difference fallback oracle

class FiniteDifferenceOracle:
    """Derivative-free word evaluation from drift/diffusion callables.

    Central differences, step h = cbrt(machine eps) * scale, O(h^2) per
    derivative level.  Nested differencing loses accuracy quickly, so words
    longer than ``max_len`` symbols are refused (default 3, i.e. two
    derivative levels); widen explicitly if you accept the noise.
    """

    def __init__(self, drift, diffusion, m: int, max_len: int = 3, scale: float = 1.0):
        self.drift_fn = drift
        self.diffusion_fn = diffusion
        self.m = m
        self.max_len = max_len
        self.scale = scale
        self.eps = float(np.finfo(float).eps)

    def supports(self, word: Word) -> bool:
        return len(word) <= self.max_len

    def _column(self, i: int):
        def col(x, t):
            return self.diffusion_fn(x, t)[..., i - 1]

        return col

    def _h(self, level: int, order: int) -> float:
        # widen the step with each nesting level: the inner function carries
        # its own differencing noise, which division by h amplifies
        return self.eps ** (1.0 / (order + 2 + 2 * level)) * self.scale

    def _apply_sym(self, sym: Symbol, f, x: np.ndarray, t: float, level: int) -> np.ndarray:
        if isinstance(sym, tuple):
            h = self._h(level, 1)
            B = self._column(sym[1])(x, t)
            out = np.zeros_like(f(x, t))
            for jdim in range(x.shape[-1]):
                e = np.zeros(x.shape[-1])
                e[jdim] = h
                out = out + (f(x + e, t) - f(x - e, t)) / (2 * h) * B[..., jdim : jdim + 1]
            return out
        # L or Lbar: time part + drift-directional + diffusion second-order part
        h = self._h(level, 1)
        dt = (f(x, t + h) - f(x, t - h)) / (2 * h)
        a = self.drift_fn(x, t)
        first = np.zeros_like(dt)
        for jdim in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[jdim] = h
            first = first + (f(x + e, t) - f(x - e, t)) / (2 * h) * a[..., jdim : jdim + 1]
        h2 = self._h(level, 2)
        Bmat = self.diffusion_fn(x, t)
        f0 = f(x, t)
        second = np.zeros_like(dt)
        for i in range(1, self.m + 1):
            u = Bmat[..., i - 1] * h2
            second = second + (f(x + u, t) - 2 * f0 + f(x - u, t)) / h2 ** 2
        if sym == "L":
            return dt + first + 0.5 * second
        # Lbar = L - 1/2 sum_i G_i G_i
        gg = np.zeros_like(dt)
        for i in range(1, self.m + 1):
            gi = lambda y, s, _i=i: self._apply_sym(("G", _i), f, y, s, level)
            gg = gg + self._apply_sym(("G", i), gi, x, t, level + 1)
        return dt + first + 0.5 * second - 0.5 * gg

    def _base(self, sym: Symbol):
        """Symbol applied to the identity, evaluated without differencing
        (these are just the coefficient functions); returns (fn, level)."""
        if isinstance(sym, tuple):
            return self._column(sym[1]), -1
        if sym == "L":
            return self.drift_fn, -1

        def lbar(x, t):
            out = self.drift_fn(x, t)
            for i in range(1, self.m + 1):
                out = out - 0.5 * self._apply_sym(("G", i), self._column(i), x, t, 0)
            return out

        return lbar, 0

    def apply(self, word: Word, x: np.ndarray, t: float) -> np.ndarray:
        if not self.supports(word):
            raise OracleGapError(
                f"finite-difference oracle limited to words of length "
                f"{self.max_len}; missing composition: {format_word(word)}"
            )
        if not word:
            return x
        fn, lvl = self._base(word[-1])
        for sym in reversed(word[:-1]):
            fn, lvl = self._wrap(sym, fn, lvl + 1), lvl + 1
        return fn(x, t)

    def _wrap(self, sym: Symbol, inner, level: int):
        return lambda y, s: self._apply_sym(sym, inner, y, s, level)
