"""Pure-numpy contraction kernels (fallback when the compiled core is absent).

A truncated expansion value is a contraction of the scaled coefficient
tensor C (shape (p+1,)*k) against per-position Gaussian columns, with one
correction term per partial pairing of positions:

    sum_j C_j * sum_M (-1)^{|M|} prod_{(r,q) in M} [j_r == j_q]
                      prod_{g unpaired} zeta[g][j_g]

The pairing plan (list of matchings, each a (pairs, free) tuple) is supplied
by the caller; the plain Stratonovich sum is the single empty matching.
"""
from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

Matching = Tuple[Tuple[Tuple[int, int], ...], Tuple[int, ...]]

_LETTERS = "abcdef"


def contract_batch(
    C: np.ndarray,
    zetas: Sequence[np.ndarray],
    plan: Sequence[Matching],
) -> np.ndarray:
    """Evaluate the corrected contraction for a batch.

    C: float64, shape (p+1,)*k.  zetas: one (B, p+1) array per position.
    Returns shape (B,).
    """
    k = C.ndim
    batch = zetas[0].shape[0]
    out = np.zeros(batch)
    for pairs, free in plan:
        letters = list(_LETTERS[:k])
        for r, q in pairs:
            letters[q] = letters[r]
        subs = ["".join(letters)]
        operands: List[np.ndarray] = [C]
        for g in free:
            subs.append("t" + letters[g])
            operands.append(zetas[g])
        term = np.einsum(",".join(subs) + "->t" if free else ",".join(subs) + "->", *operands)
        if not free:
            term = np.full(batch, term)
        if len(pairs) % 2:
            out -= term
        else:
            out += term
    return out


BACKEND_NAME = "python"
