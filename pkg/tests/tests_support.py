"""Shared helpers for the test suite (transcribed reference series)."""
import math


def pair_band_reference(basis, i1, i2, q, kind):
    """Band-series form of the unweighted pair integral, truncated at q."""
    z1 = basis.column(i1, q)
    z2 = basis.column(i2, q)
    acc = z1[:, 0] * z2[:, 0]
    for i in range(1, q + 1):
        acc = acc + (z1[:, i - 1] * z2[:, i] - z1[:, i] * z2[:, i - 1]) / math.sqrt(
            4 * i * i - 1
        )
    if kind == "ito" and i1 == i2:
        acc = acc - 1.0
    return basis.delta / 2 * acc
