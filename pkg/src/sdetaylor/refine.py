"""Fine-grid self-reference for problems without closed-form conditional laws.

A coarse-step basis column is an exact linear aggregation of the fine-step
columns covering it: a degree-j Legendre polynomial restricted to a
subinterval is again degree j, so its re-expansion in the fine bases is
exact once the fine truncation is at least the coarse one.  The reference
path therefore runs the same scheme on a 16x finer grid driven by the same
underlying draws, and every coarse run sees the same Brownian path.
"""
from __future__ import annotations

from fractions import Fraction
from math import sqrt
from typing import Dict, Sequence, Tuple

import numpy as np

from .exactpoly import RationalPoly, definite_integral, legendre
from .schemes import SchemeConfig, SchemeRun, SdeProblem
from .stochint import GaussianBasis, sample_basis, step_rng

_matrix_cache: Dict[Tuple[int, int, int], np.ndarray] = {}


def _affine_compose(p: RationalPoly, shift: Fraction, scale: Fraction) -> RationalPoly:
    """p((w + shift) * scale) as an exact polynomial in w."""
    arg = RationalPoly([shift * scale, scale])
    out = RationalPoly()
    for c in reversed(p.coefficients):
        out = out * arg + RationalPoly([c])
    return out


def restriction_matrices(ratio: int, p_coarse: int, p_fine: int) -> np.ndarray:
    """T[b, j, j'] = inner product of coarse column j with fine column j'
    on fine subinterval b (independent of the interval length)."""
    key = (ratio, p_coarse, p_fine)
    got = _matrix_cache.get(key)
    if got is not None:
        return got
    T = np.zeros((ratio, p_coarse + 1, p_fine + 1))
    for b in range(ratio):
        shift = Fraction(2 * b + 1 - ratio)
        for j in range(p_coarse + 1):
            restricted = _affine_compose(legendre(j), shift, Fraction(1, ratio))
            for jf in range(min(j, p_fine) + 1):
                val = definite_integral(restricted * legendre(jf))
                if val:
                    T[b, j, jf] = (
                        sqrt((2 * j + 1) * (2 * jf + 1)) / (2 * sqrt(ratio)) * float(val)
                    )
    _matrix_cache[key] = T
    return T


def aggregate(fine: Sequence[GaussianBasis], p_coarse: int) -> GaussianBasis:
    """Combine consecutive fine-step bases into the coarse-step basis."""
    ratio = len(fine)
    p_fine = fine[0].p
    T = restriction_matrices(ratio, p_coarse, p_fine)
    total = None
    for b, fb in enumerate(fine):
        part = np.einsum("jf,tmf->tmj", T[b], fb.values)
        total = part if total is None else total + part
    return GaussianBasis(fine[0].delta * ratio, total)


def fine_reference_errors(
    problem: SdeProblem,
    family: str,
    r: int,
    grid: Sequence[int],
    trials: int,
    seed: int,
    t_end: float,
    truncation,
    block: int,
    refine_factor: int = 16,
) -> list[float]:
    """Per-N RMS terminal differences against the fine-grid reference."""
    n_ref = refine_factor * max(grid)
    if any(n_ref % n for n in grid):
        raise ValueError("every grid entry must divide the reference grid")
    ref_config = SchemeConfig(
        family=family, r=r, n_steps=n_ref, t_end=t_end, seed=seed, truncation=truncation
    )
    ref_run = SchemeRun(problem, ref_config)
    coarse_runs = []
    for n in grid:
        cfg = SchemeConfig(
            family=family, r=r, n_steps=n, t_end=t_end, seed=seed, truncation=truncation
        )
        coarse_runs.append(SchemeRun(problem, cfg))
    p_all = max([ref_run.basis_p] + [run.basis_p for run in coarse_runs])
    x0 = np.ones(problem.n)
    sq_sums = [0.0] * len(grid)
    done = 0
    block_i = 0
    delta_fine = t_end / n_ref
    while done < trials:
        b = min(block, trials - done)

        def fine_basis(step_i: int) -> GaussianBasis:
            rng = step_rng(seed, block_i, step_i)
            return sample_basis(rng, problem.m, p_all, delta_fine, batch=b)

        # reference pass
        x = np.broadcast_to(x0, (b, problem.n)).copy()
        for step_i in range(n_ref):
            x = ref_run.step(x, step_i * delta_fine, fine_basis(step_i))
        x_ref = x
        # coarse passes on aggregated bases
        for g, (n, run) in enumerate(zip(grid, coarse_runs)):
            ratio = n_ref // n
            xc = np.broadcast_to(x0, (b, problem.n)).copy()
            for c_step in range(n):
                fine_group = [fine_basis(c_step * ratio + s) for s in range(ratio)]
                basis = aggregate(fine_group, run.basis_p)
                xc = run.step(xc, c_step * (t_end / n), basis)
            sq_sums[g] += float(np.sum((xc - x_ref) ** 2))
        done += b
        block_i += 1
    return [sqrt(s / trials) for s in sq_sums]
