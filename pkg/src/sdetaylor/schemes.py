"""Explicit one-step strong schemes of orders 1.0 through 3.0.

A scheme of strong order r/2 sums, over the mean-square graded term sets of
grades 1..r, the operator composition value times the approximated iterated
integral, plus (for odd r) the deterministic top-order drift term:

    y+ = y + sum_{q<=r} sum_{(k,j,l) in D_q} Delta^j/j! *
             sum_{i in {1..m}^k} [G_{l_1}^{(i_1)}..G_{l_k}^{(i_k)} L^j y] *
             Ihat^{(i_1..i_k)}_{l_1..l_k}
         + [r odd] Delta^{(r+1)/2}/((r+1)/2)! * L^{(r+1)/2} y

The Ito family uses (L, G_p) and Ito integrals; the Stratonovich family uses
the bar operators and Stratonovich integrals (the modified drift appears
automatically as Lbar applied to the identity).  Every integral in a step
reads the same GaussianBasis.

States are batched: x has shape (batch, n) throughout, so one integrate call
advances an entire Monte Carlo block.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, sqrt
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from . import mse, stochint
from .coeffs import EntryBudgetError, coefficient_tensor
from .operators import (
    AffineOracle,
    FiniteDifferenceOracle,
    OracleGapError,
    Word,
    WordExpr,
    composition_words,
    format_word,
    substitute,
)
from .ranks import TermKey, enumerate_Dq
from .stochint import GaussianBasis, IntegralLabel, closed_form, sample_basis, step_rng

ORDERS = {2: 1.0, 3: 1.5, 4: 2.0, 5: 2.5, 6: 3.0}


@dataclass
class SdeProblem:
    """An Ito SDE dx = a dt + B df with an operator oracle.

    ``drift(x, t) -> (batch, n)``, ``diffusion(x, t) -> (batch, n, m)``.
    ``oracle`` evaluates operator words (see operators module).
    ``exact_step``, when present, advances the exact solution one step
    coupled to the same basis (aux_rng supplies any randomness orthogonal
    to the basis columns); it makes the problem usable as its own
    convergence reference.
    """

    name: str
    n: int
    m: int
    drift: Callable[[np.ndarray, float], np.ndarray]
    diffusion: Callable[[np.ndarray, float], np.ndarray]
    oracle: object
    exact_step: Optional[Callable[[np.ndarray, GaussianBasis, np.random.Generator, float], np.ndarray]] = None


@dataclass(frozen=True)
class SchemeConfig:
    """Family, order, grid and truncation policy of one integration run."""

    family: str = "ito"  # "ito" | "strat"
    r: int = 2
    n_steps: int = 100
    t_end: float = 1.0
    seed: int = 0
    truncation: object = "target"  # "target" | int | {(i,l): p} | callable
    target_constant: float = 1.0
    p_max: int = 256
    use_closed_forms: bool = True

    def __post_init__(self):
        if self.family not in ("ito", "strat"):
            raise ValueError("family must be 'ito' or 'strat'")
        if self.r not in ORDERS:
            raise ValueError(f"r must be one of {sorted(ORDERS)} (order r/2)")
        if self.n_steps < 1 or self.t_end <= 0:
            raise ValueError("need n_steps >= 1 and t_end > 0")

    @property
    def order(self) -> float:
        return ORDERS[self.r]

    @property
    def delta(self) -> float:
        return self.t_end / self.n_steps


@dataclass(frozen=True)
class TermRecord:
    key: TermKey
    words: Tuple[Tuple[Word, Fraction], ...]


def term_table(family: str, r: int) -> list[TermRecord]:
    """Stochastic term records for grades 1..r (k >= 1 terms only)."""
    records = []
    for q in range(1, r + 1):
        for key in enumerate_Dq(q):
            if key.k == 0:
                continue
            expr: WordExpr = composition_words(key.l, key.j, family)
            records.append(TermRecord(key, tuple(expr.items())))
    return records


def deterministic_terms(family: str, r: int) -> list[Tuple[int, Word]]:
    """(j, word) pairs for the k = 0 terms: Delta^j/j! times the word value."""
    lsym = "L" if family == "ito" else "Lb"
    out = [(key.j, (lsym,) * key.j) for q in range(1, r + 1) for key in enumerate_Dq(q) if key.k == 0]
    if r % 2:
        # top-order deterministic tail, plain generator in both families
        out.append(((r + 1) // 2, ("L",) * ((r + 1) // 2)))
    return out


def required_words(problem: SdeProblem, config: SchemeConfig) -> list[Word]:
    """Every concrete oracle word the configured order will request."""
    words = set()
    for j, w in deterministic_terms(config.family, config.r):
        words.add(w)
    for rec in term_table(config.family, config.r):
        k = rec.key.k
        for idx in np.ndindex(*(problem.m,) * k):
            conc = tuple(x + 1 for x in idx)
            for w, _ in rec.words:
                words.add(substitute(w, conc))
    return sorted(words, key=lambda w: (len(w), repr(w)))


def validate_oracle(problem: SdeProblem, config: SchemeConfig) -> None:
    """Raise OracleGapError naming the first missing composition."""
    for w in required_words(problem, config):
        if not problem.oracle.supports(w):
            raise OracleGapError(
                f"oracle cannot evaluate required composition: {format_word(w)}"
            )


class TruncationPolicy:
    """Resolves the per-label truncation level once per (config, delta)."""

    def __init__(self, config: SchemeConfig):
        self.config = config
        self._cache: Dict[Tuple[Tuple[int, ...], Tuple[int, ...], str], int] = {}

    def resolve(self, lab: IntegralLabel, delta: float) -> int:
        key = (lab.i, lab.l, lab.kind)
        got = self._cache.get(key)
        if got is not None:
            return got
        spec = self.config.truncation
        if isinstance(spec, int):
            p = spec
        elif isinstance(spec, dict):
            p = spec.get((lab.i, lab.l), spec.get(lab.l))
            if p is None:
                raise KeyError(f"no truncation specified for label {lab}")
        elif callable(spec):
            p = spec(lab, delta)
        elif spec == "target":
            target = self.config.target_constant * delta ** (self.config.r + 1)
            try:
                p = mse.minimal_p(lab, delta, target, p_max=self.config.p_max)
            except EntryBudgetError as exc:
                raise EntryBudgetError(
                    f"target truncation for label {lab} is impractically deep; "
                    "use a fixed truncation policy"
                ) from exc
        else:
            raise ValueError(f"unrecognised truncation policy {spec!r}")
        self._cache[key] = p
        return p


class SchemeRun:
    """Prepared evaluation plan for one (problem, config) pair."""

    def __init__(self, problem: SdeProblem, config: SchemeConfig):
        self.problem = problem
        self.config = config
        validate_oracle(problem, config)
        self.records = term_table(config.family, config.r)
        self.det_terms = deterministic_terms(config.family, config.r)
        self.policy = TruncationPolicy(config)
        self.kind = config.family
        delta = config.delta
        # resolve truncations and the basis size up front
        self.max_p = 0
        self._label_plan: list[tuple] = []
        for rec in self.records:
            k = rec.key.k
            for idx in np.ndindex(*(problem.m,) * k):
                conc = tuple(x + 1 for x in idx)
                lab = IntegralLabel(conc, rec.key.l, self.kind)
                cf = closed_form(lab) if config.use_closed_forms else None
                if cf is None:
                    p = self.policy.resolve(lab, delta)
                    self.max_p = max(self.max_p, p)
                else:
                    # closed forms read columns up to index max(l)
                    self.max_p = max(self.max_p, max(rec.key.l, default=0))
                    p = None
                self._label_plan.append((rec, conc, lab, cf, p))
        self.basis_p = max(self.max_p, 1)

    def step(self, x: np.ndarray, t: float, basis: GaussianBasis) -> np.ndarray:
        problem, config = self.problem, self.config
        delta = basis.delta
        out = x.copy()
        for j, word in self.det_terms:
            val = problem.oracle.apply(word, x, t)
            out += delta ** j / factorial(j) * val
        integrals: Dict[tuple, np.ndarray] = {}
        for rec, conc, lab, cf, p in self._label_plan:
            ikey = (conc, rec.key.l)
            ival = integrals.get(ikey)
            if ival is None:
                if cf is not None:
                    ival = cf(basis)
                else:
                    tensor = coefficient_tensor(lab.weight, p)
                    ival = stochint.expansion_value(lab, basis, tensor)
                integrals[ikey] = ival
            coeff = delta ** rec.key.j / factorial(rec.key.j)
            opval = None
            for word, c in rec.words:
                wv = problem.oracle.apply(substitute(word, conc), x, t)
                opval = wv * float(c) if opval is None else opval + wv * float(c)
            out += coeff * opval * ival[:, None]
        return out


@dataclass
class PathResult:
    times: np.ndarray            # (n_steps + 1,)
    states: np.ndarray           # (batch, n_steps + 1, n)
    increments: np.ndarray       # (batch, n_steps, m)
    reference: Optional[np.ndarray] = None  # (batch, n_steps + 1, n)


def integrate_path(
    problem: SdeProblem,
    config: SchemeConfig,
    x0: np.ndarray,
    batch: int = 1,
    with_reference: bool = False,
    stream_key: Tuple[int, ...] = (),
) -> PathResult:
    """Integrate a batch of paths on the uniform grid.

    Per-step bases come from independent streams keyed by (seed, *stream_key,
    step); the returned increments are the sqrt(delta)*zeta_0 columns the
    schemes consumed, for coupling to exact solutions.
    """
    run = SchemeRun(problem, config)
    delta = config.delta
    n_steps = config.n_steps
    x0 = np.asarray(x0, dtype=float)
    x = np.broadcast_to(x0, (batch, problem.n)).copy()
    states = np.empty((batch, n_steps + 1, problem.n))
    states[:, 0] = x
    increments = np.empty((batch, n_steps, problem.m))
    ref = None
    if with_reference:
        if problem.exact_step is None:
            raise ValueError(f"problem {problem.name} has no exact stepping rule")
        ref = np.empty_like(states)
        ref[:, 0] = x
        xr = x.copy()
    times = np.arange(n_steps + 1) * delta
    for step_i in range(n_steps):
        rng = step_rng(config.seed, *stream_key, step_i)
        basis = sample_basis(rng, problem.m, run.basis_p, delta, batch=batch)
        increments[:, step_i] = basis.increments()
        x = run.step(x, times[step_i], basis)
        states[:, step_i + 1] = x
        if ref is not None:
            aux = step_rng(config.seed, *stream_key, step_i, 1_000_003)
            xr = problem.exact_step(xr, basis, aux, times[step_i])
            ref[:, step_i + 1] = xr
    return PathResult(times, states, increments, ref)


def export_trajectory_csv(path, result: PathResult, sample: int = 0) -> None:
    """Write one sample path as CSV: t, state components, cumulative Wiener."""
    import csv

    states = result.states[sample]
    cum = np.vstack(
        [np.zeros(result.increments.shape[2]), np.cumsum(result.increments[sample], axis=0)]
    )
    n, m = states.shape[1], cum.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i+1}" for i in range(n)] + [f"W{i+1}" for i in range(m)])
        for row_t, row_x, row_w in zip(result.times, states, cum):
            w.writerow([repr(float(row_t))] + [repr(float(v)) for v in row_x] + [repr(float(v)) for v in row_w])


# ---------------------------------------------------------------------------
# built-in problems

def gbm_problem(mu: float = 0.06, sigma: float = 0.3) -> SdeProblem:
    """Scalar geometric Brownian motion with exact coupled stepping."""
    oracle = AffineOracle(
        A=np.array([[mu]]),
        b=np.zeros(1),
        C=[np.array([[sigma]])],
        d=[np.zeros(1)],
    )

    def exact_step(x, basis, aux_rng, t):
        dw = basis.increments()[:, 0]
        return x * np.exp((mu - 0.5 * sigma ** 2) * basis.delta + sigma * dw)[:, None]

    return SdeProblem("gbm", 1, 1, oracle.drift, oracle.diffusion, oracle, exact_step)


def ou_problem(theta: float = 1.0, sigma: float = 0.5, basis_order: int = 12) -> SdeProblem:
    """Additive-noise Ornstein-Uhlenbeck dx = -theta x dt + sigma df.

    The exact step projects the exponentially weighted noise integral onto
    the step's basis columns (Gauss quadrature of the projection integrals)
    and draws the orthogonal remainder from the auxiliary stream, so the
    reference is exact in law and correctly coupled to the scheme.
    """
    oracle = AffineOracle(
        A=np.array([[-theta]]),
        b=np.zeros(1),
        C=[np.zeros((1, 1))],
        d=[np.array([sigma])],
    )

    nodes, wts = np.polynomial.legendre.leggauss(64)
    proj_cache: Dict[float, Tuple[np.ndarray, float]] = {}

    def projections(delta: float) -> Tuple[np.ndarray, float]:
        got = proj_cache.get(delta)
        if got is not None:
            return got
        # c_j = sigma int_t^{t+D} e^{-theta (t+D-s)} phi_j(s) ds on unit coords
        cs = []
        for j in range(basis_order + 1):
            pj = np.polynomial.legendre.Legendre([0] * j + [1])
            integrand = np.exp(-theta * delta * (1 - nodes) / 2) * pj(nodes)
            cs.append(
                sigma * sqrt((2 * j + 1) / delta) * (delta / 2) * float(wts @ integrand)
            )
        cs = np.array(cs)
        var_total = sigma ** 2 * (1 - np.exp(-2 * theta * delta)) / (2 * theta)
        resid = max(var_total - float(cs @ cs), 0.0)
        proj_cache[delta] = (cs, sqrt(resid))
        return proj_cache[delta]

    def exact_step(x, basis, aux_rng, t):
        cs, resid_sd = projections(basis.delta)
        p_avail = min(basis.p, basis_order)
        col = basis.column(1, p_avail)
        noise = col @ cs[: p_avail + 1]
        tail_var = resid_sd ** 2 + float(cs[p_avail + 1 :] @ cs[p_avail + 1 :])
        if tail_var > 0:
            noise = noise + sqrt(tail_var) * aux_rng.standard_normal(x.shape[0])
        return x * np.exp(-theta * basis.delta) + noise[:, None]

    return SdeProblem("ou", 1, 1, oracle.drift, oracle.diffusion, oracle, exact_step)


def linear2d_problem() -> SdeProblem:
    """Two-dimensional linear SDE with two noises and non-commuting
    diffusion directions (exercises the off-diagonal pair integral)."""
    A = np.array([[0.0, 0.2], [-0.2, 0.0]])
    C1 = np.array([[0.3, 0.0], [0.0, 0.1]])
    C2 = np.array([[0.0, 0.25], [0.25, 0.0]])
    oracle = AffineOracle(A=A, b=np.zeros(2), C=[C1, C2], d=[np.zeros(2), np.zeros(2)])
    return SdeProblem("linear2d", 2, 2, oracle.drift, oracle.diffusion, oracle, None)


def builtin_problems() -> Dict[str, Callable[[], SdeProblem]]:
    return {"gbm": gbm_problem, "ou": ou_problem, "linear2d": linear2d_problem}
