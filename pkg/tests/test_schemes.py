import math

import numpy as np
import pytest

from sdetaylor.coeffs import coefficient_tensor, weight_vector
from sdetaylor.operators import AffineOracle, FiniteDifferenceOracle, OracleGapError
from sdetaylor.schemes import (
    SchemeConfig,
    SchemeRun,
    SdeProblem,
    builtin_problems,
    deterministic_terms,
    export_trajectory_csv,
    gbm_problem,
    integrate_path,
    linear2d_problem,
    ou_problem,
    required_words,
    term_table,
    validate_oracle,
)
from sdetaylor.stochint import expansion_value, label, sample_basis, step_rng


def test_builtin_catalog():
    cat = builtin_problems()
    assert set(cat) == {"gbm", "ou", "linear2d"}
    gbm = cat["gbm"]()
    assert (gbm.n, gbm.m) == (1, 1)
    lin = cat["linear2d"]()
    assert (lin.n, lin.m) == (2, 2)


def test_gbm_oracle_words():
    gbm = gbm_problem(0.06, 0.3)
    x = np.array([[2.0]])
    assert np.allclose(gbm.oracle.apply((("G", 1), ("G", 1)), x, 0.0), 0.3 ** 2 * x)
    assert np.allclose(gbm.oracle.apply((("G", 1),) * 3, x, 0.0), 0.3 ** 3 * x)
    assert np.allclose(gbm.oracle.apply(("L", "L"), x, 0.0), 0.06 ** 2 * x)


def test_linear2d_noncommuting_diffusion():
    lin = linear2d_problem()
    x = np.array([[1.0, 2.0]])
    g12 = lin.oracle.apply((("G", 1), ("G", 2)), x, 0.0)
    g21 = lin.oracle.apply((("G", 2), ("G", 1)), x, 0.0)
    assert not np.allclose(g12, g21)


def test_ou_exact_terminal_mean():
    ou = ou_problem(theta=1.3, sigma=0.5)
    config = SchemeConfig(family="ito", r=2, n_steps=16, t_end=1.0, seed=5)
    res = integrate_path(ou, config, np.array([1.0]), batch=20_000, with_reference=True)
    mean = float(res.reference[:, -1].mean())
    want = math.exp(-1.3)
    se = float(res.reference[:, -1].std()) / math.sqrt(res.reference.shape[0])
    assert abs(mean - want) < 4 * se
    # exact-in-law variance of the reference terminal state
    var = float(res.reference[:, -1].var())
    want_var = 0.5 ** 2 * (1 - math.exp(-2 * 1.3)) / (2 * 1.3)
    assert abs(var - want_var) < 6 * want_var / math.sqrt(res.reference.shape[0])


def test_deterministic_reduction_matches_taylor():
    # zero diffusion: schemes reduce to the deterministic Taylor method
    lam = 0.7
    oracle = AffineOracle(
        A=np.array([[lam]]), b=np.zeros(1), C=[np.zeros((1, 1))], d=[np.zeros(1)]
    )
    prob = SdeProblem("ode", 1, 1, oracle.drift, oracle.diffusion, oracle, None)
    x0 = np.array([1.0])
    taylor_order = {2: 1, 3: 2, 4: 2, 5: 3, 6: 3}
    for r, order in taylor_order.items():
        for family in ("ito", "strat"):
            config = SchemeConfig(family=family, r=r, n_steps=4, t_end=1.0, seed=0,
                                  truncation=2)
            res = integrate_path(prob, config, x0, batch=1)
            h = config.delta
            step_factor = sum((lam * h) ** j / math.factorial(j) for j in range(order + 1))
            want = step_factor ** config.n_steps
            assert res.states[0, -1, 0] == pytest.approx(want, rel=1e-12), (r, family)


def test_milstein_identity():
    # order-1.0 scalar step equals the classical second-order one-step rule
    mu, sigma = 0.06, 0.3
    gbm = gbm_problem(mu, sigma)
    config = SchemeConfig(family="ito", r=2, n_steps=1, t_end=0.25, seed=0)
    run = SchemeRun(gbm, config)
    rng = np.random.default_rng(77)
    states = rng.uniform(0.2, 3.0, size=(1000, 1))
    delta = 0.25
    basis = sample_basis(rng, 1, run.basis_p, delta, batch=1000)
    got = run.step(states, 0.0, basis)
    z0 = basis.values[:, 0, 0]
    dw = math.sqrt(delta) * z0
    want = (
        states[:, 0]
        + mu * states[:, 0] * delta
        + sigma * states[:, 0] * dw
        + 0.5 * sigma ** 2 * states[:, 0] * (dw ** 2 - delta)
    )
    assert np.allclose(got[:, 0], want, rtol=1e-12)


def _transcribed_order2_step(problem, x, t, basis, p):
    """Order-2.0 one-step rule written out term by term (oracle)."""
    o = problem.oracle
    m = problem.m
    delta = basis.delta

    def ival(i_tuple, l_tuple):
        lab = label(i_tuple, l_tuple, "ito")
        tensor = coefficient_tensor(weight_vector(l_tuple), p)
        return expansion_value(lab, basis, tensor)[:, None]

    def w(*syms):
        return o.apply(tuple(syms), x, t)

    out = x.copy()
    a = w("L")
    out += delta * a + delta ** 2 / 2 * w("L", "L")
    for i1 in range(1, m + 1):
        out += w(("G", i1)) * ival((i1,), (0,))
        out += w(("G", i1), "L") * (delta * ival((i1,), (0,)) + ival((i1,), (1,)))
        out -= w("L", ("G", i1)) * ival((i1,), (1,))
    for i1 in range(1, m + 1):
        for i2 in range(1, m + 1):
            out += w(("G", i2), ("G", i1)) * ival((i2, i1), (0, 0))
            out += w(("G", i2), "L", ("G", i1)) * (
                ival((i2, i1), (1, 0)) - ival((i2, i1), (0, 1))
            )
            out -= w("L", ("G", i2), ("G", i1)) * ival((i2, i1), (1, 0))
            out += w(("G", i2), ("G", i1), "L") * (
                ival((i2, i1), (0, 1)) + delta * ival((i2, i1), (0, 0))
            )
            for i3 in range(1, m + 1):
                out += w(("G", i3), ("G", i2), ("G", i1)) * ival(
                    (i3, i2, i1), (0, 0, 0)
                )
                for i4 in range(1, m + 1):
                    out += w(("G", i4), ("G", i3), ("G", i2), ("G", i1)) * ival(
                        (i4, i3, i2, i1), (0, 0, 0, 0)
                    )
    return out


def test_order2_step_matches_transcription():
    lin = linear2d_problem()
    p = 3
    config = SchemeConfig(
        family="ito", r=4, n_steps=1, t_end=0.5, seed=0,
        truncation=p, use_closed_forms=False,
    )
    run = SchemeRun(lin, config)
    rng = np.random.default_rng(99)
    x = rng.uniform(0.5, 1.5, size=(64, 2))
    basis = sample_basis(rng, 2, max(run.basis_p, p), 0.5, batch=64)
    got = run.step(x, 0.0, basis)
    want = _transcribed_order2_step(lin, x, 0.0, basis, p)
    assert np.allclose(got, want, rtol=1e-11, atol=1e-14)


def test_one_step_weak_mean():
    gbm = gbm_problem(0.06, 0.3)
    config = SchemeConfig(family="ito", r=2, n_steps=1, t_end=0.05, seed=3)
    run = SchemeRun(gbm, config)
    n = 400_000
    rng = step_rng(12, 0)
    basis = sample_basis(rng, 1, run.basis_p, 0.05, batch=n)
    x = np.full((n, 1), 2.0)
    stepped = run.step(x, 0.0, basis)
    drift_est = float((stepped - x).mean())
    want = 0.05 * 0.06 * 2.0
    se = float((stepped - x).std()) / math.sqrt(n)
    assert abs(drift_est - want) < 4 * se + 5e-4 * want


def test_families_agree_on_same_bases():
    # same driving bases: the two families differ at a higher order than the
    # schemes' own strong error; at order 1.0 the drift modification cancels
    # the pair-integral correction algebraically (machine-precision match)
    lin = linear2d_problem()
    x0 = np.array([1.0, 1.0])
    for r, tol in ((2, 1e-12), (3, 0.02)):
        for n_steps in (8, 16):
            res_i = integrate_path(
                lin, SchemeConfig(family="ito", r=r, n_steps=n_steps, seed=4,
                                  truncation=6), x0, batch=4000
            )
            res_s = integrate_path(
                lin, SchemeConfig(family="strat", r=r, n_steps=n_steps, seed=4,
                                  truncation=6), x0, batch=4000
            )
            diff = res_i.states[:, -1] - res_s.states[:, -1]
            err = math.sqrt(float((diff ** 2).sum(axis=1).mean()))
            scale = float(np.abs(res_i.states[:, -1]).mean())
            assert err < tol * scale


def test_oracle_gap_reported():
    gbm = gbm_problem()
    fd = FiniteDifferenceOracle(gbm.drift, gbm.diffusion, m=1, max_len=3)
    prob = SdeProblem("gbm-fd", 1, 1, gbm.drift, gbm.diffusion, fd, None)
    config15 = SchemeConfig(family="ito", r=3, n_steps=2, t_end=0.5, seed=0, truncation=2)
    validate_oracle(prob, config15)  # order 1.5 fits in depth-2 words
    config20 = SchemeConfig(family="ito", r=4, n_steps=2, t_end=0.5, seed=0, truncation=2)
    with pytest.raises(OracleGapError) as err:
        validate_oracle(prob, config20)
    assert "G0^(1) G0^(1) G0^(1) G0^(1) x" in str(err.value)


def test_fd_oracle_integrates_order_1_5():
    mu, sigma = 0.06, 0.3
    gbm = gbm_problem(mu, sigma)
    fd = FiniteDifferenceOracle(gbm.drift, gbm.diffusion, m=1, max_len=3)
    prob = SdeProblem("gbm-fd", 1, 1, gbm.drift, gbm.diffusion, fd, gbm.exact_step)
    config = SchemeConfig(family="ito", r=3, n_steps=8, t_end=1.0, seed=6)
    res_fd = integrate_path(prob, config, np.array([1.0]), batch=128)
    res_cf = integrate_path(gbm, config, np.array([1.0]), batch=128)
    assert np.allclose(res_fd.states[:, -1], res_cf.states[:, -1], rtol=1e-6)


def test_required_words_and_tables():
    # stochastic term counts per grade match the distinct-tuple enumeration
    tab = term_table("ito", 4)
    keys = [(rec.key.k, rec.key.j, rec.key.l) for rec in tab]
    assert (1, 0, (0,)) in keys
    assert (2, 0, (1, 0)) in keys
    assert (4, 0, (0, 0, 0, 0)) in keys
    assert len(keys) == len(set(keys))
    det = deterministic_terms("ito", 3)
    assert (1, ("L",)) in det and (2, ("L", "L")) in det
    det_s = deterministic_terms("strat", 3)
    assert (1, ("Lb",)) in det_s and (2, ("L", "L")) in det_s
    gbm = gbm_problem()
    words = required_words(gbm, SchemeConfig(family="ito", r=2, n_steps=1))
    assert (("G", 1),) in words and (("G", 1), ("G", 1)) in words


def test_trajectory_export(tmp_path):
    gbm = gbm_problem()
    config = SchemeConfig(family="ito", r=2, n_steps=4, t_end=1.0, seed=0)
    res = integrate_path(gbm, config, np.array([1.0]), batch=2)
    path = tmp_path / "traj.csv"
    export_trajectory_csv(path, res, sample=1)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x1,W1"
    assert len(lines) == 6
    # increments column is cumulative and starts at 0
    assert float(lines[1].split(",")[2]) == 0.0


def test_single_step_equals_integrate():
    gbm = gbm_problem()
    config = SchemeConfig(family="ito", r=3, n_steps=1, t_end=0.7, seed=9)
    res = integrate_path(gbm, config, np.array([2.0]), batch=8)
    run = SchemeRun(gbm, config)
    rng = step_rng(9, 0)
    basis = sample_basis(rng, 1, run.basis_p, 0.7, batch=8)
    want = run.step(np.full((8, 1), 2.0), 0.0, basis)
    assert np.allclose(res.states[:, -1], want, rtol=1e-14)
