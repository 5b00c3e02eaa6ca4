import math
from fractions import Fraction

import numpy as np
import pytest

from sdetaylor.coeffs import coefficient_tensor, weight_vector
from sdetaylor.stochint import (
    GaussianBasis,
    IntegralLabel,
    ShapeMismatchError,
    UnsupportedConversionError,
    closed_form,
    contract_reference,
    correction_plan,
    expansion_value,
    ito_strat_convert,
    ito_value,
    label,
    partial_pairings,
    sample_basis,
    step_rng,
    strat_expansion_is_proven,
    strat_value,
)


def manual_basis(delta, values):
    """values: (m, p+1) for a single-sample basis."""
    return GaussianBasis(delta, np.asarray(values, dtype=float)[None, :, :])


def test_sample_basis_moments_cheap():
    rng = np.random.default_rng(42)
    b = sample_basis(rng, 2, 4, 1.0, batch=200_000)
    assert abs(float(b.values[:, 0, 0].mean())) < 0.01
    assert abs(float((b.values[:, 0, 1] ** 2).mean()) - 1.0) < 0.02
    # distinct (i, j) cells uncorrelated
    assert abs(float((b.values[:, 0, 0] * b.values[:, 1, 0]).mean())) < 0.01


def test_time_column_deterministic():
    b = manual_basis(0.25, np.zeros((1, 4)))
    col = b.column(0)
    assert col[0, 0] == pytest.approx(math.sqrt(0.25))
    assert np.all(col[0, 1:] == 0)


def test_reproducible_streams():
    a = step_rng(7, 3).standard_normal(5)
    b = step_rng(7, 3).standard_normal(5)
    c = step_rng(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_pairing_counts():
    # 1 + C(k,2) + 3-term double pairings ... : totals for k=2..6
    assert len(partial_pairings(2)) == 2
    assert len(partial_pairings(3)) == 4
    assert len(partial_pairings(4)) == 10
    assert len(partial_pairings(5)) == 26
    assert len(partial_pairings(6)) == 76


def test_strat_single_mode_basis():
    # only zeta_0 nonzero: every cross term vanishes, value = C00 z0 z0
    delta = 0.8
    vals = np.zeros((2, 3))
    vals[0, 0] = 1.3
    vals[1, 0] = -0.7
    b = manual_basis(delta, vals)
    t = coefficient_tensor(weight_vector((0, 0)), 2)
    v = strat_value(label((1, 2), kind="strat"), b, t)
    assert v[0] == pytest.approx(delta / 2 * 1.3 * -0.7, rel=1e-14)


def pair_series_reference(basis, i1, i2, q, kind):
    """Transcribed band-series form of the unweighted pair integral."""
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


def test_strat_diagonal_triple_equals_closed_form_at_any_p():
    # symmetrising the simplex kernel telescopes: the plain sum over equal
    # components reproduces the closed form exactly at every truncation
    rng = np.random.default_rng(3)
    delta = 1.0
    b = sample_basis(rng, 1, 8, delta, batch=256)
    lab = label((1, 1, 1), kind="strat")
    want = closed_form(lab)(b)
    for p in (0, 3, 8):
        t = coefficient_tensor(weight_vector((0, 0, 0)), p)
        got = strat_value(lab, b, t)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-15)


def test_offdiag_pair_converges_monotonically():
    rng = np.random.default_rng(4)
    delta = 1.0
    b = sample_basis(rng, 2, 300, delta, batch=3000)
    ref = pair_series_reference(b, 1, 2, 300, "ito")
    errs = []
    for p in (2, 6, 18):
        t = coefficient_tensor(weight_vector((0, 0)), p)
        got = ito_value(label((1, 2)), b, t)
        errs.append(float(np.mean((got - ref) ** 2)))
    assert errs[0] > errs[1] > errs[2]
    # tail scale ~ delta^2/(4(2p+1))
    assert errs[2] < 2.5 * delta ** 2 / (4 * 37)


def test_band_series_matches_box_sum():
    rng = np.random.default_rng(6)
    b = sample_basis(rng, 2, 9, 0.7, batch=64)
    t = coefficient_tensor(weight_vector((0, 0)), 9)
    for i_pat, kind in [((1, 2), "ito"), ((1, 2), "strat"), ((1, 1), "ito")]:
        lab = label(i_pat, kind=kind)
        got = expansion_value(lab, b, t)
        ref = pair_series_reference(b, *i_pat, 9, kind)
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-15)


def test_single_weighted_value():
    rng = np.random.default_rng(5)
    b = sample_basis(rng, 1, 3, 0.6, batch=4)
    t = coefficient_tensor(weight_vector((1,)), 1)
    got = strat_value(label((1,), (1,), "strat"), b, t)
    z0, z1 = b.values[:, 0, 0], b.values[:, 0, 1]
    want = -(0.6 ** 1.5) / 2 * (z0 + z1 / math.sqrt(3))
    assert np.allclose(got, want, rtol=1e-13)


def test_ito_diagonal_pair_exact_at_any_p():
    rng = np.random.default_rng(9)
    delta = 0.3
    b = sample_basis(rng, 1, 8, delta, batch=16)
    lab = label((1, 1))
    z0 = b.values[:, 0, 0]
    want = delta / 2 * (z0 ** 2 - 1)
    for p in (0, 3, 8):
        t = coefficient_tensor(weight_vector((0, 0)), p)
        assert np.allclose(ito_value(lab, b, t), want, rtol=1e-12, atol=1e-15)


def test_ito_all_zero_basis_gives_indicator_term():
    b = manual_basis(0.5, np.zeros((1, 3)))
    t = coefficient_tensor(weight_vector((0, 0)), 2)
    v = ito_value(label((1, 1)), b, t)
    assert v[0] == pytest.approx(-0.5 / 2)
    v2 = ito_value(label((1, 1), (0, 0), "ito"), b, t)
    assert v2[0] == v[0]


def test_diagonal_quadruple_closed_form():
    rng = np.random.default_rng(11)
    delta = 1.0
    b = sample_basis(rng, 1, 6, delta, batch=200)
    lab = label((1, 1, 1, 1))
    z0 = b.values[:, 0, 0]
    want = delta ** 2 / 24 * (z0 ** 4 - 6 * z0 ** 2 + 3)
    assert np.allclose(closed_form(lab)(b), want, rtol=1e-12)
    t = coefficient_tensor(weight_vector((0, 0, 0, 0)), 4)
    got = ito_value(lab, b, t)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-13)


def test_closed_form_catalog():
    assert closed_form(label((1, 2))) is None
    assert closed_form(label((1, 2, 1))) is None
    assert closed_form(label((1,), (2,))) is not None
    assert closed_form(label((1, 1), (1, 1))) is not None
    assert closed_form(label((1,) * 6, kind="strat")) is not None
    # deterministic pure-time integral
    b = manual_basis(0.5, np.zeros((1, 2)))
    v = closed_form(label((0,), (1,)))(b)
    assert v[0] == pytest.approx(-0.5 ** 2 / 2)


def test_closed_form_single_examples():
    rng = np.random.default_rng(21)
    b = sample_basis(rng, 1, 4, 0.9, batch=8)
    z = b.values[:, 0, :]
    d = 0.9
    got2 = closed_form(label((1,), (2,)))(b)
    want2 = d ** 2.5 / 3 * (z[:, 0] + math.sqrt(3) / 2 * z[:, 1] + z[:, 2] / (2 * math.sqrt(5)))
    assert np.allclose(got2, want2, rtol=1e-12)
    got3 = closed_form(label((1,), (3,)))(b)
    want3 = -(d ** 3.5) / 4 * (
        z[:, 0]
        + 3 * math.sqrt(3) / 5 * z[:, 1]
        + z[:, 2] / math.sqrt(5)
        + z[:, 3] / (5 * math.sqrt(7))
    )
    assert np.allclose(got3, want3, rtol=1e-12)


def test_diagonal_sextuple_closed_form():
    rng = np.random.default_rng(23)
    b = sample_basis(rng, 1, 1, 2.0, batch=6)
    z0 = b.values[:, 0, 0]
    d = 2.0
    got = closed_form(label((1,) * 6))(b)
    want = d ** 3 / 720 * (z0 ** 6 - 15 * z0 ** 4 + 45 * z0 ** 2 - 15)
    assert np.allclose(got, want, rtol=1e-12)
    gots = closed_form(label((1,) * 6, kind="strat"))(b)
    assert np.allclose(gots, d ** 3 / 720 * z0 ** 6, rtol=1e-12)


def test_distinct_indices_ito_equals_strat():
    rng = np.random.default_rng(13)
    b = sample_basis(rng, 3, 5, 0.7, batch=32)
    for i, l in [((1, 2), (0, 0)), ((1, 2, 3), (0, 0, 0)), ((2, 1), (1, 0))]:
        t = coefficient_tensor(weight_vector(l), 5)
        vi = ito_value(label(i, l, "ito"), b, t)
        vs = strat_value(label(i, l, "strat"), b, t)
        assert np.allclose(vi, vs, rtol=1e-14)


def test_conversions_deterministic_pairs():
    rng = np.random.default_rng(17)
    delta = 0.9
    b = sample_basis(rng, 2, 6, delta, batch=8)
    t = coefficient_tensor(weight_vector((0, 0)), 6)
    # strat (00) diag minus ito (00) diag == delta/2
    vs = strat_value(label((1, 1), kind="strat"), b, t)
    vi = ito_value(label((1, 1)), b, t)
    assert np.allclose(vs - vi, delta / 2, rtol=1e-12)
    got = ito_strat_convert(label((1, 1), kind="strat"), vs, delta)
    assert np.allclose(got, vi, rtol=1e-12)
    # (11): ito = strat - delta^3/6
    t11 = coefficient_tensor(weight_vector((1, 1)), 6)
    vs11 = strat_value(label((1, 1), (1, 1), "strat"), b, t11)
    got11 = ito_strat_convert(label((1, 1), (1, 1), "strat"), vs11, delta)
    assert np.allclose(got11, vs11 - delta ** 3 / 6, rtol=1e-12)
    # distinct indices: no correction
    vs_d = strat_value(label((1, 2), (1, 0), "strat"), b, coefficient_tensor(weight_vector((1, 0)), 6))
    assert np.allclose(
        ito_strat_convert(label((1, 2), (1, 0), "strat"), vs_d, delta), vs_d
    )


def test_conversion_involutive_and_triple():
    rng = np.random.default_rng(19)
    delta = 0.5
    b = sample_basis(rng, 2, 6, delta, batch=8)
    t3 = coefficient_tensor(weight_vector((0, 0, 0)), 6)
    for i in [(1, 1, 2), (2, 1, 1), (1, 1, 1), (1, 2, 1)]:
        vs = strat_value(label(i, kind="strat"), b, t3)
        vi_from_conv = ito_strat_convert(label(i, kind="strat"), vs, delta, basis=b)
        back = ito_strat_convert(label(i, kind="ito"), vi_from_conv, delta, basis=b)
        assert np.allclose(back, vs, rtol=1e-12, atol=1e-15)
    with pytest.raises(UnsupportedConversionError):
        ito_strat_convert(label((1, 1, 2), kind="strat"), np.zeros(8), delta)
    with pytest.raises(UnsupportedConversionError):
        ito_strat_convert(label((1, 1, 2, 1), kind="strat"), np.zeros(8), delta)


def test_triple_conversion_matches_series():
    # strat series + printed correction == ito series, pathwise
    rng = np.random.default_rng(29)
    delta = 0.6
    b = sample_basis(rng, 2, 10, delta, batch=64)
    t3 = coefficient_tensor(weight_vector((0, 0, 0)), 10)
    for i in [(1, 1, 2), (2, 1, 1)]:
        vs = strat_value(label(i, kind="strat"), b, t3)
        vi = ito_value(label(i, kind="ito"), b, t3)
        converted = ito_strat_convert(label(i, kind="strat"), vs, delta, basis=b)
        # the conversion is exact in the limit; at p=10 the residual is small
        resid = float(np.mean((converted - vi) ** 2))
        assert resid < 2e-3 * float(np.mean(vi ** 2) + 1e-12)


def test_time_component_reduction():
    # (k=2, i=(1,0)) equals the weighted single integral:
    # integrating the outer time variable gives delta*I_(0) + I_(1)
    rng = np.random.default_rng(31)
    delta = 0.75
    b = sample_basis(rng, 1, 6, delta, batch=128)
    t2 = coefficient_tensor(weight_vector((0, 0)), 6)
    lhs = ito_value(label((1, 0)), b, t2)
    t0 = coefficient_tensor(weight_vector((0,)), 6)
    t1 = coefficient_tensor(weight_vector((1,)), 6)
    rhs = delta * ito_value(label((1,)), b, t0) + ito_value(label((1,), (1,)), b, t1)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-15)


def test_hypothesis_flag():
    assert strat_expansion_is_proven(label((1, 2, 3), kind="strat"))
    assert strat_expansion_is_proven(label((1,) * 5, kind="strat"))
    assert not strat_expansion_is_proven(label((1,) * 6, kind="strat"))


def test_shape_mismatch_errors():
    rng = np.random.default_rng(37)
    b = sample_basis(rng, 1, 2, 1.0)
    t = coefficient_tensor(weight_vector((0, 0)), 2)
    with pytest.raises(ShapeMismatchError):
        strat_value(label((1, 1), (1, 0), "strat"), b, t)
    with pytest.raises(ShapeMismatchError):
        strat_value(label((1, 3), kind="strat"), b, t)  # component beyond m


def test_backends_agree():
    from sdetaylor import _kernels_py

    try:
        from sdetaylor import _kernels
    except ImportError:
        pytest.skip("compiled kernels unavailable")
    rng = np.random.default_rng(41)
    for k, pattern in [(2, (1, 1)), (3, (1, 2, 1)), (4, (1, 1, 2, 2)), (5, (1, 2, 3, 1, 2))]:
        p = 3 if k < 5 else 2
        C = rng.standard_normal((p + 1,) * k)
        zetas = [rng.standard_normal((7, p + 1)) for _ in range(k)]
        plan = correction_plan(pattern, "ito")
        a = _kernels_py.contract_batch(C, zetas, plan)
        c = _kernels.contract_batch(C, zetas, plan)
        assert np.allclose(a, c, rtol=1e-12, atol=1e-14)
        ref = [
            contract_reference(lambda j: C[j], k, [z[s] for z in zetas], plan)
            for s in range(3)
        ]
        assert np.allclose(a[:3], ref, rtol=1e-10)


def test_moment_sanity_small():
    rng = np.random.default_rng(43)
    b = sample_basis(rng, 2, 6, 1.0, batch=100_000)
    t3 = coefficient_tensor(weight_vector((0, 0, 0)), 6)
    v = ito_value(label((1, 1, 2)), b, t3)
    se = float(v.std()) / math.sqrt(b.batch)
    assert abs(float(v.mean())) < 4 * se + 1e-12
    t2 = coefficient_tensor(weight_vector((0, 0)), 6)
    vs = strat_value(label((1, 1), kind="strat"), b, t2)
    se2 = float(vs.std()) / math.sqrt(b.batch)
    assert abs(float(vs.mean()) - 0.5) < 4 * se2
