import math

import numpy as np
import pytest

from pendular.observables import (
    OBSERVABLE_NAMES,
    InsufficientData,
    UndefinedCorrelation,
    compute_series,
    correlation,
    covariance,
    field_variances,
    inferred_position_uncertainty,
    mirror_position_momentum,
    ordering_correction,
    variance,
)
from pendular.params import HBAR, derive_params, schiller_raw
from pendular.sde import sample_initial_coherent, sample_initial_thermal
from pendular.sde.moments import BlockMoments, MomentAccumulator


@pytest.fixture(scope="module")
def p():
    return derive_params(schiller_raw())


def _acc_from(records, block_size=None):
    records = np.asarray(records, complex)
    block_size = block_size or len(records)
    acc = MomentAccumulator(np.arange(records.shape[1], dtype=float), {}, block_size)
    for b, lo in enumerate(range(0, len(records), block_size)):
        acc.add_block(b, BlockMoments.from_trajectories(records[lo:lo + block_size]))
    return acc


def _point(n, state, times=2):
    return _acc_from(np.tile(np.asarray(state, complex), (n, times, 1)))


def test_vacuum_is_minimum_uncertainty(p):
    acc = _point(10, [0, 0, 0, 0])
    mx, mp, sx, sp = mirror_position_momentum(acc, p)
    assert np.all(sx == p.position_scale) and np.all(sp == p.momentum_scale)
    assert sx[0] * sp[0] == pytest.approx(HBAR / 2, rel=1e-15)
    assert sx[0] == pytest.approx(5.6824e-18, rel=1e-3) and sp[0] == pytest.approx(9.283e-18, rel=1e-3)
    vx, vy, fano = field_variances(acc)
    assert np.all(vx == 1) and np.all(vy == 1) and np.all(np.isnan(fano))


def test_point_ensembles_have_unit_quadrature_variance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.standard_normal(2) * 1e4 + 1j * rng.standard_normal(2) * 1e4
        acc = _point(5, [a, a.conjugate(), b, b.conjugate()])
        t = acc.total()
        for w in ("Xa", "Ya", "Xb", "Yb"):
            assert np.all(variance(t, w) == 1.0)
        # coherent field: V(N) = <N>, Fano 1
        assert np.allclose(field_variances(acc)[2], 1.0, rtol=1e-12)


def test_coherent_mirror_state(p):
    s = sample_initial_coherent(p, 4.2)
    acc = _point(3, s.as_array())
    mx, _, sx, _ = mirror_position_momentum(acc, p)
    assert mx[0] == pytest.approx(2 * p.position_scale * math.sqrt(p.mean_occupation), rel=1e-12)
    assert sx[0] == p.position_scale


def test_thermal_ensemble_sigma_x(p):
    rng = np.random.default_rng(3)
    recs = [sample_initial_thermal(p, 4.2, rng).as_array() for _ in range(20_000)]
    acc = _acc_from(np.array(recs)[:, None, :], 1000)
    s = compute_series(acc, p)
    assert s["sigma_x"][0] == pytest.approx(1.47e-14, rel=0.05)
    assert abs(s["mean_x"][0]) < 3 * s.se("mean_x")[0]
    assert s["sigma_x"][0] * s["sigma_p"][0] >= HBAR / 2


def test_insufficient_data(p):
    acc = _point(1, [0, 0, 0, 0])
    for f in (lambda: mirror_position_momentum(acc, p), lambda: field_variances(acc),
              lambda: correlation(acc, "x", "Ya"), lambda: compute_series(acc, p)):
        with pytest.raises(InsufficientData):
            f()


def test_ordering_corrections_table():
    rng = np.random.default_rng(1)
    acc = _acc_from(rng.standard_normal((6, 1, 4)) + 3)
    t = acc.total()
    assert ordering_correction(t, "Xa", "Xa")[0] == 1
    assert ordering_correction(t, "Ya", "Ya")[0] == 1
    assert abs(ordering_correction(t, "Xa", "Ya")[0]) < 1e-16
    assert ordering_correction(t, "x", "Ya")[0] == 0
    assert ordering_correction(t, "Na", "Na")[0] == t.mean[0, 4].real
    assert ordering_correction(t, "Xa", "Na")[0] == pytest.approx(0.5 * (t.mean[0, 0] + t.mean[0, 1]).real)
    with pytest.raises(KeyError):
        ordering_correction(t, "Zq", "Xa")


def _physical(rng, n, t, spread, centre):
    """Records on the classical manifold, alpha+ = conj(alpha), beta+ = conj(beta)."""
    a = centre + spread * (rng.standard_normal((n, t)) + 1j * rng.standard_normal((n, t)))
    b = centre + spread * (rng.standard_normal((n, t)) + 1j * rng.standard_normal((n, t)))
    return np.stack([a, a.conj(), b, b.conj()], axis=-1)


def test_self_correlation_is_one():
    rng = np.random.default_rng(2)
    acc = _acc_from(_physical(rng, 50, 4, 10, 30))
    for w in ("Xa", "Ya", "Na", "x", "p"):
        np.testing.assert_allclose(correlation(acc, w, w), 1.0, rtol=1e-14)


def test_zero_variance_raises():
    acc = _point(4, [0, 0, 0, 0])
    with pytest.raises(UndefinedCorrelation):
        correlation(acc, "x", "Na")
    assert np.all(np.isnan(correlation(acc, "x", "Na", undefined="nan")))
    with pytest.raises(UndefinedCorrelation):
        inferred_position_uncertainty(acc, "Na", derive_params(schiller_raw()))


def test_inference_via_must_be_field(p):
    acc = _point(4, [1, 1, 1, 1])
    with pytest.raises(KeyError):
        inferred_position_uncertainty(acc, "x", p)


def _latent_block(L, n=1000):
    """Block whose P-covariance of z = (alpha, alpha+, beta, beta+, N) is L L^T."""
    L = np.asarray(L, complex)
    com = n * np.einsum("ik,jk->ij", L, L)[None]
    return BlockMoments(n, np.zeros((1, 5), complex), com)


def test_inference_without_information(p):
    # Y_a and X_b driven by independent latent noises
    L = np.zeros((5, 2), complex)
    L[0, 0], L[1, 0] = 0.5j, -0.5j  # Y_a = u1
    L[2, 1] = L[3, 1] = 0.5  # X_b = u2
    acc = MomentAccumulator(np.zeros(1), {0: _latent_block(L)})
    s, c = inferred_position_uncertainty(acc, "Ya", p)
    assert c[0] == 0
    assert s[0] == p.position_scale * math.sqrt(variance(acc.total(), "Xb")[0])


def test_inference_exact_linear_dependence(p):
    # corrected moments with V(X_b, Y_a)^2 = V(X_b) V(Y_a); the vacuum terms
    # make this unreachable with real loadings, but positive-P loadings may
    # be imaginary
    L = np.zeros((5, 2), complex)
    L[0, 0], L[1, 0] = 0.5j, -0.5j  # Y_a = u1, Var_P = 1
    L[2, 0] = L[3, 0] = 1.0  # X_b = 2 u1 + i sqrt(3) u2
    L[2, 1] = L[3, 1] = 0.5j * math.sqrt(3)
    acc = MomentAccumulator(np.zeros(1), {0: _latent_block(L)})
    t = acc.total()
    assert covariance(t, "Xb", "Ya")[0] ** 2 == pytest.approx(variance(t, "Xb")[0] * variance(t, "Ya")[0])
    s, c = inferred_position_uncertainty(acc, "Ya", p, undefined="nan")
    assert c[0] == pytest.approx(1.0)
    assert np.nan_to_num(s[0]) < 1e-7 * p.position_scale


def test_series_schema_and_imag_diagnostics(p):
    rng = np.random.default_rng(4)
    acc = _acc_from(rng.standard_normal((64, 5, 4)) * 50 + 1j * rng.standard_normal((64, 5, 4)) + 200, 4)
    s = compute_series(acc, p)
    assert set(s.values) == set(OBSERVABLE_NAMES) == set(s.errors)
    assert s.n_batches == 16 and s.count == 64
    assert np.all(s["mean_x_imag"] != 0)


def test_merged_accumulator_gives_identical_series(p):
    rng = np.random.default_rng(5)
    acc = _acc_from(rng.standard_normal((60, 3, 4)) * 30 + 1j * rng.standard_normal((60, 3, 4)) + 100, 6)
    ids = acc.block_ids()
    merged = acc.subset(ids[3:]).merge(acc.subset(ids[:3]))
    a, b = compute_series(acc, p), compute_series(merged, p)
    for k in OBSERVABLE_NAMES:
        assert np.array_equal(a[k], b[k], equal_nan=True)
        assert np.array_equal(a.se(k), b.se(k), equal_nan=True)


def test_standard_error_scales_with_root_n(p):
    rng = np.random.default_rng(6)
    T = 200

    def se(n):
        acc = _acc_from(rng.standard_normal((n, T, 4)) * 40 + 1j * rng.standard_normal((n, T, 4)) + 300, n // 32)
        return compute_series(acc, p, ["mean_x", "sigma_x", "V_Xa"])

    small, big = se(3200), se(6400)
    for k in ("mean_x", "sigma_x", "V_Xa"):
        ratio = np.mean(small.se(k)) / np.mean(big.se(k))
        assert ratio == pytest.approx(math.sqrt(2), rel=0.2)
