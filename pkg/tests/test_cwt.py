import numpy as np
import pytest

from qrswave.cwt import EcgSignal, cwt_transform, square_signal
from qrswave.wavelets import WaveletKind, sample_wavelet

from oracles import cwt_double_loop

FS = 360.0


def _cwt(x, kind=WaveletKind.MEXICAN_HAT, scale=4):
    return cwt_transform(EcgSignal(np.asarray(x, float), FS), sample_wavelet(kind, scale, FS))


def test_zeros_give_zeros():
    for kind in WaveletKind:
        c = _cwt(np.zeros(200), kind, 3).coefficients
        assert c.shape == (200,)
        assert not c.any()


@pytest.mark.parametrize("kind", list(WaveletKind))
def test_impulse_response_is_reversed_kernel(kind):
    n, m0 = 301, 150
    x = np.zeros(n)
    x[m0] = 1.0
    w = sample_wavelet(kind, 4, FS)
    c = cwt_transform(EcgSignal(x, FS), w).coefficients
    # coefficients[b] = dt * psi[m0 - b]: the kernel read backwards around m0
    expected = np.zeros(n)
    for j, v in enumerate(w.samples):
        b = m0 - (j - w.center)
        if 0 <= b < n:
            expected[b] = v / FS
    np.testing.assert_allclose(c, expected, rtol=0, atol=1e-15 * np.abs(w.samples).max())


def test_mexh_impulse_equals_kernel():
    x = np.zeros(201)
    x[100] = 1.0
    w = sample_wavelet(WaveletKind.MEXICAN_HAT, 3, FS)
    c = cwt_transform(EcgSignal(x, FS), w).coefficients
    h = w.center
    np.testing.assert_allclose(c[100 - h : 100 + h + 1], w.samples / FS, rtol=1e-14)


@pytest.mark.parametrize("kind", list(WaveletKind))
def test_matches_double_loop_oracle(kind):
    rng = np.random.default_rng(7)
    for trial in range(40):
        n = int(rng.integers(20, 65))
        scale = float(rng.choice([1, 2, 3, 4, 1.5]))
        w = sample_wavelet(kind, scale, FS)
        if len(w) > 4 * n:
            continue
        x = rng.normal(size=n)
        got = cwt_transform(EcgSignal(x, FS), w).coefficients
        ref = cwt_double_loop(x, w.samples, w.center, 1 / FS)
        scale_ref = np.max(np.abs(ref))
        assert np.max(np.abs(got - ref)) <= 1e-12 * scale_ref


def test_linearity_and_shift_covariance():
    rng = np.random.default_rng(3)
    x1, x2 = rng.normal(size=400), rng.normal(size=400)
    a = _cwt(2.5 * x1 - x2).coefficients
    b = 2.5 * _cwt(x1).coefficients - _cwt(x2).coefficients
    np.testing.assert_allclose(a, b, atol=1e-12 * np.abs(b).max())
    # a delayed input gives delayed coefficients away from the edges
    shifted = np.roll(x1, 7)
    c0, c7 = _cwt(x1).coefficients, _cwt(shifted).coefficients
    np.testing.assert_allclose(c7[60:-60], c0[53:-67], atol=1e-12 * np.abs(c0).max())


def test_rejects_rate_mismatch():
    w = sample_wavelet(WaveletKind.MEXICAN_HAT, 2, 250)
    with pytest.raises(ValueError, match="grid step"):
        cwt_transform(EcgSignal(np.zeros(100), FS), w)


def test_rejects_kernel_too_long():
    w = sample_wavelet(WaveletKind.MEXICAN_HAT, 8, FS)
    with pytest.raises(ValueError, match="too long"):
        cwt_transform(EcgSignal(np.zeros(len(w) // 4 - 1), FS), w)


def test_signal_validation():
    with pytest.raises(ValueError):
        EcgSignal(np.array([]), FS)
    with pytest.raises(ValueError):
        EcgSignal(np.array([0.0, np.nan]), FS)
    with pytest.raises(ValueError):
        EcgSignal(np.zeros(4), 0)


def test_square_signal_examples():
    out = _cwt(np.zeros(64))
    sq = square_signal(out)
    assert not sq.samples.any()
    obj = type(out)(coefficients=np.array([0.0, -2.0, 3.0]), scale=1.0, kind=WaveletKind.DB10, fs=FS)
    np.testing.assert_array_equal(square_signal(obj).samples, [0.0, 4.0, 9.0])


def test_squared_is_nonnegative_and_same_length():
    rng = np.random.default_rng(11)
    x = rng.normal(size=500)
    for kind in WaveletKind:
        y = square_signal(_cwt(x, kind, 5)).samples
        assert len(y) == 500
        assert np.all(y >= 0)
