"""Discretized continuous wavelet transform at a single scale."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .wavelets import SampledWavelet, WaveletKind

__all__ = ["EcgSignal", "CwtOutput", "DenoisedSignal", "cwt_transform", "square_signal"]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EcgSignal:
    """One ECG channel in millivolts.

    `start_time` is the offset of sample 0 within the source record, in seconds.
    """

    samples: np.ndarray
    fs: float
    start_time: float = 0.0

    def __post_init__(self):
        s = _frozen(self.samples)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("signal must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal contains non-finite samples")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class CwtOutput:
    coefficients: np.ndarray
    scale: float
    kind: WaveletKind
    fs: float


@dataclass(frozen=True, eq=False)
class DenoisedSignal:
    """Squared CWT coefficients, the detector input ``y[n]``."""

    samples: np.ndarray
    scale: float
    kind: WaveletKind
    fs: float

    def __len__(self) -> int:
        return len(self.samples)


def cwt_transform(x: EcgSignal, w: SampledWavelet) -> CwtOutput:
    """Wavelet coefficients of `x` at every sample position.

    ``coefficients[b] = dt * sum_k x[k] * psi[k - b]`` with the kernel center
    at offset 0 and `x` zero-extended past both ends.
    """
    if not math.isclose(w.grid_step * x.fs, 1.0, rel_tol=1e-9):
        raise ValueError(
            f"kernel grid step {w.grid_step:g} s does not match signal rate {x.fs:g} Hz"
        )
    n, m = len(x), len(w)
    if m > 4 * n:
        raise ValueError(f"kernel of {m} taps is too long for a {n}-sample signal")
    # correlation == convolution with the reversed kernel; 'full' then trim to center alignment
    full = np.convolve(x.samples, w.samples[::-1], mode="full")
    c = w.center
    coeffs = full[m - 1 - c : m - 1 - c + n] * w.grid_step
    return CwtOutput(coefficients=_frozen(coeffs), scale=w.scale, kind=w.kind, fs=x.fs)


def square_signal(t: CwtOutput) -> DenoisedSignal:
    return DenoisedSignal(
        samples=_frozen(np.square(t.coefficients)), scale=t.scale, kind=t.kind, fs=t.fs
    )
