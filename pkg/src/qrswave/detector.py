"""Envelope extraction and fixed-threshold R-peak detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cwt import DenoisedSignal

__all__ = [
    "ENVELOPE_WINDOW_MS",
    "EnvelopeSignal",
    "DetectorConfig",
    "Detection",
    "window_samples",
    "trailing_max",
    "max_filter",
    "detect_beats",
]

ENVELOPE_WINDOW_MS = 120.0


@dataclass(frozen=True, eq=False)
class EnvelopeSignal:
    samples: np.ndarray
    fs: float
    window_len_ms: float = ENVELOPE_WINDOW_MS

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class DetectorConfig:
    """Fixed detection threshold (in units of y) and optional refractory period."""

    threshold: float
    refractory_ms: float = 0.0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not self.refractory_ms >= 0:
            raise ValueError(f"refractory_ms must be >= 0, got {self.refractory_ms}")


@dataclass(frozen=True)
class Detection:
    """One detected beat. Indices are samples into the analyzed signal."""

    t1: int
    t2: int
    tR: int
    peak_y: float
    envelope_peak: float


def window_samples(window_ms: float, fs: float) -> int:
    if not window_ms > 0:
        raise ValueError(f"window length must be positive, got {window_ms} ms")
    n = int(round(window_ms * fs / 1000.0))
    if n < 1:
        raise ValueError(f"{window_ms} ms is shorter than one sample at {fs} Hz")
    return n


def trailing_max(y: np.ndarray, length: int) -> np.ndarray:
    """``z[n] = max(y[max(0, n - length + 1) : n + 1])``."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("cannot filter an empty sequence")
    if length < 1:
        raise ValueError("window length must be >= 1")
    # left-padding with y[0] is equivalent to clipping the window at the start
    padded = np.concatenate([np.full(length - 1, y[0]), y])
    return sliding_window_view(padded, length).max(axis=1)


def max_filter(y: DenoisedSignal, window_ms: float = ENVELOPE_WINDOW_MS) -> EnvelopeSignal:
    z = trailing_max(y.samples, window_samples(window_ms, y.fs))
    z.setflags(write=False)
    return EnvelopeSignal(samples=z, fs=y.fs, window_len_ms=window_ms)


def _runs_above(z: np.ndarray, thv: float) -> list[tuple[int, int]]:
    above = np.concatenate([[False], z > thv, [False]])
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    return list(zip(edges[::2].tolist(), (edges[1::2] - 1).tolist()))


def detect_beats(y: DenoisedSignal, z: EnvelopeSignal, cfg: DetectorConfig) -> list[Detection]:
    """One detection per maximal run of ``z > threshold``.

    The R peak is the first maximum of `y` inside the run. With a nonzero
    refractory period, a run starting within that period of the previous R
    peak is merged into the previous detection.
    """
    ys, zs = np.asarray(y.samples), np.asarray(z.samples)
    if len(ys) != len(zs):
        raise ValueError("y and z differ in length")
    if y.fs != z.fs:
        raise ValueError("y and z differ in sampling rate")
    refractory = int(round(cfg.refractory_ms * y.fs / 1000.0))
    spans: list[list[int]] = []
    for t1, t2 in _runs_above(zs, cfg.threshold):
        if spans and refractory and t1 - _argmax(ys, *spans[-1]) <= refractory:
            spans[-1][1] = t2
        else:
            spans.append([t1, t2])
    out = []
    for t1, t2 in spans:
        r = _argmax(ys, t1, t2)
        out.append(
            Detection(
                t1=t1,
                t2=t2,
                tR=r,
                peak_y=float(ys[r]),
                envelope_peak=float(zs[t1 : t2 + 1].max()),
            )
        )
    return out


def _argmax(a: np.ndarray, t1: int, t2: int) -> int:
    return t1 + int(np.argmax(a[t1 : t2 + 1]))
