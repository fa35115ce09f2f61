"""Sampled wavelet kernels for the CWT front end.

Three mother wavelets are supported: the Mexican hat (closed form) and the
Daubechies-10 and biorthogonal 1.3 wavelets, which have no closed form and
are synthesized by the cascade algorithm from their filter coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "WaveletKind",
    "SampledWavelet",
    "mexican_hat_eval",
    "daubechies_lowpass",
    "filter_pair",
    "cascade_wavelet",
    "sample_wavelet",
]

MEXH_NORM = 2.0 / (math.sqrt(3.0) * math.pi**0.25)
MEXH_TRUNCATION = 1e-6
DEFAULT_CASCADE_ITERATIONS = 10


class WaveletKind(enum.Enum):
    """The three mother wavelets, keyed by their command-line names."""

    MEXICAN_HAT = "mexh"
    DB10 = "db10"
    BIOR13 = "bior1.3"

    @classmethod
    def parse(cls, name: str) -> "WaveletKind":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown wavelet {name!r} (expected one of: {valid})") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class SampledWavelet:
    """A wavelet dilated to one scale and sampled on the signal grid.

    ``samples[center]`` is the tap aligned with the analysis position b.
    Values already include the 1/sqrt(a) amplitude factor, with a in seconds.
    """

    kind: WaveletKind
    scale: float
    samples: np.ndarray
    grid_step: float
    support_halfwidth: float

    def __post_init__(self):
        self.samples.setflags(write=False)

    @property
    def center(self) -> int:
        return (len(self.samples) - 1) // 2

    def __len__(self) -> int:
        return len(self.samples)


def mexican_hat_eval(t):
    """L2-normalized Mexican hat, ``(2 / (sqrt(3) pi^1/4)) (1 - t^2) exp(-t^2 / 2)``.

    Accepts scalars or arrays.
    """
    t = np.asarray(t, dtype=float)
    out = MEXH_NORM * (1.0 - t * t) * np.exp(-0.5 * t * t)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _mexh_cutoff(rel: float = MEXH_TRUNCATION) -> float:
    # outermost |t| where the tail still reaches rel * peak; the tail decays monotonically past sqrt(3)
    f = lambda t: (t * t - 1.0) * math.exp(-0.5 * t * t) - rel
    return brentq(f, math.sqrt(3.0), 20.0, xtol=1e-14)


@lru_cache(maxsize=None)
def daubechies_lowpass(order: int) -> tuple[float, ...]:
    """Minimum-phase Daubechies reconstruction lowpass filter with `order` vanishing moments.

    Built by spectral factorization of the Daubechies polynomial; the roots
    inside the unit circle are kept. Coefficients sum to sqrt(2).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    poly = [math.comb(order - 1 + k, k) for k in range(order)][::-1]
    zeros = []
    for y in np.roots(poly) if order > 1 else []:
        # y = (2 - z - 1/z) / 4  ->  z^2 - (2 - 4y) z + 1 = 0
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        zeros.append(pair[np.argmin(np.abs(pair))])
    h = np.real(np.poly(zeros)) if zeros else np.array([1.0])
    for _ in range(order):
        h = np.convolve(h, [1.0, 1.0])
    h *= math.sqrt(2.0) / h.sum()
    return tuple(h.tolist())


_BIOR13_DEC_LO = tuple(math.sqrt(2.0) * c for c in (-1 / 16, 1 / 16, 1 / 2, 1 / 2, 1 / 16, -1 / 16))
_BIOR13_REC_LO = (1 / math.sqrt(2.0), 1 / math.sqrt(2.0))


def filter_pair(kind: WaveletKind) -> tuple[np.ndarray, np.ndarray]:
    """Return the (scaling, wavelet) reconstruction filters used by the cascade.

    For bior1.3 these are the synthesis-side filters, so the cascade yields
    the reconstruction wavelet.
    """
    if kind is WaveletKind.DB10:
        h = np.array(daubechies_lowpass(10))
        n = len(h)
        g = np.array([(-1) ** k * h[n - 1 - k] for k in range(n)])
    elif kind is WaveletKind.BIOR13:
        h = np.array(_BIOR13_REC_LO)
        dec = _BIOR13_DEC_LO
        n = len(dec)
        g = np.array([(-1) ** k * dec[n - 1 - k] for k in range(n)])
    else:
        raise ValueError(f"{kind} has a closed form; no filter bank")
    return h, g


def _stationary_cell_means(h: np.ndarray) -> np.ndarray:
    """Unit-cell averages of the scaling function, the fixed point of the cascade."""
    ncell = len(h) - 1
    if ncell == 1:
        return np.array([1.0])
    hp = np.concatenate([h, [0.0]])
    b = np.zeros((ncell, ncell))
    for n in range(ncell):
        for j in range(ncell):
            k = 2 * n - j
            left = hp[k] if 0 <= k < len(h) else 0.0
            right = hp[k + 1] if 0 <= k + 1 < len(h) else 0.0
            b[n, j] = (left + right) / math.sqrt(2.0)
    vals, vecs = np.linalg.eig(b)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    return v / v.sum()


def _refine(cells: np.ndarray, filt: np.ndarray, level: int, ncell_out: int) -> np.ndarray:
    # f_{i+1}[m] = sqrt(2) * sum_k filt[k] * f_i[m - k * 2^i]
    step = 1 << level
    up = np.zeros((len(filt) - 1) * step + 1)
    up[::step] = filt
    out = math.sqrt(2.0) * np.convolve(cells, up)
    return out[:ncell_out]


@lru_cache(maxsize=None)
def _cascade(kind: WaveletKind, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    h, g = filter_pair(kind)
    phi = _stationary_cell_means(h)
    phi_cells = len(h) - 1
    for level in range(iterations - 1):
        phi = _refine(phi, h, level, phi_cells << (level + 1))
    width = ((len(h) - 1) + (len(g) - 1)) / 2
    ncell = int(round(width * (1 << iterations)))
    psi = _refine(phi, g, iterations - 1, ncell)
    # cell averages -> node values; a node on a jump gets the midpoint
    nodes = np.zeros(ncell + 1)
    nodes[:-1] += 0.5 * psi
    nodes[1:] += 0.5 * psi
    grid = np.arange(ncell + 1) / float(1 << iterations)
    grid.setflags(write=False)
    nodes.setflags(write=False)
    return grid, nodes


def cascade_wavelet(kind: WaveletKind, iterations: int = DEFAULT_CASCADE_ITERATIONS):
    """Approximate a filter-bank wavelet on the dyadic grid ``k * 2**-iterations``.

    The scaling function is refined from its exact unit-cell averages, so each
    level holds cell averages of the limit function at that resolution; node
    values are the mean of the two neighbouring cells.

    Returns
    -------
    grid : ndarray
        Node positions covering the compact support, starting at 0.
    values : ndarray
        Wavelet values at `grid`.
    """
    if kind is WaveletKind.MEXICAN_HAT:
        raise ValueError("the Mexican hat has a closed form; cascade does not apply")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    return _cascade(kind, int(iterations))


def support_width(kind: WaveletKind) -> float:
    """Width of the compact support in mother-wavelet units (``inf`` for the Mexican hat)."""
    if kind is WaveletKind.MEXICAN_HAT:
        return math.inf
    h, g = filter_pair(kind)
    return ((len(h) - 1) + (len(g) - 1)) / 2


def sample_wavelet(
    kind: WaveletKind,
    scale: float,
    fs: float,
    iterations: int = DEFAULT_CASCADE_ITERATIONS,
) -> SampledWavelet:
    """Dilate a mother wavelet by `scale` samples and sample it at rate `fs`.

    Tap k holds ``psi(k / scale) / sqrt(scale / fs)``. The Mexican hat is
    centered on its peak and cut where it drops below 1e-6 of peak; the
    cascade wavelets span their whole support, have their sample mean
    removed, are padded by one zero tap when needed to keep the length odd,
    and are centered on the support midpoint.
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError(f"scale must be positive, got {scale}")
    if not (fs > 0 and math.isfinite(fs)):
        raise ValueError(f"fs must be positive, got {fs}")
    if scale < 1:
        raise ValueError(f"scale must be >= 1 sample, got {scale}")
    amp = 1.0 / math.sqrt(scale / fs)
    if kind is WaveletKind.MEXICAN_HAT:
        half = int(math.floor(_mexh_cutoff() * scale))
        k = np.arange(-half, half + 1)
        taps = mexican_hat_eval(k / scale) * amp
    else:
        grid, values = cascade_wavelet(kind, iterations)
        last = int(math.ceil(grid[-1] * scale - 1e-9))
        u = np.arange(last + 1) / scale
        taps = np.interp(u, grid, values, left=0.0, right=0.0)
        # coarse sampling of a non-bandlimited wavelet leaks DC (db10 at scale 1 by ~4% of peak)
        taps = (taps - taps.mean()) * amp
        if len(taps) % 2 == 0:
            taps = np.append(taps, 0.0)
    return SampledWavelet(
        kind=kind,
        scale=float(scale),
        samples=taps,
        grid_step=1.0 / fs,
        support_halfwidth=(len(taps) - 1) / 2 / fs,
    )
