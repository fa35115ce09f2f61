"""Beat-amplitude, timing and detection-accuracy measures."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .detector import Detection

__all__ = [
    "MATCH_TOLERANCE_MS",
    "BeatAnnotation",
    "MatchResult",
    "SegmentMetrics",
    "RecordMetrics",
    "PerfectTimingError",
    "rmm",
    "mate",
    "fom",
    "match_beats",
    "record_metrics",
    "counts_metrics",
    "segment_metrics",
]

MATCH_TOLERANCE_MS = 50.0


class PerfectTimingError(ArithmeticError):
    """Raised by :func:`fom` when the timing error is exactly zero."""


@dataclass(frozen=True)
class BeatAnnotation:
    sample_index: int
    symbol: str = "N"
    code: int = 1


@dataclass
class MatchResult:
    """Pairs are (detection index, annotation index) into the matched lists."""

    pairs: list[tuple[int, int]]
    unmatched_detections: list[int]
    unmatched_annotations: list[int]
    tolerance_ms: float = MATCH_TOLERANCE_MS
    time_pairs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_detections)

    @property
    def fn(self) -> int:
        return len(self.unmatched_annotations)


@dataclass(frozen=True)
class SegmentMetrics:
    """RMM, MATE and FOM for one analyzed segment.

    `fom` is None when MATE is zero, which :attr:`perfect_timing` reports.
    """

    rmm: float
    mate_ms: float
    fom: Optional[float]
    z_max: float
    z_min: float
    n_beats: int

    @property
    def perfect_timing(self) -> bool:
        return self.fom is None


@dataclass(frozen=True)
class RecordMetrics:
    total: int
    tp: int
    fn: int
    fp: int
    sen_pct: float
    ppr_pct: float
    der_pct: float


def rmm(detections: Sequence[Detection]) -> float:
    """Ratio of the largest to the smallest per-beat envelope peak."""
    peaks = [d.envelope_peak for d in detections]
    if len(peaks) < 2:
        raise ValueError(f"RMM needs at least 2 beats, got {len(peaks)}")
    if min(peaks) <= 0:
        raise ValueError("RMM needs positive beat amplitudes")
    return max(peaks) / min(peaks)


def mate(pairs: Iterable[tuple[int, int]], fs: float) -> float:
    """Mean absolute time error in ms over (detected, expert) sample pairs."""
    diffs = [abs(tp - te) for tp, te in pairs]
    if not diffs:
        raise ValueError("MATE needs at least one matched beat")
    return 1000.0 / fs * math.fsum(diffs) / len(diffs)


def fom(rmm_value: float, mate_ms: float) -> float:
    if rmm_value < 1:
        raise ValueError(f"RMM must be >= 1, got {rmm_value}")
    if mate_ms < 0:
        raise ValueError(f"MATE must be >= 0, got {mate_ms}")
    if mate_ms == 0:
        raise PerfectTimingError("MATE is 0; figure of merit is undefined")
    return 1.0 / (rmm_value * mate_ms)


def match_beats(
    detections: Sequence[Detection],
    annotations: Sequence[BeatAnnotation],
    tolerance_ms: float = MATCH_TOLERANCE_MS,
    fs: float = 360.0,
) -> MatchResult:
    """Greedy one-to-one matching in chronological order.

    Each detection, taken in time order, claims the nearest still-unmatched
    annotation within the tolerance (the earlier one on a tie).
    """
    tol = tolerance_ms * fs / 1000.0
    ann_t = [a.sample_index for a in annotations]
    taken = [False] * len(ann_t)
    pairs, time_pairs, extra = [], [], []
    for i, d in enumerate(detections):
        lo = bisect.bisect_left(ann_t, d.tR - tol)
        hi = bisect.bisect_right(ann_t, d.tR + tol)
        best = None
        for j in range(lo, hi):
            if taken[j]:
                continue
            if best is None or abs(ann_t[j] - d.tR) < abs(ann_t[best] - d.tR):
                best = j
        if best is None:
            extra.append(i)
        else:
            taken[best] = True
            pairs.append((i, best))
            time_pairs.append((d.tR, ann_t[best]))
    missed = [j for j, t in enumerate(taken) if not t]
    return MatchResult(pairs, extra, missed, tolerance_ms, time_pairs)


def counts_metrics(tp: int, fn: int, fp: int) -> RecordMetrics:
    if tp + fn <= 0:
        raise ValueError("no reference beats (TP + FN = 0)")
    if tp + fp <= 0:
        raise ValueError("no detections (TP + FP = 0)")
    return RecordMetrics(
        total=tp + fn,
        tp=tp,
        fn=fn,
        fp=fp,
        sen_pct=100.0 * tp / (tp + fn),
        ppr_pct=100.0 * tp / (tp + fp),
        der_pct=100.0 * (fn + fp) / (tp + fn),
    )


def record_metrics(m: MatchResult) -> RecordMetrics:
    return counts_metrics(m.tp, m.fn, m.fp)


def segment_metrics(detections: Sequence[Detection], m: MatchResult, fs: float) -> SegmentMetrics:
    """RMM over the detected beats and MATE over the matched pairs."""
    r = rmm(detections)
    t = mate(m.time_pairs, fs)
    try:
        f: Optional[float] = fom(r, t)
    except PerfectTimingError:
        f = None
    peaks = [d.envelope_peak for d in detections]
    return SegmentMetrics(
        rmm=r, mate_ms=t, fom=f, z_max=max(peaks), z_min=min(peaks), n_beats=len(detections)
    )
