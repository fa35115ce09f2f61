"""Wavelet x scale sweeps, whole-record scoring and their text outputs."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .cwt import DenoisedSignal, EcgSignal, cwt_transform, square_signal
from .detector import (
    ENVELOPE_WINDOW_MS,
    Detection,
    DetectorConfig,
    EnvelopeSignal,
    detect_beats,
    max_filter,
)
from .metrics import (
    MATCH_TOLERANCE_MS,
    BeatAnnotation,
    MatchResult,
    RecordMetrics,
    SegmentMetrics,
    match_beats,
    record_metrics,
    segment_metrics,
)
from .wavelets import WaveletKind, sample_wavelet
from .wfdb_io import (
    EcgRecord,
    extract_segment,
    read_record,
    segment_annotations,
    ventricular_flutter_intervals,
)

log = logging.getLogger(__name__)

__all__ = [
    "ThresholdRule",
    "SweepConfig",
    "SweepRow",
    "SweepReport",
    "Analysis",
    "analyze",
    "analyze_record",
    "run_sweep",
    "evaluate_record",
    "search_threshold",
    "emit_csv",
    "parse_config_text",
    "parse_range",
]

CONTEXT_S = 1.0
DEFAULT_THRESHOLD_REL = 0.1
# Coarse grid for the fixed-threshold search, as fractions of max(z) over the record.
SEARCH_GRID = tuple(float(v) for v in np.geomspace(1e-4, 0.5, 38))

BASE_COLUMNS = ("wavelet", "scale", "rmm", "mate_ms", "fom")
RECORD_COLUMNS = ("total", "tp", "fn", "fp", "sen", "ppr", "der")


@dataclass(frozen=True)
class ThresholdRule:
    """Absolute threshold, or a fraction of max(z) over the analyzed span."""

    value: float = DEFAULT_THRESHOLD_REL
    relative: bool = True

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"threshold must be positive, got {self.value}")

    def resolve(self, z: np.ndarray) -> float:
        if not self.relative:
            return self.value
        zmax = float(np.max(z))
        if zmax <= 0:
            raise ValueError("envelope is identically zero; relative threshold undefined")
        return self.value * zmax

    def describe(self) -> str:
        if self.relative:
            return f"thv = {self.value:g} * max(z) over each analyzed span"
        return f"thv = {self.value:g} (absolute, units of y)"


@dataclass
class SweepConfig:
    record_path: str
    channel: int = 0
    segment: Optional[tuple[float, float]] = None
    wavelets: tuple[WaveletKind, ...] = tuple(WaveletKind)
    scales: tuple[float, ...] = tuple(float(s) for s in range(1, 9))
    threshold: ThresholdRule = field(default_factory=ThresholdRule)
    tolerance_ms: float = MATCH_TOLERANCE_MS
    refractory_ms: float = 0.0

    def __post_init__(self):
        self.wavelets = tuple(
            w if isinstance(w, WaveletKind) else WaveletKind.parse(w) for w in self.wavelets
        )
        self.scales = tuple(float(s) for s in self.scales)
        self.validate()

    def validate(self):
        if not self.scales:
            raise ValueError("no scales given")
        if any(not s >= 1 for s in self.scales):
            raise ValueError("scales must be >= 1")
        if not self.wavelets:
            raise ValueError("no wavelets given")
        if self.segment is not None and not (0 <= self.segment[0] < self.segment[1]):
            raise ValueError(f"invalid segment {self.segment}")
        if self.channel < 0:
            raise ValueError("channel must be >= 0")

    def to_text(self) -> str:
        lines = [
            f"record={self.record_path}",
            f"channel={self.channel}",
            f"wavelets={','.join(w.value for w in self.wavelets)}",
            f"scales={','.join(repr(s) for s in self.scales)}",
            f"tolerance-ms={self.tolerance_ms!r}",
            f"refractory-ms={self.refractory_ms!r}",
        ]
        if self.segment is not None:
            lines.append(f"segment={self.segment[0]!r}:{self.segment[1]!r}")
        key = "threshold-rel" if self.threshold.relative else "threshold"
        lines.append(f"{key}={self.threshold.value!r}")
        return "\n".join(lines) + "\n"


def parse_range(text: str) -> tuple[float, ...]:
    """``"1:8"`` -> 1..8 in unit steps, ``"1,2,4"`` -> listed values."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad range {text!r}")
        lo, hi = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(lo + i * step for i in range(max(n, 0)))
    return tuple(float(v) for v in text.split(","))


def parse_segment(text: str) -> tuple[float, float]:
    a, sep, b = text.partition(":")
    if not sep:
        raise ValueError(f"segment must be START:END seconds, got {text!r}")
    return float(a), float(b)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {no}: expected key=value")
        out[key.strip().replace("_", "-")] = value.strip()
    return out


def config_from_mapping(m: dict[str, str]) -> SweepConfig:
    if "record" not in m:
        raise ValueError("config needs a record")
    if "threshold" in m and "threshold-rel" in m:
        raise ValueError("give either threshold or threshold-rel, not both")
    if "threshold" in m:
        rule = ThresholdRule(float(m["threshold"]), relative=False)
    else:
        rule = ThresholdRule(float(m.get("threshold-rel", DEFAULT_THRESHOLD_REL)))
    return SweepConfig(
        record_path=m["record"],
        channel=int(m.get("channel", 0)),
        segment=parse_segment(m["segment"]) if m.get("segment") else None,
        wavelets=tuple(WaveletKind.parse(w.strip()) for w in m.get("wavelets", "mexh,db10,bior1.3").split(",") if w.strip()),
        scales=parse_range(m.get("scales", "1:8")),
        threshold=rule,
        tolerance_ms=float(m.get("tolerance-ms", MATCH_TOLERANCE_MS)),
        refractory_ms=float(m.get("refractory-ms", 0.0)),
    )


@dataclass
class Analysis:
    """Everything computed for one (wavelet, scale) over one span."""

    x: EcgSignal
    y: DenoisedSignal
    z: EnvelopeSignal
    threshold: float
    detections: list[Detection]
    annotations: list[BeatAnnotation]
    match: Optional[MatchResult] = None


def _denoise(x: np.ndarray, fs: float, kind: WaveletKind, scale: float) -> np.ndarray:
    w = sample_wavelet(kind, scale, fs)
    return square_signal(cwt_transform(EcgSignal(x, fs), w)).samples


def analyze(
    x: EcgSignal,
    kind: WaveletKind,
    scale: float,
    threshold: ThresholdRule,
    annotations: Sequence[BeatAnnotation] = (),
    tolerance_ms: float = MATCH_TOLERANCE_MS,
    refractory_ms: float = 0.0,
    context: Optional[tuple[np.ndarray, int]] = None,
) -> Analysis:
    """Run the detector on `x` and score it against `annotations` (segment-local).

    `context` optionally supplies a longer stretch of the same channel and the
    offset of ``x[0]`` inside it, so the transform near the span edges sees
    real signal instead of zero padding.
    """
    if context is None:
        y = _denoise(x.samples, x.fs, kind, scale)
    else:
        raw, off = context
        y = _denoise(raw, x.fs, kind, scale)[off : off + len(x)]
    ys = DenoisedSignal(samples=y, scale=scale, kind=kind, fs=x.fs)
    z = max_filter(ys, ENVELOPE_WINDOW_MS)
    thv = threshold.resolve(z.samples)
    dets = detect_beats(ys, z, DetectorConfig(thv, refractory_ms))
    ann = list(annotations)
    m = match_beats(dets, ann, tolerance_ms, x.fs) if ann else None
    return Analysis(x, ys, z, thv, dets, ann, m)


def analyze_record(
    rec: EcgRecord,
    channel: int,
    kind: WaveletKind,
    scale: float,
    threshold: ThresholdRule,
    segment: Optional[tuple[float, float]] = None,
    tolerance_ms: float = MATCH_TOLERANCE_MS,
    refractory_ms: float = 0.0,
) -> Analysis:
    if not 0 <= channel < rec.header.n_channels:
        raise ValueError(f"channel {channel} out of range (record has {rec.header.n_channels})")
    fs, n = rec.fs, rec.header.n_samples
    t0, t1 = segment if segment is not None else (0.0, n / fs)
    x = extract_segment(rec, channel, t0, t1)
    ann = segment_annotations(rec, t0, t1)
    i0 = int(round(x.start_time * fs))
    c0 = max(0, i0 - int(CONTEXT_S * fs))
    c1 = min(n, i0 + len(x) + int(CONTEXT_S * fs))
    raw = rec.physical(channel)[c0:c1]
    return analyze(x, kind, scale, threshold, ann, tolerance_ms, refractory_ms, (raw, i0 - c0))


@dataclass
class SweepRow:
    wavelet: WaveletKind
    scale: float
    segment: Optional[SegmentMetrics] = None
    record: Optional[RecordMetrics] = None
    error: Optional[str] = None


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def has_record_columns(self) -> bool:
        return any(r.record is not None for r in self.rows)

    def metric(self, name: str, wavelet: WaveletKind) -> list[tuple[float, float]]:
        """(scale, value) points of one metric for one wavelet, skipping gaps."""
        pts = []
        for r in self.rows:
            if r.wavelet is not wavelet or r.segment is None:
                continue
            v = {"rmm": r.segment.rmm, "mate": r.segment.mate_ms, "fom": r.segment.fom}[name]
            if v is not None:
                pts.append((r.scale, v))
        return pts

    def cell(self, wavelet: WaveletKind, scale: float) -> SweepRow:
        for r in self.rows:
            if r.wavelet is wavelet and r.scale == scale:
                return r
        raise KeyError((wavelet, scale))


def _sweep_cell(rec: EcgRecord, cfg: SweepConfig, kind: WaveletKind, scale: float, keep_going: bool) -> SweepRow:
    try:
        a = analyze_record(
            rec, cfg.channel, kind, scale, cfg.threshold, cfg.segment, cfg.tolerance_ms, cfg.refractory_ms
        )
        if a.match is None:
            raise ValueError("no reference annotations in the analyzed span")
        seg = segment_metrics(a.detections, a.match, rec.fs)
        return SweepRow(kind, scale, segment=seg, record=record_metrics(a.match))
    except Exception as e:
        if not keep_going:
            raise RuntimeError(f"{kind.value} at scale {scale:g}: {e}") from e
        log.warning("%s at scale %g failed: %s", kind.value, scale, e)
        return SweepRow(kind, scale, error=str(e))


def run_sweep(
    cfg: SweepConfig,
    record: Optional[EcgRecord] = None,
    workers: int = 1,
    keep_going: bool = False,
    include_record_columns: bool = False,
) -> SweepReport:
    """Score every (wavelet, scale) cell; rows come out in wavelet order, then ascending scale."""
    cfg.validate()
    rec = record if record is not None else read_record(cfg.record_path)
    cells = [(k, s) for k in WaveletKind if k in cfg.wavelets for s in sorted(set(cfg.scales))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _sweep_cell(rec, cfg, c[0], c[1], keep_going), cells))
    else:
        rows = [_sweep_cell(rec, cfg, k, s, keep_going) for k, s in cells]
    if not include_record_columns:
        rows = [replace(r, record=None) for r in rows]
    span = "whole record" if cfg.segment is None else f"{cfg.segment[0]:g}-{cfg.segment[1]:g} s"
    notes = [
        f"record {rec.header.record_name}, channel {cfg.channel}, {span}",
        cfg.threshold.describe(),
        f"match tolerance {cfg.tolerance_ms:g} ms, envelope window {ENVELOPE_WINDOW_MS:g} ms",
    ]
    notes += [f"error {r.wavelet.value}@{r.scale:g}: {r.error}" for r in rows if r.error]
    return SweepReport(rows=rows, notes=notes)


def _fmt(v: float) -> str:
    return f"{v:#.6g}"


def emit_csv(report: SweepReport) -> str:
    """CSV text with ``#`` note lines, a header, and one row per cell."""
    cols = list(BASE_COLUMNS)
    extended = report.has_record_columns
    if extended:
        cols += RECORD_COLUMNS
    lines = [f"# {n}" for n in report.notes]
    lines.append(",".join(cols))
    for r in report.rows:
        out = [r.wavelet.value, f"{r.scale:g}"]
        if r.segment is None:
            out += ["", "", ""]
        else:
            s = r.segment
            out += [_fmt(s.rmm), _fmt(s.mate_ms), "perfect" if s.fom is None else _fmt(s.fom)]
        if extended:
            if r.record is None:
                out += [""] * len(RECORD_COLUMNS)
            else:
                m = r.record
                out += [str(m.total), str(m.tp), str(m.fn), str(m.fp), _fmt(m.sen_pct), _fmt(m.ppr_pct), _fmt(m.der_pct)]
        lines.append(",".join(out))
    return "\n".join(lines) + "\n"


@dataclass
class Evaluation:
    wavelet: WaveletKind
    scale: float
    threshold: float
    threshold_rel: float
    metrics: RecordMetrics
    excluded: list[tuple[int, int]]
    analysis: Analysis


def _score(a: Analysis, thv: float, refractory_ms: float, tolerance_ms: float, excluded):
    dets = detect_beats(a.y, a.z, DetectorConfig(thv, refractory_ms))
    dets = [d for d in dets if not _inside(d.tR, excluded)]
    return dets, match_beats(dets, a.annotations, tolerance_ms, a.x.fs)


def _inside(t: int, intervals) -> bool:
    return any(s <= t < e for s, e in intervals)


def evaluate_record(
    rec: EcgRecord,
    kind: WaveletKind,
    scale: float,
    threshold: ThresholdRule,
    channel: int = 0,
    tolerance_ms: float = MATCH_TOLERANCE_MS,
    refractory_ms: float = 0.0,
    exclude_vf: bool = True,
) -> Evaluation:
    """Whole-record beat-by-beat scoring at one fixed threshold.

    With `exclude_vf`, ventricular flutter/fibrillation episodes are left out
    of scoring: detections and reference beats inside them are dropped.
    """
    a = analyze_record(rec, channel, kind, scale, threshold, None, tolerance_ms, refractory_ms)
    excluded = ventricular_flutter_intervals(rec.annotations.events, rec.header.n_samples) if exclude_vf else []
    if excluded:
        a.annotations = [b for b in a.annotations if not _inside(b.sample_index, excluded)]
    dets, m = _score(a, a.threshold, refractory_ms, tolerance_ms, excluded)
    a.detections, a.match = dets, m
    zmax = float(np.max(a.z.samples))
    return Evaluation(kind, scale, a.threshold, a.threshold / zmax, record_metrics(m), excluded, a)


def search_threshold(
    rec: EcgRecord,
    kind: WaveletKind,
    scale: float,
    channel: int = 0,
    grid: Sequence[float] = SEARCH_GRID,
    tolerance_ms: float = MATCH_TOLERANCE_MS,
    refractory_ms: float = 0.0,
    exclude_vf: bool = True,
) -> tuple[Evaluation, list[tuple[float, RecordMetrics]]]:
    """Pick the fixed threshold with the lowest DER from a grid of fractions of max(z).

    Returns the winning evaluation and the full (fraction, metrics) trace.
    Ties go to the smaller threshold.
    """
    base = evaluate_record(rec, kind, scale, ThresholdRule(grid[0]), channel, tolerance_ms, refractory_ms, exclude_vf)
    a = base.analysis
    zmax = float(np.max(a.z.samples))
    trace = []
    best = None
    for frac in grid:
        dets, m = _score(a, frac * zmax, refractory_ms, tolerance_ms, base.excluded)
        if m.tp + m.fp == 0:
            continue
        rm = record_metrics(m)
        trace.append((frac, rm))
        if best is None or rm.der_pct < best[1].der_pct:
            best = (frac, rm, dets, m)
    if best is None:
        raise ValueError("no threshold in the grid produced any detection")
    frac, rm, dets, m = best
    a.detections, a.match, a.threshold = dets, m, frac * zmax
    return Evaluation(kind, scale, frac * zmax, frac, rm, base.excluded, a), trace
