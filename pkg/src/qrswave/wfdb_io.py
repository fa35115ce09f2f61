"""Readers for WFDB records: header text, format-212 signals, MIT annotations.

Only what the MIT-BIH arrhythmia database needs is implemented. A record is
the file triple ``<name>.hea``, ``<name>.dat`` and ``<name>.atr``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .cwt import EcgSignal
from .metrics import BeatAnnotation

__all__ = [
    "WfdbFormatError",
    "UnsupportedFormatError",
    "BEAT_CODES",
    "ANNOTATION_SYMBOLS",
    "ChannelSpec",
    "RecordHeader",
    "Annotation",
    "AnnotationSet",
    "EcgRecord",
    "read_header",
    "read_dat_212",
    "write_dat_212",
    "read_annotations",
    "read_record",
    "extract_segment",
    "segment_annotations",
    "ventricular_flutter_intervals",
    "checksum",
]


class WfdbFormatError(ValueError):
    pass


class UnsupportedFormatError(WfdbFormatError):
    pass


# Standard WFDB annotation codes and mnemonics.
ANNOTATION_SYMBOLS = {
    0: "NOTQRS", 1: "N", 2: "L", 3: "R", 4: "a", 5: "V", 6: "F", 7: "J", 8: "A",
    9: "S", 10: "E", 11: "j", 12: "/", 13: "Q", 14: "~", 16: "|", 18: "s", 19: "T",
    20: "*", 21: "D", 22: '"', 23: "=", 24: "p", 25: "B", 26: "^", 27: "t", 28: "+",
    29: "u", 30: "?", 31: "!", 32: "[", 33: "]", 34: "e", 35: "n", 36: "@", 37: "x",
    38: "f", 39: "(", 40: ")", 41: "r",
}

# Beat classes scored as QRS complexes. Ventricular flutter waves (31, "!") are
# left out: they are not discrete beats, and with them record 207 counts 2332
# annotations instead of 1860.
BEAT_CODES = frozenset({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 25, 34, 35, 38})

RHYTHM = 28
VFON, VFOFF = 32, 33
_SKIP, _NUM, _SUB, _CHN, _AUX = 59, 60, 61, 62, 63


@dataclass(frozen=True)
class ChannelSpec:
    file_name: str
    fmt: int
    gain: float
    baseline: int
    units: str = "mV"
    adc_resolution: int = 12
    adc_zero: int = 0
    initial_value: Optional[int] = None
    checksum: Optional[int] = None
    description: str = ""
    byte_offset: int = 0


@dataclass(frozen=True)
class RecordHeader:
    record_name: str
    n_channels: int
    fs: float
    n_samples: int
    channels: tuple[ChannelSpec, ...]


@dataclass(frozen=True)
class Annotation:
    """A raw annotation of any type, with the fields MIT files can attach."""

    sample: int
    code: int
    subtype: int = 0
    chan: int = 0
    num: int = 0
    aux: str = ""

    @property
    def symbol(self) -> str:
        return ANNOTATION_SYMBOLS.get(self.code, f"<{self.code}>")


@dataclass
class AnnotationSet:
    beats: list[BeatAnnotation]
    events: list[Annotation]

    def census(self) -> dict[str, int]:
        """Count of every annotation symbol in the file."""
        out: dict[str, int] = {}
        for a in self.events:
            out[a.symbol] = out.get(a.symbol, 0) + 1
        return dict(sorted(out.items()))


@dataclass
class EcgRecord:
    header: RecordHeader
    channels: np.ndarray  # (n_channels, n_samples) adu
    annotations: AnnotationSet = field(default_factory=lambda: AnnotationSet([], []))

    @property
    def fs(self) -> float:
        return self.header.fs

    def physical(self, channel: int) -> np.ndarray:
        spec = self.header.channels[channel]
        return (self.channels[channel].astype(float) - spec.baseline) / spec.gain


def _num(token: str, kind, line_no: int, col: int, what: str):
    try:
        return kind(token)
    except ValueError:
        raise WfdbFormatError(
            f"line {line_no}, column {col}: bad {what} {token!r}"
        ) from None


_FMT_RE = re.compile(r"^(\d+)(?:x(\d+))?(?::(\d+))?(?:\+(\d+))?$")
_GAIN_RE = re.compile(r"^([-+0-9.eE]+)(?:\(([-+]?\d+)\))?(?:/(\S+))?$")


def read_header(data: Union[bytes, str]) -> RecordHeader:
    """Parse a single-segment WFDB header (``.hea``).

    Raises
    ------
    WfdbFormatError
        On malformed lines; the message names the line and column.
    UnsupportedFormatError
        If a signal is stored in any format other than 212.
    """
    text = data.decode("ascii", errors="replace") if isinstance(data, bytes) else data
    lines = [
        (i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())
    ]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise WfdbFormatError("empty header")

    line_no, rec = lines[0]
    tok = rec.split()
    if "/" in tok[0]:
        raise WfdbFormatError(f"line {line_no}, column 1: multi-segment records are not supported")
    if len(tok) < 2:
        raise WfdbFormatError(f"line {line_no}, column 2: missing signal count")
    n_sig = _num(tok[1], int, line_no, 2, "signal count")
    fs = 250.0
    if len(tok) > 2:
        fs = _num(tok[2].split("/")[0].split("(")[0], float, line_no, 3, "sampling frequency")
    n_samples = _num(tok[3], int, line_no, 4, "sample count") if len(tok) > 3 else 0
    if n_sig < 1:
        raise WfdbFormatError(f"line {line_no}, column 2: need at least one signal")
    if not fs > 0:
        raise WfdbFormatError(f"line {line_no}, column 3: sampling frequency must be positive")
    if len(lines) < 1 + n_sig:
        raise WfdbFormatError(
            f"line {lines[-1][0] + 1}, column 1: expected {n_sig} signal lines, found {len(lines) - 1}"
        )

    chans = []
    for line_no, ln in lines[1 : 1 + n_sig]:
        tok = ln.split()
        if len(tok) < 2:
            raise WfdbFormatError(f"line {line_no}, column 2: missing format")
        m = _FMT_RE.match(tok[1])
        if not m:
            raise WfdbFormatError(f"line {line_no}, column 2: bad format {tok[1]!r}")
        fmt = int(m.group(1))
        if fmt != 212:
            raise UnsupportedFormatError(
                f"line {line_no}, column 2: signal format {fmt} is not supported (only 212)"
            )
        if m.group(2) or m.group(3):
            raise UnsupportedFormatError(
                f"line {line_no}, column 2: multi-frequency or skewed signals are not supported"
            )
        offset = int(m.group(4) or 0)
        gain, baseline, units = 200.0, None, "mV"
        if len(tok) > 2:
            g = _GAIN_RE.match(tok[2])
            if not g:
                raise WfdbFormatError(f"line {line_no}, column 3: bad gain {tok[2]!r}")
            gain = _num(g.group(1), float, line_no, 3, "gain") or 200.0
            if g.group(2) is not None:
                baseline = int(g.group(2))
            units = g.group(3) or units
        adcres = _num(tok[3], int, line_no, 4, "ADC resolution") if len(tok) > 3 else 12
        adczero = _num(tok[4], int, line_no, 5, "ADC zero") if len(tok) > 4 else 0
        initval = _num(tok[5], int, line_no, 6, "initial value") if len(tok) > 5 else None
        cksum = _num(tok[6], int, line_no, 7, "checksum") if len(tok) > 6 else None
        desc = " ".join(tok[8:]) if len(tok) > 8 else ""
        chans.append(
            ChannelSpec(
                file_name=tok[0],
                fmt=fmt,
                gain=gain,
                baseline=adczero if baseline is None else baseline,
                units=units,
                adc_resolution=adcres,
                adc_zero=adczero,
                initial_value=initval,
                checksum=cksum,
                description=desc,
                byte_offset=offset,
            )
        )
    return RecordHeader(
        record_name=lines[0][1].split()[0],
        n_channels=n_sig,
        fs=fs,
        n_samples=n_samples,
        channels=tuple(chans),
    )


def read_dat_212(data: bytes, header: RecordHeader) -> np.ndarray:
    """Decode format-212 samples into an ``(n_channels, n_samples)`` int array.

    Each 3-byte group holds two 12-bit two's-complement samples; samples are
    interleaved frame by frame across channels.
    """
    nch = header.n_channels
    offset = header.channels[0].byte_offset if header.channels else 0
    buf = np.frombuffer(data, dtype=np.uint8)[offset:]
    n_frames = header.n_samples or (len(buf) * 2 // 3) // nch
    total = n_frames * nch
    need = (3 * total + 1) // 2
    if len(buf) < need:
        cut = offset + (len(buf) // 3) * 3
        raise WfdbFormatError(
            f"signal file truncated at byte offset {cut}: "
            f"{n_frames} frames need {need} bytes, found {len(buf)}"
        )
    buf = buf[:need].astype(np.int32)
    if len(buf) % 3:
        buf = np.concatenate([buf, np.zeros(3 - len(buf) % 3, dtype=np.int32)])
    b = buf.reshape(-1, 3)
    out = np.empty(2 * len(b), dtype=np.int32)
    out[0::2] = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    out[1::2] = ((b[:, 1] & 0xF0) << 4) | b[:, 2]
    out = out[:total]
    out[out >= 2048] -= 4096
    return out.reshape(n_frames, nch).T.copy()


def write_dat_212(channels: np.ndarray) -> bytes:
    """Inverse of :func:`read_dat_212` for an ``(n_channels, n_samples)`` array."""
    flat = np.asarray(channels, dtype=np.int32).T.reshape(-1)
    if flat.size and (flat.min() < -2048 or flat.max() > 2047):
        raise ValueError("samples do not fit in 12 bits")
    u = flat & 0xFFF
    odd = len(u) % 2
    if odd:
        u = np.append(u, 0)
    s1, s2 = u[0::2], u[1::2]
    b = np.empty((len(s1), 3), dtype=np.uint8)
    b[:, 0] = s1 & 0xFF
    b[:, 1] = ((s1 >> 8) & 0x0F) | ((s2 >> 4) & 0xF0)
    b[:, 2] = s2 & 0xFF
    raw = b.tobytes()
    return raw[:-1] if odd else raw


def checksum(samples: np.ndarray) -> int:
    """WFDB signal checksum: 16-bit two's-complement sum of the samples."""
    s = int(np.asarray(samples, dtype=np.int64).sum()) & 0xFFFF
    return s - 0x10000 if s >= 0x8000 else s


def read_annotations(data: bytes, fs: float = 360.0) -> AnnotationSet:
    """Decode an MIT-format annotation file.

    Each 16-bit little-endian word holds a 6-bit code and a 10-bit time
    delta. SKIP words carry a 32-bit delta in the following two words; NUM,
    SUB, CHN and AUX words modify the preceding annotation. A zero word ends
    the file.
    """
    if len(data) % 2:
        raise WfdbFormatError(f"annotation file has odd length {len(data)}")
    words = np.frombuffer(data, dtype="<u2")
    events: list[dict] = []
    t = 0
    num = sub = chan = 0
    i = 0
    while i < len(words):
        w = int(words[i])
        code, delta = w >> 10, w & 0x3FF
        if w == 0:
            break
        if code == _SKIP:
            if i + 2 >= len(words):
                raise WfdbFormatError(f"truncated SKIP payload at byte offset {2 * i}")
            hi, lo = int(words[i + 1]), int(words[i + 2])
            step = (hi << 16) | lo
            if step >= 1 << 31:
                step -= 1 << 32
            t += step
            i += 3
            continue
        if code == _NUM:
            num = delta - 1024 if delta >= 512 else delta
            if events:
                events[-1]["num"] = num
        elif code == _SUB:
            sub = delta
            if events:
                events[-1]["subtype"] = sub
        elif code == _CHN:
            chan = delta
            if events:
                events[-1]["chan"] = chan
        elif code == _AUX:
            nbytes = delta
            start = 2 * (i + 1)
            end = start + nbytes
            if end > len(data):
                raise WfdbFormatError(f"truncated AUX payload at byte offset {2 * i}")
            if events:
                events[-1]["aux"] = data[start:end].split(b"\0", 1)[0].decode("latin-1")
            i += 1 + (nbytes + 1) // 2
            continue
        else:
            t += delta
            events.append({"sample": t, "code": code, "subtype": 0, "chan": chan, "num": num, "aux": ""})
        i += 1

    ann = [Annotation(**e) for e in events]
    beats = [
        BeatAnnotation(sample_index=a.sample, symbol=a.symbol, code=a.code)
        for a in ann
        if a.code in BEAT_CODES
    ]
    return AnnotationSet(beats=beats, events=ann)


def ventricular_flutter_intervals(events, n_samples: int) -> list[tuple[int, int]]:
    """Sample intervals ``[start, end)`` of ventricular flutter or fibrillation.

    Episodes are bounded either by ``[``/``]`` markers or by a ``(VFL``/``(VF``
    rhythm label running until the next rhythm label.
    """
    out = []
    open_at = None
    rhythm_at = None
    for a in events:
        if a.code == VFON and open_at is None:
            open_at = a.sample
        elif a.code == VFOFF and open_at is not None:
            out.append((open_at, a.sample + 1))
            open_at = None
        elif a.code == RHYTHM:
            label = a.aux.strip().rstrip("\0")
            if rhythm_at is not None:
                out.append((rhythm_at, a.sample))
                rhythm_at = None
            if label in ("(VFL", "(VF"):
                rhythm_at = a.sample
    if open_at is not None:
        out.append((open_at, n_samples))
    if rhythm_at is not None:
        out.append((rhythm_at, n_samples))
    out.sort()
    merged: list[tuple[int, int]] = []
    for s, e in out:
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(e, merged[-1][1]))
        else:
            merged.append((s, e))
    return merged


def read_record(path: Union[str, os.PathLike], annotator: str = "atr", verify: bool = True) -> EcgRecord:
    """Load ``<path>.hea``, its signal file, and ``<path>.<annotator>`` if present."""
    base = Path(path)
    hea = base.with_name(base.name + ".hea")
    if not hea.exists():
        raise FileNotFoundError(f"no header file {hea}")
    header = read_header(hea.read_bytes())
    files = {c.file_name for c in header.channels}
    if len(files) != 1:
        raise UnsupportedFormatError("signals spread over several files are not supported")
    dat = base.parent / files.pop()
    channels = read_dat_212(dat.read_bytes(), header)
    if header.n_samples == 0:
        header = RecordHeader(
            header.record_name, header.n_channels, header.fs, channels.shape[1], header.channels
        )
    if verify:
        for k, spec in enumerate(header.channels):
            if spec.checksum is not None and checksum(channels[k]) != spec.checksum:
                raise WfdbFormatError(f"{dat}: checksum mismatch on signal {k}")
            if spec.initial_value is not None and channels.shape[1] and channels[k, 0] != spec.initial_value:
                raise WfdbFormatError(f"{dat}: initial value mismatch on signal {k}")
    atr = base.with_name(f"{base.name}.{annotator}")
    annotations = read_annotations(atr.read_bytes(), header.fs) if atr.exists() else AnnotationSet([], [])
    return EcgRecord(header=header, channels=channels, annotations=annotations)


def _sample_range(rec: EcgRecord, t_start: float, t_end: float) -> tuple[int, int]:
    n = rec.header.n_samples
    fs = rec.fs
    if not (0 <= t_start < t_end):
        raise ValueError(f"invalid time range {t_start}..{t_end} s")
    if t_end * fs > n + 1e-6:
        raise ValueError(f"end time {t_end} s is past the record end ({n / fs:g} s)")
    # the epsilon absorbs binary round-off in products such as 12.6 * 360
    i0 = int(math.floor(t_start * fs + 1e-7))
    i1 = min(int(math.floor(t_end * fs + 1e-7)), n)
    return i0, i1


def extract_segment(rec: EcgRecord, channel: int, t_start: float, t_end: float) -> EcgSignal:
    """Physical-unit signal for samples ``floor(t_start*fs)`` up to ``floor(t_end*fs)``."""
    if not 0 <= channel < rec.header.n_channels:
        raise ValueError(f"channel {channel} out of range (record has {rec.header.n_channels})")
    i0, i1 = _sample_range(rec, t_start, t_end)
    return EcgSignal(samples=rec.physical(channel)[i0:i1], fs=rec.fs, start_time=i0 / rec.fs)


def segment_annotations(
    rec: EcgRecord, t_start: float, t_end: float, rebase: bool = True
) -> list[BeatAnnotation]:
    i0, i1 = _sample_range(rec, t_start, t_end)
    out = []
    for a in rec.annotations.beats:
        if i0 <= a.sample_index < i1:
            idx = a.sample_index - i0 if rebase else a.sample_index
            out.append(BeatAnnotation(idx, a.symbol, a.code))
    return out
