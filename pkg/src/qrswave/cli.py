"""Command-line entry point: ``qrswave detect | sweep | eval``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .harness import (
    SEARCH_GRID,
    SweepConfig,
    ThresholdRule,
    analyze_record,
    config_from_mapping,
    emit_csv,
    evaluate_record,
    parse_config_text,
    parse_range,
    parse_segment,
    run_sweep,
    search_threshold,
)
from .metrics import segment_metrics
from .svg import METRIC_LABELS, emit_svg_lines
from .wavelets import WaveletKind
from .wfdb_io import read_record

log = logging.getLogger("qrswave")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--record", help="record path without extension, e.g. data/mitdb/207")
    p.add_argument("--channel", type=int, help="zero-based signal index (default 0)")
    p.add_argument("--segment", help="START:END in seconds (default: whole record)")
    t = p.add_mutually_exclusive_group()
    t.add_argument("--threshold", type=float, help="absolute threshold in units of y")
    t.add_argument("--threshold-rel", type=float, help="threshold as a fraction of max(z) (default 0.1)")
    p.add_argument("--tolerance-ms", type=float, help="beat match window (default 50)")
    p.add_argument("--refractory-ms", type=float, help="merge runs closer than this to the previous peak (default 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrswave", description="CWT-based QRS detection and wavelet comparison")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="run one configuration and print detections")
    _common(d)
    d.add_argument("--wavelet", help="mexh, db10 or bior1.3 (default mexh)")
    d.add_argument("--scale", type=float, help="scale in samples (default 4)")
    d.add_argument("--figure", help="write a signal-characteristics figure (PNG/PDF)")

    s = sub.add_parser("sweep", help="score a wavelet x scale grid; CSV and plots")
    _common(s)
    s.add_argument("--wavelets", help="comma list (default mexh,db10,bior1.3)")
    s.add_argument("--scales", help="START:END[:STEP] or comma list (default 1:8)")
    s.add_argument("--out", help="CSV output path (default stdout)")
    s.add_argument("--plot", help="SVG line chart output path")
    s.add_argument("--metric", choices=sorted(METRIC_LABELS), help="metric for --plot (default from file name, else fom)")
    s.add_argument("--figure", help="matplotlib figure of all three metrics")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--keep-going", action="store_true", help="report failing cells as error rows")
    s.add_argument("--with-record-metrics", action="store_true", help="add TP/FN/FP/SEN/PPR/DER columns")

    e = sub.add_parser("eval", help="whole-record beat-by-beat scoring at a fixed threshold")
    _common(e)
    e.add_argument("--wavelet", help="default mexh")
    e.add_argument("--scale", help="one scale or a comma list, e.g. 4,8 (default 4)")
    e.add_argument("--search", action="store_true", help="pick the threshold by grid search on DER")
    e.add_argument("--no-exclude-vf", action="store_true", help="score ventricular flutter episodes too")
    e.add_argument("--out", help="CSV output path (default stdout)")
    return ap


def _settings(args) -> dict[str, str]:
    m = parse_config_text(Path(args.config).read_text()) if args.config else {}
    flags = {
        "record": args.record,
        "channel": args.channel,
        "segment": args.segment,
        "tolerance-ms": args.tolerance_ms,
        "refractory-ms": args.refractory_ms,
        "wavelet": getattr(args, "wavelet", None),
        "scale": getattr(args, "scale", None),
        "wavelets": getattr(args, "wavelets", None),
        "scales": getattr(args, "scales", None),
    }
    if args.threshold is not None:
        m.pop("threshold-rel", None)
        flags["threshold"] = args.threshold
    if args.threshold_rel is not None:
        m.pop("threshold", None)
        flags["threshold-rel"] = args.threshold_rel
    m.update({k: str(v) for k, v in flags.items() if v is not None})
    if "record" not in m:
        raise ValueError("no record given (use --record or a config file)")
    return m


def _rule(m: dict[str, str]) -> ThresholdRule:
    if "threshold" in m:
        return ThresholdRule(float(m["threshold"]), relative=False)
    return ThresholdRule(float(m.get("threshold-rel", harness.DEFAULT_THRESHOLD_REL)))


def _write(text: str, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_detect(args) -> int:
    m = _settings(args)
    rec = read_record(m["record"])
    kind = WaveletKind.parse(m.get("wavelet", "mexh"))
    scale = float(m.get("scale", 4))
    seg = parse_segment(m["segment"]) if m.get("segment") else None
    a = analyze_record(
        rec,
        int(m.get("channel", 0)),
        kind,
        scale,
        _rule(m),
        seg,
        float(m.get("tolerance-ms", harness.MATCH_TOLERANCE_MS)),
        float(m.get("refractory-ms", 0.0)),
    )
    fs = rec.fs
    lines = [f"# {kind.value} scale {scale:g}, thv {a.threshold:.6g}", "t1,t2,tR,time_s,peak_y,envelope_peak"]
    for d in a.detections:
        lines.append(
            f"{d.t1},{d.t2},{d.tR},{a.x.start_time + d.tR / fs:.4f},{d.peak_y:.6g},{d.envelope_peak:.6g}"
        )
    if a.match is not None and len(a.detections) >= 2 and a.match.tp:
        sm = segment_metrics(a.detections, a.match, fs)
        fom = "perfect" if sm.fom is None else f"{sm.fom:.6g}"
        lines.append(
            f"# rmm {sm.rmm:.6g}, mate {sm.mate_ms:.6g} ms, fom {fom}; tp {a.match.tp} fn {a.match.fn} fp {a.match.fp}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    if args.figure:
        from .plotting import plot_signal_characteristics

        plot_signal_characteristics(a, args.figure, f"{kind.value}, scale {scale:g}")
    return 0


def cmd_sweep(args) -> int:
    m = _settings(args)
    cfg = config_from_mapping(m)
    report = run_sweep(cfg, workers=args.workers, keep_going=args.keep_going, include_record_columns=args.with_record_metrics)
    _write(emit_csv(report), args.out)
    if args.plot:
        metric = args.metric or (Path(args.plot).stem if Path(args.plot).stem in METRIC_LABELS else "fom")
        Path(args.plot).write_text(emit_svg_lines(report, metric))
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(report, args.figure)
    return 0


def cmd_eval(args) -> int:
    m = _settings(args)
    rec = read_record(m["record"])
    kind = WaveletKind.parse(m.get("wavelet", "mexh"))
    scales = parse_range(m.get("scale", "4"))
    channel = int(m.get("channel", 0))
    tol = float(m.get("tolerance-ms", harness.MATCH_TOLERANCE_MS))
    refr = float(m.get("refractory-ms", 0.0))
    exclude = not args.no_exclude_vf
    rows = [
        f"# record {rec.header.record_name}, channel {channel}, tolerance {tol:g} ms, "
        + ("threshold by DER grid search over max(z) fractions "
           f"{SEARCH_GRID[0]:g}..{SEARCH_GRID[-1]:g} ({len(SEARCH_GRID)} points)" if args.search else _rule(m).describe()),
        "wavelet,scale,threshold,threshold_rel,total,tp,fn,fp,sen,ppr,der",
    ]
    for scale in scales:
        if args.search:
            ev, _ = search_threshold(rec, kind, scale, channel, SEARCH_GRID, tol, refr, exclude)
        else:
            ev = evaluate_record(rec, kind, scale, _rule(m), channel, tol, refr, exclude)
        r = ev.metrics
        rows.append(
            f"{kind.value},{scale:g},{ev.threshold:.6g},{ev.threshold_rel:.6g},{r.total},{r.tp},{r.fn},{r.fp},"
            f"{r.sen_pct:.2f},{r.ppr_pct:.2f},{r.der_pct:.2f}"
        )
    _write("\n".join(rows) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handler = {"detect": cmd_detect, "sweep": cmd_sweep, "eval": cmd_eval}[args.command]
    try:
        return handler(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"qrswave: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
