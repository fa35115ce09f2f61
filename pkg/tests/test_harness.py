import re

import numpy as np
import pytest

from qrswave import cli
from qrswave.harness import (
    SEARCH_GRID,
    SweepConfig,
    SweepReport,
    SweepRow,
    ThresholdRule,
    analyze_record,
    config_from_mapping,
    emit_csv,
    evaluate_record,
    parse_config_text,
    parse_range,
    run_sweep,
    search_threshold,
)
from qrswave.metrics import SegmentMetrics
from qrswave.svg import emit_svg_lines
from qrswave.wavelets import WaveletKind

from conftest import DATA

MEXH, DB10, BIOR = WaveletKind.MEXICAN_HAT, WaveletKind.DB10, WaveletKind.BIOR13
REC = str(DATA / "100")
HEADER = "wavelet,scale,rmm,mate_ms,fom"


def seg(rmm, mate, fom):
    return SegmentMetrics(rmm=rmm, mate_ms=mate, fom=fom, z_max=1.0, z_min=1.0, n_beats=10)


def fake_report(kinds, scales):
    rows = [SweepRow(k, float(s), seg(1.0 + s, 2.0 * s, 1 / ((1.0 + s) * 2.0 * s))) for k in kinds for s in scales]
    return SweepReport(rows=rows)


def data_lines(csv):
    return [ln for ln in csv.splitlines() if not ln.startswith("#")][1:]


# parsing and config -------------------------------------------------------

def test_parse_range():
    assert parse_range("1:8") == tuple(float(i) for i in range(1, 9))
    assert parse_range("1:2:0.5") == (1.0, 1.5, 2.0)
    assert parse_range("4,8") == (4.0, 8.0)
    assert parse_range("") == ()


def test_empty_scales_rejected():
    with pytest.raises(ValueError, match="scales"):
        SweepConfig(REC, scales=())
    with pytest.raises(ValueError):
        config_from_mapping({"record": REC, "scales": ""})


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(REC, wavelets=())
    with pytest.raises(ValueError):
        SweepConfig(REC, scales=(0.5,))
    with pytest.raises(ValueError):
        SweepConfig(REC, segment=(3.0, 1.0))
    with pytest.raises(ValueError):
        config_from_mapping({"record": REC, "threshold": "1", "threshold-rel": "0.1"})


@pytest.mark.parametrize(
    "cfg",
    [
        SweepConfig(REC),
        SweepConfig(REC, channel=1, segment=(12.6, 22.6), wavelets=(DB10,), scales=(1.5, 4.0),
                    threshold=ThresholdRule(0.0123, relative=False), tolerance_ms=40.0, refractory_ms=200.0),
        SweepConfig(REC, wavelets=(BIOR, MEXH), scales=(0.1 + 1.2,), threshold=ThresholdRule(1 / 3)),
    ],
)
def test_config_roundtrip(cfg):
    assert config_from_mapping(parse_config_text(cfg.to_text())) == cfg


def test_config_comments_and_underscores():
    m = parse_config_text("# sweep\nrecord = x  # trailing\ntolerance_ms=40\n\n")
    assert m == {"record": "x", "tolerance-ms": "40"}
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("no equals sign")


# CSV ------------------------------------------------------------------------

def test_csv_empty_report():
    assert emit_csv(SweepReport()) == HEADER + "\n"


def test_csv_single_row():
    out = emit_csv(SweepReport(rows=[SweepRow(MEXH, 4.0, seg(3.28, 1.7, 0.18))]))
    assert out == HEADER + "\nmexh,4,3.28000,1.70000,0.180000\n"


def test_csv_perfect_timing_and_error_rows():
    rows = [SweepRow(MEXH, 1.0, seg(1.2, 0.0, None)), SweepRow(DB10, 2.0, error="boom")]
    assert data_lines(emit_csv(SweepReport(rows=rows))) == ["mexh,1,1.20000,0.00000,perfect", "db10,2,,,"]


def test_sweep_row_order(record100):
    cfg = SweepConfig(REC, segment=(12.6, 22.6), wavelets=(BIOR, MEXH), scales=(8, 4))
    rows = data_lines(emit_csv(run_sweep(cfg, record100)))
    assert len(rows) == 4
    assert [tuple(r.split(",")[:2]) for r in rows] == [("mexh", "4"), ("mexh", "8"), ("bior1.3", "4"), ("bior1.3", "8")]


def test_csv_record_columns(record100):
    cfg = SweepConfig(REC, segment=(0, 60), wavelets=(MEXH,), scales=(4,))
    out = emit_csv(run_sweep(cfg, record100, include_record_columns=True))
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert lines[0] == HEADER + ",total,tp,fn,fp,sen,ppr,der"
    assert lines[1].split(",")[5:9] == ["74", "74", "0", "0"]


# sweeps on the bundled record -----------------------------------------------

def test_sweep_mexh_beats_filter_bank_wavelets(record100):
    cfg = SweepConfig(REC, segment=(12.6, 22.6), scales=(4,))
    rep = run_sweep(cfg, record100)
    f = {k: rep.cell(k, 4.0).segment.fom for k in WaveletKind}
    assert f[MEXH] > f[DB10] and f[MEXH] > f[BIOR]


def test_sweep_deterministic_and_parallel(record100):
    cfg = SweepConfig(REC, segment=(12.6, 22.6), scales=(3, 4, 5, 6, 7, 8))
    a = run_sweep(cfg, record100, keep_going=True)
    b = run_sweep(cfg, record100, keep_going=True)
    c = run_sweep(cfg, record100, workers=4, keep_going=True)
    assert emit_csv(a) == emit_csv(b) == emit_csv(c)
    assert emit_svg_lines(a) == emit_svg_lines(c)


def test_sweep_error_context(record100):
    # nothing clears an absurd absolute threshold, so RMM has no beats to work with
    cfg = SweepConfig(REC, segment=(12.6, 22.6), wavelets=(DB10,), scales=(2,),
                      threshold=ThresholdRule(1e9, relative=False))
    with pytest.raises(RuntimeError, match=r"db10 at scale 2"):
        run_sweep(cfg, record100)
    rep = run_sweep(cfg, record100, keep_going=True)
    assert rep.rows[0].error and any("db10@2" in n for n in rep.notes)


def test_analyze_record_segment(record100):
    a = analyze_record(record100, 0, MEXH, 4, ThresholdRule(0.1), (12.6, 22.6))
    assert len(a.x) == 3600 and len(a.y) == 3600 and len(a.z) == 3600
    assert a.match.tp == len(a.annotations) and a.match.fp == 0
    with pytest.raises(ValueError):
        analyze_record(record100, 2, MEXH, 4, ThresholdRule(0.1))


def test_evaluate_and_search_whole_record(record100):
    ev = evaluate_record(record100, MEXH, 4, ThresholdRule(0.1))
    assert ev.metrics.total == 2273
    best, trace = search_threshold(record100, MEXH, 8)
    assert len(trace) == len(SEARCH_GRID)
    assert best.metrics.der_pct == min(m.der_pct for _, m in trace)
    assert best.metrics.tp >= 2270


# SVG ------------------------------------------------------------------------

def test_svg_three_polylines():
    svg = emit_svg_lines(fake_report(list(WaveletKind), range(1, 9)), "fom")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 3
    assert "href" not in svg


def test_svg_single_row():
    svg = emit_svg_lines(fake_report([MEXH], [4]), "rmm")
    assert "<polyline" not in svg
    # one marker in the plot, one in the legend
    assert len(re.findall(r'<g class="series"[^>]*>\s*<path', svg)) == 1


def test_svg_deterministic_and_validated():
    rep = fake_report([MEXH, DB10], [1, 2, 3])
    assert emit_svg_lines(rep, "mate") == emit_svg_lines(rep, "mate")
    with pytest.raises(ValueError):
        emit_svg_lines(rep, "der")
    with pytest.raises(ValueError):
        emit_svg_lines(SweepReport(), "fom")


def test_svg_is_xml():
    import xml.etree.ElementTree as ET

    root = ET.fromstring(emit_svg_lines(fake_report(list(WaveletKind), range(1, 9))))
    assert root.tag.endswith("svg")


# CLI ------------------------------------------------------------------------

def test_cli_sweep(tmp_path, capsys):
    out, plot, fig = tmp_path / "r.csv", tmp_path / "mate.svg", tmp_path / "s.png"
    rc = cli.main(["sweep", "--record", REC, "--segment", "12.6:22.6", "--wavelets", "mexh",
                   "--scales", "3:5", "--out", str(out), "--plot", str(plot), "--figure", str(fig)])
    assert rc == 0
    assert len(data_lines(out.read_text())) == 3
    assert "MATE (ms)" in plot.read_text()
    assert fig.stat().st_size > 0


def test_cli_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text(f"record={REC}\nsegment=12.6:22.6\nwavelets=mexh\nscales=4,8\nthreshold=1e9\n")
    assert cli.main(["sweep", "--config", str(conf), "--threshold-rel", "0.1"]) == 0
    assert len(data_lines(capsys.readouterr().out)) == 2


def test_cli_detect(capsys, tmp_path):
    rc = cli.main(["detect", "--record", REC, "--segment", "12.6:22.6", "--scale", "4",
                   "--figure", str(tmp_path / "d.png")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "t1,t2,tR,time_s,peak_y,envelope_peak" in text
    assert re.search(r"# rmm [\d.]+, mate [\d.]+ ms", text)


def test_cli_eval(capsys):
    assert cli.main(["eval", "--record", REC, "--scale", "4", "--threshold-rel", "0.1"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert row[:2] == ["mexh", "4"] and row[4] == "2273"


def test_cli_errors(capsys, tmp_path):
    assert cli.main(["sweep", "--record", str(tmp_path / "missing")]) == 1
    assert "qrswave: error:" in capsys.readouterr().err
    assert cli.main(["detect", "--record", REC, "--wavelet", "haar"]) == 1
    assert cli.main(["sweep", "--scales", "1:8"]) == 1
