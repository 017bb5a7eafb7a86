import json
import math
import xml.etree.ElementTree as ET

import pytest

from lipbo.harness import IterationRecord, RunConfig, RunTrace, aggregate, run_single
from lipbo.report import (
    CSV_HEADER,
    emit_outputs,
    load_trace,
    load_traces,
    plot_error_curves,
    read_summary_csv,
    rebuild_reports,
    trace_json,
    validate_out_dir,
    write_summary_csv,
    write_trace,
)


def small_trace(method="EI", seed=1, errs=(3.0, 1.0, 0.5)):
    recs = [IterationRecord(i + 1, [0.1 * i, 0.2], -e, -e, None if i == 0 else 4.0, None if i == 0 else 0.3,
                            "acq", wall_time=0.01 * i) for i, e in enumerate(errs)]
    return RunTrace("branin-2", method, seed, 0.0, recs)


def test_csv_header_exact(tmp_path):
    p = write_summary_csv(aggregate([small_trace()]), tmp_path / "s.csv")
    assert p.read_text().splitlines()[0] == "iteration,method,mean_abs_error,std_abs_error,q10,q90"
    assert ",".join(CSV_HEADER) == p.read_text().splitlines()[0]


def test_csv_round_trip(tmp_path):
    rows = aggregate([small_trace(), small_trace(seed=2, errs=(2.0, 2.0, 1.0))])
    p = write_summary_csv(rows, tmp_path / "s.csv")
    assert read_summary_csv(p) == rows


def test_csv_reader_rejects_other_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("t,mean\n1,2\n")
    with pytest.raises(ValueError):
        read_summary_csv(p)


def test_json_round_trip(tmp_path):
    tr = small_trace()
    tr.records[0].acq_value = math.inf
    p = write_trace(tmp_path, tr)
    back = load_trace(p)
    assert back.method == tr.method and back.seed == tr.seed and back.ref_optimum == tr.ref_optimum
    assert back.records[0].acq_value is None  # non-finite values are stored as null
    for a, b in zip(back.records[1:], tr.records[1:]):
        assert (a.t, a.x, a.y, a.best_so_far, a.L_hat, a.acq_value, a.selection_kind) == \
               (b.t, b.x, b.y, b.best_so_far, b.L_hat, b.acq_value, b.selection_kind)
    data = json.loads(p.read_text())
    assert "wall_time" not in data["records"][1]


def test_json_bytes_stable_for_a_real_run():
    cfg = RunConfig("camel-2", "ei", "truncated", iterations=8, seeds=(2,), direct_budget=120, n_starts=1)
    assert trace_json(run_single(cfg, 2)) == trace_json(run_single(cfg, 2))


def test_svg_has_one_group_per_method(tmp_path):
    rows = aggregate([small_trace("EI"), small_trace("TEI", errs=(2.0, 0.5, 0.1)), small_trace("random")])
    p = plot_error_curves(rows, tmp_path / "e.svg", "branin-2", log_scale=True)
    root = ET.parse(p).getroot()
    ids = [g.get("id") for g in root.iter("{http://www.w3.org/2000/svg}g")]
    for m in ("EI", "TEI", "random"):
        assert ids.count(m) == 1
        assert ids.count(m + "-band") == 1


def test_svg_deterministic(tmp_path):
    rows = aggregate([small_trace()])
    a = plot_error_curves(rows, tmp_path / "a.svg").read_bytes()
    b = plot_error_curves(rows, tmp_path / "b.svg").read_bytes()
    assert a == b


def test_emit_and_rebuild(tmp_path):
    traces = [small_trace(seed=1), small_trace(seed=2), small_trace("TEI", 1)]
    paths = emit_outputs(aggregate(traces), traces, tmp_path, "branin-2")
    assert paths["csv"].exists() and paths["svg"].exists() and paths["timings"].exists()
    assert len(load_traces(tmp_path, "branin-2")) == 3
    before = paths["csv"].read_text()
    paths["csv"].unlink()
    res = rebuild_reports(tmp_path)
    assert res[0]["benchmark"] == "branin-2" and res[0]["csv"].read_text() == before


def test_validate_out_dir(tmp_path):
    assert validate_out_dir(tmp_path / "new" / "dir").is_dir()
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(NotADirectoryError):
        validate_out_dir(f)


def test_validate_out_dir_unwritable(tmp_path, monkeypatch):
    # running as root bypasses mode bits, so simulate the failing write probe
    import lipbo.report as rep

    def deny(*a, **k):
        raise PermissionError(13, "Permission denied")

    monkeypatch.setattr(rep.tempfile, "mkstemp", deny)
    with pytest.raises(PermissionError, match="not writable"):
        validate_out_dir(tmp_path)
