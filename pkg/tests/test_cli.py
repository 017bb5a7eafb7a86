import csv
import io
import subprocess
import sys

import pytest

from lipbo.cli import main

RUN = ["run", "--benchmark", "camel-2", "--acq", "ei", "--lbo", "truncated", "--iters", "6", "--seeds", "2",
       "--direct-budget", "100", "--n-starts", "1"]


def test_run_writes_outputs(tmp_path, capsys):
    assert main(RUN + ["--out", str(tmp_path), "--compare"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO("\n".join(l for l in out.splitlines() if not l.startswith("#")))))
    assert rows[0] == ["benchmark", "method", "seed", "final_abs_error", "failed"]
    assert {r[1] for r in rows[1:]} == {"TEI", "EI", "random"} and len(rows) == 7
    assert (tmp_path / "summary_camel-2.csv").exists() and (tmp_path / "errors_camel-2.svg").exists()
    assert len(list((tmp_path / "traces" / "camel-2").glob("*.json"))) == 6
    assert "# figure:" in out


def test_run_twice_gives_identical_json(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(RUN + ["--out", str(a)])
    main(RUN + ["--out", str(b)])
    for p in (a / "traces" / "camel-2").glob("*.json"):
        assert p.read_bytes() == (b / "traces" / "camel-2" / p.name).read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"benchmark = branin-2\nacquisition = random\niterations = 5\nseeds = 1\nout = {tmp_path}\n")
    assert main(["run", "--config", str(cfg), "--seeds", "3,4"]) == 0
    out = capsys.readouterr().out
    assert "branin-2,random,3," in out and "branin-2,random,4," in out


def test_run_errors_before_running(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    with pytest.raises(NotADirectoryError):
        main(RUN + ["--out", str(f)])
    with pytest.raises(SystemExit):
        main(["run", "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["run", "--benchmark", "nope", "--out", str(tmp_path)])


def test_report_rebuilds(tmp_path, capsys):
    main(RUN + ["--out", str(tmp_path)])
    (tmp_path / "summary_camel-2.csv").unlink()
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == 0
    assert (tmp_path / "summary_camel-2.csv").exists()
    assert capsys.readouterr().out.startswith("camel-2,")


def test_audit(capsys):
    assert main(["audit-benchmarks", "--benchmark", "branin-2", "--benchmark", "camel-2", "--n", "20000"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and all(l.startswith("PASS") for l in lines)


def test_theory_harmless(tmp_path, capsys):
    assert main(["theory", "harmless", "--eps", "2.0", "--trials", "5", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("mode,mean_evaluations") and [l.split(",")[0] for l in out[1:4]] == \
        ["none", "known", "growing"]
    assert (tmp_path / "harmless_branin-2.svg").exists() and (tmp_path / "harmless_branin-2.csv").exists()


def test_theory_regret(tmp_path, capsys):
    assert main(["theory", "regret", "--grid", "20", "--T", "10", "--seeds", "2", "--beta", "srinivas",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "# gpucb mean R(T)" in out and (tmp_path / "regret.svg").exists()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "lipbo.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "theory" in res.stdout
