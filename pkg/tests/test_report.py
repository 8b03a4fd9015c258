import json
import sys
from fractions import Fraction

import config
from src import db, report as report_view
from src.bounds import build_report, scaling_report


def test_fmt():
    assert report_view.fmt(12) == "12"
    assert report_view.fmt(Fraction(8, 2)) == "4"
    assert report_view.fmt(Fraction(591, 644)) == "0.917702"


def test_machine_lines(params, run_mixed):
    report = build_report(run_mixed.transcript, params)
    lines = report_view.machine_lines(report)
    assert [line.split("=")[0] for line in lines] == list(report_view.MACHINE_KEYS)
    values = dict(line.split("=") for line in lines)
    assert int(values["rb_total"]) == report.rb_total
    assert values["case_blocks_distinct"] == "6"
    assert values["case_blocks_equal"] == "1"
    assert float(values["eps_measured"]) <= float(values["eps_bound"])


def test_render(params, run_mixed):
    report = build_report(run_mixed.transcript, params)
    scaling = scaling_report(q=7, u=1, outer_g=2, N=7, configured_field=4096)
    text = report_view.render(report, scaling)
    assert "block 1 (equal)" in text
    assert "MISMATCH" not in text
    assert "VIOLATED" not in text
    assert "min field size 687" in text
    assert text.endswith("\n")
    assert text == report_view.render(report, scaling)


def test_load_transcript(tmp_path, run_mixed):
    path = tmp_path / "transcript.json"
    path.write_text(json.dumps(run_mixed.transcript.to_dict()))
    loaded = report_view.load_transcript(path)
    assert loaded.to_dict() == run_mixed.transcript.to_dict()


def test_main_leaves_no_ledger(tmp_path, run_mixed, monkeypatch, capsys):
    (tmp_path / config.TRANSCRIPT_FILE_NAME).write_text(json.dumps(run_mixed.transcript.to_dict()))
    monkeypatch.setattr(sys, "argv", ["report", str(tmp_path), "--machine"])
    report_view.main()
    assert "rb_total=" in capsys.readouterr().out
    assert not db.db_path(tmp_path).exists()


def test_main_prints_history(tmp_path, run_mixed, monkeypatch, capsys):
    (tmp_path / config.TRANSCRIPT_FILE_NAME).write_text(json.dumps(run_mixed.transcript.to_dict()))
    db.init_db(tmp_path)
    db.save_repair_run(tmp_path, (1, 2), 28, 1000, "7/9", 47, "transcript.json")
    monkeypatch.setattr(sys, "argv", ["report", str(tmp_path)])
    report_view.main()
    out = capsys.readouterr().out
    assert "Recent repair runs" in out
    assert "nodes 1,2" in out
    assert "eps=0.777778" in out
