"""The ``slfg`` command line, driven through ``main(argv)``."""

import json
import os
import re

import pytest

from slfg.cli import main
from slfg.frames import frame_filename


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for k in list(os.environ):
        if k.startswith("SLFG_"):
            monkeypatch.delenv(k)


@pytest.fixture()
def paths(fixture_video, tmp_path):
    return ["--mock", "--frames-root", str(fixture_video.root), "--index-root", str(tmp_path / "idx")]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_index_then_cached(capsys, paths):
    code, out, _ = run(capsys, "index", "fixture", *paths)
    assert code == 0 and "groups: 12  scenes: 28" in out
    assert "model calls: 25" in out
    code, out, _ = run(capsys, "index", "fixture", *paths)
    assert code == 0 and "model calls: 0" in out


def test_ask_prints_provenance(capsys, paths, fixture_video):
    rec = fixture_video.records[5]
    opts = [a for text in rec.options.values() for a in ("-o", text)]
    run(capsys, "index", "fixture", *paths)
    code, out, _ = run(capsys, "ask", "fixture", rec.question, *opts, *paths)
    assert code == 0
    assert f"answer: {rec.answer}" in out
    assert "selected group 5: [800, 960) s" in out
    assert re.search(r"^timestamps: 0 10 ", out, re.M) is None  # localized, not the whole video
    assert "timestamps: " in out


def test_ask_json_and_dry_run(capsys, paths, fixture_video):
    rec = fixture_video.records[2]
    code, out, _ = run(capsys, "ask", "fixture", rec.question, "-o", "x", "-o", "y", "--json",
                       "--dry-run", *paths)
    data = json.loads(out)
    assert code == 0 and data["dry_run"] and data["calls"]["answer"] == 0
    assert 2 in data["selected_groups"]


def test_eval_writes_reports(capsys, paths, fixture_video, tmp_path):
    code, out, _ = run(capsys, "eval", str(fixture_video.dataset_path), "--out", str(tmp_path / "rep"),
                       *paths)
    assert code == 0 and "accuracy  1.0000" in out
    assert (tmp_path / "rep" / "report.json").is_file() and (tmp_path / "rep" / "report.txt").is_file()


def test_eval_strategy_flag(capsys, paths, fixture_video, tmp_path):
    code, out, _ = run(capsys, "eval", str(fixture_video.dataset_path), "--out", str(tmp_path),
                       "--strategy", "top1", *paths)
    assert code == 0 and "accuracy  0.6000" in out


def test_inspect(capsys, paths):
    run(capsys, "index", "fixture", *paths)
    code, out, _ = run(capsys, "inspect", "fixture", "--question", "[[the surfer riding a huge wave]]", *paths)
    assert code == 0 and "[group 11] 1760-1800 s, 4 frames" in out
    rows = re.findall(r"^\s+(\d+)\s+(\d+)\s+([\d.]+)", out, re.M)
    assert rows[0][:2] == ("1", "8")
    scores = [float(r[2]) for r in rows]
    assert scores == sorted(scores, reverse=True) and len(scores) == 12


def test_inspect_without_index(capsys, paths):
    code, _, err = run(capsys, "inspect", "fixture", *paths)
    assert code != 0 and err.startswith("slfg: ") and len(err.strip().splitlines()) == 1


def test_config_error_before_model_calls(capsys, tmp_path):
    code, out, err = run(capsys, "index", "fixture", "--mock", "--frames-root", str(tmp_path / "none"))
    assert code == 2 and "frames root" in err and out == ""
    bad = tmp_path / "c.yaml"
    bad.write_text("selection:\n  strategy: random\n")
    code, _, err = run(capsys, "index", "fixture", "--config", str(bad), "--mock")
    assert code == 2 and "strategy" in err


def test_env_overrides_and_flag_wins(capsys, paths, fixture_video, tmp_path, monkeypatch):
    monkeypatch.setenv("SLFG_STRATEGY", "top1")
    code, out, _ = run(capsys, "eval", str(fixture_video.dataset_path), "--out", str(tmp_path), *paths)
    assert "accuracy  0.6000" in out
    code, out, _ = run(capsys, "eval", str(fixture_video.dataset_path), "--out", str(tmp_path),
                       "--strategy", "dynamic", *paths)
    assert "accuracy  1.0000" in out


def test_ingest_frame_dir(capsys, tmp_path):
    src = tmp_path / "raw"
    src.mkdir()
    for t in (0, 5000, 10000):
        (src / frame_filename(t)).write_bytes(b"x")
    code, out, _ = run(capsys, "ingest", str(src), "--video-id", "clip", "--frames-root", str(tmp_path / "f"))
    assert code == 0 and "3 frames, every 5 s" in out
    assert (tmp_path / "f" / "clip" / "manifest.json").is_file()


def test_ingest_video_without_ffmpeg(capsys, tmp_path, monkeypatch):
    video = tmp_path / "v.mp4"
    video.write_bytes(b"\x00")
    monkeypatch.setenv("PATH", str(tmp_path))
    code, _, err = run(capsys, "ingest", str(video), "--out", str(tmp_path / "o"))
    assert code == 1 and "ffmpeg" in err
