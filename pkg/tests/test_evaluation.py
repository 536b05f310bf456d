"""Dataset loading, accuracy, and per-question cost amortization."""

import dataclasses
import json
import logging
from fractions import Fraction

import pytest

from slfg.errors import InvalidArgumentError, SchemaError
from slfg.evaluation import EvalRecord, amortization_report, load_dataset, run_eval, write_dataset
from slfg.gateway import ModelGateway
from slfg.inference import RunConfig
from slfg.reorganization import SelectionConfig
from slfg.store import IndexStore

from conftest import SAMPLING

GOOD = {"video_id": "v", "question": "q?", "options": {"A": "x", "B": "y", "C": "z", "D": "w"},
        "answer": "B"}


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def config(strategy="dynamic", **kw):
    return RunConfig(SAMPLING, 16, SelectionConfig(strategy=strategy, **kw))


def test_load_three_records(tmp_path):
    rows = [GOOD, dict(GOOD, category="causal_reasoning"), dict(GOOD, answer="D")]
    records = load_dataset(write_lines(tmp_path / "d.jsonl", rows))
    assert len(records) == 3 and records[1].category == "causal_reasoning"


def test_bad_answer_names_line(tmp_path):
    path = write_lines(tmp_path / "d.jsonl", [GOOD, dict(GOOD, answer="E"), GOOD])
    with pytest.raises(SchemaError, match="line 2"):
        load_dataset(path)


def test_all_problems_reported(tmp_path):
    path = write_lines(tmp_path / "d.jsonl", ["{not json", GOOD, {"video_id": "v"}])
    with pytest.raises(SchemaError) as info:
        load_dataset(path)
    assert "line 1" in str(info.value) and "line 3" in str(info.value)


@pytest.mark.parametrize("bad", [
    dict(GOOD, options={"A": "x"}),
    dict(GOOD, options={"A": "x", "C": "y"}),
    dict(GOOD, extra=1),
    dict(GOOD, question=""),
])
def test_record_validation(bad):
    with pytest.raises(ValueError):
        EvalRecord.from_json(bad)


def test_empty_file_warns(tmp_path, caplog):
    path = tmp_path / "d.jsonl"
    path.write_text("")
    with caplog.at_level(logging.WARNING):
        assert load_dataset(path) == []
    assert "empty" in caplog.text


def test_dataset_round_trip(fixture_video, tmp_path):
    write_dataset(tmp_path / "x.jsonl", fixture_video.records)
    assert load_dataset(tmp_path / "x.jsonl") == fixture_video.records


def test_dynamic_is_perfect_on_fixture(fixture_video, tmp_path):
    report = run_eval(fixture_video.records, config(), ModelGateway.mock(), IndexStore(tmp_path),
                      fixture_video.root)
    assert report.accuracy == 1.0 and report.errors == 0
    for res, planted in zip(report.results, fixture_video.planted_groups):
        assert set(planted) <= set(res.selected_groups)
    assert report.per_category["causal_reasoning"]["accuracy"] == 1.0


def test_top1_misses_exactly_the_split_records(fixture_video, tmp_path):
    report = run_eval(fixture_video.records, config("top1"), ModelGateway.mock(), IndexStore(tmp_path),
                      fixture_video.root)
    wrong = [not r.correct for r in report.results]
    assert wrong == fixture_video.split
    assert report.accuracy == (20 - sum(fixture_video.split)) / 20


def test_amortization_arithmetic():
    rows = amortization_report(24, 2, [1, 2, 10])
    assert [r.avg_calls for r in rows] == [26.0, 14.0, 4.4]
    assert [r.avg_calls for r in rows] == [float(Fraction(24 + 2 * q, q)) for q in (1, 2, 10)]
    with pytest.raises(InvalidArgumentError):
        amortization_report(24, 2, [0])


def test_amortization_from_a_real_run(fixture_video, tmp_path):
    report = run_eval(fixture_video.records[:10], config(), ModelGateway.mock(), IndexStore(tmp_path),
                      fixture_video.root)
    calls = report.per_video_calls["fixture"]
    assert calls["describe"] == calls["abstract"] == 12
    assert calls["index_calls"] == 25  # 12 describe + 12 abstract + 1 embed batch
    assert calls["question_calls"] == 30  # extract + embed + answer per question
    rows = report.amortization["fixture"]
    assert [r.questions for r in rows] == list(range(1, 11))
    assert rows[0].avg_calls == 28.0 and rows[-1].avg_calls == 5.5
    assert all(b.avg_calls < a.avg_calls for a, b in zip(rows, rows[1:]))


def test_warm_cache_costs_only_question_calls(fixture_video, tmp_path):
    store = IndexStore(tmp_path)
    run_eval(fixture_video.records[:1], config(), ModelGateway.mock(), store, fixture_video.root)
    warm = run_eval(fixture_video.records[:1], config(), ModelGateway.mock(), store, fixture_video.root)
    calls = warm.per_video_calls["fixture"]
    assert warm.amortization["fixture"][0].avg_calls == 3.0
    assert calls["embed"] + calls["answer"] == 2 and calls["extract"] == 1


def test_failures_are_recorded_per_record(fixture_video, tmp_path):
    ghost = dataclasses.replace(fixture_video.records[0], video_id="ghost")
    records = [fixture_video.records[0], ghost, fixture_video.records[1]]
    report = run_eval(records, config(), ModelGateway.mock(), IndexStore(tmp_path), fixture_video.root,
                      jobs=2)
    assert [r.error is not None for r in report.results] == [False, True, False]
    assert report.correct == 2 and report.errors == 1


def test_report_files(fixture_video, tmp_path):
    report = run_eval(fixture_video.records[:3], config(), ModelGateway.mock(), IndexStore(tmp_path),
                      fixture_video.root)
    json_path, text_path = report.write(tmp_path / "out")
    data = json.loads(json_path.read_text())
    assert data["total"] == 3 and data["accuracy"] == 1.0
    assert "accuracy" in text_path.read_text()


def test_dry_run_eval(fixture_video, tmp_path):
    gw = ModelGateway.mock()
    report = run_eval(fixture_video.records[:2], config(), gw, IndexStore(tmp_path), fixture_video.root,
                      dry_run=True)
    assert gw.ledger.answer_calls == 0 and report.correct == 0
