"""Building the scene index from a frame directory."""

import json
import threading
import time

import pytest

from slfg.errors import BackendUnavailableError
from slfg.gateway import CallLedger, ModelGateway
from slfg.gateway.mock import MockBackend, PLANT_NAME
from slfg.indexing import build_index, describe_group, generate_scenes
from slfg.sampling import SamplingConfig
from slfg.scene_index import GroupDescription
from slfg.store import IndexStore

from conftest import SAMPLING

FIXED = "2024-01-01T00:00:00+00:00"


def test_fixture_index_shape(fixture_video, fixture_index):
    plant = json.loads((fixture_video.frame_dir / PLANT_NAME).read_text())
    sentinels = sum(d["text"].count("<<scene>>") for d in plant["descriptions"])
    assert sentinels == 28
    assert len(fixture_index.groups) == 12
    assert len(fixture_index.descriptions) == 12
    assert len(fixture_index.scenes) == sentinels
    assert fixture_index.is_embedded
    fixture_index.validate()


def test_ledger_counts_on_build(fixture_video):
    ledger = CallLedger()
    build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(ledger=ledger))
    assert ledger.counts() == {"describe": 12, "abstract": 12, "extract": 0, "embed": 1, "answer": 0}


def test_embedding_batches(fixture_video):
    ledger = CallLedger()
    build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(ledger=ledger),
                embed_batch_size=10)
    assert ledger.embed_calls == 3  # ceil(28 / 10)


def test_short_video_single_group(fixture_video):
    index = build_index(fixture_video.root / "short", SAMPLING, 16, ModelGateway.mock())
    assert len(index.groups) == 1 and len(index.groups[0]) == 5
    assert len(index.scenes) == 1  # generic description has no sentinels


def test_byte_stable_with_fixed_timestamp(fixture_video, tmp_path):
    a = build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(), created_at=FIXED)
    b = build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(), created_at=FIXED)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_cache_hit_makes_no_calls(fixture_video, tmp_path):
    store = IndexStore(tmp_path)
    build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(), store)
    ledger = CallLedger()
    build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(ledger=ledger), store)
    assert ledger.total == 0


def test_scene_attribution(fixture_video, gateway, fixture_index):
    group = fixture_index.groups[3]
    desc = describe_group(group, gateway, "fixture")
    scenes = generate_scenes(desc, gateway, "fixture")
    assert [s.scene_index for s in scenes] == list(range(len(scenes)))
    assert {s.group_index for s in scenes} == {3}
    fallback = generate_scenes(GroupDescription(3, "plain text"), gateway)
    assert [(s.scene_index, s.text) for s in fallback] == [(0, "plain text")]


def test_description_prompt_carries_timestamps(fixture_video, fixture_index):
    seen = []

    class Spy(MockBackend):
        def describe(self, image_refs, prompt):
            seen.append(prompt)
            return super().describe(image_refs, prompt)

    gw = ModelGateway(Spy("d"), MockBackend(), MockBackend(), MockBackend())
    describe_group(fixture_index.groups[1], gw)
    assert "16 frames" in seen[0] and "160, 170" in seen[0]


class Failing(MockBackend):
    def describe(self, image_refs, prompt):
        if "frame_00160000" in image_refs[0]:
            raise BackendUnavailableError("down")
        return super().describe(image_refs, prompt)


def test_backend_failure_aborts_and_stores_nothing(fixture_video, tmp_path):
    store = IndexStore(tmp_path)
    gw = ModelGateway(Failing("d"), MockBackend(), MockBackend(), MockBackend())
    with pytest.raises(BackendUnavailableError):
        build_index(fixture_video.frame_dir, SAMPLING, 16, gw, store)
    assert store.list("fixture") == []


def test_concurrency_bounded_by_gateway(fixture_video):
    active, peak = [0], [0]
    lock = threading.Lock()

    class Slow(MockBackend):
        max_in_flight = 3

        def describe(self, image_refs, prompt):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.01)
            with lock:
                active[0] -= 1
            return super().describe(image_refs, prompt)

    gw = ModelGateway(Slow("d"), MockBackend(), MockBackend(), MockBackend())
    build_index(fixture_video.frame_dir, SamplingConfig(10), 16, gw)
    assert 1 <= peak[0] <= 3
