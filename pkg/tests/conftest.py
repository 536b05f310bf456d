"""Shared fixtures: the synthetic 180-frame video and mock gateways."""

from __future__ import annotations

import sys

import pytest

from slfg.gateway import ModelGateway
from slfg.indexing import build_index
from slfg.inference import RunConfig
from slfg.sampling import SamplingConfig
from slfg.store import IndexStore
from slfg.synthetic import build_fixture, build_short_video

SAMPLING = SamplingConfig(10.0, 0.0)


@pytest.fixture(scope="session")
def fixture_video(tmp_path_factory):
    root = tmp_path_factory.mktemp("frames")
    fx = build_fixture(root)
    build_short_video(root, "short", 5)
    return fx


@pytest.fixture()
def gateway():
    return ModelGateway.mock()


@pytest.fixture()
def store(tmp_path):
    return IndexStore(tmp_path / "index")


@pytest.fixture(scope="session")
def fixture_index(fixture_video):
    return build_index(fixture_video.frame_dir, SAMPLING, 16, ModelGateway.mock(),
                       created_at="2024-01-01T00:00:00+00:00")


@pytest.fixture()
def run_config():
    return RunConfig(sampling=SAMPLING, group_size=16)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
