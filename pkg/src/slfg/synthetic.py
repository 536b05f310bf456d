"""Synthetic frame directories with planted scenes and answer cues.

The fixture video is 1799 s long, sampled every 10 s into 180 frames and
12 groups of 16 (the last group holds 4). Each group's planted description
carries one main scene plus a "bridge" scene for every adjacent pair it
belongs to. Twelve questions target one main scene each; eight target a
bridge scene and need cue frames from both groups of the pair.

Used by the test suite and handy for trying the CLI with ``--mock``::

    python -m slfg.synthetic /tmp/slfg-demo
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .evaluation import EvalRecord, write_dataset
from .frames import Manifest, frame_filename, write_manifest
from .gateway.mock import PLANT_NAME, SCENE_SENTINEL

DURATION_S = 1799.0
INTERVAL_S = 10.0
GROUP_SIZE = 16
N_FRAMES = 180

# Stand-in image bytes (JPEG start/end markers); the mock backend never decodes them.
FAKE_JPEG = b"\xff\xd8\xff\xe0\x00\x10JFIF\x00\xff\xd9"

MAIN_SCENES = [
    "a fisherman repairs a torn green net on a wooden pier at dawn",
    "two children build a tall sandcastle decorated with seashells",
    "a violinist performs under a streetlamp while pigeons gather",
    "a baker pulls golden croissants from a brick oven",
    "a cyclist in a yellow jersey climbs a steep mountain road",
    "an old librarian stacks dusty leather books onto a ladder",
    "firefighters spray water onto a burning warehouse roof",
    "a potter shapes wet clay into a vase on a spinning wheel",
    "a surfer rides a huge wave beneath a stormy sky",
    "a florist wraps purple tulips in brown paper for a customer",
    "an astronomer adjusts a brass telescope on a snowy hilltop",
    "a juggler tosses flaming torches in a crowded plaza",
]

MAIN_QUERIES = [
    "the fisherman repairing a torn green net on the wooden pier",
    "children building a tall sandcastle decorated with seashells",
    "the violinist performing under a streetlamp with pigeons",
    "the baker pulling golden croissants from the brick oven",
    "the cyclist in a yellow jersey climbing the steep mountain road",
    "the old librarian stacking dusty leather books onto a ladder",
    "firefighters spraying water onto the burning warehouse roof",
    "the potter shaping wet clay into a vase on the spinning wheel",
    "the surfer riding a huge wave beneath the stormy sky",
    "the florist wrapping purple tulips in brown paper",
    "the astronomer adjusting a brass telescope on the snowy hilltop",
    "the juggler tossing flaming torches in the crowded plaza",
]

# (first group of the adjacent pair, scene in first group, scene in second group, query)
BRIDGES = [
    (0, "a man in a red raincoat walks his dalmatian along the shore",
        "the man in the red raincoat throws a stick for his dalmatian on the shore",
        "the man in a red raincoat with his dalmatian on the shore"),
    (1, "a hot air balloon with orange stripes drifts over the cliffs",
        "the hot air balloon with orange stripes lands near the cliffs",
        "the hot air balloon with orange stripes near the cliffs"),
    (2, "a delivery van with a cracked windshield parks by the kiosk",
        "the driver of the van with a cracked windshield unloads crates at the kiosk",
        "the delivery van with a cracked windshield at the kiosk"),
    (4, "a marching band in white uniforms turns onto the avenue",
        "the marching band in white uniforms plays drums along the avenue",
        "the marching band in white uniforms on the avenue"),
    (5, "a grey cat chases a moth across the polished marble hallway",
        "the grey cat catches the moth at the end of the marble hallway",
        "the grey cat chasing a moth in the marble hallway"),
    (6, "a helicopter with blue lights hovers above the harbour cranes",
        "the helicopter with blue lights lowers a rescuer beside the harbour cranes",
        "the helicopter with blue lights by the harbour cranes"),
    (8, "an elderly couple dances a slow waltz on the boardwalk",
        "the elderly couple finishes their slow waltz and bows on the boardwalk",
        "the elderly couple dancing a slow waltz on the boardwalk"),
    (10, "a fox with a bushy tail sneaks past the frozen lantern posts",
         "the fox with a bushy tail digs under the frozen lantern posts",
         "the fox with a bushy tail near the frozen lantern posts"),
]

_OPTION_SETS = [
    ("It is raining", "It is sunny", "It is foggy", "It is snowing"),
    ("One person", "Two people", "Three people", "Nobody"),
    ("On the left", "On the right", "In the centre", "Out of frame"),
    ("Before noon", "At noon", "In the evening", "At night"),
]


@dataclass
class Fixture:
    root: Path
    video_id: str
    frame_dir: Path
    records: list[EvalRecord]
    planted_groups: list[tuple[int, ...]]  # per record, the groups holding its evidence
    split: list[bool]                      # per record, True if evidence spans two groups

    @property
    def dataset_path(self) -> Path:
        return self.root / f"{self.video_id}.jsonl"


def _t_ms(frame_index: int) -> int:
    return int(frame_index * INTERVAL_S * 1000)


def group_frames_ms(group: int) -> list[int]:
    first = group * GROUP_SIZE
    return [_t_ms(i) for i in range(first, min(first + GROUP_SIZE, N_FRAMES))]


def cue_frame_ms(group: int) -> int:
    frames = group_frames_ms(group)
    return frames[len(frames) // 2]


def group_scenes(group: int) -> list[str]:
    scenes = [MAIN_SCENES[group]]
    for first, a, b, _ in BRIDGES:
        if first == group:
            scenes.append(a)
        elif first + 1 == group:
            scenes.append(b)
    return scenes


def group_description(group: int) -> str:
    start = group_frames_ms(group)[0] // 1000
    parts = [f"Footage starting at {start} seconds."]
    parts += [f"{SCENE_SENTINEL} {s.capitalize()}." for s in group_scenes(group)]
    return " ".join(parts)


def write_frames(frame_dir: Path, video_id: str, duration_s: float, n_frames: int,
                 interval_s: float = INTERVAL_S) -> Manifest:
    frame_dir.mkdir(parents=True, exist_ok=True)
    stamps = [int(round(i * interval_s * 1000)) for i in range(n_frames)]
    for t in stamps:
        (frame_dir / frame_filename(t)).write_bytes(FAKE_JPEG)
    manifest = Manifest(video_id=video_id, duration_s=duration_s, interval_s=interval_s, frames=stamps)
    write_manifest(frame_dir, manifest)
    return manifest


def build_fixture(root: Path | str, video_id: str = "fixture") -> Fixture:
    root = Path(root)
    frame_dir = root / video_id
    write_frames(frame_dir, video_id, DURATION_S, N_FRAMES)

    records, planted, split, cues = [], [], [], []
    letters = "BCD"
    questions = [(g, MAIN_QUERIES[g], (g,)) for g in range(len(MAIN_SCENES))]
    questions += [(first, query, (first, first + 1)) for first, _, _, query in BRIDGES]
    for n, (_, query, groups) in enumerate(questions):
        question = f"In the scene with [[{query}]], what detail is visible?"
        letter = letters[n % len(letters)]
        options = dict(zip("ABCD", _OPTION_SETS[n % len(_OPTION_SETS)]))
        category = "causal_reasoning" if len(groups) > 1 else "detail_recognition"
        records.append(EvalRecord(video_id, question, options, letter, category))
        planted.append(groups)
        split.append(len(groups) > 1)
        cues.append({"question": question, "frames_ms": [cue_frame_ms(g) for g in groups],
                     "letter": letter})

    plant = {
        "descriptions": [
            {"frames_ms": group_frames_ms(g), "text": group_description(g)}
            for g in range(len(MAIN_SCENES))
        ],
        "cues": cues,
    }
    (frame_dir / PLANT_NAME).write_text(json.dumps(plant, indent=1) + "\n")
    fixture = Fixture(root, video_id, frame_dir, records, planted, split)
    write_dataset(fixture.dataset_path, records)
    return fixture


def build_short_video(root: Path | str, video_id: str = "short", n_frames: int = 5) -> Path:
    frame_dir = Path(root) / video_id
    write_frames(frame_dir, video_id, (n_frames - 1) * INTERVAL_S + 5.0, n_frames)
    return frame_dir


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m slfg.synthetic OUT_DIR", file=sys.stderr)
        return 2
    fixture = build_fixture(argv[0])
    print(f"frames:  {fixture.frame_dir}")
    print(f"dataset: {fixture.dataset_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
