"""``slfg`` command-line entry point: ingest, index, ask, eval, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .config import PipelineConfig
from .errors import ConfigError, SLFGError
from .evaluation import load_dataset, run_eval
from .frames import extract_frames, ingest_frame_dir
from .gateway import ModelGateway
from .indexing import build_index, index_key
from .inference import ask, normalize_options
from .localization import extract_query_scene, score_all
from .sampling import group_window
from .store import IndexStore

log = logging.getLogger("slfg")

FLAG_KEYS = {
    "interval": "sampling.interval_s",
    "origin": "sampling.origin_s",
    "group_size": "group_size",
    "threshold": "selection.threshold",
    "threshold_mode": "selection.threshold_mode",
    "strategy": "selection.strategy",
    "max_frames": "selection.max_frames",
    "topn": "selection.topn_n",
    "index_root": "paths.index_root",
    "frames_root": "paths.frames_root",
    "jobs": "jobs",
}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--interval", type=float, help="sampling interval in seconds (default 10)")
    p.add_argument("--origin", type=float, help="first sample time in seconds (default 0)")
    p.add_argument("--group-size", type=int, help="frames per group (default 16)")
    p.add_argument("--threshold", type=float, help="relative score-gap threshold (default 0.10)")
    p.add_argument("--threshold-mode", choices=["relative", "absolute"])
    p.add_argument("--strategy", choices=["top1", "topn", "dynamic"])
    p.add_argument("--max-frames", type=int, help="answer-model frame budget (default 64)")
    p.add_argument("--topn", type=int, help="groups kept by the topn strategy")
    p.add_argument("--index-root", type=Path)
    p.add_argument("--frames-root", type=Path)
    p.add_argument("--mock", action="store_true", default=None, help="use deterministic mock backends")
    p.add_argument("--jobs", type=int, help="videos evaluated in parallel")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="slfg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="create a frame directory")
    p.add_argument("input", type=Path, help="video file or directory of frame_<t_ms>.jpg files")
    p.add_argument("--video-id", help="defaults to the input's stem")
    p.add_argument("--out", type=Path, help="output frame directory (default FRAMES_ROOT/VIDEO_ID)")
    p.add_argument("--duration", type=float, help="video duration for pre-extracted frames")

    p = sub.add_parser("index", parents=[common], help="build or load a scene index")
    p.add_argument("video_id")

    p = sub.add_parser("ask", parents=[common], help="answer a multiple-choice question")
    p.add_argument("video_id")
    p.add_argument("question")
    p.add_argument("--option", "-o", action="append", required=True, dest="options",
                   help="option text; repeat 2-6 times (lettered A, B, ...)")
    p.add_argument("--dry-run", action="store_true", help="show the frame plan without answering")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("eval", parents=[common], help="evaluate a JSONL dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, default=Path("."), help="directory for report.json/report.txt")
    p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("inspect", parents=[common], help="dump a stored index")
    p.add_argument("video_id")
    p.add_argument("--question", help="also print the ranked group scores for this question")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {key: getattr(args, name, None) for name, key in FLAG_KEYS.items()}
    overrides["mock"] = args.mock
    return PipelineConfig.load(overrides=overrides, env=os.environ, config_path=args.config)


def _print_calls(gateway: ModelGateway) -> None:
    counts = gateway.ledger.counts()
    detail = " ".join(f"{k}={v}" for k, v in counts.items())
    print(f"model calls: {gateway.ledger.total} ({detail})")


def cmd_ingest(args: argparse.Namespace, config: PipelineConfig) -> int:
    video_id = args.video_id or args.input.stem
    out = args.out or config.frames_root / video_id
    if args.input.is_dir():
        interval = args.interval  # None lets the manifest infer it from filenames
        manifest = ingest_frame_dir(args.input, out, video_id, interval, args.duration)
    elif args.input.is_file():
        manifest = extract_frames(args.input, out, config.run.sampling.interval_s, video_id)
    else:
        raise ConfigError(f"input {args.input} does not exist")
    print(f"frames: {out} ({len(manifest.frames)} frames, every {manifest.interval_s:g} s, "
          f"duration {manifest.duration_s:g} s)")
    return 0


def cmd_index(args: argparse.Namespace, config: PipelineConfig) -> int:
    config.check_paths()
    gateway = config.build_gateway()
    store = IndexStore(config.index_root)
    index = build_index(config.frames_root / args.video_id, config.run.sampling,
                        config.run.group_size, gateway, store)
    print(f"index: {store.path_for(index.key)}")
    print(f"groups: {len(index.groups)}  scenes: {len(index.scenes)}")
    _print_calls(gateway)
    return 0


def cmd_ask(args: argparse.Namespace, config: PipelineConfig) -> int:
    config.check_paths()
    options = normalize_options(args.options)
    gateway = config.build_gateway()
    store = IndexStore(config.index_root)
    answer = ask(args.video_id, args.question, options, config.run, gateway, store,
                 config.frames_root, dry_run=args.dry_run)
    index = store.load(index_key(args.video_id, config.run.sampling, config.run.group_size, gateway))
    windows = {}
    if index is not None:
        for g in answer.selected_groups:
            windows[g] = group_window(index.groups[g], config.run.sampling)
    if args.json:
        print(json.dumps({
            "video_id": answer.video_id,
            "choice": answer.choice,
            "raw_text": answer.raw_text,
            "selected_groups": list(answer.selected_groups),
            "group_windows_s": {str(g): list(w) for g, w in windows.items()},
            "frame_count": answer.frame_count,
            "frame_timestamps_s": list(answer.frame_timestamps_s),
            "query_scene": answer.query_scene,
            "dry_run": answer.dry_run,
            "calls": gateway.ledger.counts(),
        }, indent=2))
        return 0
    if not answer.dry_run:
        print(f"answer: {answer.choice or 'abstain'}")
        print(f"raw: {answer.raw_text.strip()}")
    else:
        print("dry run: no answer-model call")
    print(f"query scene: {answer.query_scene}")
    for g in answer.selected_groups:
        start, end = windows.get(g, (float("nan"), float("nan")))
        print(f"selected group {g}: [{start:g}, {end:g}) s")
    plan = answer.plan
    flags = [name for name, on in (("over budget", plan.over_budget), ("subsampled", plan.subsampled)) if on]
    print(f"frames: {answer.frame_count}" + (f" ({', '.join(flags)})" if flags else ""))
    print("timestamps: " + " ".join(f"{t:g}" for t in answer.frame_timestamps_s))
    _print_calls(gateway)
    return 0


def cmd_eval(args: argparse.Namespace, config: PipelineConfig) -> int:
    config.check_paths()
    records = load_dataset(args.dataset)
    gateway = config.build_gateway()
    store = IndexStore(config.index_root)
    report = run_eval(records, config.run, gateway, store, config.frames_root,
                      jobs=config.jobs, dry_run=args.dry_run)
    json_path, text_path = report.write(args.out)
    sys.stdout.write(report.to_text())
    print(f"wrote {json_path} and {text_path}")
    return 0


def cmd_inspect(args: argparse.Namespace, config: PipelineConfig) -> int:
    config.check_paths(need_frames=False)
    gateway = config.build_gateway()
    store = IndexStore(config.index_root)
    key = index_key(args.video_id, config.run.sampling, config.run.group_size, gateway)
    index = store.load(key)
    if index is None:
        raise ConfigError(f"no index for {args.video_id} with this configuration; run 'slfg index' first")
    print(f"video {index.video_id}: {len(index.groups)} groups, {len(index.scenes)} scenes, "
          f"interval {index.sampling.interval_s:g} s, N={index.group_size}")
    print(f"models: describer={index.describer_id} abstractor={index.abstractor_id} "
          f"embedder={index.embedder_id}")
    by_group = index.scenes_by_group()
    for group, desc in zip(index.groups, index.descriptions):
        start, end = group_window(group, index.sampling)
        print(f"\n[group {group.group_index}] {start:g}-{end:g} s, {len(group)} frames")
        print(f"  description: {desc.text}")
        for scene in by_group[group.group_index]:
            print(f"  scene {scene.scene_index}: {scene.text}")
    if args.question:
        query = extract_query_scene(args.question, gateway, args.video_id)
        print(f"\nquery scene: {query.text}")
        print(f"{'rank':>4} {'group':>5} {'score':>8} {'cosine':>8} {'scene':>5}")
        for rank, s in enumerate(score_all(index, query), start=1):
            print(f"{rank:>4} {s.group_index:>5} {s.score:>8.4f} {s.raw_cosine:>8.4f} {s.best_scene_index:>5}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "ask": cmd_ask,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"slfg: config error: {exc}", file=sys.stderr)
        return 2
    except SLFGError as exc:
        print(f"slfg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
