"""Frame directories: on-disk layout, manifest handling and video ingestion.

A frame directory holds ``frame_<t_ms:08d>.jpg`` images plus a
``manifest.json`` of the form::

    {"video_id": "...", "duration_s": 1800.0, "interval_s": 10.0,
     "frames": [0, 10000, 20000, ...]}

The pipeline only reads frame directories. :func:`extract_frames` populates
one from a video file by shelling out to ffmpeg.
"""

from __future__ import annotations

import json
import logging
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IngestError
from .sampling import Frame, SamplingConfig, sample_timestamps_ms

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
FRAME_RE = re.compile(r"^frame_(\d{8,})\.jpg$")


def frame_filename(t_ms: int) -> str:
    return f"frame_{t_ms:08d}.jpg"


@dataclass
class Manifest:
    video_id: str
    duration_s: float
    interval_s: float
    frames: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "video_id": self.video_id,
            "duration_s": self.duration_s,
            "interval_s": self.interval_s,
            "frames": list(self.frames),
        }

    @classmethod
    def from_json(cls, data: dict, source: Path | str = "<manifest>") -> Manifest:
        try:
            manifest = cls(
                video_id=str(data["video_id"]),
                duration_s=float(data["duration_s"]),
                interval_s=float(data["interval_s"]),
                frames=[int(t) for t in data["frames"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"invalid manifest {source}: {exc!r}") from exc
        if manifest.duration_s <= 0 or manifest.interval_s <= 0:
            raise IngestError(f"invalid manifest {source}: duration and interval must be > 0")
        if any(b <= a for a, b in zip(manifest.frames, manifest.frames[1:])):
            raise IngestError(f"invalid manifest {source}: frames must be strictly increasing")
        return manifest


def write_manifest(frame_dir: Path | str, manifest: Manifest) -> Path:
    path = Path(frame_dir) / MANIFEST_NAME
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    os.replace(tmp, path)
    return path


class FrameDirectory:
    """Read-only view of one video's frame directory."""

    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)
        manifest_path = self.path / MANIFEST_NAME
        try:
            data = json.loads(manifest_path.read_text())
        except FileNotFoundError as exc:
            raise IngestError(f"no {MANIFEST_NAME} in frame directory {self.path}") from exc
        except json.JSONDecodeError as exc:
            raise IngestError(f"unreadable manifest {manifest_path}: {exc}") from exc
        self.manifest = Manifest.from_json(data, manifest_path)
        self._available = set(self.manifest.frames)

    @property
    def video_id(self) -> str:
        return self.manifest.video_id

    @property
    def duration_s(self) -> float:
        return self.manifest.duration_s

    def path_for(self, t_ms: int) -> Path:
        return self.path / frame_filename(t_ms)

    def frames(self, config: SamplingConfig) -> list[Frame]:
        """Resolve every timestamp sampled under ``config`` to a frame on disk."""
        timestamps = sample_timestamps_ms(self.duration_s, config)
        missing = [
            t for t in timestamps
            if t not in self._available or not self.path_for(t).is_file()
        ]
        if missing:
            shown = ", ".join(str(t) for t in missing[:20])
            more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
            raise IngestError(
                f"{self.path}: missing frames for t_ms {shown}{more}"
            )
        offset, step = config.origin_ms, config.interval_ms
        return [
            Frame(index=(t - offset) // step, timestamp_ms=t, image_ref=str(self.path_for(t)))
            for t in timestamps
        ]


def synthesize_manifest(
    frame_dir: Path | str,
    video_id: str,
    interval_s: float | None = None,
    duration_s: float | None = None,
) -> Manifest:
    """Build (and write) a manifest from the frame filenames already present."""
    frame_dir = Path(frame_dir)
    stamps = sorted(
        int(m.group(1)) for p in frame_dir.iterdir() if (m := FRAME_RE.match(p.name))
    )
    if not stamps:
        raise IngestError(f"no frame_<t_ms>.jpg files in {frame_dir}")
    if interval_s is None:
        if len(stamps) < 2:
            raise IngestError("cannot infer the sampling interval from a single frame; pass --interval")
        interval_s = (stamps[1] - stamps[0]) / 1000
    if duration_s is None:
        duration_s = stamps[-1] / 1000
    manifest = Manifest(video_id=video_id, duration_s=duration_s, interval_s=interval_s, frames=stamps)
    write_manifest(frame_dir, manifest)
    return manifest


def ingest_frame_dir(
    src: Path | str,
    out_dir: Path | str,
    video_id: str,
    interval_s: float | None = None,
    duration_s: float | None = None,
) -> Manifest:
    """Copy a pre-extracted frame directory into ``out_dir`` and write its manifest."""
    src, out_dir = Path(src), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if src.resolve() != out_dir.resolve():
        for p in src.iterdir():
            if FRAME_RE.match(p.name):
                shutil.copy2(p, out_dir / p.name)
    return synthesize_manifest(out_dir, video_id, interval_s, duration_s)


def _require_tool(name: str) -> str:
    found = shutil.which(name)
    if found is None:
        raise IngestError(
            f"required tool '{name}' not found on PATH; install ffmpeg to ingest video files"
        )
    return found


def probe_duration(video: Path | str, ffprobe: str = "ffprobe") -> float:
    exe = _require_tool(ffprobe)
    proc = subprocess.run(
        [exe, "-v", "error", "-show_entries", "format=duration",
         "-of", "default=noprint_wrappers=1:nokey=1", str(video)],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise IngestError(proc.stderr.strip() or f"{ffprobe} exited with {proc.returncode}")
    try:
        return float(proc.stdout.strip())
    except ValueError as exc:
        raise IngestError(f"{ffprobe} returned no duration for {video}: {proc.stdout!r}") from exc


def extract_frames(
    video: Path | str,
    out_dir: Path | str,
    interval_s: float,
    video_id: str,
    ffmpeg: str = "ffmpeg",
    ffprobe: str = "ffprobe",
) -> Manifest:
    """Extract one frame every ``interval_s`` seconds from ``video`` into ``out_dir``."""
    video, out_dir = Path(video), Path(out_dir)
    ffmpeg_exe = _require_tool(ffmpeg)
    duration_s = probe_duration(video, ffprobe)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SamplingConfig(interval_s=interval_s)
    wanted = sample_timestamps_ms(duration_s, config)

    with tempfile.TemporaryDirectory(dir=out_dir) as tmp:
        pattern = str(Path(tmp) / "raw_%08d.jpg")
        proc = subprocess.run(
            [ffmpeg_exe, "-nostdin", "-loglevel", "error", "-i", str(video),
             "-vf", f"fps=1/{interval_s}", "-start_number", "0", "-q:v", "2", pattern],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise IngestError(proc.stderr.strip() or f"{ffmpeg} exited with {proc.returncode}")
        raw = sorted(Path(tmp).glob("raw_*.jpg"))
        written = []
        for t_ms, path in zip(wanted, raw):
            os.replace(path, out_dir / frame_filename(t_ms))
            written.append(t_ms)
    if not written:
        raise IngestError(f"{ffmpeg} produced no frames for {video}")
    if len(written) < len(wanted):
        # Trim the duration so the manifest never promises frames that are not on disk.
        log.warning("%s: extracted %d of %d expected frames", video, len(written), len(wanted))
        duration_s = written[-1] / 1000
    manifest = Manifest(video_id=video_id, duration_s=duration_s, interval_s=interval_s, frames=written)
    write_manifest(out_dir, manifest)
    return manifest


__all__ = [
    "FrameDirectory",
    "Manifest",
    "extract_frames",
    "frame_filename",
    "ingest_frame_dir",
    "synthesize_manifest",
    "write_manifest",
]
