"""On-disk cache of scene indexes.

One JSON document per index at ``{root}/{video_id}/{key digest}.json``.
Writes go to a temp file in the same directory and are renamed into place,
so concurrent writers to one key never leave a partial file (last one wins).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import CorruptIndexError, InvalidStateError, StorageError
from .scene_index import SCHEMA_VERSION, IndexKey, SceneIndex


def index_path(key: IndexKey, root: Path | str) -> Path:
    return Path(root) / key.video_id / f"{key.digest()}.json"


def save_index(index: SceneIndex, root: Path | str) -> Path:
    index.validate()
    path = index_path(index.key, root)
    blob = json.dumps(index.to_json(), indent=1, sort_keys=False) + "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
    except OSError as exc:
        raise StorageError(f"cannot write index to {path}: {exc}") from exc
    return path


def read_index_file(path: Path | str) -> SceneIndex:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptIndexError(path, f"invalid JSON ({exc})") from exc
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict) or "schema_version" not in data:
        raise CorruptIndexError(path, "missing schema_version")
    version = data["schema_version"]
    if not isinstance(version, int) or version > SCHEMA_VERSION:
        raise CorruptIndexError(
            path, f"schema_version {version!r} is newer than supported version {SCHEMA_VERSION}"
        )
    try:
        return SceneIndex.from_json(data)
    except (KeyError, TypeError, ValueError, InvalidStateError) as exc:
        raise CorruptIndexError(path, f"{type(exc).__name__}: {exc}") from exc


def load_index(key: IndexKey, root: Path | str) -> SceneIndex | None:
    """Stored index for exactly ``key``, or ``None`` on a miss."""
    path = index_path(key, root)
    if not path.exists():
        return None
    index = read_index_file(path)
    if index.key != key:  # digest collision or hand-edited file
        return None
    return index


class IndexStore:
    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    def save(self, index: SceneIndex) -> Path:
        return save_index(index, self.root)

    def load(self, key: IndexKey) -> SceneIndex | None:
        return load_index(key, self.root)

    def path_for(self, key: IndexKey) -> Path:
        return index_path(key, self.root)

    def list(self, video_id: str) -> list[Path]:
        return sorted((self.root / video_id).glob("*.json"))
