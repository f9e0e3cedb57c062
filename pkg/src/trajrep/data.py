"""Dataset model and JSONL serialization.

A dataset is a list of videos; each video is an ordered list of clips;
each clip holds the tracked trajectories of the objects on the field
during that clip, with timestamps local to the clip (seconds from clip
start).

On disk a dataset is JSON Lines, one video per line:

    {"video_id": "...", "clips": [{"clip_id": "...", "duration": 16.0,
      "tracks": [{"object_id": "...", "kind": "player",
                  "points": [[t, x, y], ...]}, ...]}, ...]}

Instances are frozen and compare by identity; trajectory point arrays
are read-only so clips can be shared freely between videos and their
noised variants.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import FieldSpec

KINDS = ("player", "ball")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One object's track inside a clip: rows of (t, x, y), t increasing."""

    object_id: str
    kind: str
    points: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("points must be a (k, 3) array with k >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if pts.shape[0] > 1 and not np.all(np.diff(pts[:, 0]) > 0):
            raise ValueError("timestamps must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True, eq=False)
class Clip:
    clip_id: str
    duration: float
    tracks: tuple[Trajectory, ...]

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        object.__setattr__(self, "tracks", tuple(self.tracks))
        for tr in self.tracks:
            t = tr.points[:, 0]
            if t[0] < 0 or t[-1] > self.duration:
                raise ValueError(
                    f"trajectory {tr.object_id!r} leaves clip window "
                    f"[0, {self.duration}]"
                )


@dataclass(frozen=True, eq=False)
class Video:
    video_id: str
    clips: tuple[Clip, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "clips", tuple(self.clips))
        if not self.clips:
            raise ValueError("video must contain at least one clip")


def clamp_points(points: np.ndarray, field: FieldSpec) -> np.ndarray:
    """Clamp the x, y columns of a point array into the field bounds."""
    out = np.array(points, dtype=np.float64)
    out[:, 1] = np.clip(out[:, 1], field.x_min, field.x_max)
    out[:, 2] = np.clip(out[:, 2], field.y_min, field.y_max)
    return out


def _video_to_obj(video: Video) -> dict:
    return {
        "video_id": video.video_id,
        "clips": [
            {
                "clip_id": c.clip_id,
                "duration": c.duration,
                "tracks": [
                    {
                        "object_id": tr.object_id,
                        "kind": tr.kind,
                        "points": tr.points.tolist(),
                    }
                    for tr in c.tracks
                ],
            }
            for c in video.clips
        ],
    }


def _video_from_obj(obj: dict, field: FieldSpec | None) -> Video:
    try:
        clips = []
        for c in obj["clips"]:
            tracks = []
            for tr in c["tracks"]:
                pts = np.asarray(tr["points"], dtype=np.float64)
                if field is not None and pts.size:
                    pts = clamp_points(pts, field)
                tracks.append(
                    Trajectory(
                        object_id=tr["object_id"],
                        kind=tr["kind"],
                        points=pts,
                    )
                )
            clips.append(
                Clip(
                    clip_id=c["clip_id"],
                    duration=float(c["duration"]),
                    tracks=tuple(tracks),
                )
            )
        return Video(video_id=obj["video_id"], clips=tuple(clips))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed video record: {exc}") from exc


def save_dataset(videos, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in videos:
            fh.write(json.dumps(_video_to_obj(v)))
            fh.write("\n")


def load_dataset(path, field: FieldSpec | None = None) -> list[Video]:
    """Load a JSONL dataset. Pass a field to clamp points into bounds."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"dataset not found: {p}")
    videos = []
    with open(p, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
            videos.append(_video_from_obj(obj, field))
    return videos


def save_split(train_ids, test_ids, path) -> None:
    obj = {"train": list(train_ids), "test": list(test_ids)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_split(path) -> tuple[list[str], list[str]]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"split manifest not found: {p}")
    with open(p, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or set(obj) != {"train", "test"}:
        raise DataError(f"{p}: split manifest must have train and test keys")
    return list(obj["train"]), list(obj["test"])


def videos_equal(a: Video, b: Video) -> bool:
    """Deep structural equality, used by tests and variant plumbing."""
    if a.video_id != b.video_id or len(a.clips) != len(b.clips):
        return False
    for ca, cb in zip(a.clips, b.clips):
        if ca.clip_id != cb.clip_id or ca.duration != cb.duration:
            return False
        if len(ca.tracks) != len(cb.tracks):
            return False
        for ta, tb in zip(ca.tracks, cb.tracks):
            if ta.object_id != tb.object_id or ta.kind != tb.kind:
                return False
            if not np.array_equal(ta.points, tb.points):
                return False
    return True
