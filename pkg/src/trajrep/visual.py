"""Frozen per-clip visual feature providers.

The models fuse each clip's trajectory summary with a visual feature
vector that some external backbone produced. Running such a backbone is
out of scope here, so two providers exist:

  FileVisualProvider   reads vectors from JSONL ({"clip_id", "vec"}),
                       for plugging in real features.
  StubVisualProvider   deterministic stand-in: 64 hand-crafted motion
                       statistics of the clip, pushed through a fixed
                       seeded random projection.

Both are frozen: they hand out plain arrays, never gradients, and the
same clip id always maps to the same vector. Variant machinery leans on
that: an intra-clip variant keeps clip ids (features preserved), an
inter-clip variant swaps in donor clips with their own ids (features
swapped).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import Clip
from .errors import DataError
from .grid import FieldSpec

STAT_DIM = 64


def clip_statistics(clip: Clip, field: FieldSpec) -> np.ndarray:
    """64 deterministic summary statistics of one clip's motion.

    48 entries are a coarse 6x8 occupancy histogram over all sample
    positions; the rest describe counts, speeds, spread, and extent.
    All entries are roughly unit scale.
    """
    xs, ys, speeds = [], [], []
    ball_speeds = []
    net_disp, path_len = [], []
    n_points = 0
    for tr in clip.tracks:
        pts = tr.points
        n_points += len(pts)
        xs.append(pts[:, 1])
        ys.append(pts[:, 2])
        if len(pts) > 1:
            d = np.diff(pts[:, 1:3], axis=0)
            dt = np.diff(pts[:, 0])
            step = np.hypot(d[:, 0], d[:, 1])
            v = step / np.maximum(dt, 1e-9)
            speeds.append(v.mean())
            if tr.kind == "ball":
                ball_speeds.append(v.mean())
            path_len.append(step.sum())
            net_disp.append(float(np.hypot(*(pts[-1, 1:3] - pts[0, 1:3]))))
        else:
            speeds.append(0.0)
            path_len.append(0.0)
            net_disp.append(0.0)
    x = np.concatenate(xs) if xs else np.zeros(1)
    y = np.concatenate(ys) if ys else np.zeros(1)

    hist, _, _ = np.histogram2d(
        x, y,
        bins=(8, 6),
        range=((field.x_min, field.x_max), (field.y_min, field.y_max)),
    )
    hist = hist.reshape(-1) / max(n_points, 1)

    width = field.x_max - field.x_min
    height = field.y_max - field.y_min
    scalars = np.array([
        len(clip.tracks),
        sum(1 for tr in clip.tracks if tr.kind == "player"),
        sum(1 for tr in clip.tracks if tr.kind == "ball"),
        n_points / 100.0,
        clip.duration / 10.0,
        float(np.mean(speeds)) if speeds else 0.0,
        float(np.mean(ball_speeds)) if ball_speeds else 0.0,
        float(x.mean()) / width,
        float(y.mean()) / height,
        float(x.std()) / width,
        float(y.std()) / height,
        float(np.mean(net_disp)) / width if net_disp else 0.0,
        float(np.mean(path_len)) / width if path_len else 0.0,
        float(x.max() - x.min()) / width,
        float(y.max() - y.min()) / height,
        1.0,
    ])
    return np.concatenate([hist, scalars])


class StubVisualProvider:
    """Seeded random projection of clip statistics to the visual dim."""

    def __init__(self, dim: int = 512, seed: int = 0) -> None:
        if dim < 1:
            raise ValueError("visual dim must be positive")
        self.dim = dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        self._proj = rng.normal(size=(STAT_DIM, dim)) / np.sqrt(STAT_DIM)
        self._vectors: dict[str, np.ndarray] = {}

    def fit(self, videos, field: FieldSpec) -> "StubVisualProvider":
        for v in videos:
            for clip in v.clips:
                if clip.clip_id not in self._vectors:
                    vec = clip_statistics(clip, field) @ self._proj
                    vec.setflags(write=False)
                    self._vectors[clip.clip_id] = vec
        return self

    def known_ids(self) -> list[str]:
        return list(self._vectors)

    def vector_for(self, clip_id: str) -> np.ndarray:
        try:
            return self._vectors[clip_id]
        except KeyError:
            raise DataError(f"no visual feature for clip {clip_id!r}") from None


class FileVisualProvider:
    """Visual features from a JSONL file of {"clip_id", "vec"} records."""

    def __init__(self, path) -> None:
        p = Path(path)
        if not p.exists():
            raise DataError(f"visual feature file not found: {p}")
        self._vectors: dict[str, np.ndarray] = {}
        self.dim = None
        with open(p, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    cid = obj["clip_id"]
                    vec = np.asarray(obj["vec"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DataError(f"{p}:{lineno}: bad visual record: {exc}") from exc
                if vec.ndim != 1:
                    raise DataError(f"{p}:{lineno}: vec must be a flat list")
                if self.dim is None:
                    self.dim = vec.shape[0]
                elif vec.shape[0] != self.dim:
                    raise DataError(
                        f"{p}:{lineno}: inconsistent visual dim "
                        f"{vec.shape[0]} vs {self.dim}"
                    )
                if cid in self._vectors:
                    raise DataError(f"{p}:{lineno}: duplicate clip id {cid!r}")
                vec.setflags(write=False)
                self._vectors[cid] = vec
        if not self._vectors:
            raise DataError(f"{p}: no visual features found")

    def known_ids(self) -> list[str]:
        return list(self._vectors)

    def vector_for(self, clip_id: str) -> np.ndarray:
        try:
            return self._vectors[clip_id]
        except KeyError:
            raise DataError(f"no visual feature for clip {clip_id!r}") from None


def save_visual_features(provider, path) -> None:
    """Write any provider's known vectors to the JSONL format."""
    with open(path, "w", encoding="utf-8") as fh:
        for cid in provider.known_ids():
            vec = provider.vector_for(cid)
            fh.write(json.dumps({"clip_id": cid, "vec": vec.tolist()}))
            fh.write("\n")
