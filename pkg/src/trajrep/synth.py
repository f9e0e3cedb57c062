"""Synthetic dataset generation and noised variants.

Videos are stacks of fixed-length clips. Each clip tracks a handful of
players plus the ball as reflected Gaussian random walks, sampled at a
fixed rate. The walks differ per video, which is what makes retrieval
on this data meaningful: a video's clips share no trajectories with
any other video's.

Noised variants serve contrastive training and evaluation:

  intra  replaces a fraction of trajectories inside every clip with
         donors drawn from a pool, keeping clip ids (and therefore
         visual features) intact.
  inter  replaces a fraction of clip positions with whole donor clips,
         swapping the clip id, so visual features change too.

The replaced count is always ceil(fraction * count), so any nonzero
fraction replaces at least one item.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .data import Clip, Trajectory, Video
from .errors import ConfigError
from .grid import FieldSpec


@dataclass(frozen=True)
class GenConfig:
    n_videos: int = 200
    clips_per_video: int = 16
    segments_per_clip: int = 16
    players_per_clip: int = 6
    include_ball: bool = True
    segment_len: float = 1.0
    sample_hz: float = 4.0
    step_std: float = 0.8
    ball_step_mult: float = 2.0
    rng_seed: int = 0
    field: FieldSpec = dc_field(default_factory=FieldSpec)

    def __post_init__(self) -> None:
        if min(self.n_videos, self.clips_per_video, self.segments_per_clip) < 1:
            raise ConfigError("video, clip and segment counts must be >= 1")
        if self.players_per_clip < 0:
            raise ConfigError("players_per_clip must be >= 0")
        if self.players_per_clip == 0 and not self.include_ball:
            raise ConfigError("clips need at least one tracked object")
        if self.segment_len <= 0 or self.sample_hz <= 0:
            raise ConfigError("segment_len and sample_hz must be positive")
        if self.step_std <= 0 or self.ball_step_mult <= 0:
            raise ConfigError("step sizes must be positive")

    @property
    def clip_duration(self) -> float:
        return self.segments_per_clip * self.segment_len


def _reflect(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Fold a coordinate array back into [lo, hi] by mirror reflection."""
    width = hi - lo
    v = np.mod(values - lo, 2.0 * width)
    v = np.where(v > width, 2.0 * width - v, v)
    return v + lo


def _walk(rng, cfg: GenConfig, n_samples: int, step_std: float) -> np.ndarray:
    f = cfg.field
    start = np.array(
        [rng.uniform(f.x_min, f.x_max), rng.uniform(f.y_min, f.y_max)]
    )
    steps = rng.normal(0.0, step_std, size=(n_samples - 1, 2))
    path = np.vstack([start, start + np.cumsum(steps, axis=0)])
    path[:, 0] = _reflect(path[:, 0], f.x_min, f.x_max)
    path[:, 1] = _reflect(path[:, 1], f.y_min, f.y_max)
    return path


def _gen_clip(rng, cfg: GenConfig, clip_id: str) -> Clip:
    duration = cfg.clip_duration
    # samples stop one step short of the clip end so every sample falls
    # inside a segment window
    n_samples = max(2, int(math.floor(duration * cfg.sample_hz)))
    ts = np.arange(n_samples) / cfg.sample_hz
    tracks = []
    for p in range(cfg.players_per_clip):
        path = _walk(rng, cfg, n_samples, cfg.step_std)
        pts = np.column_stack([ts, path])
        tracks.append(Trajectory(f"{clip_id}p{p}", "player", pts))
    if cfg.include_ball:
        path = _walk(rng, cfg, n_samples, cfg.step_std * cfg.ball_step_mult)
        pts = np.column_stack([ts, path])
        tracks.append(Trajectory(f"{clip_id}ball", "ball", pts))
    return Clip(clip_id=clip_id, duration=duration, tracks=tuple(tracks))


def generate_dataset(cfg: GenConfig) -> list[Video]:
    """Deterministic dataset: same config, same videos, bit for bit."""
    root = np.random.SeedSequence(cfg.rng_seed)
    videos = []
    for i, child in enumerate(root.spawn(cfg.n_videos)):
        rng = np.random.default_rng(child)
        vid = f"v{i:03d}"
        clips = tuple(
            _gen_clip(rng, cfg, f"{vid}c{c:02d}")
            for c in range(cfg.clips_per_video)
        )
        videos.append(Video(video_id=vid, clips=clips))
    return videos


def split_dataset(videos, train_fraction: float = 0.8, seed: int = 0):
    """Shuffled id split. Returns (train_ids, test_ids)."""
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError("train_fraction must be in (0, 1)")
    ids = [v.video_id for v in videos]
    if len(ids) < 2:
        raise ConfigError("need at least two videos to split")
    perm = np.random.default_rng(seed).permutation(len(ids))
    n_train = int(round(train_fraction * len(ids)))
    n_train = min(max(n_train, 1), len(ids) - 1)
    train = [ids[j] for j in perm[:n_train]]
    test = [ids[j] for j in perm[n_train:]]
    return train, test


@dataclass(frozen=True, eq=False)
class PoolEntry:
    """A donor trajectory along with its source clip's duration."""

    trajectory: Trajectory
    clip_duration: float


@dataclass(frozen=True, eq=False)
class SamplePool:
    """Donor material for noise variants, in stable dataset order."""

    trajectories: tuple[PoolEntry, ...]
    clips: tuple[Clip, ...]

    def __post_init__(self) -> None:
        if not self.trajectories or not self.clips:
            raise ConfigError("sample pool must not be empty")


def build_pool(videos) -> SamplePool:
    entries = []
    clips = []
    for v in videos:
        for c in v.clips:
            clips.append(c)
            for tr in c.tracks:
                entries.append(PoolEntry(tr, c.duration))
    return SamplePool(trajectories=tuple(entries), clips=tuple(clips))


def _check_delta(delta: float) -> None:
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"noise fraction must be in [0, 1], got {delta}")


def _rebase(traj: Trajectory, src_duration: float, tgt_duration: float) -> Trajectory:
    """Scale timestamps from one clip window onto another.

    Equal durations return the same object; variants share trajectory
    instances freely because they are frozen.
    """
    if src_duration == tgt_duration:
        return traj
    scale = tgt_duration / src_duration
    pts = np.array(traj.points)
    pts[:, 0] = np.minimum(pts[:, 0] * scale, tgt_duration)
    return Trajectory(traj.object_id, traj.kind, pts)


def replaced_count(delta: float, count: int) -> int:
    """How many of count items a noise fraction delta replaces."""
    return min(int(math.ceil(delta * count)), count)


def make_intra_variant(video: Video, delta: float, pool: SamplePool, rng) -> Video:
    """Replace ceil(delta * K) of each clip's K trajectories with donors.

    Clip ids and durations stay put, so downstream visual features are
    preserved; only the trajectory content changes.
    """
    _check_delta(delta)
    clips = []
    for clip in video.clips:
        k = len(clip.tracks)
        r = replaced_count(delta, k)
        if r == 0 or k == 0:
            clips.append(clip)
            continue
        replaced = set(rng.choice(k, size=r, replace=False).tolist())
        tracks = []
        for j, tr in enumerate(clip.tracks):
            if j in replaced:
                entry = pool.trajectories[int(rng.integers(len(pool.trajectories)))]
                tracks.append(_rebase(entry.trajectory, entry.clip_duration, clip.duration))
            else:
                tracks.append(tr)
        clips.append(Clip(clip.clip_id, clip.duration, tuple(tracks)))
    return Video(video.video_id, tuple(clips))


def make_inter_variant(video: Video, delta: float, pool: SamplePool, rng) -> Video:
    """Replace ceil(delta * n) of the video's n clip positions with donors.

    The donor keeps its own clip id (so visual features swap) but is
    rebased onto the replaced position's duration. Clip order and count
    are unchanged.
    """
    _check_delta(delta)
    n = len(video.clips)
    r = replaced_count(delta, n)
    if r == 0:
        return Video(video.video_id, video.clips)
    positions = sorted(rng.choice(n, size=r, replace=False).tolist())
    clips = list(video.clips)
    for pos in positions:
        donor = pool.clips[int(rng.integers(len(pool.clips)))]
        target_duration = clips[pos].duration
        if donor.duration == target_duration:
            clips[pos] = donor
        else:
            tracks = tuple(
                _rebase(tr, donor.duration, target_duration) for tr in donor.tracks
            )
            clips[pos] = Clip(donor.clip_id, target_duration, tracks)
    return Video(video.video_id, tuple(clips))


def make_eval_query(video: Video, delta: float, pool: SamplePool, rng) -> Video:
    """Evaluation corruption: intra noise followed by inter noise at the
    same fraction, sharing one generator."""
    return make_inter_variant(
        make_intra_variant(video, delta, pool, rng), delta, pool, rng
    )
