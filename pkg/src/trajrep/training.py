"""Training loop: batching, variant generation, SGD with momentum,
early stopping on validation loss, checkpoint snapshots.

Each training batch embeds three aligned views of every video: the
original, an intra-clip variant (some trajectories inside each clip
replaced), and an inter-clip variant (some whole clips replaced). The
triple contrastive loss pulls the three views of one video together and
pushes different videos apart.

Determinism contract: with a fixed config seed and single-threaded
numpy, loss curves and checkpoints are bit-identical across runs. All
randomness flows from generators seeded by (config seed, epoch, lane)
tuples; validation variants use one fixed lane so every epoch sees the
same held-out contrast task.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .losses import LossConfig, triple_loss
from .params import ParamStore
from .synth import SamplePool, make_eval_query, make_inter_variant, make_intra_variant

logger = logging.getLogger("trajrep.training")

_VAL_LANE = 0x5EED


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 0.01
    momentum: float = 0.7
    patience: int = 10
    noise_low: float = 0.0
    noise_high: float = 0.2
    seed: int = 0
    split_ratio: float = 0.8

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2 for in-batch negatives")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")
        if not 1 <= self.patience <= self.epochs:
            raise ConfigError("patience must be in [1, epochs]")
        if not 0.0 <= self.noise_low <= self.noise_high <= 1.0:
            raise ConfigError("noise range must satisfy 0 <= low <= high <= 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError("split_ratio must be in (0, 1)")


@dataclass
class TrainState:
    epoch: int = 0
    velocities: dict = field(default_factory=dict)
    best_val: float = math.inf
    best_epoch: int = -1
    since_improved: int = 0


def sgd_step(params: ParamStore, state: TrainState, lr: float,
             momentum: float) -> None:
    """One momentum-SGD update over every parameter with a gradient.

    velocity <- momentum * velocity + grad; param <- param - lr * velocity.
    Parameters without gradients are skipped (and logged); all grads are
    cleared afterwards.
    """
    for name, p in params.items():
        if p.grad is None:
            logger.warning("no gradient for %s; skipping", name)
            continue
        v = state.velocities.get(name)
        if v is None:
            v = np.zeros_like(p.data)
        v = momentum * v + p.grad
        state.velocities[name] = v
        p.data -= lr * v
    params.zero_grads()


@dataclass
class TrainResult:
    best_params: dict
    best_epoch: int
    best_val: float
    stopped_epoch: int
    curve: list


def _batches(order, batch_size):
    for i in range(0, len(order), batch_size):
        chunk = order[i:i + batch_size]
        if len(chunk) >= 2:
            yield chunk


def _embed_batch(embedder, videos, pool, deltas, rng, *, training):
    """Embed originals plus both variants; three (B, d) tensors.

    All three views run as one batched pass, so the inter-clip variant's
    unreplaced clip objects are encoded once and shared with the
    original's rows inside the same graph.
    """
    intras = [make_intra_variant(v, d, pool, rng)
              for v, d in zip(videos, deltas)]
    inters = [make_inter_variant(v, d, pool, rng)
              for v, d in zip(videos, deltas)]
    out = embedder.encode_videos_graph_batch(
        list(videos) + intras + inters, training=training, rng=rng)
    n = len(videos)
    idx = np.arange(3 * n, dtype=np.int64)
    return (T.embedding_lookup(out, idx[:n]),
            T.embedding_lookup(out, idx[n:2 * n]),
            T.embedding_lookup(out, idx[2 * n:]))


def _epoch_loss_eval(embedder, videos, pool, cfg, loss_cfg, rng):
    """Mean per-video loss over fixed-order batches, graphs discarded."""
    total, count = 0.0, 0
    with T.no_grad():
        for chunk in _batches(list(range(len(videos))), cfg.batch_size):
            batch = [videos[i] for i in chunk]
            deltas = [rng.uniform(cfg.noise_low, cfg.noise_high) for _ in batch]
            b1, b2, b3 = _embed_batch(embedder, batch, pool, deltas, rng,
                                      training=False)
            loss = triple_loss(b1, b2, b3, loss_cfg)
            total += loss.item() * len(batch)
            count += len(batch)
    if count == 0:
        raise ConfigError("validation split has fewer than 2 videos")
    return total / count


def train(embedder, train_videos, val_videos, pool: SamplePool,
          cfg: TrainConfig, loss_cfg: LossConfig | None = None,
          on_epoch=None) -> TrainResult:
    """Run the full loop and return the best snapshot plus loss curve.

    The pool of replacement material comes from the training split, and
    validation variants draw from it too, so held-out videos never
    contribute donor trajectories.
    """
    if len(train_videos) < 2:
        raise ConfigError("need at least 2 training videos")
    if len(val_videos) < 2:
        raise ConfigError("need at least 2 validation videos")
    loss_cfg = loss_cfg if loss_cfg is not None else LossConfig()
    params = embedder.store
    state = TrainState()
    best_params = params.as_arrays()
    curve = []
    stopped = cfg.epochs - 1
    for epoch in range(cfg.epochs):
        state.epoch = epoch
        rng = np.random.default_rng((cfg.seed, epoch, 1))
        order = rng.permutation(len(train_videos)).tolist()
        total, count = 0.0, 0
        for chunk in _batches(order, cfg.batch_size):
            batch = [train_videos[i] for i in chunk]
            deltas = [rng.uniform(cfg.noise_low, cfg.noise_high) for _ in batch]
            b1, b2, b3 = _embed_batch(embedder, batch, pool, deltas, rng,
                                      training=True)
            loss = triple_loss(b1, b2, b3, loss_cfg)
            T.backward(loss)
            sgd_step(params, state, cfg.lr, cfg.momentum)
            total += loss.item() * len(batch)
            count += len(batch)
        if count == 0:
            raise ConfigError("training split yields no batch of size >= 2")
        train_loss = total / count

        val_rng = np.random.default_rng((cfg.seed, _VAL_LANE))
        val_loss = _epoch_loss_eval(embedder, val_videos, pool, cfg,
                                    loss_cfg, val_rng)
        curve.append((epoch, train_loss, val_loss))
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)

        if val_loss < state.best_val:
            state.best_val = val_loss
            state.best_epoch = epoch
            state.since_improved = 0
            best_params = params.as_arrays()
        else:
            state.since_improved += 1
            if state.since_improved >= cfg.patience:
                stopped = epoch
                break
        stopped = epoch
    return TrainResult(
        best_params=best_params,
        best_epoch=state.best_epoch,
        best_val=state.best_val,
        stopped_epoch=stopped,
        curve=curve,
    )


def write_curve_csv(curve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, tr, va in curve:
            writer.writerow([epoch, repr(tr), repr(va)])


def make_queries(videos, pool: SamplePool, delta: float, seed: int):
    """Evaluation queries: one combined intra+inter variant per video."""
    rng = np.random.default_rng((seed, 0xE7A1))
    return [make_eval_query(v, delta, pool, rng) for v in videos]
