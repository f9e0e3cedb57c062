"""Contrastive objectives over batches of video embeddings.

Training produces three aligned embedding matrices per batch: the
original videos, their intra-clip variants, and their inter-clip
variants. Each (matrix, matrix) pairing contributes a symmetric InfoNCE
term with in-batch negatives, and the final objective mixes the three
pair terms with weights alpha, beta, 1 - alpha - beta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .tensor import Tensor

SIMILARITIES = ("cosine", "dot")
DENOMINATORS = ("standard", "literal")
REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class LossConfig:
    tau: float = 0.1
    alpha: float = 0.5
    beta: float = 0.3
    similarity: str = "cosine"
    denominator: str = "standard"
    reduction: str = "mean"

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        if self.alpha + self.beta > 1.0 + 1e-12:
            raise ConfigError("alpha + beta must not exceed 1")
        if self.similarity not in SIMILARITIES:
            raise ConfigError(f"similarity must be one of {SIMILARITIES}")
        if self.denominator not in DENOMINATORS:
            raise ConfigError(f"denominator must be one of {DENOMINATORS}")
        if self.reduction not in REDUCTIONS:
            raise ConfigError(f"reduction must be one of {REDUCTIONS}")


def _check_batch(a: Tensor, b: Tensor) -> int:
    if a.shape != b.shape or len(a.shape) != 2:
        raise ValueError(f"embedding matrices must match, got {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need batch >= 2 for in-batch negatives")
    return n


def info_nce_directional(a: Tensor, b: Tensor, cfg: LossConfig) -> Tensor:
    """Cross-entropy of each row of `a` picking its aligned row of `b`
    out of the batch. Row i's positive logit is sim(a_i, b_i) / tau; the
    other rows of `b` supply the negatives."""
    n = _check_batch(a, b)
    if cfg.similarity == "cosine":
        a = T.normalize_rows(a)
        b = T.normalize_rows(b)
    logits = T.scale(T.matmul(a, T.transpose(b)), 1.0 / cfg.tau)
    eye = np.eye(n)
    positives = T.sum_cols(T.mul(logits, Tensor(eye)))
    mask = None if cfg.denominator == "standard" else 1.0 - eye
    denom = T.log_sum_exp_rows(logits, mask)
    per_row = T.sub(denom, positives)
    return T.mean_all(per_row) if cfg.reduction == "mean" else T.sum_all(per_row)


def pair_loss(a: Tensor, b: Tensor, cfg: LossConfig) -> Tensor:
    """Symmetrized InfoNCE: a against b plus b against a."""
    return T.add(info_nce_directional(a, b, cfg),
                 info_nce_directional(b, a, cfg))


def triple_loss(v1: Tensor, v2: Tensor, v3: Tensor, cfg: LossConfig) -> Tensor:
    """Weighted mix of the three pairwise losses between the original
    embeddings and the two variant embeddings."""
    _check_batch(v1, v2)
    _check_batch(v1, v3)
    rest = 1.0 - cfg.alpha - cfg.beta
    total = T.scale(pair_loss(v1, v2, cfg), cfg.alpha)
    total = T.add(total, T.scale(pair_loss(v1, v3, cfg), cfg.beta))
    return T.add(total, T.scale(pair_loss(v2, v3, cfg), rest))
