"""Clip-level encoder: token embeddings, self-attention, pooled fusion.

A clip arrives as a fixed-length sequence of segment tokens. The encoder
embeds each token, adds a learned positional table, runs stacked
multi-head self-attention layers, mean-pools, and maps the pooled row
through a small ReLU network to a trajectory summary ``t``. The clip
embedding is ``t`` concatenated with a frozen visual feature vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .params import ParamStore
from .tensor import Tensor


@dataclass(frozen=True)
class ClipEncoderConfig:
    vocab_size: int
    max_tokens: int = 16
    embed_dim: int = 128
    attn_dim: int = 128
    clip_dim: int = 128
    visual_dim: int = 512
    n_heads: int = 2
    n_layers: int = 2
    dropout: float = 0.3

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be positive")
        for name in ("max_tokens", "embed_dim", "attn_dim", "clip_dim",
                     "visual_dim", "n_heads", "n_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.embed_dim % self.n_heads != 0:
            raise ConfigError("embed_dim must be divisible by n_heads")
        if self.attn_dim != self.embed_dim:
            raise ConfigError(
                "attn_dim must equal embed_dim so residual connections typecheck"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.n_heads

    @property
    def fused_dim(self) -> int:
        return self.clip_dim + self.visual_dim


class ClipEncoder:
    """Stateless forward logic; parameters live in a ParamStore."""

    def __init__(self, config: ClipEncoderConfig, prefix: str = "clip.") -> None:
        self.config = config
        self.prefix = prefix

    def init_params(self, store: ParamStore, rng: np.random.Generator) -> None:
        cfg = self.config
        p = self.prefix

        def w(name, shape, fan_in):
            store.add(p + name, rng.normal(0.0, 1.0 / np.sqrt(fan_in), shape))

        store.add(p + "tok_embed", rng.normal(0.0, 0.02, (cfg.vocab_size, cfg.embed_dim)))
        store.add(p + "pos_embed", rng.normal(0.0, 0.02, (cfg.max_tokens, cfg.embed_dim)))
        for layer in range(cfg.n_layers):
            lp = f"l{layer}."
            for head in range(cfg.n_heads):
                for mat in ("wq", "wk", "wv"):
                    w(f"{lp}h{head}.{mat}", (cfg.embed_dim, cfg.head_dim), cfg.embed_dim)
            w(f"{lp}wo", (cfg.embed_dim, cfg.attn_dim), cfg.embed_dim)
            store.add(p + f"{lp}ln1.gain", np.ones((1, cfg.attn_dim)))
            store.add(p + f"{lp}ln1.bias", np.zeros((1, cfg.attn_dim)))
            if layer < cfg.n_layers - 1:
                w(f"{lp}ffn.w1", (cfg.attn_dim, cfg.attn_dim), cfg.attn_dim)
                store.add(p + f"{lp}ffn.b1", np.zeros((1, cfg.attn_dim)))
                w(f"{lp}ffn.w2", (cfg.attn_dim, cfg.attn_dim), cfg.attn_dim)
                store.add(p + f"{lp}ffn.b2", np.zeros((1, cfg.attn_dim)))
                store.add(p + f"{lp}ln2.gain", np.ones((1, cfg.attn_dim)))
                store.add(p + f"{lp}ln2.bias", np.zeros((1, cfg.attn_dim)))
        w("pool.w1", (cfg.attn_dim, cfg.attn_dim), cfg.attn_dim)
        store.add(p + "pool.b1", np.zeros((1, cfg.attn_dim)))
        w("pool.w2", (cfg.attn_dim, cfg.clip_dim), cfg.attn_dim)
        store.add(p + "pool.b2", np.zeros((1, cfg.clip_dim)))

    def embed_segments(self, tokens, store: ParamStore, *,
                       training: bool = False, rng=None) -> Tensor:
        """Token embedding plus positional table, with training dropout."""
        cfg = self.config
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.shape != (cfg.max_tokens,):
            raise ValueError(
                f"expected exactly {cfg.max_tokens} tokens, got shape {ids.shape}"
            )
        x = T.embedding_lookup(store[self.prefix + "tok_embed"], ids)
        x = T.add(x, store[self.prefix + "pos_embed"])
        if training and cfg.dropout > 0.0:
            x = T.dropout(x, cfg.dropout, rng, training=True)
        return x

    def multi_head_self_attention(self, x: Tensor, store: ParamStore,
                                  layer: int) -> Tensor:
        """Concatenated per-head scaled dot-product attention, projected."""
        cfg = self.config
        lp = f"{self.prefix}l{layer}."
        scale = 1.0 / np.sqrt(cfg.head_dim)
        heads = []
        for head in range(cfg.n_heads):
            hp = f"{lp}h{head}."
            q = T.matmul(x, store[hp + "wq"])
            k = T.matmul(x, store[hp + "wk"])
            v = T.matmul(x, store[hp + "wv"])
            scores = T.scale(T.matmul(q, T.transpose(k)), scale)
            heads.append(T.matmul(T.softmax_rows(scores), v))
        concat = heads[0] if len(heads) == 1 else T.concat_cols(heads)
        return T.matmul(concat, store[lp + "wo"])

    def _layer(self, x: Tensor, store: ParamStore, layer: int) -> Tensor:
        """One stacked block: attention with residual norm, then an
        inner row-wise FFN block on intermediate layers."""
        lp = f"{self.prefix}l{layer}."
        h = T.layer_norm(
            T.add(x, self.multi_head_self_attention(x, store, layer)),
            store[lp + "ln1.gain"], store[lp + "ln1.bias"],
        )
        if layer < self.config.n_layers - 1:
            f = T.add(
                T.matmul(
                    T.relu(T.add(T.matmul(h, store[lp + "ffn.w1"]),
                                 store[lp + "ffn.b1"])),
                    store[lp + "ffn.w2"],
                ),
                store[lp + "ffn.b2"],
            )
            h = T.layer_norm(T.add(h, f),
                             store[lp + "ln2.gain"], store[lp + "ln2.bias"])
        return h

    def pool_ffn(self, z: Tensor, store: ParamStore) -> Tensor:
        """Column-mean over segment rows, then a two-layer ReLU net."""
        p = self.prefix
        zbar = T.mean_rows(z)
        hidden = T.relu(T.add(T.matmul(zbar, store[p + "pool.w1"]),
                              store[p + "pool.b1"]))
        return T.add(T.matmul(hidden, store[p + "pool.w2"]), store[p + "pool.b2"])

    def _cat_heads(self, store: ParamStore, layer_prefix: str,
                   mat: str) -> Tensor:
        """All heads' projection weights side by side: (in, heads*head_dim).

        The concatenation is a graph node, so its backward slices the
        gradient back onto each head's own parameter array; checkpoints
        keep the per-head layout.
        """
        return T.concat_cols([store[f"{layer_prefix}h{h}.{mat}"]
                              for h in range(self.config.n_heads)])

    def multi_head_self_attention_batch(self, x: Tensor, store: ParamStore,
                                        layer: int, batch: int) -> Tensor:
        """Per-clip attention over many clips at once.

        x holds ``batch`` clips' token rows stacked: (batch*max_tokens,
        embed_dim). Each clip attends only within its own rows; heads
        ride along as extra batch items of one batched matmul.
        """
        cfg = self.config
        lp = f"{self.prefix}l{layer}."
        rows, heads, dh = cfg.max_tokens, cfg.n_heads, cfg.head_dim
        scale = 1.0 / np.sqrt(dh)
        q = T.split_heads(T.matmul(x, self._cat_heads(store, lp, "wq")),
                          batch, rows, heads, dh)
        k = T.split_heads(T.matmul(x, self._cat_heads(store, lp, "wk")),
                          batch, rows, heads, dh)
        v = T.split_heads(T.matmul(x, self._cat_heads(store, lp, "wv")),
                          batch, rows, heads, dh)
        scores = T.scale(T.bmm(q, T.transpose_axes(k, (0, 2, 1))), scale)
        probs = T.reshape(
            T.softmax_rows(T.reshape(scores, (batch * heads * rows, rows))),
            (batch * heads, rows, rows))
        att = T.merge_heads(T.bmm(probs, v), batch, rows, heads, dh)
        return T.matmul(att, store[lp + "wo"])

    def _layer_batch(self, x: Tensor, store: ParamStore, layer: int,
                     batch: int) -> Tensor:
        lp = f"{self.prefix}l{layer}."
        h = T.layer_norm(
            T.add(x, self.multi_head_self_attention_batch(x, store, layer, batch)),
            store[lp + "ln1.gain"], store[lp + "ln1.bias"],
        )
        if layer < self.config.n_layers - 1:
            f = T.add(
                T.matmul(
                    T.relu(T.add(T.matmul(h, store[lp + "ffn.w1"]),
                                 store[lp + "ffn.b1"])),
                    store[lp + "ffn.w2"],
                ),
                store[lp + "ffn.b2"],
            )
            h = T.layer_norm(T.add(h, f),
                             store[lp + "ln2.gain"], store[lp + "ln2.bias"])
        return h

    def encode_clips_batch(self, token_rows, visuals, store: ParamStore, *,
                           training: bool = False, rng=None) -> Tensor:
        """Encode many clips in one graph: (n_clips, fused_dim).

        token_rows is (n_clips, max_tokens) int, visuals (n_clips,
        visual_dim). Row-wise ops (layer norm, feed-forward, pooling
        net) see the same per-row math as the one-clip path; attention
        and pooling stay block-local per clip, so outputs match
        encode_clip up to float summation order.
        """
        cfg = self.config
        tok = np.asarray(token_rows, dtype=np.int64)
        if tok.ndim != 2 or tok.shape[1] != cfg.max_tokens:
            raise ValueError(
                f"expected (n, {cfg.max_tokens}) token rows, got {tok.shape}"
            )
        vis = np.asarray(visuals, dtype=np.float64)
        if vis.shape != (tok.shape[0], cfg.visual_dim):
            raise ValueError(
                f"expected ({tok.shape[0]}, {cfg.visual_dim}) visual rows, "
                f"got {vis.shape}"
            )
        n, rows = tok.shape
        x = T.embedding_lookup(store[self.prefix + "tok_embed"], tok.reshape(-1))
        x = T.add(T.reshape(x, (n, rows, cfg.embed_dim)),
                  store[self.prefix + "pos_embed"])
        if training and cfg.dropout > 0.0:
            x = T.dropout(x, cfg.dropout, rng, training=True)
        x = T.reshape(x, (n * rows, cfg.embed_dim))
        for layer in range(cfg.n_layers):
            x = self._layer_batch(x, store, layer, n)
        zbar = T.mean_axis1(T.reshape(x, (n, rows, cfg.attn_dim)))
        p = self.prefix
        hidden = T.relu(T.add(T.matmul(zbar, store[p + "pool.w1"]),
                              store[p + "pool.b1"]))
        t = T.add(T.matmul(hidden, store[p + "pool.w2"]), store[p + "pool.b2"])
        return T.concat_cols([t, Tensor(vis)])

    def encode_clip(self, tokens, visual: np.ndarray, store: ParamStore, *,
                    training: bool = False, rng=None) -> tuple[Tensor, Tensor]:
        """Full clip pass. Returns (fused embedding 1 x fused_dim, summary
        t 1 x clip_dim). The visual vector joins as a constant, so no
        gradient ever reaches it."""
        cfg = self.config
        y = np.asarray(visual, dtype=np.float64).reshape(1, -1)
        if y.shape[1] != cfg.visual_dim:
            raise ValueError(
                f"visual feature dim {y.shape[1]} != configured {cfg.visual_dim}"
            )
        x = self.embed_segments(tokens, store, training=training, rng=rng)
        for layer in range(cfg.n_layers):
            x = self._layer(x, store, layer)
        t = self.pool_ffn(x, store)
        c = T.concat_cols([t, Tensor(y, requires_grad=False)])
        return c, t
