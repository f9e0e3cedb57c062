"""Video-level set encoder and seed-query decoder.

A video is a bag of clip embeddings. Two stacked self-attention blocks
encode the bag; a decoder attends a single trainable seed row over the
encoded rows and reduces to one fixed-size vector. No positional terms
appear anywhere, so the video embedding is invariant to clip order.

Each attention block follows the same recipe: multi-head attention of
queries X over keys/values Y, a residual add (with a learned projection
when the query dim differs from the block dim), post-add layer norm,
then a row-wise one-hidden-layer ReLU network with its own residual
norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .params import ParamStore
from .tensor import Tensor


@dataclass(frozen=True)
class VideoEncoderConfig:
    input_dim: int = 640
    enc_dims: tuple[int, ...] = (1280, 1280)
    out_dim: int = 128
    n_heads: int = 2
    n_clips: int = 16

    def __post_init__(self) -> None:
        dims = (self.input_dim, self.out_dim, *self.enc_dims)
        if any(d < 1 for d in dims):
            raise ConfigError("all dims must be positive")
        if self.n_heads < 1 or self.n_clips < 1:
            raise ConfigError("n_heads and n_clips must be positive")
        if len(self.enc_dims) < 1:
            raise ConfigError("need at least one encoder block dim")
        for d in (*self.enc_dims, self.out_dim):
            if d % self.n_heads != 0:
                raise ConfigError(
                    f"n_heads={self.n_heads} must divide every block dim, got {d}"
                )


class VideoEncoder:
    """Stateless forward logic; parameters live in a ParamStore."""

    def __init__(self, config: VideoEncoderConfig, prefix: str = "video.") -> None:
        self.config = config
        self.prefix = prefix

    def _init_block(self, store: ParamStore, rng, name: str,
                    dx: int, dy: int, dout: int) -> None:
        p = f"{self.prefix}{name}."
        dh = dout // self.config.n_heads

        def w(suffix, shape, fan_in):
            store.add(p + suffix, rng.normal(0.0, 1.0 / np.sqrt(fan_in), shape))

        for head in range(self.config.n_heads):
            w(f"h{head}.wq", (dx, dh), dx)
            w(f"h{head}.wk", (dy, dh), dy)
            w(f"h{head}.wv", (dy, dh), dy)
        w("wo", (dout, dout), dout)
        if dx != dout:
            w("proj", (dx, dout), dx)
        store.add(p + "ln1.gain", np.ones((1, dout)))
        store.add(p + "ln1.bias", np.zeros((1, dout)))
        w("ffn.w1", (dout, dout), dout)
        store.add(p + "ffn.b1", np.zeros((1, dout)))
        w("ffn.w2", (dout, dout), dout)
        store.add(p + "ffn.b2", np.zeros((1, dout)))
        store.add(p + "ln2.gain", np.ones((1, dout)))
        store.add(p + "ln2.bias", np.zeros((1, dout)))

    def init_params(self, store: ParamStore, rng: np.random.Generator) -> None:
        cfg = self.config
        dx = cfg.input_dim
        for i, dout in enumerate(cfg.enc_dims):
            self._init_block(store, rng, f"enc{i}", dx, dx, dout)
            dx = dout
        store.add(self.prefix + "seed",
                  rng.normal(0.0, 1.0 / np.sqrt(cfg.out_dim), (1, cfg.out_dim)))
        self._init_block(store, rng, "dec0", cfg.out_dim, cfg.enc_dims[-1], cfg.out_dim)
        self._init_block(store, rng, "dec1", cfg.out_dim, cfg.out_dim, cfg.out_dim)
        d = cfg.out_dim
        store.add(self.prefix + "head.w1", rng.normal(0.0, 1.0 / np.sqrt(d), (d, d)))
        store.add(self.prefix + "head.b1", np.zeros((1, d)))
        store.add(self.prefix + "head.w2", rng.normal(0.0, 1.0 / np.sqrt(d), (d, d)))
        store.add(self.prefix + "head.b2", np.zeros((1, d)))

    def _rff(self, x: Tensor, store: ParamStore, p: str) -> Tensor:
        hidden = T.relu(T.add(T.matmul(x, store[p + "w1"]), store[p + "b1"]))
        return T.add(T.matmul(hidden, store[p + "w2"]), store[p + "b2"])

    def attention_block(self, x: Tensor, y: Tensor, store: ParamStore,
                        name: str, dout: int) -> Tensor:
        """Queries x attend over rows of y; residual-normed output."""
        p = f"{self.prefix}{name}."
        dh = dout // self.config.n_heads
        scale = 1.0 / np.sqrt(dh)
        heads = []
        for head in range(self.config.n_heads):
            hp = f"{p}h{head}."
            q = T.matmul(x, store[hp + "wq"])
            k = T.matmul(y, store[hp + "wk"])
            v = T.matmul(y, store[hp + "wv"])
            scores = T.scale(T.matmul(q, T.transpose(k)), scale)
            heads.append(T.matmul(T.softmax_rows(scores), v))
        concat = heads[0] if len(heads) == 1 else T.concat_cols(heads)
        attended = T.matmul(concat, store[p + "wo"])
        res = T.matmul(x, store[p + "proj"]) if (p + "proj") in store else x
        h = T.layer_norm(T.add(res, attended),
                         store[p + "ln1.gain"], store[p + "ln1.bias"])
        out = T.add(h, self._rff(h, store, p + "ffn."))
        return T.layer_norm(out, store[p + "ln2.gain"], store[p + "ln2.bias"])

    def self_attention_block(self, x: Tensor, store: ParamStore,
                             name: str, dout: int) -> Tensor:
        return self.attention_block(x, x, store, name, dout)

    def encode_video(self, clips: Tensor, store: ParamStore) -> Tensor:
        """Stacked self-attention over the clip rows."""
        cfg = self.config
        if clips.shape[1] != cfg.input_dim:
            raise ValueError(
                f"clip rows have dim {clips.shape[1]}, expected {cfg.input_dim}"
            )
        x = clips
        for i, dout in enumerate(cfg.enc_dims):
            x = self.self_attention_block(x, store, f"enc{i}", dout)
        return x

    def decode_video(self, encoded: Tensor, store: ParamStore) -> Tensor:
        """Seed-query reduction of the encoded rows to one 1 x out_dim row."""
        cfg = self.config
        x = self.attention_block(store[self.prefix + "seed"], encoded,
                                 store, "dec0", cfg.out_dim)
        x = self.self_attention_block(x, store, "dec1", cfg.out_dim)
        return self._rff(x, store, self.prefix + "head.")

    def forward(self, clips: Tensor, store: ParamStore) -> Tensor:
        return self.decode_video(self.encode_video(clips, store), store)

    def _cat_heads(self, store: ParamStore, block_prefix: str,
                   mat: str) -> Tensor:
        """All heads' projection weights side by side: (in, heads*head_dim).

        A graph-level concatenation: backward slices the gradient back
        onto each head's own array, keeping the per-head checkpoint
        layout while the projection runs as one matmul.
        """
        return T.concat_cols([store[f"{block_prefix}h{h}.{mat}"]
                              for h in range(self.config.n_heads)])

    def attention_block_batch(self, x: Tensor, y: Tensor, store: ParamStore,
                              name: str, dout: int, batch: int,
                              nx: int, ny: int) -> Tensor:
        """attention_block over ``batch`` independent items at once.

        x stacks each item's query rows: (batch*nx, dx); y stacks its
        key/value rows: (batch*ny, dy). Item boundaries stay sealed —
        queries of one item never attend into another — because heads
        and items form the leading bmm axis.
        """
        p = f"{self.prefix}{name}."
        heads = self.config.n_heads
        dh = dout // heads
        scale = 1.0 / np.sqrt(dh)
        q = T.split_heads(T.matmul(x, self._cat_heads(store, p, "wq")),
                          batch, nx, heads, dh)
        k = T.split_heads(T.matmul(y, self._cat_heads(store, p, "wk")),
                          batch, ny, heads, dh)
        v = T.split_heads(T.matmul(y, self._cat_heads(store, p, "wv")),
                          batch, ny, heads, dh)
        scores = T.scale(T.bmm(q, T.transpose_axes(k, (0, 2, 1))), scale)
        probs = T.reshape(
            T.softmax_rows(T.reshape(scores, (batch * heads * nx, ny))),
            (batch * heads, nx, ny))
        att = T.merge_heads(T.bmm(probs, v), batch, nx, heads, dh)
        attended = T.matmul(att, store[p + "wo"])
        res = T.matmul(x, store[p + "proj"]) if (p + "proj") in store else x
        h = T.layer_norm(T.add(res, attended),
                         store[p + "ln1.gain"], store[p + "ln1.bias"])
        out = T.add(h, self._rff(h, store, p + "ffn."))
        return T.layer_norm(out, store[p + "ln2.gain"], store[p + "ln2.bias"])

    def forward_batch(self, clip_rows: Tensor, store: ParamStore,
                      batch: int) -> Tensor:
        """Encode+decode ``batch`` videos in one graph: (batch, out_dim).

        clip_rows stacks every video's clip embeddings in video order:
        (batch*n_clips, input_dim). Matches per-video forward up to
        float summation order.
        """
        cfg = self.config
        n = cfg.n_clips
        if clip_rows.shape != (batch * n, cfg.input_dim):
            raise ValueError(
                f"clip rows have shape {clip_rows.shape}, expected "
                f"({batch * n}, {cfg.input_dim})"
            )
        x = clip_rows
        for i, dout in enumerate(cfg.enc_dims):
            x = self.attention_block_batch(x, x, store, f"enc{i}", dout,
                                           batch, n, n)
        seeds = T.tile_rows(store[self.prefix + "seed"], batch)
        z = self.attention_block_batch(seeds, x, store, "dec0", cfg.out_dim,
                                       batch, 1, n)
        z = self.attention_block_batch(z, z, store, "dec1", cfg.out_dim,
                                       batch, 1, 1)
        return self._rff(z, store, self.prefix + "head.")
