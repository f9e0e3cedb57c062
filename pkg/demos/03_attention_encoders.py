# Structure of the two encoders
#
# The clip encoder reads a window-token sequence plus a frozen visual
# vector and emits one fused row per clip. The video encoder runs set
# attention over those rows and decodes a single embedding. Two
# properties matter downstream and are shown here directly:
#
#   1. token order information enters ONLY through the positional
#      table: zero it and the clip encoder treats windows as a set;
#   2. the video encoder has no positional terms at all, so clip order
#      never changes the video embedding.

import numpy as np

from trajrep import (
    ClipEncoder,
    ClipEncoderConfig,
    ParamStore,
    VideoEncoder,
    VideoEncoderConfig,
)
from trajrep import tensor as T

rng = np.random.default_rng(3)

clip_cfg = ClipEncoderConfig(
    vocab_size=30, max_tokens=6, embed_dim=16, attn_dim=16, clip_dim=8,
    visual_dim=4, n_heads=2, n_layers=2, dropout=0.0)
video_cfg = VideoEncoderConfig(
    input_dim=clip_cfg.fused_dim, enc_dims=(24,), out_dim=8,
    n_heads=2, n_clips=5)

store = ParamStore()
clip_enc = ClipEncoder(clip_cfg)
video_enc = VideoEncoder(video_cfg)
clip_enc.init_params(store, rng)
video_enc.init_params(store, rng)

tokens = rng.integers(1, 30, size=6)
visual = rng.normal(size=4)
fused, pooled = clip_enc.encode_clip(tokens, visual, store)
print(f"one clip -> fused row {fused.data.shape} "
      f"(= pooled {pooled.data.shape[1]} + visual {clip_cfg.visual_dim})")

# With the positional table zeroed, shuffling the tokens must not move
# the pooled vector: attention and mean-pooling are order-free.
store["clip.pos_embed"].data[:] = 0.0
_, base = clip_enc.encode_clip(tokens, visual, store)
worst = 0.0
for _ in range(5):
    perm = rng.permutation(6)
    _, moved = clip_enc.encode_clip(tokens[perm], visual, store)
    worst = max(worst, float(np.abs(moved.data - base.data).max()))
print(f"max shift under token shuffles, positions zeroed: {worst:.2e}")

# Restore a random positional table and the same shuffle is visible.
store["clip.pos_embed"].data[:] = rng.normal(size=(6, 16)) * 0.5
_, base = clip_enc.encode_clip(tokens, visual, store)
_, moved = clip_enc.encode_clip(tokens[rng.permutation(6)], visual, store)
print(f"with a nonzero table:                       "
      f"{np.abs(moved.data - base.data).max():.2e}")

# The video encoder is a set function over clip rows by construction.
rows = rng.normal(size=(5, clip_cfg.fused_dim))
out = video_enc.forward(T.Tensor(rows), store)
shuffled = video_enc.forward(T.Tensor(rows[rng.permutation(5)]), store)
print(f"\nvideo embedding shape {out.data.shape}; shift under clip "
      f"shuffle: {np.abs(out.data - shuffled.data).max():.2e}")
