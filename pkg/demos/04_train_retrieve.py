# Contrastive training and corrupt-and-retrieve evaluation, in miniature
#
# The full pipeline at toy scale: synthesize a few dozen videos, build
# the vocabulary, train the encoders with the triple contrastive
# objective for a handful of epochs, then measure whether corrupted
# copies of held-out videos still retrieve their originals.
#
# Runs in about a minute. The acceptance-scale run (200 videos, default
# dimensions) follows exactly this script, only bigger.

import numpy as np

from trajrep import (
    ClipEncoder,
    ClipEncoderConfig,
    GenConfig,
    ParamStore,
    StubVisualProvider,
    TrainConfig,
    VideoEmbedder,
    VideoEncoder,
    VideoEncoderConfig,
    build_pool,
    build_vocabulary,
    evaluate_retrieval,
    generate_dataset,
    segment_clip,
    split_dataset,
    train,
)

gen = GenConfig(n_videos=30, clips_per_video=6, segments_per_clip=6,
                players_per_clip=3, rng_seed=1)
videos = generate_dataset(gen)
train_ids, test_ids = split_dataset(videos, 0.8, seed=1)
by_id = {v.video_id: v for v in videos}
train_videos = [by_id[i] for i in train_ids]
test_videos = [by_id[i] for i in test_ids]
print(f"{len(train_videos)} training videos, {len(test_videos)} held out")

mats = []
for v in train_videos:
    for clip in v.clips:
        mats.extend(segment_clip(clip.tracks, gen.field, 1.0, 6, True))
vocab = build_vocabulary(mats, threshold=0.3)
print(f"vocabulary: {len(vocab)} tokens from {len(mats)} windows")

clip_cfg = ClipEncoderConfig(
    vocab_size=len(vocab), max_tokens=6, embed_dim=32, attn_dim=32,
    clip_dim=32, visual_dim=32, n_heads=2, n_layers=2, dropout=0.1)
video_cfg = VideoEncoderConfig(
    input_dim=clip_cfg.fused_dim, enc_dims=(64, 64), out_dim=32,
    n_heads=2, n_clips=6)
store = ParamStore()
rng = np.random.default_rng(1)
clip_enc = ClipEncoder(clip_cfg)
video_enc = VideoEncoder(video_cfg)
clip_enc.init_params(store, rng)
video_enc.init_params(store, rng)
provider = StubVisualProvider(dim=32, seed=0).fit(videos, gen.field)
embedder = VideoEmbedder(vocab, clip_enc, video_enc, store, provider,
                         field=gen.field)
print(f"model: {store.n_scalars():,} parameters")

# Score the untrained model first so the training effect is visible.
test_pool = build_pool(test_videos)
before = evaluate_retrieval(embedder, test_videos, [0.5], test_pool, seed=0)

cfg = TrainConfig(epochs=8, batch_size=8, lr=0.05, patience=8, seed=1)
result = train(embedder, train_videos, test_videos, build_pool(train_videos),
               cfg, on_epoch=lambda e, tr, va:
               print(f"epoch {e}: train {tr:.4f}  val {va:.4f}"))

embedder.store.load_arrays(result.best_params)
after = evaluate_retrieval(embedder, test_videos, [0.0, 0.5], test_pool,
                           seed=0, checkpoint_id="demo")

b = before.per_delta[0.5]
a = after.per_delta[0.5]
print(f"\nretrieval with half of every video replaced (delta 0.5):")
print(f"  untrained  HR@1 {b.hr_at_1:.2f}  MRR {b.mrr:.2f}")
print(f"  trained    HR@1 {a.hr_at_1:.2f}  MRR {a.mrr:.2f}")
clean = after.per_delta[0.0]
print(f"uncorrupted queries: HR@1 {clean.hr_at_1:.2f} (must be exact)")
