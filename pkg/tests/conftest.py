"""Shared fixtures: a small end-to-end pipeline for integration tests."""
from types import SimpleNamespace

import numpy as np
import pytest

from trajrep.clip_encoder import ClipEncoder, ClipEncoderConfig
from trajrep.grid import segment_clip
from trajrep.embedder import VideoEmbedder
from trajrep.params import ParamStore
from trajrep.synth import GenConfig, build_pool, generate_dataset
from trajrep.video_encoder import VideoEncoder, VideoEncoderConfig
from trajrep.visual import StubVisualProvider
from trajrep.vocab import build_vocabulary


def build_tiny_pipeline(n_videos=10, seed=0, threshold=0.3, dropout=0.0):
    """A complete small pipeline: dataset, vocabulary, embedder, pool."""
    gen_cfg = GenConfig(
        n_videos=n_videos, clips_per_video=4, segments_per_clip=4,
        players_per_clip=2, rng_seed=seed,
    )
    videos = generate_dataset(gen_cfg)
    field = gen_cfg.field
    mats = []
    for v in videos:
        for clip in v.clips:
            mats.extend(segment_clip(clip.tracks, field, 1.0, 4, True))
    vocab = build_vocabulary(mats, threshold)
    clip_cfg = ClipEncoderConfig(
        vocab_size=len(vocab), max_tokens=4, embed_dim=8, attn_dim=8,
        clip_dim=8, visual_dim=8, n_heads=2, n_layers=1, dropout=dropout,
    )
    video_cfg = VideoEncoderConfig(
        input_dim=clip_cfg.fused_dim, enc_dims=(16,), out_dim=8,
        n_heads=2, n_clips=4,
    )
    store = ParamStore()
    rng = np.random.default_rng(seed)
    clip_enc = ClipEncoder(clip_cfg)
    video_enc = VideoEncoder(video_cfg)
    clip_enc.init_params(store, rng)
    video_enc.init_params(store, rng)
    provider = StubVisualProvider(dim=8, seed=0).fit(videos, field)
    embedder = VideoEmbedder(vocab, clip_enc, video_enc, store, provider,
                             field=field, segment_len=1.0, connect=True)
    return SimpleNamespace(
        videos=videos, vocab=vocab, embedder=embedder,
        pool=build_pool(videos), field=field, gen_cfg=gen_cfg,
        clip_cfg=clip_cfg, video_cfg=video_cfg, store=store,
        provider=provider,
    )


@pytest.fixture
def tiny_pipeline():
    return build_tiny_pipeline
