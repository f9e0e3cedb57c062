"""Clip encoder, video encoder, and visual provider behavior.

Attention oracles are hand computations in plain numpy, written against
the documented equations rather than the model code.
"""
import numpy as np
import pytest

from trajrep import tensor as T
from trajrep.clip_encoder import ClipEncoder, ClipEncoderConfig
from trajrep.data import Clip, Trajectory
from trajrep.errors import ConfigError, DataError
from trajrep.grid import FieldSpec
from trajrep.params import ParamStore
from trajrep.synth import GenConfig, generate_dataset
from trajrep.tensor import Tensor
from trajrep.video_encoder import VideoEncoder, VideoEncoderConfig
from trajrep.visual import (
    STAT_DIM,
    FileVisualProvider,
    StubVisualProvider,
    clip_statistics,
    save_visual_features,
)


def np_softmax(z):
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def small_clip_cfg(**over):
    base = dict(vocab_size=11, max_tokens=4, embed_dim=4, attn_dim=4,
                clip_dim=3, visual_dim=5, n_heads=1, n_layers=1, dropout=0.0)
    base.update(over)
    return ClipEncoderConfig(**base)


def build_clip(cfg, seed=0):
    enc = ClipEncoder(cfg)
    store = ParamStore()
    enc.init_params(store, np.random.default_rng(seed))
    return enc, store


class TestClipConfig:
    def test_defaults(self):
        cfg = ClipEncoderConfig(vocab_size=100)
        assert (cfg.max_tokens, cfg.embed_dim, cfg.attn_dim, cfg.clip_dim,
                cfg.visual_dim) == (16, 128, 128, 128, 512)
        assert (cfg.n_heads, cfg.n_layers, cfg.dropout) == (2, 2, 0.3)
        assert cfg.fused_dim == 640
        assert cfg.head_dim == 64

    def test_validation(self):
        with pytest.raises(ConfigError):
            ClipEncoderConfig(vocab_size=0)
        with pytest.raises(ConfigError):
            ClipEncoderConfig(vocab_size=5, embed_dim=6, attn_dim=6, n_heads=4)
        with pytest.raises(ConfigError):
            ClipEncoderConfig(vocab_size=5, embed_dim=8, attn_dim=16)
        with pytest.raises(ConfigError):
            ClipEncoderConfig(vocab_size=5, dropout=1.0)


class TestEmbedSegments:
    def test_zero_table_gives_positions(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg)
        store["clip.tok_embed"].data[:] = 0.0
        out = enc.embed_segments([1, 2, 3, 0], store)
        np.testing.assert_array_equal(out.data, store["clip.pos_embed"].data)

    def test_zero_positions_equal_tokens_equal_rows(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg)
        store["clip.pos_embed"].data[:] = 0.0
        out = enc.embed_segments([5, 7, 5, 5], store)
        np.testing.assert_array_equal(out.data[0], out.data[2])
        np.testing.assert_array_equal(out.data[0], out.data[3])
        assert not np.array_equal(out.data[0], out.data[1])

    def test_permuting_tokens_changes_rows(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg)
        a = enc.embed_segments([1, 2, 3, 4], store).data
        b = enc.embed_segments([4, 3, 2, 1], store).data
        assert np.abs(a - b).max() > 1e-6

    def test_token_count_and_range_checked(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg)
        with pytest.raises(ValueError):
            enc.embed_segments([1, 2, 3], store)
        with pytest.raises(ValueError):
            enc.embed_segments([1, 2, 3, 11], store)

    def test_dropout_only_in_training(self):
        cfg = small_clip_cfg(dropout=0.5)
        enc, store = build_clip(cfg)
        eval_a = enc.embed_segments([1, 2, 3, 4], store).data
        eval_b = enc.embed_segments([1, 2, 3, 4], store).data
        np.testing.assert_array_equal(eval_a, eval_b)
        rng = np.random.default_rng(0)
        train = enc.embed_segments([1, 2, 3, 4], store, training=True,
                                   rng=rng).data
        assert (train == 0.0).any()


class TestClipAttention:
    def test_hand_oracle_single_head(self):
        """2x4 input with hand-set weights against a scalar recomputation."""
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=3)
        rng = np.random.default_rng(42)
        x = rng.normal(size=(2, 4))
        wq = store["clip.l0.h0.wq"].data
        wk = store["clip.l0.h0.wk"].data
        wv = store["clip.l0.h0.wv"].data
        wo = store["clip.l0.wo"].data
        scores = (x @ wq) @ (x @ wk).T / np.sqrt(4.0)
        want = np_softmax(scores) @ (x @ wv) @ wo
        got = enc.multi_head_self_attention(Tensor(x), store, 0).data
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_two_heads_concat(self):
        cfg = small_clip_cfg(n_heads=2)
        enc, store = build_clip(cfg, seed=4)
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 4))
        outs = []
        for h in range(2):
            wq = store[f"clip.l0.h{h}.wq"].data
            wk = store[f"clip.l0.h{h}.wk"].data
            wv = store[f"clip.l0.h{h}.wv"].data
            scores = (x @ wq) @ (x @ wk).T / np.sqrt(2.0)
            outs.append(np_softmax(scores) @ (x @ wv))
        want = np.hstack(outs) @ store["clip.l0.wo"].data
        got = enc.multi_head_self_attention(Tensor(x), store, 0).data
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_single_row_attention_weight_is_one(self):
        cfg = small_clip_cfg(max_tokens=1)
        enc, store = build_clip(cfg, seed=5)
        x = np.array([[0.5, -1.0, 2.0, 0.25]])
        want = x @ store["clip.l0.h0.wv"].data @ store["clip.l0.wo"].data
        got = enc.multi_head_self_attention(Tensor(x), store, 0).data
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_identical_rows_identical_outputs(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=6)
        x = np.tile(np.array([[0.1, 0.2, -0.3, 0.4]]), (4, 1))
        out = enc.multi_head_self_attention(Tensor(x), store, 0).data
        for row in out[1:]:
            np.testing.assert_array_equal(out[0], row)

    def test_permutation_equivariance_without_positions(self):
        cfg = small_clip_cfg(n_layers=2, n_heads=2)
        enc, store = build_clip(cfg, seed=7)
        store["clip.pos_embed"].data[:] = 0.0
        perm = np.array([2, 0, 3, 1])
        tokens = np.array([1, 5, 8, 3])
        x = enc.embed_segments(tokens, store)
        xp = enc.embed_segments(tokens[perm], store)
        h, hp = x, xp
        for layer in range(cfg.n_layers):
            h = enc._layer(h, store, layer)
            hp = enc._layer(hp, store, layer)
        np.testing.assert_allclose(hp.data, h.data[perm], atol=1e-9)
        t = enc.pool_ffn(h, store).data
        tp = enc.pool_ffn(hp, store).data
        np.testing.assert_allclose(t, tp, atol=1e-9)


class TestPoolFfn:
    def test_zero_input_zero_biases(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=8)
        store["clip.pool.b1"].data[:] = 0.0
        store["clip.pool.b2"].data[:] = 0.0
        out = enc.pool_ffn(Tensor(np.zeros((4, 4))), store).data
        np.testing.assert_array_equal(out, np.zeros((1, 3)))

    def test_single_row_mean(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=9)
        z = np.array([[1.0, -2.0, 0.5, 3.0]])
        w1, b1 = store["clip.pool.w1"].data, store["clip.pool.b1"].data
        w2, b2 = store["clip.pool.w2"].data, store["clip.pool.b2"].data
        want = np.maximum(z @ w1 + b1, 0.0) @ w2 + b2
        got = enc.pool_ffn(Tensor(z), store).data
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_hand_oracle(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=10)
        rng = np.random.default_rng(2)
        z = rng.normal(size=(3, 4))
        zbar = z.mean(axis=0, keepdims=True)
        w1, b1 = store["clip.pool.w1"].data, store["clip.pool.b1"].data
        w2, b2 = store["clip.pool.w2"].data, store["clip.pool.b2"].data
        want = np.maximum(zbar @ w1 + b1, 0.0) @ w2 + b2
        got = enc.pool_ffn(Tensor(z), store).data
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestEncodeClip:
    def test_fused_layout(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=11)
        visual = np.arange(5, dtype=np.float64)
        c, t = enc.encode_clip([1, 2, 3, 4], visual, store)
        assert c.shape == (1, cfg.fused_dim)
        assert t.shape == (1, cfg.clip_dim)
        np.testing.assert_array_equal(c.data[0, :3], t.data[0])
        np.testing.assert_array_equal(c.data[0, 3:], visual)

    def test_zero_visual_tail(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=12)
        c, _ = enc.encode_clip([0, 0, 1, 2], np.zeros(5), store)
        np.testing.assert_array_equal(c.data[0, 3:], np.zeros(5))

    def test_deterministic(self):
        cfg = small_clip_cfg(n_layers=2, n_heads=2)
        enc, store = build_clip(cfg, seed=13)
        v = np.linspace(-1, 1, 5)
        a, _ = enc.encode_clip([3, 1, 4, 1], v, store)
        b, _ = enc.encode_clip([3, 1, 4, 1], v, store)
        np.testing.assert_array_equal(a.data, b.data)

    def test_all_pad_finite(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=14)
        c, _ = enc.encode_clip([0, 0, 0, 0], np.zeros(5), store)
        assert np.isfinite(c.data).all()

    def test_visual_dim_checked(self):
        cfg = small_clip_cfg()
        enc, store = build_clip(cfg, seed=15)
        with pytest.raises(ValueError):
            enc.encode_clip([1, 2, 3, 4], np.zeros(6), store)

    def test_gradients_reach_embeddings_not_visual(self):
        cfg = small_clip_cfg(n_layers=2)
        enc, store = build_clip(cfg, seed=16)
        visual = np.ones(5)
        c, _ = enc.encode_clip([1, 2, 3, 4], visual, store)
        T.backward(T.sum_all(c))
        assert store["clip.tok_embed"].grad is not None
        assert store["clip.pos_embed"].grad is not None
        assert store["clip.l1.wo"].grad is not None
        np.testing.assert_array_equal(visual, np.ones(5))


class TestVideoEncoder:
    @staticmethod
    def small_cfg(**over):
        base = dict(input_dim=6, enc_dims=(8, 8), out_dim=4, n_heads=2,
                    n_clips=3)
        base.update(over)
        return VideoEncoderConfig(**base)

    @staticmethod
    def build(cfg, seed=0):
        enc = VideoEncoder(cfg)
        store = ParamStore()
        enc.init_params(store, np.random.default_rng(seed))
        return enc, store

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            VideoEncoderConfig(out_dim=0)
        with pytest.raises(ConfigError):
            VideoEncoderConfig(enc_dims=())
        with pytest.raises(ConfigError):
            VideoEncoderConfig(enc_dims=(1281, 1280))
        with pytest.raises(ConfigError):
            VideoEncoderConfig(out_dim=127)

    def test_default_shapes(self):
        cfg = VideoEncoderConfig()
        assert cfg.input_dim == 640
        assert cfg.enc_dims == (1280, 1280)
        assert cfg.out_dim == 128
        assert (cfg.n_heads, cfg.n_clips) == (2, 16)

    def test_single_query_single_key(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=1)
        x = Tensor(np.random.default_rng(0).normal(size=(1, 6)))
        out = enc.attention_block(x, x, store, "enc0", 8)
        assert out.shape == (1, 8)
        assert np.isfinite(out.data).all()

    def test_duplicate_keys_renormalize(self):
        """Repeating the key rows leaves attention output unchanged."""
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=2)
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(2, 6)))
        y1 = rng.normal(size=(1, 6))
        y3 = np.tile(y1, (3, 1))
        a = enc.attention_block(x, Tensor(y1), store, "enc0", 8).data
        b = enc.attention_block(x, Tensor(y3), store, "enc0", 8).data
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_identical_query_rows(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=3)
        rng = np.random.default_rng(4)
        x = np.tile(rng.normal(size=(1, 6)), (4, 1))
        y = rng.normal(size=(3, 6))
        out = enc.attention_block(Tensor(x), Tensor(y), store, "enc0", 8).data
        for row in out[1:]:
            np.testing.assert_array_equal(out[0], row)

    def test_msb_is_mab_self(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=4)
        x = Tensor(np.random.default_rng(5).normal(size=(3, 6)))
        a = enc.self_attention_block(x, store, "enc0", 8).data
        b = enc.attention_block(x, x, store, "enc0", 8).data
        np.testing.assert_array_equal(a, b)

    def test_encoder_shapes_and_equivariance(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=5)
        rng = np.random.default_rng(6)
        c = rng.normal(size=(3, 6))
        e = enc.encode_video(Tensor(c), store)
        assert e.shape == (3, 8)
        perm = np.array([2, 0, 1])
        ep = enc.encode_video(Tensor(c[perm]), store)
        np.testing.assert_allclose(ep.data, e.data[perm], atol=1e-9)

    def test_identical_clip_rows(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=6)
        c = np.tile(np.random.default_rng(7).normal(size=(1, 6)), (3, 1))
        e = enc.encode_video(Tensor(c), store).data
        for row in e[1:]:
            np.testing.assert_array_equal(e[0], row)

    def test_decoder_fixed_dim_any_count(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=7)
        rng = np.random.default_rng(8)
        for n in (1, 2, 3, 6):
            v = enc.forward(Tensor(rng.normal(size=(n, 6))), store)
            assert v.shape == (1, 4)
            assert np.isfinite(v.data).all()

    def test_decode_permutation_invariance(self):
        cfg = self.small_cfg(n_clips=5)
        enc, store = self.build(cfg, seed=8)
        rng = np.random.default_rng(9)
        c = rng.normal(size=(5, 6))
        v = enc.forward(Tensor(c), store).data
        for seed in range(3):
            perm = np.random.default_rng(seed).permutation(5)
            vp = enc.forward(Tensor(c[perm]), store).data
            np.testing.assert_allclose(vp, v, atol=1e-9)

    def test_zero_encoded_rows_finite(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=9)
        v = enc.decode_video(Tensor(np.zeros((3, 8))), store)
        assert np.isfinite(v.data).all()

    def test_gradients_flow_to_seed_and_blocks(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=10)
        x = Tensor(np.random.default_rng(11).normal(size=(3, 6)))
        T.backward(T.sum_all(enc.forward(x, store)))
        assert store["video.seed"].grad is not None
        assert store["video.enc0.h0.wq"].grad is not None
        assert store["video.head.w2"].grad is not None

    def test_input_dim_checked(self):
        cfg = self.small_cfg()
        enc, store = self.build(cfg, seed=12)
        with pytest.raises(ValueError):
            enc.encode_video(Tensor(np.zeros((3, 7))), store)


def tiny_videos():
    return generate_dataset(GenConfig(
        n_videos=3, clips_per_video=2, segments_per_clip=2,
        players_per_clip=2, rng_seed=5))


class TestVisual:
    def test_statistics_shape_and_determinism(self):
        field = FieldSpec()
        videos = tiny_videos()
        clip = videos[0].clips[0]
        s1 = clip_statistics(clip, field)
        s2 = clip_statistics(clip, field)
        assert s1.shape == (STAT_DIM,)
        assert np.isfinite(s1).all()
        np.testing.assert_array_equal(s1, s2)

    def test_statistics_distinguish_clips(self):
        field = FieldSpec()
        videos = tiny_videos()
        a = clip_statistics(videos[0].clips[0], field)
        b = clip_statistics(videos[1].clips[1], field)
        assert np.abs(a - b).max() > 1e-9

    def test_stub_provider(self):
        videos = tiny_videos()
        prov = StubVisualProvider(dim=16, seed=1).fit(videos, FieldSpec())
        cid = videos[0].clips[0].clip_id
        v1 = prov.vector_for(cid)
        v2 = prov.vector_for(cid)
        assert v1.shape == (16,)
        np.testing.assert_array_equal(v1, v2)
        assert len(prov.known_ids()) == 6
        with pytest.raises(DataError):
            prov.vector_for("nope")
        prov_b = StubVisualProvider(dim=16, seed=1).fit(videos, FieldSpec())
        np.testing.assert_array_equal(v1, prov_b.vector_for(cid))

    def test_file_provider_roundtrip(self, tmp_path):
        videos = tiny_videos()
        prov = StubVisualProvider(dim=8, seed=2).fit(videos, FieldSpec())
        path = tmp_path / "vis.jsonl"
        save_visual_features(prov, path)
        loaded = FileVisualProvider(path)
        assert loaded.dim == 8
        assert sorted(loaded.known_ids()) == sorted(prov.known_ids())
        for cid in prov.known_ids():
            np.testing.assert_array_equal(loaded.vector_for(cid),
                                          prov.vector_for(cid))

    def test_file_provider_errors(self, tmp_path):
        with pytest.raises(DataError):
            FileVisualProvider(tmp_path / "missing.jsonl")
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"clip_id": "a"}\n')
        with pytest.raises(DataError):
            FileVisualProvider(bad)
        ragged = tmp_path / "ragged.jsonl"
        ragged.write_text(
            '{"clip_id": "a", "vec": [1.0, 2.0]}\n'
            '{"clip_id": "b", "vec": [1.0]}\n'
        )
        with pytest.raises(DataError):
            FileVisualProvider(ragged)
        dup = tmp_path / "dup.jsonl"
        dup.write_text(
            '{"clip_id": "a", "vec": [1.0]}\n'
            '{"clip_id": "a", "vec": [2.0]}\n'
        )
        with pytest.raises(DataError):
            FileVisualProvider(dup)


class TestBatchedPaths:
    """The batched encoders must agree with the per-item paths: same
    math, only float summation order may differ."""

    def _stack(self, seed=0):
        rng = np.random.default_rng(seed)
        ccfg = small_clip_cfg(vocab_size=11, max_tokens=5, clip_dim=6,
                              visual_dim=4, embed_dim=8, attn_dim=8,
                              n_heads=2, n_layers=2)
        vcfg = VideoEncoderConfig(input_dim=ccfg.fused_dim, enc_dims=(12,),
                                  out_dim=8, n_heads=2, n_clips=3)
        store = ParamStore()
        ce, ve = ClipEncoder(ccfg), VideoEncoder(vcfg)
        ce.init_params(store, rng)
        ve.init_params(store, rng)
        tok = rng.integers(0, ccfg.vocab_size, size=(6, ccfg.max_tokens))
        vis = rng.normal(size=(6, ccfg.visual_dim))
        return store, ce, ve, tok, vis

    def test_clip_batch_matches_single_encodes(self):
        store, ce, ve, tok, vis = self._stack()
        singles = np.vstack([ce.encode_clip(tok[i], vis[i], store)[0].data
                             for i in range(6)])
        batched = ce.encode_clips_batch(tok, vis, store).data
        assert batched.shape == singles.shape
        assert np.allclose(batched, singles, rtol=0, atol=1e-12)

    def test_video_batch_matches_single_forwards(self):
        store, ce, ve, tok, vis = self._stack()
        rows = np.vstack([ce.encode_clip(tok[i], vis[i], store)[0].data
                          for i in range(6)])
        singles = np.vstack([
            ve.forward(Tensor(rows[b * 3:(b + 1) * 3]), store).data
            for b in range(2)
        ])
        batched = ve.forward_batch(Tensor(rows), store, 2).data
        assert batched.shape == (2, 8)
        assert np.allclose(batched, singles, rtol=0, atol=1e-12)

    def test_batched_gradients_match_per_item_graphs(self):
        store, ce, ve, tok, vis = self._stack()

        def grads_of(build):
            store.zero_grads()
            T.backward(T.sum_all(build()))
            out = {k: t.grad.copy() for k, t in store.items()
                   if t.grad is not None}
            store.zero_grads()
            return out

        def batched():
            return ve.forward_batch(
                ce.encode_clips_batch(tok, vis, store), store, 2)

        def per_item():
            parts = []
            for b in range(2):
                clips = [ce.encode_clip(tok[b * 3 + i], vis[b * 3 + i],
                                        store)[0] for i in range(3)]
                parts.append(ve.forward(T.concat_rows(clips), store))
            return T.concat_rows(parts)

        gb, gs = grads_of(batched), grads_of(per_item)
        assert set(gb) == set(gs)
        for name, g in gb.items():
            ref = np.max(np.abs(gs[name])) or 1.0
            assert np.max(np.abs(g - gs[name])) / ref < 1e-9, name

    def test_batched_finite_differences(self):
        from trajrep.params import grad_check
        store, ce, ve, tok, vis = self._stack()
        # keep every gradient above the finite-difference noise floor;
        # production-scale tables leave early-layer grads near 1e-9
        store["clip.tok_embed"].data *= 25.0
        store["clip.pos_embed"].data *= 25.0

        def loss():
            out = ve.forward_batch(
                ce.encode_clips_batch(tok, vis, store), store, 2)
            return T.mean_all(out)

        report = grad_check(loss, store)
        assert report.max_rel_error < 1e-4, report.worst

    def test_clip_batch_input_validation(self):
        store, ce, ve, tok, vis = self._stack()
        with pytest.raises(ValueError):
            ce.encode_clips_batch(tok[:, :3], vis, store)
        with pytest.raises(ValueError):
            ce.encode_clips_batch(tok, vis[:, :2], store)
        with pytest.raises(ValueError):
            ce.encode_clips_batch(tok[:4], vis, store)

    def test_video_batch_input_validation(self):
        store, ce, ve, tok, vis = self._stack()
        rows = ce.encode_clips_batch(tok, vis, store)
        with pytest.raises(ValueError):
            ve.forward_batch(rows, store, 3)  # 6 rows != 3 videos x 3 clips

    def test_video_batch_clip_permutation_invariance(self):
        store, ce, ve, tok, vis = self._stack()
        rows = ce.encode_clips_batch(tok, vis, store).data
        base = ve.forward_batch(Tensor(rows), store, 2).data
        rng = np.random.default_rng(3)
        for _ in range(5):
            shuffled = rows.copy()
            for b in range(2):
                idx = rng.permutation(3)
                shuffled[b * 3:(b + 1) * 3] = rows[b * 3:(b + 1) * 3][idx]
            out = ve.forward_batch(Tensor(shuffled), store, 2).data
            assert np.max(np.abs(out - base)) < 1e-9

    def test_batched_dropout_deterministic_per_seed(self):
        store, ce, ve, tok, vis = self._stack()
        cfg = small_clip_cfg(vocab_size=11, max_tokens=5, clip_dim=6,
                             visual_dim=4, embed_dim=8, attn_dim=8,
                             n_heads=2, n_layers=2, dropout=0.4)
        ce_drop = ClipEncoder(cfg)
        a = ce_drop.encode_clips_batch(
            tok, vis, store, training=True, rng=np.random.default_rng(9)).data
        b = ce_drop.encode_clips_batch(
            tok, vis, store, training=True, rng=np.random.default_rng(9)).data
        c = ce_drop.encode_clips_batch(
            tok, vis, store, training=True, rng=np.random.default_rng(10)).data
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
