"""End-to-end pipeline from raw videos to fixed-size embeddings.

The embedder owns the glue: rasterize each trajectory into per-window
grids, OR them per clip, map windows to vocabulary tokens, encode each
clip (with its frozen visual feature), stack the clip rows, and run the
video-level encoder-decoder.

Two caches keep variant-heavy training cheap. Per-trajectory window
masks live in a WeakKeyDictionary keyed by trajectory object, so a
variant that reuses most of a clip's trajectory objects re-rasterizes
only the replaced ones. Clip token sequences are cached by clip id and
revalidated by trajectory identity, so an intra-clip variant (same id,
different tracks) recomputes without clobbering the original's entry.
"""
from __future__ import annotations

import weakref

import numpy as np

from . import tensor as T
from .clip_encoder import ClipEncoder
from .errors import ConfigError
from .grid import FieldSpec, trajectory_window_bits
from .params import ParamStore
from .tensor import Tensor
from .video_encoder import VideoEncoder
from .vocab import TokenVocabulary


class VideoEmbedder:
    def __init__(
        self,
        vocab: TokenVocabulary,
        clip_encoder: ClipEncoder,
        video_encoder: VideoEncoder,
        store: ParamStore,
        visual_provider,
        field: FieldSpec | None = None,
        segment_len: float = 1.0,
        connect: bool = True,
    ) -> None:
        field = field if field is not None else FieldSpec()
        ccfg = clip_encoder.config
        vcfg = video_encoder.config
        if (vocab.grid_h, vocab.grid_w) != (field.grid_h, field.grid_w):
            raise ConfigError(
                f"vocabulary grid {vocab.grid_h}x{vocab.grid_w} does not match "
                f"field grid {field.grid_h}x{field.grid_w}"
            )
        if len(vocab) > ccfg.vocab_size:
            raise ConfigError(
                f"vocabulary has {len(vocab)} tokens but the clip encoder "
                f"table holds {ccfg.vocab_size}"
            )
        if ccfg.fused_dim != vcfg.input_dim:
            raise ConfigError(
                f"clip embedding dim {ccfg.fused_dim} does not match video "
                f"encoder input dim {vcfg.input_dim}"
            )
        prov_dim = getattr(visual_provider, "dim", None)
        if prov_dim is not None and prov_dim != ccfg.visual_dim:
            raise ConfigError(
                f"visual provider dim {prov_dim} does not match configured "
                f"visual dim {ccfg.visual_dim}"
            )
        if segment_len <= 0:
            raise ConfigError("segment_len must be positive")
        self.vocab = vocab
        self.clip_encoder = clip_encoder
        self.video_encoder = video_encoder
        self.store = store
        self.visual_provider = visual_provider
        self.field = field
        self.segment_len = float(segment_len)
        self.connect = connect
        self._traj_masks = weakref.WeakKeyDictionary()
        self._clip_tokens: dict[str, tuple[tuple, np.ndarray]] = {}
        # variant clips recur (fixed validation seeds, shared donor pool);
        # keyed by track identity, values hold strong refs so ids stay valid
        self._variant_tokens: dict[tuple, tuple[tuple, np.ndarray]] = {}

    def _mask_for(self, traj) -> np.ndarray:
        mask = self._traj_masks.get(traj)
        if mask is None:
            mask = trajectory_window_bits(
                traj.points, self.field, self.segment_len,
                self.clip_encoder.config.max_tokens, self.connect,
            )
            self._traj_masks[traj] = mask
        return mask

    @staticmethod
    def _same_tracks(cached_tracks, tracks) -> bool:
        return (len(cached_tracks) == len(tracks)
                and all(a is b for a, b in zip(cached_tracks, tracks)))

    def clip_tokens(self, clip) -> np.ndarray:
        """Vocabulary token ids for one clip's segment windows."""
        cached = self._clip_tokens.get(clip.clip_id)
        if cached is not None and self._same_tracks(cached[0], clip.tracks):
            return cached[1]
        vkey = (clip.clip_id, tuple(id(tr) for tr in clip.tracks))
        vcached = self._variant_tokens.get(vkey)
        if vcached is not None and self._same_tracks(vcached[0], clip.tracks):
            return vcached[1]
        acc = np.zeros(
            (self.clip_encoder.config.max_tokens,
             self.field.grid_h, self.field.grid_w),
            dtype=bool,
        )
        for tr in clip.tracks:
            acc |= self._mask_for(tr)
        tokens = self.vocab.tokens_of_stack(acc)
        tokens.setflags(write=False)
        if cached is None:
            self._clip_tokens[clip.clip_id] = (tuple(clip.tracks), tokens)
        else:
            if len(self._variant_tokens) >= 200_000:
                self._variant_tokens.clear()
            self._variant_tokens[vkey] = (tuple(clip.tracks), tokens)
        return tokens

    def select_clips(self, clips: list, rng=None) -> list:
        """Normalize a video to exactly n clips.

        Short videos repeat cyclically. Long videos contribute one
        contiguous window: uniformly placed when an rng is given
        (training), the prefix otherwise.
        """
        n = self.video_encoder.config.n_clips
        if len(clips) == n:
            return list(clips)
        if len(clips) < n:
            return [clips[i % len(clips)] for i in range(n)]
        start = int(rng.integers(0, len(clips) - n + 1)) if rng is not None else 0
        return list(clips[start:start + n])

    def encode_video_graph(self, video, *, training: bool = False,
                           rng=None, clip_tensor_cache=None) -> Tensor:
        """Differentiable forward pass for one video, shape 1 x out_dim.

        clip_tensor_cache, when given, shares encoded-clip graph nodes
        across the videos of one batch: an inter-clip variant keeps most
        of the original's clip objects, and reusing their tensors merges
        the duplicate subgraphs (gradients still accumulate through
        every use). Entries hold the clip object itself, so identity
        keys cannot go stale within the batch.
        """
        clips = self.select_clips(video.clips, rng if training else None)
        rows = []
        for clip in clips:
            if clip_tensor_cache is not None:
                hit = clip_tensor_cache.get(id(clip))
                if hit is not None and hit[0] is clip:
                    rows.append(hit[1])
                    continue
            tokens = self.clip_tokens(clip)
            visual = self.visual_provider.vector_for(clip.clip_id)
            c, _ = self.clip_encoder.encode_clip(
                tokens, visual, self.store, training=training, rng=rng)
            if clip_tensor_cache is not None:
                clip_tensor_cache[id(clip)] = (clip, c)
            rows.append(c)
        stacked = T.concat_rows(rows)
        return self.video_encoder.forward(stacked, self.store)

    def encode_videos_graph_batch(self, videos, *, training: bool = False,
                                  rng=None) -> Tensor:
        """Differentiable pass over many videos: (len(videos), out_dim).

        Every distinct clip object across the batch is encoded exactly
        once — a variant video that kept most of its original's clip
        objects shares those encodings, and the shared rows feed both
        videos' graphs (gradients accumulate through every use). Each
        video then gathers its clip rows from the shared table.
        """
        if not videos:
            raise ValueError("encode_videos_graph_batch needs at least one video")
        index_of: dict[int, int] = {}
        order: list = []
        gather: list[int] = []
        for video in videos:
            for clip in self.select_clips(video.clips,
                                          rng if training else None):
                key = id(clip)
                at = index_of.get(key)
                if at is None:  # holding refs in `order` keeps ids unique
                    at = len(order)
                    index_of[key] = at
                    order.append(clip)
                gather.append(at)
        tokens = np.stack([self.clip_tokens(c) for c in order])
        visuals = np.stack(
            [self.visual_provider.vector_for(c.clip_id) for c in order])
        table = self.clip_encoder.encode_clips_batch(
            tokens, visuals, self.store, training=training, rng=rng)
        rows = T.embedding_lookup(table, np.asarray(gather, dtype=np.int64))
        return self.video_encoder.forward_batch(rows, self.store, len(videos))

    def embed_videos(self, videos, *, normalize: bool = True,
                     chunk_size: int = 64):
        """Inference embeddings. Returns (ids, N x out_dim array)."""
        videos = list(videos)
        ids = [video.video_id for video in videos]
        parts = []
        with T.no_grad():
            for i in range(0, len(videos), chunk_size):
                parts.append(
                    self.encode_videos_graph_batch(videos[i:i + chunk_size]).data)
        if not parts:
            return ids, np.zeros((0, self.video_encoder.config.out_dim))
        mat = np.vstack(parts)
        if normalize:
            norms = np.linalg.norm(mat, axis=1, keepdims=True)
            mat = mat / np.maximum(norms, 1e-12)
        return ids, mat
