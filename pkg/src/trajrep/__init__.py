"""Trajectory-centric video representations.

The pipeline turns multi-agent position tracks into compact video
embeddings: trajectories are rasterized onto a coarse field grid and
tokenized against an overlap-deduplicated vocabulary, a clip-level
attention encoder fuses token sequences with per-clip visual vectors,
a set-attention video encoder-decoder maps the clip matrix to a single
vector, and a triple contrastive objective trains the whole stack so
that corrupted variants of a video land near the original. Retrieval
runs either as an exact cosine scan or through a small-world graph
index, with hit-rate and mean-reciprocal-rank evaluation utilities.
"""
from .clip_encoder import ClipEncoder, ClipEncoderConfig
from .data import (
    Clip,
    Trajectory,
    Video,
    load_dataset,
    load_split,
    save_dataset,
    save_split,
    videos_equal,
)
from .embedder import VideoEmbedder
from .errors import (
    ConfigError,
    DataError,
    StateError,
    TrajrepError,
    VerificationError,
)
from .grid import (
    FieldSpec,
    SegmentMatrix,
    jaccard,
    rasterize,
    segment_clip,
    supercover_cells,
    trajectory_window_bits,
)
from .hnsw import AnnIndex, AnnParams, load_index, save_index
from .losses import LossConfig, info_nce_directional, pair_loss, triple_loss
from .params import (
    GradCheckReport,
    ParamStore,
    grad_check,
    load_checkpoint,
    save_checkpoint,
)
from .retrieval import (
    DeltaMetrics,
    EmbeddingDb,
    EvalReport,
    evaluate_retrieval,
    exact_topk,
    load_db,
    save_db,
)
from .synth import (
    GenConfig,
    SamplePool,
    build_pool,
    generate_dataset,
    make_eval_query,
    make_inter_variant,
    make_intra_variant,
    split_dataset,
)
from .training import TrainConfig, TrainResult, make_queries, sgd_step, train
from .verify import build_tiny_model, run_gradient_check
from .video_encoder import VideoEncoder, VideoEncoderConfig
from .visual import FileVisualProvider, StubVisualProvider, save_visual_features
from .vocab import TokenVocabulary, build_vocabulary, load_vocab, save_vocab, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnnIndex",
    "AnnParams",
    "Clip",
    "ClipEncoder",
    "ClipEncoderConfig",
    "ConfigError",
    "DataError",
    "DeltaMetrics",
    "EmbeddingDb",
    "EvalReport",
    "FieldSpec",
    "FileVisualProvider",
    "GenConfig",
    "GradCheckReport",
    "LossConfig",
    "ParamStore",
    "SamplePool",
    "SegmentMatrix",
    "StateError",
    "StubVisualProvider",
    "TokenVocabulary",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "TrajrepError",
    "VerificationError",
    "Video",
    "VideoEmbedder",
    "VideoEncoder",
    "VideoEncoderConfig",
    "build_pool",
    "build_tiny_model",
    "build_vocabulary",
    "evaluate_retrieval",
    "exact_topk",
    "generate_dataset",
    "grad_check",
    "info_nce_directional",
    "jaccard",
    "load_checkpoint",
    "load_dataset",
    "load_db",
    "load_index",
    "load_split",
    "load_vocab",
    "make_eval_query",
    "make_inter_variant",
    "make_intra_variant",
    "make_queries",
    "pair_loss",
    "rasterize",
    "run_gradient_check",
    "save_checkpoint",
    "save_dataset",
    "save_db",
    "save_index",
    "save_split",
    "save_visual_features",
    "save_vocab",
    "segment_clip",
    "sgd_step",
    "split_dataset",
    "supercover_cells",
    "tokenize",
    "train",
    "trajectory_window_bits",
    "triple_loss",
    "videos_equal",
]
