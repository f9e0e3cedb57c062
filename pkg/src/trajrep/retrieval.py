"""Embedding database, exact-search oracle, and retrieval evaluation.

Evaluation protocol: embed the original test videos as the database;
for each noise fraction delta, corrupt every test video into a query
(intra-clip then inter-clip replacement at that fraction) and retrieve.
HR@1 is the fraction of queries whose own original ranks first; MRR is
the mean reciprocal rank of the original. Exact search is the default
ranker so model quality is measured independently of index recall.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .hnsw import AnnIndex, AnnParams
from .params import load_checkpoint, save_checkpoint
from .synth import SamplePool, make_eval_query

DB_FORMAT = "trajrep-embeddings"
DB_VERSION = 1

_QUERY_LANE = 0xE7A1


@dataclass(frozen=True)
class EmbeddingDb:
    ids: tuple
    vectors: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "ids", tuple(self.ids))
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if len(self.ids) != vectors.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {vectors.shape[0]} vectors"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("video ids must be unique")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)


def save_db(db: EmbeddingDb, base_path) -> None:
    """Persist as {base}.json (id manifest) + {base}.tensors (vectors)."""
    base = Path(base_path)
    manifest = {
        "format": DB_FORMAT,
        "version": DB_VERSION,
        "ids": list(db.ids),
        "normalized": db.normalized,
        "dim": db.dim,
    }
    with open(base.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")
    save_checkpoint({"vectors": db.vectors}, base.with_suffix(".tensors"))


def load_db(base_path) -> EmbeddingDb:
    base = Path(base_path)
    mpath = base.with_suffix(".json")
    if not mpath.exists():
        raise DataError(f"embedding manifest not found: {mpath}")
    with open(mpath, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{mpath}: invalid JSON: {exc}") from exc
    if obj.get("format") != DB_FORMAT:
        raise DataError(f"{mpath}: not an embedding manifest")
    if obj.get("version") != DB_VERSION:
        raise DataError(f"{mpath}: unsupported version {obj.get('version')}")
    tensors = load_checkpoint(base.with_suffix(".tensors"))
    if "vectors" not in tensors:
        raise DataError(f"{base}.tensors: missing vectors tensor")
    try:
        return EmbeddingDb(ids=obj["ids"], vectors=tensors["vectors"],
                           normalized=bool(obj["normalized"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{mpath}: malformed embedding db: {exc}") from exc


def exact_topk(db: EmbeddingDb, query: np.ndarray, k: int,
               similarity: str = "cosine"):
    """Full-scan ranking. Returns [(video_id, similarity)] of length
    min(k, len(db)), descending similarity, ties by insertion order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(db) == 0:
        raise ValueError("database is empty")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != db.dim:
        raise ValueError(f"query dim {q.shape[0]} != db dim {db.dim}")
    vectors = db.vectors
    if similarity == "cosine":
        q = q / max(np.linalg.norm(q), 1e-12)
        if not db.normalized:
            norms = np.linalg.norm(vectors, axis=1, keepdims=True)
            vectors = vectors / np.maximum(norms, 1e-12)
    elif similarity != "dot":
        raise ValueError("similarity must be cosine or dot")
    sims = vectors @ q
    order = np.argsort(-sims, kind="stable")[:k]
    return [(db.ids[i], float(sims[i])) for i in order]


@dataclass(frozen=True)
class DeltaMetrics:
    hr_at_1: float
    mrr: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.hr_at_1 <= self.mrr <= 1.0:
            raise ValueError(
                f"metrics must satisfy 0 <= HR@1 <= MRR <= 1, got "
                f"HR@1={self.hr_at_1} MRR={self.mrr}"
            )


@dataclass(frozen=True)
class EvalReport:
    per_delta: dict
    query_count: int
    index_params: dict
    checkpoint_id: str

    def to_json(self) -> str:
        obj = {
            "per_delta": {
                repr(d): {"hr_at_1": m.hr_at_1, "mrr": m.mrr}
                for d, m in self.per_delta.items()
            },
            "query_count": self.query_count,
            "index_params": self.index_params,
            "checkpoint_id": self.checkpoint_id,
        }
        return json.dumps(obj, separators=(",", ":"), sort_keys=True) + "\n"


def _rank_of(ranking, target_id) -> int:
    for pos, (vid, _) in enumerate(ranking, start=1):
        if vid == target_id:
            return pos
    return 0


def evaluate_retrieval(
    embedder,
    test_videos,
    deltas,
    pool: SamplePool,
    *,
    use_exact: bool = True,
    ann_params: AnnParams | None = None,
    ef_search: int = 64,
    seed: int = 0,
    checkpoint_id: str = "",
) -> EvalReport:
    """Corrupt-and-retrieve evaluation over the held-out videos."""
    test_videos = list(test_videos)
    if not test_videos:
        raise ConfigError("evaluation needs a nonempty test set")
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ConfigError("evaluation needs at least one delta")
    for d in deltas:
        if not 0.0 <= d <= 1.0:
            raise ConfigError(f"delta must be in [0, 1], got {d}")

    ids, vectors = embedder.embed_videos(test_videos, normalize=True)
    db = EmbeddingDb(ids=ids, vectors=vectors, normalized=True)
    if use_exact:
        index = None
        index_params = {"backend": "exact"}
        depth = len(db)
    else:
        params = ann_params if ann_params is not None else AnnParams()
        index = AnnIndex(params).build(db.vectors)
        depth = min(ef_search, len(db))
        index_params = {
            "backend": "hnsw",
            "M": params.M,
            "ef_construction": params.ef_construction,
            "ef_search": ef_search,
        }

    per_delta = {}
    for d in deltas:
        rng = np.random.default_rng((seed, _QUERY_LANE, int(round(d * 1e9))))
        queries = [make_eval_query(v, d, pool, rng) for v in test_videos]
        _, qvecs = embedder.embed_videos(queries, normalize=True)
        hits = 0
        rr_sum = 0.0
        for video, q in zip(test_videos, qvecs):
            if index is None:
                ranking = exact_topk(db, q, depth)
            else:
                ranking = [(db.ids[i], s) for i, s in
                           index.query(q, depth, max(ef_search, depth))]
            rank = _rank_of(ranking, video.video_id)
            if rank == 1:
                hits += 1
            if rank > 0:
                rr_sum += 1.0 / rank
        n = len(test_videos)
        per_delta[d] = DeltaMetrics(hr_at_1=hits / n, mrr=rr_sum / n)
    return EvalReport(
        per_delta=per_delta,
        query_count=len(test_videos),
        index_params=index_params,
        checkpoint_id=checkpoint_id,
    )
