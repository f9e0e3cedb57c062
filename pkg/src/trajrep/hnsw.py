"""Navigable small-world approximate nearest-neighbor index.

Layered proximity graph over a fixed set of vectors. Each node gets a
geometrically distributed top layer; upper layers form coarse shortcut
graphs and layer 0 holds everybody. Search greedily descends the layers
and then runs a beam search (width ef) at layer 0.

Neighbor lists are pruned with the spread heuristic: a candidate joins
a node's list only if it is closer to that node than to every neighbor
already kept, which stops lists from collapsing into one tight cluster.
Pruned candidates backfill remaining slots.

The index is build-once: vectors go in at construction via `build`,
queries come after. Cosine mode normalizes stored vectors and queries,
so similarity reduces to a dot product.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, StateError
from .params import load_checkpoint, save_checkpoint

INDEX_FORMAT = "trajrep-hnsw"
INDEX_VERSION = 1


@dataclass(frozen=True)
class AnnParams:
    M: int = 16
    ef_construction: int = 200
    seed: int = 0
    similarity: str = "cosine"

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ConfigError("M must be at least 2")
        if self.ef_construction < 1:
            raise ConfigError("ef_construction must be positive")
        if self.similarity not in ("cosine", "dot"):
            raise ConfigError("similarity must be cosine or dot")


class AnnIndex:
    """Append-only small-world graph; query after build."""

    def __init__(self, params: AnnParams | None = None) -> None:
        self.params = params if params is not None else AnnParams()
        self._vectors: np.ndarray | None = None
        self._levels: list[int] = []
        # per node: one neighbor list per layer 0..level
        self._neighbors: list[list[list[int]]] = []
        self._entry: int = -1
        self._max_level: int = -1
        self._ml = 1.0 / math.log(self.params.M)

    @property
    def built(self) -> bool:
        return self._vectors is not None

    def __len__(self) -> int:
        return 0 if self._vectors is None else self._vectors.shape[0]

    def _require_built(self) -> None:
        if not self.built:
            raise StateError("index queried before build")

    def _sims_to(self, q: np.ndarray, nodes) -> np.ndarray:
        return self._vectors[nodes] @ q

    def _search_layer(self, q: np.ndarray, entries, ef: int, layer: int):
        """Beam search on one layer. Returns [(sim, node)] best-first."""
        visited = set(entries)
        # max-heap on similarity for expansion, min-heap over the kept set
        cand = [(-float(self._vectors[e] @ q), e) for e in entries]
        heapq.heapify(cand)
        best = [(float(self._vectors[e] @ q), e) for e in entries]
        heapq.heapify(best)
        while cand:
            neg_sim, node = heapq.heappop(cand)
            if -neg_sim < best[0][0] and len(best) >= ef:
                break
            fresh = [n for n in self._neighbors[node][layer] if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            sims = self._sims_to(q, fresh)
            floor = best[0][0]
            for n, s in zip(fresh, sims.tolist()):
                if len(best) < ef:
                    heapq.heappush(best, (s, n))
                    heapq.heappush(cand, (-s, n))
                    floor = best[0][0]
                elif s > floor:
                    heapq.heapreplace(best, (s, n))
                    heapq.heappush(cand, (-s, n))
                    floor = best[0][0]
        return sorted(best, key=lambda p: (-p[0], p[1]))

    def _select(self, q: np.ndarray, candidates, m: int):
        """Spread-heuristic pruning of [(sim, node)] down to m nodes."""
        ordered = sorted(candidates, key=lambda p: (-p[0], p[1]))
        kept: list[tuple[float, int]] = []
        pruned: list[tuple[float, int]] = []
        for sim, node in ordered:
            if len(kept) >= m:
                pruned.append((sim, node))
                continue
            vec = self._vectors[node]
            closer_to_kept = any(
                float(vec @ self._vectors[kn]) > sim for _, kn in kept
            )
            if closer_to_kept:
                pruned.append((sim, node))
            else:
                kept.append((sim, node))
        for sim, node in pruned:
            if len(kept) >= m:
                break
            kept.append((sim, node))
        return [n for _, n in kept]

    def _insert(self, node: int, level: int) -> None:
        q = self._vectors[node]
        if self._entry < 0:
            self._entry = node
            self._max_level = level
            return
        ep = [self._entry]
        for layer in range(self._max_level, level, -1):
            ep = [self._search_layer(q, ep, 1, layer)[0][1]]
        m = self.params.M
        for layer in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(q, ep, self.params.ef_construction, layer)
            chosen = self._select(q, found, m)
            self._neighbors[node][layer] = list(chosen)
            cap = 2 * m if layer == 0 else m
            for other in chosen:
                links = self._neighbors[other][layer]
                links.append(node)
                if len(links) > cap:
                    ov = self._vectors[other]
                    cand = [(float(self._vectors[x] @ ov), x) for x in links]
                    self._neighbors[other][layer] = self._select(ov, cand, cap)
            ep = [n for _, n in found]
        if level > self._max_level:
            self._max_level = level
            self._entry = node

    def build(self, vectors: np.ndarray) -> "AnnIndex":
        if self.built:
            raise StateError("index already built")
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise ValueError("need a nonempty 2-d vector array")
        if self.params.similarity == "cosine":
            norms = np.linalg.norm(vectors, axis=1, keepdims=True)
            vectors = vectors / np.maximum(norms, 1e-12)
        self._vectors = vectors
        rng = np.random.default_rng(self.params.seed)
        n = vectors.shape[0]
        self._levels = [
            int(-math.log(max(rng.random(), 1e-300)) * self._ml) for _ in range(n)
        ]
        self._neighbors = [[[] for _ in range(lv + 1)] for lv in self._levels]
        for node in range(n):
            self._insert(node, self._levels[node])
        return self

    def query(self, vector: np.ndarray, k: int, ef_search: int = 64):
        """Top-k (node_id, similarity), best first."""
        self._require_built()
        if k < 1:
            raise ValueError("k must be at least 1")
        if ef_search < k:
            raise ValueError(f"ef_search {ef_search} must be >= k {k}")
        q = np.asarray(vector, dtype=np.float64).reshape(-1)
        if q.shape[0] != self._vectors.shape[1]:
            raise ValueError(
                f"query dim {q.shape[0]} != index dim {self._vectors.shape[1]}"
            )
        if self.params.similarity == "cosine":
            q = q / max(np.linalg.norm(q), 1e-12)
        ep = [self._entry]
        for layer in range(self._max_level, 0, -1):
            ep = [self._search_layer(q, ep, 1, layer)[0][1]]
        found = self._search_layer(q, ep, ef_search, 0)
        return [(node, sim) for sim, node in found[:k]]

    def reachable_from_entry(self) -> set[int]:
        """Nodes reachable by descending from the entry point, following
        any-layer edges; the structural invariant is that this covers
        every inserted node."""
        self._require_built()
        seen = set()
        stack = [self._entry]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            for layer_links in self._neighbors[node]:
                stack.extend(x for x in layer_links if x not in seen)
        return seen

    def to_manifest(self) -> dict:
        self._require_built()
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "M": self.params.M,
            "ef_construction": self.params.ef_construction,
            "seed": self.params.seed,
            "similarity": self.params.similarity,
            "entry": self._entry,
            "max_level": self._max_level,
            "levels": self._levels,
            "neighbors": self._neighbors,
        }


def save_index(index: AnnIndex, base_path) -> None:
    """Persist as {base}.json (graph) + {base}.tensors (vectors)."""
    base = Path(base_path)
    with open(base.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(index.to_manifest(), fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")
    save_checkpoint({"vectors": index._vectors}, base.with_suffix(".tensors"))


def load_index(base_path) -> AnnIndex:
    base = Path(base_path)
    mpath = base.with_suffix(".json")
    if not mpath.exists():
        raise DataError(f"index manifest not found: {mpath}")
    with open(mpath, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{mpath}: invalid JSON: {exc}") from exc
    if obj.get("format") != INDEX_FORMAT:
        raise DataError(f"{mpath}: not an index manifest")
    if obj.get("version") != INDEX_VERSION:
        raise DataError(f"{mpath}: unsupported version {obj.get('version')}")
    tensors = load_checkpoint(base.with_suffix(".tensors"))
    if "vectors" not in tensors:
        raise DataError(f"{base}.tensors: missing vectors tensor")
    try:
        params = AnnParams(M=obj["M"], ef_construction=obj["ef_construction"],
                           seed=obj["seed"], similarity=obj["similarity"])
        index = AnnIndex(params)
        index._vectors = tensors["vectors"]
        index._levels = [int(x) for x in obj["levels"]]
        index._neighbors = [
            [[int(x) for x in layer] for layer in node]
            for node in obj["neighbors"]
        ]
        index._entry = int(obj["entry"])
        index._max_level = int(obj["max_level"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"{mpath}: malformed index manifest: {exc}") from exc
    n = index._vectors.shape[0]
    if len(index._levels) != n or len(index._neighbors) != n:
        raise DataError(f"{mpath}: graph size does not match vectors")
    return index
