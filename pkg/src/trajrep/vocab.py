"""Token vocabulary over segment occupancy matrices.

Matrices are compared with Jaccard similarity. The vocabulary is built
in one streaming pass: each matrix is matched against the existing
representatives in insertion order and takes the id of the first one
with similarity >= threshold; otherwise it becomes a new representative.
Token 0 is always the all-zero PAD representative.

At inference time an unseen matrix that matches nothing falls back to
the representative with maximum similarity (ties go to the lowest id).

Matching is the hot loop of the whole pipeline, so representatives are
kept bit-packed in uint64 rows and compared with vectorized popcounts.
The semantics are identical to the obvious nested-loop reference; the
tests check that exactly.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import SegmentMatrix

PAD_ID = 0

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1, _S2, _S4, _S56 = (np.uint64(s) for s in (1, 2, 4, 56))


def _popcount_swar(v: np.ndarray) -> np.ndarray:
    """Per-element bit count of a uint64 array (SWAR, no table)."""
    v = v - ((v >> _S1) & _M1)
    v = (v & _M2) + ((v >> _S2) & _M2)
    v = (v + (v >> _S4)) & _M4
    return (v * _H01) >> _S56


if hasattr(np, "bitwise_count"):
    def popcount_u64(v: np.ndarray) -> np.ndarray:
        """Per-element bit count of a uint64 array."""
        return np.bitwise_count(v)
else:  # pragma: no cover - numpy < 2.0
    popcount_u64 = _popcount_swar


def packed_words(n_cells: int) -> int:
    # packbits pads to whole bytes, the u64 view needs whole 8-byte words
    return math.ceil(math.ceil(n_cells / 8) / 8)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean grid into a flat uint64 row (zero padded)."""
    b = np.packbits(bits.reshape(-1))
    pad = (-b.size) % 8
    if pad:
        b = np.concatenate([b, np.zeros(pad, dtype=np.uint8)])
    return b.view(np.uint64)


def pack_bits_stack(stack: np.ndarray) -> np.ndarray:
    """pack_bits for many grids at once: (n, h, w) -> (n, words)."""
    n = stack.shape[0]
    flat = np.packbits(stack.reshape(n, -1), axis=1)
    pad = (-flat.shape[1]) % 8
    if pad:
        flat = np.concatenate(
            [flat, np.zeros((n, pad), dtype=np.uint8)], axis=1)
    return flat.view(np.uint64)


class TokenVocabulary:
    """Ordered representatives plus the similarity threshold."""

    def __init__(self, grid_h: int, grid_w: int, threshold: float) -> None:
        if not (0.0 < threshold <= 1.0):
            raise ValueError("threshold must be in (0, 1]")
        if grid_h < 1 or grid_w < 1:
            raise ValueError("grid dimensions must be positive")
        self.grid_h = grid_h
        self.grid_w = grid_w
        self.threshold = float(threshold)
        self.reps: list[SegmentMatrix] = []
        self._words = packed_words(grid_h * grid_w)
        self._packed = np.zeros((64, self._words), dtype=np.uint64)
        self._pops = np.zeros(64, dtype=np.int64)
        self._append(SegmentMatrix.zeros(grid_h, grid_w))

    def __len__(self) -> int:
        return len(self.reps)

    def _append(self, mat: SegmentMatrix) -> int:
        n = len(self.reps)
        if n == self._packed.shape[0]:
            self._packed = np.vstack([self._packed, np.zeros_like(self._packed)])
            self._pops = np.concatenate([self._pops, np.zeros_like(self._pops)])
        self._packed[n] = pack_bits(mat.bits)
        self._pops[n] = mat.popcount
        self.reps.append(mat)
        return n

    def _check_shape(self, mat: SegmentMatrix) -> None:
        if mat.shape != (self.grid_h, self.grid_w):
            raise ValueError(
                f"matrix shape {mat.shape} does not fit vocabulary grid "
                f"({self.grid_h}, {self.grid_w})"
            )

    def _scan(self, mat: SegmentMatrix, want_fallback: bool) -> int:
        """First id with similarity >= threshold, else -1 or the fallback.

        With want_fallback the return value is always a valid id: the
        first match if any, otherwise the argmax-similarity id with ties
        broken toward the lowest id.
        """
        cand = pack_bits(mat.bits)
        cp = mat.popcount
        if cp == 0:
            return PAD_ID
        n = len(self.reps)
        packed = self._packed[:n]
        pops = self._pops[:n]
        best_sim = -1.0
        best_id = PAD_ID
        chunk = 4096
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            inter = popcount_u64(packed[lo:hi] & cand).sum(axis=1).astype(np.int64)
            union = pops[lo:hi] + cp - inter
            sim = inter / union
            hits = np.flatnonzero(sim >= self.threshold)
            if hits.size:
                first = lo + int(hits[0])
                if not want_fallback:
                    return first
                # a hit beats any non-hit fallback and precedes later hits
                return first
            if want_fallback:
                j = int(np.argmax(sim))
                if sim[j] > best_sim:
                    best_sim = float(sim[j])
                    best_id = lo + j
        return best_id if want_fallback else -1

    def assign_or_insert(self, mat: SegmentMatrix) -> int:
        """Build-time path: match or become a new representative."""
        self._check_shape(mat)
        tid = self._scan(mat, want_fallback=False)
        if tid >= 0:
            return tid
        return self._append(mat)

    def token_of(self, mat: SegmentMatrix) -> int:
        """Inference path: first match, else nearest representative."""
        self._check_shape(mat)
        return self._scan(mat, want_fallback=True)

    def tokens_of_stack(self, stack) -> np.ndarray:
        """token_of for a stack of boolean grids: (n, grid_h, grid_w) -> (n,).

        Row semantics are identical to calling token_of per window; the
        windows just share each chunk pass over the representatives,
        and windows that found their first match drop out of later
        chunks.
        """
        arr = np.asarray(stack, dtype=bool)
        if arr.ndim != 3 or arr.shape[1:] != (self.grid_h, self.grid_w):
            raise ValueError(
                f"stack shape {arr.shape} does not fit vocabulary grid "
                f"({self.grid_h}, {self.grid_w})"
            )
        n_win = arr.shape[0]
        out = np.full(n_win, PAD_ID, dtype=np.int64)
        if n_win == 0:
            return out
        cands = pack_bits_stack(arr)
        cpops = np.asarray(popcount_u64(cands), dtype=np.int64).sum(axis=1)
        todo = np.flatnonzero(cpops > 0)
        best_sim = np.full(n_win, -1.0)
        best_id = np.zeros(n_win, dtype=np.int64)
        n = len(self.reps)
        chunk = 4096
        for lo in range(0, n, chunk):
            if todo.size == 0:
                break
            reps = self._packed[lo:min(lo + chunk, n)]
            inter = np.asarray(
                popcount_u64(cands[todo, None, :] & reps[None, :, :]),
                dtype=np.int64).sum(axis=2)
            union = self._pops[lo:lo + reps.shape[0]][None, :] \
                + cpops[todo, None] - inter
            sim = inter / union
            hits = sim >= self.threshold
            got = hits.any(axis=1)
            out[todo[got]] = lo + np.argmax(hits[got], axis=1)
            miss = ~got
            if miss.any():
                rows = todo[miss]
                sim_miss = sim[miss]
                j = np.argmax(sim_miss, axis=1)
                s = sim_miss[np.arange(j.size), j]
                better = s > best_sim[rows]
                best_sim[rows[better]] = s[better]
                best_id[rows[better]] = lo + j[better]
            todo = todo[miss]
        out[todo] = best_id[todo]
        return out


def build_vocabulary(matrices, threshold: float, *, grid_shape=None) -> TokenVocabulary:
    """One-pass vocabulary construction over a matrix stream.

    grid_shape (h, w) is only needed when the stream may be empty.
    """
    vocab = None
    if grid_shape is not None:
        vocab = TokenVocabulary(grid_shape[0], grid_shape[1], threshold)
    for mat in matrices:
        if vocab is None:
            vocab = TokenVocabulary(mat.shape[0], mat.shape[1], threshold)
        vocab.assign_or_insert(mat)
    if vocab is None:
        raise ValueError("empty matrix stream and no grid_shape given")
    return vocab


def tokenize(matrices, vocab: TokenVocabulary) -> np.ndarray:
    """Token ids for a sequence of matrices, as an int64 array."""
    return np.array([vocab.token_of(m) for m in matrices], dtype=np.int64)


def _encode_rle(bits: np.ndarray) -> list[int]:
    """Run lengths of the flattened grid, starting with a zero run."""
    flat = bits.reshape(-1).astype(np.int8)
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0] == 1:
        runs = [0] + runs
    return [int(r) for r in runs]


def _decode_rle(runs, grid_h: int, grid_w: int) -> np.ndarray:
    total = sum(runs)
    if total != grid_h * grid_w:
        raise DataError(
            f"run lengths sum to {total}, expected {grid_h * grid_w}"
        )
    flat = np.zeros(total, dtype=bool)
    pos = 0
    val = False
    for r in runs:
        if val:
            flat[pos : pos + r] = True
        pos += r
        val = not val
    return flat.reshape(grid_h, grid_w)


VOCAB_FORMAT = "trajrep-vocab"
VOCAB_VERSION = 1


def save_vocab(vocab: TokenVocabulary, path) -> None:
    obj = {
        "format": VOCAB_FORMAT,
        "version": VOCAB_VERSION,
        "grid_h": vocab.grid_h,
        "grid_w": vocab.grid_w,
        "threshold": vocab.threshold,
        "reps": [_encode_rle(r.bits) for r in vocab.reps],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_vocab(path) -> TokenVocabulary:
    p = Path(path)
    if not p.exists():
        raise DataError(f"vocabulary not found: {p}")
    with open(p, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{p}: invalid JSON: {exc}") from exc
    if obj.get("format") != VOCAB_FORMAT:
        raise DataError(f"{p}: not a vocabulary file")
    if obj.get("version") != VOCAB_VERSION:
        raise DataError(f"{p}: unsupported vocabulary version {obj.get('version')!r}")
    vocab = TokenVocabulary(int(obj["grid_h"]), int(obj["grid_w"]), float(obj["threshold"]))
    reps = obj["reps"]
    if not reps:
        raise DataError(f"{p}: vocabulary has no representatives")
    first = _decode_rle(reps[0], vocab.grid_h, vocab.grid_w)
    if first.any():
        raise DataError(f"{p}: representative 0 must be the all-zero PAD")
    for runs in reps[1:]:
        mat = SegmentMatrix(_decode_rle(runs, vocab.grid_h, vocab.grid_w))
        vocab._append(mat)
    return vocab
