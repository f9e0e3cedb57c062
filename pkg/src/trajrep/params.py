"""Named trainable parameters, binary checkpoints, gradient checking.

The checkpoint format is deliberately dumb: a magic tag, a version, and
for each named parameter its shape and raw little-endian float64 bytes.
Dumb formats round-trip bit-exactly, which the determinism guarantees
elsewhere depend on.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .tensor import Tensor, backward, no_grad

_MAGIC = b"TRCK"
_VERSION = 1


class ParamStore:
    """Insertion-ordered map of name -> trainable Tensor."""

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, array) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(array, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def n_scalars(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_arrays(self, arrays: dict) -> None:
        """Assign values in place; names and shapes must match exactly."""
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ValueError(
                f"parameter name mismatch: missing={sorted(missing)} "
                f"extra={sorted(extra)}"
            )
        for k, t in self._params.items():
            a = np.asarray(arrays[k], dtype=np.float64)
            if a.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for {k!r}: {a.shape} vs {t.data.shape}"
                )
            t.data = a.copy()


def save_checkpoint(params, path) -> None:
    """Write a ParamStore or a plain {name: array} mapping."""
    if isinstance(params, ParamStore):
        arrays = {k: t.data for k, t in params.items()}
    else:
        arrays = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(arrays)))
        for name, arr in arrays.items():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"checkpoint not found: {p}")
    blob = p.read_bytes()
    if blob[:4] != _MAGIC:
        raise DataError(f"{p}: not a checkpoint file")
    off = 4
    try:
        version, count = struct.unpack_from("<II", blob, off)
        off += 8
        if version != _VERSION:
            raise DataError(f"{p}: unsupported checkpoint version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", blob, off)
            off += 2
            name = blob[off : off + nlen].decode("utf-8")
            off += nlen
            (ndim,) = struct.unpack_from("<B", blob, off)
            off += 1
            shape = struct.unpack_from(f"<{ndim}I", blob, off) if ndim else ()
            off += 4 * ndim
            n = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off)
            off += 8 * n
            out[name] = arr.reshape(shape).astype(np.float64)
        if off != len(blob):
            raise DataError(f"{p}: trailing bytes in checkpoint")
        return out
    except struct.error as exc:
        raise DataError(f"{p}: truncated checkpoint: {exc}") from exc


@dataclass
class GradCheckEntry:
    name: str
    index: tuple
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst: GradCheckEntry | None
    per_param: dict[str, float]
    n_checked: int

    def passed(self, tol: float) -> bool:
        return self.max_rel_error < tol


def grad_check(loss_fn, params: ParamStore, h: float = 1e-5, names=None) -> GradCheckReport:
    """Compare backward() grads with central finite differences.

    loss_fn takes no arguments, runs a full forward pass off the current
    parameter values, and returns a scalar Tensor. It must be
    deterministic (no dropout, no fresh randomness) or the comparison is
    meaningless. Every scalar of every listed parameter is probed:
    rel = |a - n| / max(1e-8, |a| + |n|).
    """
    params.zero_grads()
    loss = loss_fn()
    backward(loss)
    check = names if names is not None else params.names()
    analytic = {}
    for name in check:
        t = params[name]
        analytic[name] = (
            t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
        )

    worst = None
    per_param: dict[str, float] = {}
    n_checked = 0
    for name in check:
        data = params[name].data
        grads = analytic[name]
        pmax = 0.0
        it = np.nditer(data, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = data[idx]
            data[idx] = orig + h
            with no_grad():
                f_plus = float(loss_fn().data)
            data[idx] = orig - h
            with no_grad():
                f_minus = float(loss_fn().data)
            data[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(grads[idx])
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            n_checked += 1
            if rel > pmax:
                pmax = rel
            if worst is None or rel > worst.rel_error:
                worst = GradCheckEntry(name, idx, a, numeric, rel)
            it.iternext()
        per_param[name] = pmax
    return GradCheckReport(
        max_rel_error=worst.rel_error if worst else 0.0,
        worst=worst,
        per_param=per_param,
        n_checked=n_checked,
    )
