"""Field geometry and rasterization of trajectories onto an occupancy grid.

The playing field is a fixed axis-aligned rectangle divided into square
cells. A trajectory segment (the polyline between consecutive samples)
is rasterized with a supercover rule: every cell whose interior the
segment passes through gets marked, not just the cells of the sample
points. That keeps fast-moving objects from leaving gaps in the grid.

Cells are addressed as (col, row) with col 0 at x_min and row 0 at
y_min. Points on the max edge of the field fall into the last cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _ceil_cells(extent: float, cell_size: float) -> int:
    # tolerate float fuzz so a width of exactly k*cell gives k cells
    return int(math.ceil(extent / cell_size - 1e-9))


@dataclass(frozen=True)
class FieldSpec:
    """Bounds and resolution of the occupancy grid.

    Defaults describe a full-size pitch, 105 m by 68 m centered on the
    origin, at 3 m cells (35 columns by 23 rows).
    """

    x_min: float = -52.5
    x_max: float = 52.5
    y_min: float = -34.0
    y_max: float = 34.0
    cell_size: float = 3.0

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("field bounds must satisfy min < max")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")

    @property
    def grid_w(self) -> int:
        return _ceil_cells(self.x_max - self.x_min, self.cell_size)

    @property
    def grid_h(self) -> int:
        return _ceil_cells(self.y_max - self.y_min, self.cell_size)

    @property
    def n_cells(self) -> int:
        return self.grid_w * self.grid_h

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return (
            min(max(x, self.x_min), self.x_max),
            min(max(y, self.y_min), self.y_max),
        )

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Map a point to its (col, row) cell, clamping into bounds."""
        x, y = self.clamp(x, y)
        col = int((x - self.x_min) / self.cell_size)
        row = int((y - self.y_min) / self.cell_size)
        return min(col, self.grid_w - 1), min(row, self.grid_h - 1)


class SegmentMatrix:
    """Binary grid of the cells touched during one time segment.

    Immutable; the popcount (number of set cells) is computed once and
    cached because Jaccard matching reads it constantly.
    """

    __slots__ = ("bits", "popcount")

    def __init__(self, bits: np.ndarray) -> None:
        arr = np.ascontiguousarray(bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("segment matrix must be 2-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "popcount", int(arr.sum()))

    def __setattr__(self, name, value):
        raise AttributeError("SegmentMatrix is immutable")

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @classmethod
    def zeros(cls, grid_h: int, grid_w: int) -> "SegmentMatrix":
        return cls(np.zeros((grid_h, grid_w), dtype=bool))

    def equals(self, other: "SegmentMatrix") -> bool:
        return self.shape == other.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __repr__(self) -> str:
        h, w = self.shape
        return f"SegmentMatrix({h}x{w}, popcount={self.popcount})"


def jaccard(a: SegmentMatrix, b: SegmentMatrix) -> float:
    """Jaccard similarity of two segment matrices.

    Two empty matrices count as identical (similarity 1.0), so the PAD
    token matches all-empty segments.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.popcount == 0 and b.popcount == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = a.popcount + b.popcount - inter
    return inter / union


def _interval_cells(
    field: FieldSpec, x0: float, y0: float, x1: float, y1: float
) -> list[tuple[int, int]]:
    """Cells whose interior the open segment passes through.

    Works in grid coordinates: collect the parameter values where the
    segment crosses a vertical or horizontal grid line, then take the
    cell containing the midpoint of every interval between consecutive
    crossings. A segment through the exact corner of four cells marks
    only the two it passes through the interior of: intervals shorter
    than 1e-9 in parameter space are collapsed, which also keeps the
    marking stable when the two crossing parameters at a corner differ
    by rounding. A degenerate segment gives its single cell.
    """
    x0, y0 = field.clamp(x0, y0)
    x1, y1 = field.clamp(x1, y1)
    u0 = (x0 - field.x_min) / field.cell_size
    v0 = (y0 - field.y_min) / field.cell_size
    u1 = (x1 - field.x_min) / field.cell_size
    v1 = (y1 - field.y_min) / field.cell_size

    def cell_at(u: float, v: float) -> tuple[int, int]:
        col = min(int(u), field.grid_w - 1)
        row = min(int(v), field.grid_h - 1)
        return col, row

    if u0 == u1 and v0 == v1:
        return [cell_at(u0, v0)]

    ts = [0.0, 1.0]
    for a0, a1 in ((u0, u1), (v0, v1)):
        if a0 == a1:
            continue
        lo, hi = (a0, a1) if a0 < a1 else (a1, a0)
        for k in range(math.floor(lo) + 1, math.ceil(hi)):
            if lo < k < hi:
                ts.append((k - a0) / (a1 - a0))
    ts.sort()

    cells: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for ta, tb in zip(ts[:-1], ts[1:]):
        if tb - ta <= 1e-9:
            continue
        tm = 0.5 * (ta + tb)
        c = cell_at(u0 + tm * (u1 - u0), v0 + tm * (v1 - v0))
        if c not in seen:
            seen.add(c)
            cells.append(c)
    return cells


def supercover_cells(
    field: FieldSpec, x0: float, y0: float, x1: float, y1: float
) -> list[tuple[int, int]]:
    """Conservative cell cover of one segment, endpoints included.

    The interior-crossing cells plus the floor-convention cells of both
    endpoints (which differ from the interior cells only when an
    endpoint sits exactly on a grid line).
    """
    cells = []
    seen = set()
    for c in (
        [field.cell_of(x0, y0)]
        + _interval_cells(field, x0, y0, x1, y1)
        + [field.cell_of(x1, y1)]
    ):
        if c not in seen:
            seen.add(c)
            cells.append(c)
    return cells


def rasterize(points, field: FieldSpec, connect: bool = True) -> SegmentMatrix:
    """Rasterize one polyline (time-ordered (t, x, y) samples) to a grid.

    With connect=True (the default) every cell crossed between
    consecutive samples is marked, so sparse sampling of a fast object
    leaves no gaps. The cells of the first and last samples are marked
    explicitly; interior samples lie on the covered path already, and
    skipping their floor cells keeps the raster exactly invariant when
    a collinear midpoint is inserted between two samples (a sample
    sitting exactly on a cell border would otherwise drag in the cell
    on the far side of the border).

    With connect=False only the samples' own cells are marked.

    An empty point list gives the all-zero matrix.
    """
    bits = np.zeros((field.grid_h, field.grid_w), dtype=bool)
    pts = list(points)
    if not pts:
        return SegmentMatrix(bits)
    if connect:
        for _, x, y in (pts[0], pts[-1]):
            col, row = field.cell_of(x, y)
            bits[row, col] = True
        for (_, xa, ya), (_, xb, yb) in zip(pts[:-1], pts[1:]):
            for col, row in _interval_cells(field, xa, ya, xb, yb):
                bits[row, col] = True
    else:
        for _, x, y in pts:
            col, row = field.cell_of(x, y)
            bits[row, col] = True
    return SegmentMatrix(bits)


def trajectory_window_bits(
    points: np.ndarray,
    field: FieldSpec,
    segment_len: float,
    max_segments: int,
    connect: bool = True,
) -> np.ndarray:
    """Per-window occupancy of one trajectory, shape (max_segments, H, W).

    Window i covers [i*segment_len, (i+1)*segment_len). Samples are
    split by window; only consecutive samples inside the same window
    are joined with a supercover segment.
    """
    out = np.zeros((max_segments, field.grid_h, field.grid_w), dtype=bool)
    if len(points) == 0:
        return out
    win = np.floor(points[:, 0] / segment_len).astype(np.int64)
    for i in range(max_segments):
        sel = points[win == i]
        if len(sel) == 0:
            continue
        out[i] = rasterize(sel, field, connect=connect).bits
    return out


def segment_clip(
    tracks,
    field: FieldSpec,
    segment_len: float = 1.0,
    max_segments: int = 16,
    connect: bool = True,
) -> list[SegmentMatrix]:
    """Segment a clip's trajectories into per-window occupancy matrices.

    All trajectories share the grid (one channel). Always returns
    exactly max_segments matrices; windows past the data are all-zero
    and windows past max_segments are dropped.
    """
    if segment_len <= 0:
        raise ValueError("segment_len must be positive")
    if max_segments < 1:
        raise ValueError("max_segments must be at least 1")
    acc = np.zeros((max_segments, field.grid_h, field.grid_w), dtype=bool)
    for tr in tracks:
        acc |= trajectory_window_bits(
            tr.points, field, segment_len, max_segments, connect=connect
        )
    return [SegmentMatrix(acc[i]) for i in range(max_segments)]
