"""Quadtree over node positions for viewport range queries.

Points live in leaves; every interior cell keeps level-of-detail
aggregates (point count plus a representative point: largest size, ties to
the smallest id). Box containment is inclusive on all edges and query
results are index arrays into the original point order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation


@dataclass
class _Cell:
    x0: float
    y0: float
    x1: float
    y1: float
    count: int
    representative: int  # point index
    points: np.ndarray | None = None  # leaf payload
    children: list["_Cell"] | None = None


class Quadtree:
    def __init__(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        sizes: np.ndarray | None = None,
        capacity: int = 64,
        max_depth: int = 12,
    ):
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        n = len(self.xs)
        if len(self.ys) != n:
            raise ContractViolation("xs and ys must have equal length")
        self.sizes = np.asarray(sizes, dtype=np.float64) if sizes is not None else np.ones(n)
        self.capacity = capacity
        self.max_depth = max_depth
        if n == 0:
            self.root = _Cell(0, 0, 0, 0, 0, -1, points=np.empty(0, dtype=np.int64))
        else:
            x0, x1 = float(self.xs.min()), float(self.xs.max())
            y0, y1 = float(self.ys.min()), float(self.ys.max())
            self.root = self._build(np.arange(n, dtype=np.int64), x0, y0, x1, y1, 0)

    def _representative(self, idx: np.ndarray) -> int:
        best = idx[np.lexsort((idx, -self.sizes[idx]))[0]]
        return int(best)

    def _build(self, idx: np.ndarray, x0: float, y0: float, x1: float, y1: float, depth: int) -> _Cell:
        cell = _Cell(x0, y0, x1, y1, len(idx), self._representative(idx))
        if len(idx) <= self.capacity or depth >= self.max_depth or (x0 == x1 and y0 == y1):
            cell.points = idx
            return cell
        mx, my = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        right = self.xs[idx] > mx
        top = self.ys[idx] > my
        quads = [
            (idx[~right & ~top], x0, y0, mx, my),
            (idx[right & ~top], mx, y0, x1, my),
            (idx[~right & top], x0, my, mx, y1),
            (idx[right & top], mx, my, x1, y1),
        ]
        cell.children = [
            self._build(q, qx0, qy0, qx1, qy1, depth + 1) for q, qx0, qy0, qx1, qy1 in quads if len(q)
        ]
        return cell

    def query(self, x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
        """Indices of all points with x0 <= x <= x1 and y0 <= y <= y1."""
        if not (x1 > x0 and y1 > y0):
            raise ContractViolation("degenerate query box")
        out: list[np.ndarray] = []
        self._query(self.root, x0, y0, x1, y1, out)
        if not out:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(out))

    def _collect(self, cell: _Cell, out: list[np.ndarray]) -> None:
        if cell.points is not None:
            out.append(cell.points)
        else:
            for child in cell.children or ():
                self._collect(child, out)

    def _query(self, cell: _Cell, x0: float, y0: float, x1: float, y1: float, out: list[np.ndarray]) -> None:
        if cell.count == 0 or cell.x0 > x1 or cell.x1 < x0 or cell.y0 > y1 or cell.y1 < y0:
            return
        if x0 <= cell.x0 and cell.x1 <= x1 and y0 <= cell.y0 and cell.y1 <= y1:
            self._collect(cell, out)
            return
        if cell.points is not None:
            pts = cell.points
            mask = (
                (self.xs[pts] >= x0)
                & (self.xs[pts] <= x1)
                & (self.ys[pts] >= y0)
                & (self.ys[pts] <= y1)
            )
            if mask.any():
                out.append(pts[mask])
            return
        for child in cell.children or ():
            self._query(child, x0, y0, x1, y1, out)

    def cell_summaries(self, max_depth: int = 4) -> list[dict]:
        """Per-cell (count, representative) aggregates down to max_depth."""
        rows: list[dict] = []

        def walk(cell: _Cell, depth: int) -> None:
            rows.append(
                {
                    "x0": cell.x0,
                    "y0": cell.y0,
                    "x1": cell.x1,
                    "y1": cell.y1,
                    "depth": depth,
                    "count": cell.count,
                    "representative": cell.representative,
                }
            )
            if depth < max_depth:
                for child in cell.children or ():
                    walk(child, depth + 1)

        walk(self.root, 0)
        return rows
