"""Real-linear span bookkeeping over realified complex vectors.

Complex vectors (states, vectorized operators) are compared for *real*
linear independence: v and i*v count as two directions.  A RealSpan keeps
an orthonormal set of realified rows and answers membership queries with
relative least-squares residuals; close_real_span iterates a seed set
under real-linear maps until the span stabilizes.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def realify(z: np.ndarray) -> np.ndarray:
    """Map a complex vector (or batch of row vectors) to [Re | Im]."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=-1)


def unrealify(r: np.ndarray) -> np.ndarray:
    """Inverse of realify on the last axis."""
    r = np.asarray(r, dtype=float)
    m = r.shape[-1] // 2
    return r[..., :m] + 1j * r[..., m:]


class SpanBlowupError(RuntimeError):
    """Raised when a span closure exceeds its configured dimension bound."""

    def __init__(self, rank: int, max_dim: int):
        super().__init__(f"span closure exceeded max_dim={max_dim} (rank {rank})")
        self.rank = rank
        self.max_dim = max_dim


class RealSpan:
    """Growing orthonormal basis of a real subspace of R^dim."""

    def __init__(self, dim: int, tol: float = 1e-9):
        self.dim = dim
        self.tol = tol
        self.q = np.zeros((0, dim))

    @property
    def rank(self) -> int:
        return self.q.shape[0]

    def project_out(self, rows: np.ndarray) -> np.ndarray:
        """Residual of rows after removing their component in the span."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if self.rank == 0:
            return rows.copy()
        # two Gram-Schmidt passes for numerical safety
        res = rows - (rows @ self.q.T) @ self.q
        res = res - (res @ self.q.T) @ self.q
        return res

    def residual(self, row: np.ndarray) -> float:
        """Relative membership residual; 0.0 for a (near-)zero input."""
        row = np.asarray(row, dtype=float)
        nrm = np.linalg.norm(row)
        if nrm == 0.0:
            return 0.0
        return float(np.linalg.norm(self.project_out(row[None, :])[0]) / nrm)

    def contains(self, row: np.ndarray) -> bool:
        return self.residual(row) < self.tol

    def add(self, row: np.ndarray, floor: float | None = None) -> bool:
        """Add one vector; returns True if it increased the rank."""
        kept = self.add_batch(np.asarray(row, dtype=float)[None, :], floor=floor)
        return kept.shape[0] > 0

    def add_batch(self, rows: np.ndarray, floor: float | None = None) -> np.ndarray:
        """Add a batch of rows; returns the orthonormal new directions kept.

        Rows below the absolute `floor` (default tol) are treated as zero
        -- a numerically vanishing bracket must not inject noise
        directions.  Survivors are filtered by relative residual against
        the current span, then reduced by SVD with singular values
        thresholded at tol * s_max (the shared rank policy).
        """
        if floor is None:
            floor = self.tol
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size == 0:
            return np.zeros((0, self.dim))
        norms = np.linalg.norm(rows, axis=1)
        live = norms > floor
        if not live.any():
            return np.zeros((0, self.dim))
        rows = rows[live]
        norms = norms[live]
        res = self.project_out(rows)
        keep = np.linalg.norm(res, axis=1) > self.tol * norms
        if not keep.any():
            return np.zeros((0, self.dim))
        res = res[keep]
        u, s, vt = np.linalg.svd(res, full_matrices=False)
        new = vt[s > self.tol * s[0]]
        if new.shape[0]:
            self.q = np.vstack([self.q, new])
        return new


def close_real_span(
    seeds: np.ndarray,
    maps: Sequence[Callable[[np.ndarray], np.ndarray]],
    tol: float = 1e-9,
    max_dim: int | None = None,
) -> tuple[RealSpan, np.ndarray, int]:
    """Close the real span of complex seed rows under real-linear maps.

    Parameters
    ----------
    seeds : (k, m) complex array
        Initial vectors, one per row.
    maps : sequence of callables
        Each maps a (B, m) complex batch to a (B, m) complex batch; the
        closure adds map images of newly found directions until nothing
        new appears (frontier strategy, so every basis direction passes
        through every map exactly once).
    tol : float
        Relative residual threshold for accepting a new direction.
    max_dim : int, optional
        Raise SpanBlowupError when the realified rank exceeds this.

    Returns
    -------
    span : RealSpan over the realified vectors.
    basis : (R, m) complex rows, orthonormal in the realified sense.
    rounds : number of frontier rounds performed.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=complex))
    m = seeds.shape[1]
    span = RealSpan(2 * m, tol=tol)
    frontier = unrealify(span.add_batch(realify(seeds)))
    basis = [frontier]
    rounds = 0
    while frontier.shape[0] and maps:
        rounds += 1
        candidates = np.vstack([np.atleast_2d(f(frontier)) for f in maps])
        new = span.add_batch(realify(candidates))
        if max_dim is not None and span.rank > max_dim:
            raise SpanBlowupError(span.rank, max_dim)
        frontier = unrealify(new)
        if frontier.shape[0]:
            basis.append(frontier)
    return span, np.vstack(basis), rounds


def realified_nullspace(rows: np.ndarray, dim: int, tol: float = 1e-9, floor: float = 1.0) -> np.ndarray:
    """Orthonormal basis (rows) of the real null space of a constraint stack.

    Singular values are thresholded at tol * max(s_max, floor): the
    absolute floor keeps a numerically-zero stack (pure roundoff) from
    masquerading as full rank.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0 or not np.linalg.norm(rows, axis=1).any():
        return np.eye(dim)
    u, s, vt = np.linalg.svd(rows, full_matrices=True)
    r = int(np.sum(s > tol * max(s[0], floor)))
    return vt[r:]
