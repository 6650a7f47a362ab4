"""Dense complex operator algebra for coupled qubit/oscillator systems.

Conventions
-----------
Basis ordering follows the tensor-factor order of the HilbertSpace.  The
qubit basis is (|0>, |1>) with

    sigma_z = |1><1| - |0><0|,   sigma_x = |0><1| + |1><0|,
    sigma_y = i|0><1| - i|1><0|,

so [sigma_x, sigma_y] = 2i sigma_z and cyclic.  Dynamics generators are
skew-hermitian, A = -iH with hbar = 1; Hamiltonians are kept hermitian and
converted once at system assembly (`Operator.skew`).  Truncated ladder
operators are the top-left N x N blocks of the infinite matrices:
b|n> = sqrt(n)|n-1>, b†|n> = sqrt(n+1)|n+1>, both cut off at level N-1.

Real-linear rank ("realified" rank) is used throughout: a complex vector
and its i-multiple count as two independent real directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .spans import RealSpan, SpanBlowupError, close_real_span, realify, unrealify

DEFAULT_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class ClosureBlowupError(RuntimeError):
    """Lie/ad closure exceeded its dimension bound (finite-truncation signal)."""

    def __init__(self, rank: int, max_dim: int):
        super().__init__(f"closure dimension {rank} exceeded max_dim={max_dim}")
        self.rank = rank
        self.max_dim = max_dim


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labeled finite-dimensional factors."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((str(l), int(d)) for l, d in self.factors))
        labels = [l for l, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels: {labels}")
        if any(d < 1 for _, d in self.factors):
            raise ValueError("factor dimensions must be positive")

    @property
    def total_dim(self) -> int:
        out = 1
        for _, d in self.factors:
            out *= d
        return out

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.factors)

    def dim(self, label: str) -> int:
        for l, d in self.factors:
            if l == label:
                return d
        raise KeyError(f"unknown factor label {label!r}")


def _classify(matrix: np.ndarray, tol: float) -> str:
    scale = max(1.0, np.abs(matrix).max())
    if np.abs(matrix - matrix.conj().T).max() <= tol * scale:
        return "hermitian"          # the zero matrix lands here
    if np.abs(matrix + matrix.conj().T).max() <= tol * scale:
        return "skew_hermitian"
    return "general"


@dataclass
class Operator:
    """Dense operator on a HilbertSpace with a hermiticity role tag."""

    space: HilbertSpace
    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.space.total_dim
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({n}, {n})")
        if self.kind not in ("hermitian", "skew_hermitian", "general"):
            raise ValueError(f"unknown kind {self.kind!r}")
        scale = max(1.0, np.abs(self.matrix).max())
        if self.kind == "hermitian":
            if np.abs(self.matrix - self.matrix.conj().T).max() > DEFAULT_TOL * scale:
                raise ValueError("matrix tagged hermitian is not hermitian")
        elif self.kind == "skew_hermitian":
            if np.abs(self.matrix + self.matrix.conj().T).max() > DEFAULT_TOL * scale:
                raise ValueError("matrix tagged skew_hermitian is not skew-hermitian")

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T, self.kind)

    def skew(self) -> "Operator":
        """Return -i * self; maps a hermitian Hamiltonian to its generator."""
        kind = "skew_hermitian" if self.kind == "hermitian" else "general"
        if self.kind == "skew_hermitian":
            kind = "hermitian"
        return Operator(self.space, -1j * self.matrix, kind)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        kind = self.kind if self.kind == other.kind else "general"
        return Operator(self.space, self.matrix + other.matrix, kind)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        kind = self.kind if self.kind == other.kind else "general"
        return Operator(self.space, self.matrix - other.matrix, kind)

    def __mul__(self, c: float) -> "Operator":
        kind = self.kind if np.isrealobj(np.asarray(c)) else "general"
        return Operator(self.space, c * self.matrix, kind)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.space, self.matrix @ other.matrix, "general")


def _require_same_space(a: Operator, b: Operator) -> None:
    if a.space != b.space:
        raise ValueError("operators live on different Hilbert spaces")


@dataclass
class StateVector:
    """Unit-norm pure state on a HilbertSpace."""

    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = self.space.total_dim
        if self.amplitudes.shape != (n,):
            raise ValueError(f"amplitude length {self.amplitudes.shape} != {n}")
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"state norm {nrm} is not 1 (normalize first)")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def normalize(space: HilbertSpace, amplitudes: np.ndarray) -> StateVector:
    amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
    nrm = np.linalg.norm(amplitudes)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return StateVector(space, amplitudes / nrm)


def basis_state(space: HilbertSpace, occupations: Sequence[int]) -> StateVector:
    """Product basis state |n_1 n_2 ...> in factor order."""
    if len(occupations) != len(space.factors):
        raise ValueError("need one occupation per factor")
    idx = 0
    for (label, d), n in zip(space.factors, occupations):
        if not 0 <= n < d:
            raise ValueError(f"occupation {n} out of range for factor {label!r}")
        idx = idx * d + n
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[idx] = 1.0
    return StateVector(space, amps)


def random_state(space: HilbertSpace, rng: np.random.Generator) -> StateVector:
    z = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    return normalize(space, z)


def kron_factors(space: HilbertSpace, blocks: dict[str, np.ndarray]) -> np.ndarray:
    """Kronecker product over factors, identity where no block is given."""
    for label in blocks:
        if label not in space.labels:
            raise ValueError(f"unknown factor label {label!r}")
    out = np.array([[1.0 + 0j]])
    for label, d in space.factors:
        blk = blocks.get(label, np.eye(d, dtype=complex))
        blk = np.asarray(blk, dtype=complex)
        if blk.shape != (d, d):
            raise ValueError(f"block for {label!r} has shape {blk.shape}, need ({d}, {d})")
        out = np.kron(out, blk)
    return out


def embed_product(space: HilbertSpace, blocks: dict[str, np.ndarray], kind: str | None = None) -> Operator:
    """Operator acting as the given blocks on named factors, identity elsewhere."""
    mat = kron_factors(space, blocks)
    return Operator(space, mat, kind if kind is not None else _classify(mat, DEFAULT_TOL))


def tensor_embed(op: Operator, slot: str, space: HilbertSpace) -> Operator:
    """Embed a single-factor operator as I x ... x op x ... x I.

    Parameters
    ----------
    op : Operator
        Operator whose total dimension equals the named factor's dimension.
    slot : str
        Label of the factor the operator acts on.
    space : HilbertSpace
        Target space.
    """
    if slot not in space.labels:
        raise ValueError(f"unknown slot label {slot!r}")
    if op.dim != space.dim(slot):
        raise ValueError(f"operator dim {op.dim} != factor dim {space.dim(slot)}")
    return Operator(space, kron_factors(space, {slot: op.matrix}), op.kind)


def commutator(a: Operator, b: Operator) -> Operator:
    """Matrix commutator [a, b] = ab - ba with hermiticity tracking."""
    _require_same_space(a, b)
    mat = a.matrix @ b.matrix - b.matrix @ a.matrix
    if a.kind == "hermitian" and b.kind == "hermitian":
        kind = "skew_hermitian"       # [H, H'] = i * hermitian
    elif a.kind == "skew_hermitian" and b.kind == "skew_hermitian":
        kind = "skew_hermitian"
    elif {a.kind, b.kind} == {"hermitian", "skew_hermitian"}:
        kind = "hermitian"
    else:
        kind = "general"
    return Operator(a.space, mat, kind)


def ladder_pair(n_levels: int, space: HilbertSpace | None = None) -> tuple[Operator, Operator]:
    """Truncated lowering/raising pair (b, b†) on an n_levels oscillator.

    b|n> = sqrt(n)|n-1> and b†|n> = sqrt(n+1)|n+1>, zero past the top
    level; b† is exactly the conjugate transpose of b, so [b, b†] = I on
    levels 0..n_levels-2 and the truncation shows up only at the top.
    """
    if n_levels < 2:
        raise ValueError("need at least two oscillator levels")
    if space is None:
        space = HilbertSpace((("env", n_levels),))
    elif space.total_dim != n_levels:
        raise ValueError("space dimension does not match n_levels")
    b = np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), 1).astype(complex)
    return Operator(space, b, "general"), Operator(space, b.conj().T, "general")


def field_quadrature(w: complex, n_levels: int, space: HilbertSpace | None = None) -> Operator:
    """Hermitian bath quadrature w b† + w* b on an n_levels oscillator."""
    b, bd = ladder_pair(n_levels, space)
    mat = w * bd.matrix + np.conj(w) * b.matrix
    return Operator(b.space, mat, "hermitian")


def number_operator(n_levels: int, space: HilbertSpace | None = None) -> Operator:
    b, bd = ladder_pair(n_levels, space)
    return Operator(b.space, bd.matrix @ b.matrix, "hermitian")


def matrix_exp_apply(a: Operator, t: float, xi: StateVector, tol: float = DEFAULT_TOL) -> StateVector:
    """Apply exp(t a) to a state; a must be skew-hermitian (unitary flow).

    Uses the eigendecomposition of the hermitian matrix i*a, so norms are
    preserved to machine precision (checked against 1e-10).
    """
    if a.space != xi.space:
        raise ValueError("operator and state spaces differ")
    scale = max(1.0, np.abs(a.matrix).max())
    if np.abs(a.matrix + a.matrix.conj().T).max() > tol * scale:
        raise ValueError("generator is not skew-hermitian; propagation would not be unitary")
    w, v = np.linalg.eigh(1j * a.matrix)
    out = v @ (np.exp(-1j * w * t) * (v.conj().T @ xi.amplitudes))
    nrm = np.linalg.norm(out)
    if abs(nrm - 1.0) > 1e-10:
        raise RuntimeError(f"propagation lost unitarity: norm {nrm}")
    return StateVector(xi.space, out)


def realified_rank(vectors: Iterable[np.ndarray], tol: float = DEFAULT_TOL) -> int:
    """Rank over the reals of complex vectors realified to [Re | Im] rows."""
    rows = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if not rows:
        return 0
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise ValueError("vectors have mixed dimensions")
    m = realify(np.array(rows))
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _vec(op: Operator) -> np.ndarray:
    return op.matrix.ravel()


def _unvec(space: HilbertSpace, v: np.ndarray, tol: float = DEFAULT_TOL) -> Operator:
    n = space.total_dim
    mat = v.reshape(n, n)
    return Operator(space, mat, _classify(mat, tol))


def ad_map(a: Operator) -> "np.ndarray":
    """Matrix of X -> [a, X] on row-major vectorized operators."""
    n = a.dim
    eye = np.eye(n, dtype=complex)
    return np.kron(a.matrix, eye) - np.kron(eye, a.matrix.T)


def lie_closure(generators: Sequence[Operator], max_dim: int, tol: float = DEFAULT_TOL) -> list[Operator]:
    """Real basis of the smallest commutator-closed real span of the generators.

    Closes the span under ad of each generator (left-normed bracket words
    span the generated Lie algebra, so this reaches the full closure) and
    raises ClosureBlowupError when the real dimension exceeds max_dim --
    the finite-truncation signal for environments whose coupling powers
    keep producing new directions.
    """
    if not generators:
        return []
    space = generators[0].space
    for g in generators:
        _require_same_space(generators[0], g)
        if _classify(g.matrix, tol) != "skew_hermitian":
            raise ValueError("lie_closure expects skew-hermitian generators")
    seeds = np.array([_vec(g) / g.norm() for g in generators if g.norm() > 0])
    if seeds.size == 0:
        return []
    ads = [ad_map(g * (1.0 / g.norm())) for g in generators if g.norm() > 0]
    maps = [lambda batch, m=m: batch @ m.T for m in ads]
    try:
        _, basis, _ = close_real_span(seeds, maps, tol=tol, max_dim=max_dim)
    except SpanBlowupError as exc:
        raise ClosureBlowupError(exc.rank, exc.max_dim) from exc
    return [_unvec(space, row, tol) for row in basis]
