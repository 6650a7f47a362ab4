"""Pointwise tangent-space machinery for the invariant-distribution tests.

Everything here is evaluated at a specific state xi; field-level claims
are probed by sampling states.  The complex output y = <xi|C|xi> counts
as two real outputs, so its differential contributes two real covectors

    d(Re y)(v) = Re <(C + C†) xi | v>,      d(Im y) = d(Re y) of (-iC),

and tangent vectors are compared in the realified sense ([Re | Im] in
R^{2n}).  Linear fields x -> A x have field bracket [Ax, Bx] = (BA-AB)x;
all downstream uses are span-membership tests, which are sign-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import Operator, StateVector, commutator, realified_rank
from .models import ControlSystem
from .observation import Verdict
from .spans import RealSpan, close_real_span, realified_nullspace, realify, unrealify


class NonRegularPointError(RuntimeError):
    """The G-annihilator changed dimension across nearby states."""


@dataclass
class TangentVector:
    base: StateVector
    components: np.ndarray

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=complex).ravel()
        if self.components.shape[0] != self.base.space.total_dim:
            raise ValueError("tangent components do not match the base space")

    def realified(self) -> np.ndarray:
        return realify(self.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


@dataclass
class DistributionBasis:
    """Realified-independent tangent vectors at a base state."""

    base: StateVector
    vectors: list[TangentVector]
    generating_ops: list[Operator] | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vectors:
            rank = realified_rank([v.components for v in self.vectors])
            if rank != len(self.vectors):
                raise ValueError(f"vectors are dependent: rank {rank} < {len(self.vectors)}")

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def matrix(self) -> np.ndarray:
        n = self.base.space.total_dim
        if not self.vectors:
            return np.zeros((0, 2 * n))
        return np.array([v.realified() for v in self.vectors])

    def residual(self, v: np.ndarray | TangentVector, tol: float = 1e-9) -> float:
        comp = v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=complex)
        span = RealSpan(2 * self.base.space.total_dim, tol=tol)
        for row in self.matrix():
            span.add(row)
        return span.residual(realify(comp.ravel()))

    def contains(self, v, tol: float = 1e-9) -> bool:
        return self.residual(v, tol) < tol


@dataclass
class CodistributionBasis:
    """Quadratic-form generators and their realized covectors at a state."""

    base: StateVector
    quadratic_generators: list[Operator]
    realized_covectors: np.ndarray
    details: dict = field(default_factory=dict)
    tol: float = 1e-9

    def __post_init__(self):
        self.realized_covectors = np.atleast_2d(np.asarray(self.realized_covectors, dtype=float))

    @property
    def rank(self) -> int:
        w = self.realized_covectors
        if w.size == 0:
            return 0
        s = np.linalg.svd(w, compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > self.tol * max(s[0], 1.0)))

    def delta_star(self) -> DistributionBasis:
        """Orthocomplement of the realized covectors (already inside ker dy)."""
        n = self.base.space.total_dim
        rows = realified_nullspace(self.realized_covectors, 2 * n, tol=self.tol)
        vecs = [TangentVector(self.base, unrealify(r)) for r in rows]
        return DistributionBasis(self.base, vecs, details={"from": "codistribution"})


def eval_field(a: Operator, xi: StateVector) -> TangentVector:
    """Value A xi of the linear vector field generated by skew-hermitian A."""
    if a.space != xi.space:
        raise ValueError("operator and state spaces differ")
    if a.kind != "skew_hermitian":
        raise ValueError("dynamics fields are generated by skew-hermitian operators")
    return TangentVector(xi, a.matrix @ xi.amplitudes)


def bracket_linear_fields(a: Operator, b: Operator) -> Operator:
    """Generator of the field bracket of x -> Ax and x -> Bx, namely BA - AB."""
    return commutator(b, a)


def fd_field_bracket(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """Central-difference Lie bracket [f, g](x) = Dg f - Df g on the realified state."""
    xr = realify(np.asarray(x, dtype=complex))

    def lift(fun):
        return lambda r: realify(fun(unrealify(r)))

    fr, gr = lift(f), lift(g)

    def jtimes(fun, direction):
        return (fun(xr + h * direction) - fun(xr - h * direction)) / (2 * h)

    out = jtimes(gr, fr(xr)) - jtimes(fr, gr(xr))
    return unrealify(out)


def output_covectors(xi: StateVector, c_op: Operator) -> np.ndarray:
    """The two real covectors d(Re y), d(Im y) of y = <xi|C|xi>, realified."""
    rows = []
    for mat in (c_op.matrix, -1j * c_op.matrix):
        rows.append(realify((mat + mat.conj().T) @ xi.amplitudes))
    return np.array(rows)


def covector_of(op_matrix: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Realified d(Re <xi|M|xi>) at xi for the quadratic generator M."""
    return realify((op_matrix + op_matrix.conj().T) @ xi)


def kernel_dy(xi: StateVector, c_op: Operator, tol: float = 1e-9) -> DistributionBasis:
    """Joint kernel of d(Re y) and d(Im y); real dimension >= 2n - 2."""
    n = xi.space.total_dim
    rows = output_covectors(xi, c_op)
    null = realified_nullspace(rows, 2 * n, tol=tol)
    vecs = [TangentVector(xi, unrealify(r)) for r in null]
    return DistributionBasis(xi, vecs, details={"codim": 2 * n - len(vecs)})


def _lie_step_map(a: Operator) -> np.ndarray:
    """Matrix of M -> M A + A† M on row-major vectorized operators."""
    n = a.dim
    eye = np.eye(n, dtype=complex)
    return np.kron(eye, a.matrix.T) + np.kron(a.matrix.conj().T, eye)


def _system_generators(sys: ControlSystem) -> list[Operator]:
    return [sys.drift, *sys.controls]


def omega_generator_basis(
    sys: ControlSystem, tol: float = 1e-9, max_gens: int | None = None
) -> tuple[list[Operator], dict]:
    """State-independent quadratic-generator closure for omega_closure_open."""
    n = sys.space.total_dim
    if max_gens is None:
        max_gens = 2 * n * n
    maps_m = [_lie_step_map(a) for a in _system_generators(sys)]
    maps = [lambda batch, m=m: batch @ m.T for m in maps_m]
    c = sys.output_op.matrix.ravel()
    c = c / np.linalg.norm(c)
    seeds = np.array([c, -1j * c])
    span, basis, rounds = close_real_span(seeds, maps, tol=tol, max_dim=max_gens)
    ops = [Operator(sys.space, row.reshape(n, n)) for row in basis]
    return ops, {"rounds": rounds, "generator_rank": span.rank}


def omega_closure_open(
    sys: ControlSystem,
    xi: StateVector,
    tol: float = 1e-9,
    max_gens: int | None = None,
    generators: tuple[list[Operator], dict] | None = None,
) -> CodistributionBasis:
    """Codistribution closure Omega <- Omega + sum_A L_{K_A} Omega.

    Closes the real span of quadratic generators, seeded with C and -iC
    (the two real output components), under M -> M A + A† M for the drift
    and every control; the realized covectors at xi then yield
    Delta* = (Omega*)^perp.  Pass `generators` (from omega_generator_basis)
    to amortize the closure across states.
    """
    if generators is None:
        generators = omega_generator_basis(sys, tol=tol, max_gens=max_gens)
    ops, details = generators
    covs = np.array([covector_of(op.matrix, xi.amplitudes) for op in ops])
    return CodistributionBasis(xi, ops, covs, details=dict(details), tol=tol)


def control_field_matrix(sys: ControlSystem, xi: StateVector) -> np.ndarray:
    """Realified control-field values at xi, one row per control."""
    return np.array([realify(a.matrix @ xi.amplitudes) for a in sys.controls])


def _perturbed_states(xi: StateVector, n_perturb: int, radius: float, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_perturb):
        z = xi.amplitudes + radius * (
            rng.normal(size=xi.amplitudes.shape) + 1j * rng.normal(size=xi.amplitudes.shape)
        )
        out.append(z / np.linalg.norm(z))
    return out


def omega_closure_closed(
    sys: ControlSystem,
    xi: StateVector,
    tol: float = 1e-9,
    n_perturb: int = 8,
    radius: float = 1e-3,
    seed: int = 0,
    max_rounds: int | None = None,
) -> CodistributionBasis:
    """Closed-loop codistribution: only the part of Omega annihilating the
    control span G feeds the Lie-derivative step.

    The intersection Omega ∩ G^perp is taken over constant-real-coefficient
    combinations of the current quadratic generators whose realized
    covectors annihilate the control fields at xi and at n_perturb nearby
    states; a dimension disagreement between the two raises
    NonRegularPointError instead of silently picking either answer.
    """
    n = sys.space.total_dim
    if max_rounds is None:
        max_rounds = 2 * n * n
    maps_m = [_lie_step_map(a) for a in _system_generators(sys)]
    c = sys.output_op.matrix.ravel()
    c = c / np.linalg.norm(c)
    gens = [c, -1j * c]
    span = RealSpan(2 * n * n, tol=tol)
    for gvec in gens:
        span.add(realify(gvec))

    states = [xi.amplitudes] + _perturbed_states(xi, n_perturb, radius, seed)
    g_fields = {
        id_s: np.array([realify(a.matrix @ s) for a in sys.controls]) for id_s, s in enumerate(states)
    }

    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        mats = [g.reshape(n, n) for g in gens]
        if sys.n_controls:
            pair_blocks = []
            for id_s, s in enumerate(states):
                w = np.array([covector_of(m, s) for m in mats])  # (m, 2n)
                pair_blocks.append(g_fields[id_s] @ w.T)         # (r, m)
            null_at_base = realified_nullspace(pair_blocks[0], len(gens), tol=tol)
            null_all = realified_nullspace(np.vstack(pair_blocks), len(gens), tol=tol)
            if null_at_base.shape[0] != null_all.shape[0]:
                raise NonRegularPointError(
                    f"Omega ∩ G^perp dimension {null_at_base.shape[0]} at the base state "
                    f"but {null_all.shape[0]} across perturbed states"
                )
            combos = null_all
        else:
            combos = np.eye(len(gens))
        if combos.shape[0] == 0:
            break
        g_arr = np.array(gens)
        selected = combos @ g_arr                                # (k, n^2) complex
        candidates = np.vstack([selected @ m.T for m in maps_m])
        new = span.add_batch(realify(candidates))
        if new.shape[0] == 0:
            break
        gens.extend(unrealify(new))
    ops = [Operator(sys.space, g.reshape(n, n)) for g in gens]
    covs = np.array([covector_of(op.matrix, xi.amplitudes) for op in ops])
    covs = np.vstack([covs, output_covectors(xi, sys.output_op)])
    return CodistributionBasis(
        xi, ops, covs, details={"rounds": rounds, "generator_rank": span.rank}, tol=tol
    )


def _complex_map_realified(t: np.ndarray) -> np.ndarray:
    """Realified matrix of a complex-linear map given as a complex matrix."""
    return np.block([[t.real, -t.imag], [t.imag, t.real]])


def hermitian_derivative_chain(sys: ControlSystem, tol: float = 1e-9) -> list[list[Operator]]:
    """Hermitian differentials of the iterated output Lie derivatives.

    d(L_{K_w} Re y) at any state is realified(H xi) for a hermitian H, and
    the H's are generated from the output's hermitian parts by ad-chains
    under the drift and controls (taking hermitian parts commutes with
    bracketing against skew generators).  Returns one batch of new
    hermitian operators per chain round, state-independently.
    """
    n = sys.space.total_dim
    c_mat = sys.output_op.matrix
    seeds = [c_mat + c_mat.conj().T, -1j * (c_mat - c_mat.conj().T)]
    span = RealSpan(2 * n * n, tol=tol)
    rounds: list[list[Operator]] = []
    frontier = []
    first = []
    for h in seeds:
        nrm = np.linalg.norm(h)
        if nrm <= tol:
            continue
        h = h / nrm
        if span.add(realify(h.ravel())):
            op = Operator(sys.space, h, "hermitian")
            first.append(op)
            frontier.append(h)
    rounds.append(first)
    gens = [a.matrix for a in _system_generators(sys)]
    while frontier:
        new = []
        new_mats = []
        for h in frontier:
            for a in gens:
                cand = h @ a - a @ h
                nrm = np.linalg.norm(cand)
                if nrm <= tol:
                    continue
                cand = cand / nrm
                if span.add(realify(cand.ravel())):
                    new.append(Operator(sys.space, cand, "hermitian"))
                    new_mats.append(cand)
        if not new:
            break
        rounds.append(new)
        frontier = new_mats
    return rounds


def bruteforce_invariant_distribution(
    sys: ControlSystem,
    xi: StateVector,
    tol: float = 1e-9,
    chains: list[list[Operator]] | None = None,
) -> DistributionBasis:
    """Iterative-removal computation of the maximal invariant distribution.

    Starts from the full pointwise kernel of dy and removes, round by
    round, the directions struck by the next batch of Lie-derivative
    differentials (the removal sets of the invariant-distribution
    algorithm, in their dual-derived hermitian-operator form: naive
    pointwise or global linear-field removal provably over- or
    under-approximates the fixpoint).  Serves as the independent oracle
    for omega_closure_open's Delta*: same limit, different operator
    route, different span machinery, interleaved pointwise removal.
    Pass `chains` (from hermitian_derivative_chain) to amortize across
    states.
    """
    n = sys.space.total_dim
    if chains is None:
        chains = hermitian_derivative_chain(sys, tol)
    x = xi.amplitudes
    basis = realified_nullspace(
        np.array([realify(h.matrix @ x) for h in chains[0]]), 2 * n, tol=tol
    )
    dims = [basis.shape[0]]
    for batch in chains[1:]:
        if basis.shape[0] == 0:
            break
        covs = np.array([realify(h.matrix @ x) for h in batch])
        pair = basis @ covs.T                                    # (dim, k)
        keep = realified_nullspace(pair.T, basis.shape[0], tol=tol)
        if keep.shape[0] < basis.shape[0]:
            basis = keep @ basis
        dims.append(basis.shape[0])
    vectors = [TangentVector(xi, unrealify(r)) for r in basis]
    gen_ops = []
    for r in basis:
        v = unrealify(r)
        gen_ops.append(Operator(sys.space, np.outer(v, x.conj())))
    return DistributionBasis(
        xi,
        vectors,
        generating_ops=gen_ops,
        details={"iteration_dims": dims, "chain_rounds": len(chains)},
    )


def minimal_interaction_distribution(sys: ControlSystem, xi: StateVector, tol: float = 1e-9) -> DistributionBasis:
    """Delta = span{K_I} at xi; errors if the interaction field vanishes there."""
    k_i = eval_field(sys.interaction, xi)
    if k_i.norm() <= tol * max(sys.interaction.norm(), 1.0):
        raise ValueError("interaction field vanishes at this state")
    return DistributionBasis(xi, [k_i], generating_ops=[sys.interaction])


def check_controlled_invariance(
    delta: DistributionBasis,
    sys: ControlSystem,
    include_drift: bool = False,
    tol: float = 1e-9,
):
    """Pointwise controlled-invariance test [K, Delta](xi) ⊂ Delta(xi) + G(xi).

    Brackets of every generating operator with every control generator
    (and the drift when include_drift is set) must realize into the span
    of the distribution and the control fields at the base state.  The
    drift bracket is off by default: the benchmark systems' environment
    self-energy escalates bath-quadrature directions that no finite
    control family contains, and the decouplability accounting treats
    that as a separate recorded diagnostic.
    """
    if delta.generating_ops is None:
        raise ValueError("controlled-invariance test needs generating operators")
    if not delta.generating_ops:
        return Verdict("controlled_invariance", True, details={"vacuous": True})
    xi = delta.base
    n = sys.space.total_dim
    span = RealSpan(2 * n, tol=tol)
    for row in delta.matrix():
        span.add(row)
    for a in sys.controls:
        span.add(realify(a.matrix @ xi.amplitudes))
    gens = list(zip(sys.control_labels, sys.controls))
    if include_drift:
        gens = gens + [("drift", sys.drift)]
    worst = 0.0
    for label, a in gens:
        for d_idx, d_op in enumerate(delta.generating_ops):
            br = bracket_linear_fields(d_op, a)
            val = br.matrix @ xi.amplitudes
            nrm = np.linalg.norm(val)
            if nrm <= tol * max(d_op.norm() * a.norm(), 1.0):
                continue
            res = span.residual(realify(val))
            worst = max(worst, res)
            if res > tol:
                return Verdict(
                    "controlled_invariance",
                    False,
                    witness={"kind": "bracket_outside_span", "generator": label, "delta_index": d_idx, "residual": res},
                )
    return Verdict("controlled_invariance", True, details={"max_residual": worst})
