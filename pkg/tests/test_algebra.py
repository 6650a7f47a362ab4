import numpy as np
import pytest

import qdecouple as qd
from qdecouple.algebra import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z


def op2(mat, kind="general"):
    return qd.Operator(qd.HilbertSpace((("qubit", 2),)), np.asarray(mat, dtype=complex), kind)


def test_pauli_commutation_table():
    # all nine pairwise relations, exact at machine precision
    sig = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
    expected = {
        ("x", "y"): 2j * SIGMA_Z, ("y", "x"): -2j * SIGMA_Z,
        ("y", "z"): 2j * SIGMA_X, ("z", "y"): -2j * SIGMA_X,
        ("z", "x"): 2j * SIGMA_Y, ("x", "z"): -2j * SIGMA_Y,
        ("x", "x"): np.zeros((2, 2)), ("y", "y"): np.zeros((2, 2)), ("z", "z"): np.zeros((2, 2)),
    }
    for (a, b), want in expected.items():
        got = sig[a] @ sig[b] - sig[b] @ sig[a]
        assert np.array_equal(got, np.asarray(want, dtype=complex)), (a, b)


def test_pauli_basis_matches_ketbra_definitions():
    # sigma_z = |1><1| - |0><0|, sigma_x = |0><1| + |1><0|, sigma_y = i|0><1| - i|1><0|
    e0, e1 = np.eye(2, dtype=complex)
    assert np.array_equal(SIGMA_Z, np.outer(e1, e1) - np.outer(e0, e0))
    assert np.array_equal(SIGMA_X, np.outer(e0, e1) + np.outer(e1, e0))
    assert np.array_equal(SIGMA_Y, 1j * np.outer(e0, e1) - 1j * np.outer(e1, e0))


def test_tensor_commutator_identity_200_quadruples():
    # [A x B, C x D] = CA x [B, D] + [A, C] x BD
    rng = np.random.default_rng(42)
    for _ in range(200):
        a, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
        b, d = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2))
        lhs = np.kron(a, b) @ np.kron(c, d) - np.kron(c, d) @ np.kron(a, b)
        rhs = np.kron(c @ a, b @ d - d @ b) + np.kron(a @ c - c @ a, b @ d)
        assert np.abs(lhs - rhs).max() < 1e-12


class TestHilbertSpace:
    def test_total_dim_and_labels(self):
        sp = qd.HilbertSpace((("qubit1", 2), ("qubit2", 2), ("env", 3)))
        assert sp.total_dim == 12
        assert sp.labels == ("qubit1", "qubit2", "env")
        assert sp.dim("env") == 3

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            qd.HilbertSpace((("q", 2), ("q", 3)))


class TestOperatorValidation:
    def test_kind_mismatch_rejected(self):
        with pytest.raises(ValueError):
            op2(SIGMA_X, kind="skew_hermitian")

    def test_zero_matrix_accepts_both_kinds(self):
        op2(np.zeros((2, 2)), kind="hermitian")
        op2(np.zeros((2, 2)), kind="skew_hermitian")

    def test_skew_conversion(self):
        a = op2(SIGMA_X, kind="hermitian").skew()
        assert a.kind == "skew_hermitian"
        assert np.allclose(a.matrix, -1j * SIGMA_X)


class TestTensorEmbed:
    def test_identity_padding(self):
        sp = qd.HilbertSpace((("qubit1", 2), ("qubit2", 2)))
        emb = qd.tensor_embed(op2(SIGMA_Z, "hermitian"), "qubit1", sp)
        assert np.allclose(emb.matrix, np.kron(SIGMA_Z, IDENTITY_2))
        assert emb.kind == "hermitian"

    def test_identity_operator_gives_identity(self):
        sp = qd.HilbertSpace((("qubit", 2), ("env", 3)))
        emb = qd.tensor_embed(op2(np.eye(2), "hermitian"), "qubit", sp)
        assert np.allclose(emb.matrix, np.eye(6))

    def test_action_on_product_state(self):
        # sigma_x on qubit2 of qubit x qubit x env(3): |0>|1>|2> -> |0>|0>|2>
        sp = qd.HilbertSpace((("qubit1", 2), ("qubit2", 2), ("env", 3)))
        emb = qd.tensor_embed(op2(SIGMA_X, "hermitian"), "qubit2", sp)
        psi = qd.basis_state(sp, (0, 1, 2))
        out = emb.matrix @ psi.amplitudes
        assert np.allclose(out, qd.basis_state(sp, (0, 0, 2)).amplitudes)

    def test_unknown_slot_and_dim_mismatch(self):
        sp = qd.HilbertSpace((("qubit", 2), ("env", 3)))
        with pytest.raises(ValueError):
            qd.tensor_embed(op2(SIGMA_X), "nope", sp)
        with pytest.raises(ValueError):
            qd.tensor_embed(op2(SIGMA_X), "env", sp)


class TestCommutator:
    def test_sigma_xy(self):
        got = qd.commutator(op2(SIGMA_X, "hermitian"), op2(SIGMA_Y, "hermitian"))
        assert np.allclose(got.matrix, 2j * SIGMA_Z)
        assert got.kind == "skew_hermitian"  # i times hermitian

    def test_self_commutator_vanishes(self):
        a = op2(SIGMA_X + 0.3 * SIGMA_Z, "hermitian")
        assert qd.commutator(a, a).norm() == 0.0

    def test_space_mismatch(self):
        a = op2(SIGMA_X)
        b = qd.Operator(qd.HilbertSpace((("env", 3),)), np.eye(3, dtype=complex))
        with pytest.raises(ValueError):
            qd.commutator(a, b)


class TestLadder:
    def test_actions(self):
        b, bd = qd.ladder_pair(4)
        for n in range(1, 4):
            e = np.zeros(4); e[n] = 1
            assert np.allclose(b.matrix @ e, np.sqrt(n) * np.eye(4)[n - 1])
        e0 = np.eye(4)[0]
        assert np.allclose(b.matrix @ e0, 0)           # vacuum annihilation
        for n in range(3):
            e = np.eye(4)[n]
            assert np.allclose(bd.matrix @ e, np.sqrt(n + 1) * np.eye(4)[n + 1])
        assert np.allclose(bd.matrix @ np.eye(4)[3], 0)  # truncation boundary

    def test_dagger_relation_and_truncated_ccr(self):
        b, bd = qd.ladder_pair(5)
        assert np.array_equal(bd.matrix, b.matrix.conj().T)
        ccr = b.matrix @ bd.matrix - bd.matrix @ b.matrix
        assert np.allclose(ccr[:4, :4], np.eye(5)[:4, :4])   # identity below the top
        assert not np.allclose(ccr[4, 4], 1.0)               # broken only at the top

    def test_too_few_levels(self):
        with pytest.raises(ValueError):
            qd.ladder_pair(1)


class TestFieldQuadrature:
    def test_w1_n2_is_sigma_x(self):
        f = qd.field_quadrature(1.0, 2)
        assert np.allclose(f.matrix, np.array([[0, 1], [1, 0]]))

    def test_zero_coupling(self):
        assert qd.field_quadrature(0.0, 4).norm() == 0.0

    def test_iw_action_on_level1(self):
        # w=i, N=3: F|1> = i sqrt(2)|2> - i|0>
        f = qd.field_quadrature(1j, 3)
        e1 = np.eye(3)[1]
        assert np.allclose(f.matrix @ e1, np.array([-1j, 0, 1j * np.sqrt(2)]))

    def test_first_power_action_general(self):
        w = 0.3 - 0.7j
        f = qd.field_quadrature(w, 5)
        for n in range(5):
            e = np.zeros(5, dtype=complex); e[n] = 1
            expect = np.zeros(5, dtype=complex)
            if n + 1 < 5:
                expect[n + 1] = w * np.sqrt(n + 1)
            if n - 1 >= 0:
                expect[n - 1] = np.conj(w) * np.sqrt(n)
            assert np.allclose(f.matrix @ e, expect)

    def test_squared_action_on_vacuum(self):
        # F^2|0> = |w|^2 |0> + sqrt(2) w^2 |2>
        w = 0.3 + 0.4j
        f = qd.field_quadrature(w, 3)
        out = f.matrix @ (f.matrix @ np.eye(3)[0])
        assert np.allclose(out, [abs(w) ** 2, 0.0, np.sqrt(2) * w ** 2])


class TestMatrixExpApply:
    def test_zero_generator(self):
        sp = qd.HilbertSpace((("qubit", 2),))
        xi = qd.normalize(sp, [1, 1j])
        out = qd.matrix_exp_apply(qd.Operator(sp, np.zeros((2, 2)), "skew_hermitian"), 3.7, xi)
        assert np.allclose(out.amplitudes, xi.amplitudes)

    def test_pi_pulse_global_phase(self):
        sp = qd.HilbertSpace((("qubit", 2),))
        a = qd.Operator(sp, -1j * SIGMA_X, "skew_hermitian")
        xi = qd.normalize(sp, [0.6, 0.8j])
        out = qd.matrix_exp_apply(a, np.pi, xi)
        assert abs(abs(out.overlap(xi)) - 1.0) < 1e-12
        assert np.allclose(out.amplitudes, -xi.amplitudes)

    def test_norm_preserved_random(self):
        rng = np.random.default_rng(7)
        sp = qd.HilbertSpace((("env", 5),))
        for _ in range(100):
            h = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            h = h + h.conj().T
            a = qd.Operator(sp, -1j * h, "skew_hermitian")
            xi = qd.random_state(sp, rng)
            out = qd.matrix_exp_apply(a, rng.uniform(-3, 3), xi)
            assert abs(out.norm() - 1.0) < 1e-10

    def test_non_skew_rejected(self):
        sp = qd.HilbertSpace((("qubit", 2),))
        xi = qd.normalize(sp, [1, 0])
        with pytest.raises(ValueError):
            qd.matrix_exp_apply(qd.Operator(sp, SIGMA_X, "hermitian"), 1.0, xi)


class TestRealifiedRank:
    def test_iv_doubles(self):
        v = np.array([1.0 + 2j, 0.5])
        assert qd.realified_rank([v, 1j * v]) == 2

    def test_real_scaling_collapses(self):
        v = np.array([1.0 + 2j, 0.5])
        assert qd.realified_rank([v, 2 * v]) == 1

    def test_single_qubit_degenerate_point(self):
        # {-i|0>, i|1>, -|1>, i|0>} has real rank 3
        vs = [np.array([-1j, 0]), np.array([0, 1j]), np.array([0, -1]), np.array([1j, 0])]
        assert qd.realified_rank(vs) == 3

    def test_empty_and_monotone_append(self):
        assert qd.realified_rank([]) == 0
        rng = np.random.default_rng(0)
        vs = [rng.normal(size=4) + 1j * rng.normal(size=4) for _ in range(3)]
        base = qd.realified_rank(vs)
        for _ in range(5):
            w = rng.normal(size=4) + 1j * rng.normal(size=4)
            grown = qd.realified_rank(vs + [w])
            assert base <= grown <= base + 1

    def test_real_scalar_invariance(self):
        rng = np.random.default_rng(1)
        vs = [rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(4)]
        r = qd.realified_rank(vs)
        scaled = [v * s for v, s in zip(vs, [2.0, -0.3, 7.0, -1.0])]
        assert qd.realified_rank(scaled) == r


class TestLieClosure:
    def _skew(self, mat):
        return qd.Operator(qd.HilbertSpace((("qubit", 2),)), -1j * np.asarray(mat, complex), "skew_hermitian")

    def test_su2_closure(self):
        basis = qd.lie_closure([self._skew(SIGMA_X), self._skew(SIGMA_Y)], max_dim=10)
        assert len(basis) == 3
        span = qd.OperatorSpan(basis[0].space, basis)
        assert span.contains(self._skew(SIGMA_Z))

    def test_abelian_single_generator(self):
        basis = qd.lie_closure([self._skew(SIGMA_Z)], max_dim=10)
        assert len(basis) == 1

    def test_environment_power_growth_and_blowup(self):
        # sigma_{x,y} (x) F closures grow with the quadrature powers
        def closure_dim(n_env, max_dim):
            sp = qd.HilbertSpace((("qubit", 2), ("env", n_env)))
            f = qd.field_quadrature(0.3 + 0.1j, n_env).matrix
            gens = [
                qd.Operator(sp, -1j * np.kron(s, f), "skew_hermitian") for s in (SIGMA_X, SIGMA_Y)
            ]
            return len(qd.lie_closure(gens, max_dim=max_dim))

        small = closure_dim(3, 200)
        large = closure_dim(6, 400)
        assert large > small
        with pytest.raises(qd.ClosureBlowupError):
            closure_dim(6, small)
