import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclegames.labeled import (
    CoverageError,
    DimensionError,
    LabelError,
    LabeledOperator,
    LabeledVector,
    ShapeError,
    SubsystemLabel,
    basis_vector,
    contract,
    max_entangled,
    outer,
    tensor,
    vector_sum,
)

from oracles import contract_dense, dense_operator, partial_trace_dense, random_sparse_vector


def lab(name, dim=2):
    return SubsystemLabel(name, dim)


def qubits(*names):
    return tuple(lab(n) for n in names)


class TestBasisVector:
    def test_single(self):
        v = basis_vector([lab("c")], (0,))
        assert v.amplitudes == {(0,): 1.0}

    def test_product(self):
        v = basis_vector(qubits("c", "t"), (1, 0))
        assert v.amplitudes == {(1, 0): 1.0}

    def test_out_of_range(self):
        with pytest.raises(DimensionError):
            basis_vector([lab("c", 3)], (3,))


class TestMaxEntangled:
    def test_qubit_pair(self):
        v = max_entangled(lab("a"), lab("b"))
        assert v.amplitudes == {(0, 0): 1.0, (1, 1): 1.0}
        assert v.norm2() == pytest.approx(2.0)

    def test_scalar_case(self):
        v = max_entangled(lab("a", 1), lab("b", 1))
        assert v.amplitudes == {(0, 0): 1.0}

    def test_mismatched_dims(self):
        with pytest.raises(ShapeError):
            max_entangled(lab("a", 2), lab("b", 3))


class TestTensor:
    def test_basis_product(self):
        v = tensor(basis_vector([lab("c")], (0,)), basis_vector([lab("t")], (1,)))
        assert v.amplitudes == {(0, 1): 1.0}

    def test_spreads_terms(self):
        a = LabeledVector([lab("a")], {(0,): 1.0, (1,): 1.0})
        b = LabeledVector([lab("b")], {(0,): 1.0})
        v = tensor(a, b)
        assert v.amplitudes == {(0, 0): 1.0, (1, 0): 1.0}

    def test_label_collision(self):
        with pytest.raises(LabelError):
            tensor(basis_vector([lab("c")], (0,)), basis_vector([lab("c")], (1,)))

    def test_term_counts_multiply(self):
        rng = np.random.default_rng(5)
        a = random_sparse_vector(rng, qubits("a", "b"), 3)
        c = random_sparse_vector(rng, qubits("c", "d"), 4)
        assert tensor(a, c).term_count() == a.term_count() * c.term_count()


class TestPermute:
    def test_swap(self):
        v = basis_vector(qubits("c", "t"), (0, 1)).permute(["t", "c"])
        assert v.names == ("t", "c")
        assert v.amplitudes == {(1, 0): 1.0}

    def test_identity_order(self):
        v = basis_vector(qubits("c", "t"), (0, 1))
        w = v.permute(["c", "t"])
        assert w.amplitudes == v.amplitudes

    def test_not_a_permutation(self):
        with pytest.raises(LabelError):
            basis_vector(qubits("c", "t"), (0, 1)).permute(["c", "c"])

    def test_contract_invariant_under_permutation(self):
        rng = np.random.default_rng(7)
        subs = qubits("a", "b", "c")
        for _ in range(20):
            v = random_sparse_vector(rng, subs, 5)
            ops = [
                LabeledOperator.from_dense(qubits("a", "b"), _random_herm(rng, 4)),
                LabeledOperator.from_dense(qubits("c"), _random_herm(rng, 2)),
            ]
            base = contract(v, ops)
            order = list(subs)
            rng.shuffle(order)
            permuted = v.permute([s.name for s in order])
            assert contract(permuted, ops) == pytest.approx(base, rel=1e-12, abs=1e-12)


class TestOuter:
    def test_rank_one_projector(self):
        op = outer(basis_vector([lab("c")], (0,)))
        assert op.entries == {((0,), (0,)): 1.0}

    def test_entangled_pair(self):
        op = outer(max_entangled(lab("a"), lab("b")))
        assert len(op.entries) == 4
        for (r, c), val in op.entries.items():
            assert r[0] == r[1] and c[0] == c[1]
            assert val == 1.0

    def test_trace_is_norm2(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            v = random_sparse_vector(rng, qubits("a", "b", "c"), 6)
            assert outer(v).trace() == pytest.approx(v.norm2(), rel=1e-12)


class TestPartialTrace:
    def test_choi_of_identity_is_tp(self):
        op = outer(max_entangled(lab("i"), lab("o")))
        reduced = op.partial_trace(["o"])
        assert reduced.entries == {((0,), (0,)): 1.0, ((1,), (1,)): 1.0}

    def test_trace_all(self):
        op = outer(max_entangled(lab("i"), lab("o")))
        scalar = op.partial_trace(["i", "o"])
        assert scalar.subsystems == ()
        assert scalar.entries == {((), ()): 2.0}

    def test_unknown_label(self):
        op = outer(max_entangled(lab("i"), lab("o")))
        with pytest.raises(LabelError):
            op.partial_trace(["z"])

    def test_factor_rule_against_dense(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            a = LabeledOperator.from_dense(qubits("a1", "a2"), _random_herm(rng, 4))
            b = LabeledOperator.from_dense(qubits("b1", "b2"), _random_herm(rng, 4))
            prod = tensor(a, b)
            reduced = prod.partial_trace(["b1", "b2"])
            expect = dense_operator(a) * dense_operator(b).trace()
            assert np.allclose(dense_operator(reduced), expect, atol=1e-12)

    def test_preserves_trace(self):
        rng = np.random.default_rng(17)
        op = LabeledOperator.from_dense(qubits("a", "b", "c"), _random_herm(rng, 8))
        reduced = op.partial_trace(["b"])
        assert reduced.trace() == pytest.approx(op.trace(), rel=1e-12)

    def test_dense_oracle(self):
        rng = np.random.default_rng(19)
        op = LabeledOperator.from_dense(
            (lab("a", 2), lab("b", 3), lab("c", 2)), _random_herm(rng, 12)
        )
        reduced = op.partial_trace(["b"])
        expect = partial_trace_dense(dense_operator(op), [2, 3, 2], [1])
        assert np.allclose(dense_operator(reduced), expect, atol=1e-12)


class TestContract:
    def test_projector(self):
        v = basis_vector([lab("c")], (0,))
        op = outer(basis_vector([lab("c")], (0,)))
        assert contract(v, [op]) == pytest.approx(1.0)

    def test_norm_through_identity(self):
        v = max_entangled(lab("a"), lab("b"))
        assert contract(v, [LabeledOperator.identity(qubits("a", "b"))]) == pytest.approx(2.0)

    def test_uncovered_label(self):
        v = max_entangled(lab("a"), lab("b"))
        with pytest.raises(CoverageError):
            contract(v, [LabeledOperator.identity(qubits("a"))])

    def test_double_cover(self):
        v = max_entangled(lab("a"), lab("b"))
        with pytest.raises(CoverageError):
            contract(
                v,
                [
                    LabeledOperator.identity(qubits("a", "b")),
                    LabeledOperator.identity(qubits("b")),
                ],
            )

    def test_dimension_mismatch(self):
        v = max_entangled(lab("a"), lab("b"))
        with pytest.raises(CoverageError):
            contract(
                v,
                [
                    LabeledOperator.identity([lab("a", 3)]),
                    LabeledOperator.identity(qubits("b")),
                ],
            )

    def test_against_dense_oracle(self):
        rng = np.random.default_rng(23)
        subs = (lab("a", 2), lab("b", 3), lab("c", 2), lab("d", 2))
        for _ in range(100):
            v = random_sparse_vector(rng, subs, int(rng.integers(1, 9)))
            ops = [
                LabeledOperator.from_dense((subs[0], subs[2]), _random_mat(rng, 4)),
                LabeledOperator.from_dense((subs[1],), _random_mat(rng, 3)),
                LabeledOperator.from_dense((subs[3],), _random_mat(rng, 2)),
            ]
            got = contract(v, ops)
            want = contract_dense(v, ops)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_linear_in_each_op(self):
        rng = np.random.default_rng(29)
        subs = qubits("a", "b")
        for _ in range(25):
            v = random_sparse_vector(rng, subs, 3)
            fixed = LabeledOperator.from_dense((subs[1],), _random_mat(rng, 2))
            op1 = LabeledOperator.from_dense((subs[0],), _random_mat(rng, 2))
            op2 = LabeledOperator.from_dense((subs[0],), _random_mat(rng, 2))
            alpha = complex(rng.normal(), rng.normal())
            mixed = LabeledOperator.from_dense(
                (subs[0],), op1.to_dense() + alpha * op2.to_dense()
            )
            lhs = contract(v, [mixed, fixed])
            rhs = contract(v, [op1, fixed]) + alpha * contract(v, [op2, fixed])
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        n_terms=st.integers(1, 12),
        dims=st.lists(st.integers(1, 3), min_size=1, max_size=4),
    )
    def test_dense_oracle_hypothesis(self, seed, n_terms, dims):
        rng = np.random.default_rng(seed)
        subs = tuple(SubsystemLabel(f"s{i}", d) for i, d in enumerate(dims))
        v = random_sparse_vector(rng, subs, n_terms)
        ops = [LabeledOperator.from_dense((s,), _random_mat(rng, s.dim)) for s in subs]
        assert contract(v, ops) == pytest.approx(contract_dense(v, ops), rel=1e-11, abs=1e-11)


class TestVectorSum:
    def test_merges_and_aligns(self):
        a = basis_vector(qubits("c", "t"), (0, 0))
        b = basis_vector(qubits("t", "c"), (1, 1)).scaled(2.0)
        v = vector_sum([a, b])
        assert v.names == ("c", "t")
        assert v.amplitudes == {(0, 0): 1.0, (1, 1): 2.0}

    def test_cancellation_prunes(self):
        a = basis_vector([lab("c")], (0,))
        b = a.scaled(-1.0)
        assert vector_sum([a, b]).term_count() == 0


class TestValidation:
    def test_duplicate_names_rejected(self):
        with pytest.raises(LabelError):
            LabeledVector(qubits("a", "a"), {(0, 0): 1.0})

    def test_amplitude_pruning(self):
        v = LabeledVector([lab("a")], {(0,): 1e-13, (1,): 1.0})
        assert v.amplitudes == {(1,): 1.0}

    def test_operator_key_bounds(self):
        with pytest.raises(DimensionError):
            LabeledOperator([lab("a")], {((2,), (0,)): 1.0})


def _random_mat(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def _random_herm(rng, dim):
    mat = _random_mat(rng, dim)
    return mat + mat.conj().T
