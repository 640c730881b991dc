import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import coordinate_span, random_subspace, tensor_pair
from woldkit.exceptions import DomainError, GateError, InputError
from woldkit.fixtures import (
    FixtureSpec, build_fixture, circular_shift, random_spec, random_unitary, truncated_shift,
)
from woldkit.multi import subsets, wandering_intersection
from woldkit.operators import (
    IsometryTuple, check_gate, defect_report, invariance_defect, reducing_defect, restrict,
)
from woldkit.subspace import Subspace


class TestDefects:
    def test_tensor_pair_exact(self):
        J = truncated_shift(3)
        d = tensor_pair(J, J).defects
        assert d.commutation_defect == 0.0
        assert d.double_commutation_defect == 0.0

    def test_single_unitary(self):
        d = IsometryTuple((random_unitary(5, 1),)).defects
        assert d.isometry_defect[0] <= 1e-14

    def test_jordan_pair(self):
        J = truncated_shift(3)
        # J J* - J* J = diag(-1, 0, 1) by hand
        assert np.array_equal(J @ J.T - J.T @ J, np.diag([-1.0, 0.0, 1.0]))
        d = IsometryTuple((J, J)).defects
        assert d.commutation_defect == 0.0
        assert d.double_commutation_defect == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(GateError) as info:
            check_gate(IsometryTuple((J, J)))
        assert info.value.report.double_commutation_defect == pytest.approx(1.0, abs=1e-12)

    def test_truncated_shift_interior(self):
        J = truncated_shift(4)
        t = IsometryTuple((J,), np.diag([1.0, 1, 1, 0]))
        assert t.defects.isometry_defect[0] == 1.0
        assert t.defects.interior_isometry_defect[0] == 0.0
        assert t.defects.passes()

    def test_to_dict(self):
        d = defect_report(IsometryTuple((circular_shift(3), circular_shift(3)))).to_dict()
        assert set(d) == {"isometry_defect", "interior_isometry_defect",
                          "commutation_defect", "double_commutation_defect"}

    def test_mismatched_sizes(self):
        with pytest.raises(InputError):
            IsometryTuple((np.eye(2), np.eye(3)))

    def test_operators_read_only(self):
        t = IsometryTuple((np.eye(2),))
        with pytest.raises(ValueError):
            t[0][0, 0] = 2


class TestReducing:
    def test_full_space(self):
        assert reducing_defect(truncated_shift(3), Subspace.full(3)) == 0.0

    def test_axis_under_shift(self):
        assert reducing_defect(truncated_shift(3), coordinate_span([0], 3)) == 1.0

    def test_proposition_on_tensor_fixture(self):
        J = truncated_shift(3)
        t = tensor_pair(J, J)
        for A, j in (((1,), 2), ((2,), 1)):
            W = wandering_intersection(t, A)
            assert reducing_defect(t[j - 1], W) <= 1e-10


class TestRestrict:
    def test_shift_tail(self):
        R = restrict(truncated_shift(3), coordinate_span([1, 2], 3))
        assert np.allclose(R, truncated_shift(2))

    def test_full(self):
        V = random_unitary(4, 3)
        assert np.allclose(restrict(V, Subspace.full(4)), V)

    def test_not_invariant(self):
        with pytest.raises(DomainError) as info:
            restrict(truncated_shift(3), coordinate_span([0], 3))
        assert info.value.value == pytest.approx(1.0)

    def test_scrambled_block_singular_values(self):
        spec = FixtureSpec.simple(2, {(1,): 1, (2,): 1, (): 1}, (3, 3), (2, 2), scramble_seed=5)
        t, oracle = build_fixture(spec)
        plain, _ = build_fixture(FixtureSpec(spec.n, spec.blocks))
        lo = 0
        for A in subsets(2):
            d = oracle.block_dims[A]
            if not d:
                continue
            R = restrict(t[0], oracle.block_spaces[A])
            ref = plain[0][lo:lo + d, lo:lo + d]
            assert np.allclose(np.linalg.svd(R, compute_uv=False),
                               np.linalg.svd(ref, compute_uv=False), atol=1e-12)
            lo += d

    def test_size_mismatch(self):
        with pytest.raises(InputError):
            restrict(np.eye(3), Subspace.full(4))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_defects_conjugation_invariant(seed, n):
    t, _ = build_fixture(random_spec(n, seed, scramble=False, max_dim=80))
    Q = random_unitary(t.dim, seed + 1)
    a, b = t.defects, t.conjugate(Q).defects
    assert np.allclose(a.isometry_defect, b.isometry_defect, atol=1e-12)
    assert np.allclose(a.interior_isometry_defect, b.interior_isometry_defect, atol=1e-12)
    assert abs(a.commutation_defect - b.commutation_defect) <= 1e-12
    assert abs(a.double_commutation_defect - b.double_commutation_defect) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.booleans())
def test_built_fixtures_doubly_commute(seed, n, scramble):
    t, _ = build_fixture(random_spec(n, seed, scramble=scramble, max_dim=120))
    assert t.defects.double_commutation_defect <= 1e-12
    assert t.defects.passes()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_reducing_defect_adjoint_symmetric(seed, d):
    V = truncated_shift(6) if seed % 2 else random_unitary(6, seed)
    S = random_subspace(6, d, seed)
    assert abs(reducing_defect(V, S) - reducing_defect(V.conj().T, S)) <= 1e-12
    assert invariance_defect(V, S) <= reducing_defect(V, S)
