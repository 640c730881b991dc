import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import hardy_pair
from woldkit.estimators import MultiWoldDecomposer, WoldDecomposer
from woldkit.fixtures import FixtureSpec, build_fixture, circular_shift, random_unitary, truncated_shift
from woldkit.subspace import subspace_distance


def mixed_operator(seed=2):
    V = np.zeros((5, 5), dtype=complex)
    V[:3, :3] = truncated_shift(3)
    V[3:, 3:] = random_unitary(2, seed)
    return V, np.diag([1.0, 1, 0, 1, 1])


def test_params_and_clone():
    est = WoldDecomposer(rank_tol=1e-9, max_power=12)
    assert est.get_params() == {"rank_tol": 1e-9, "residual_tol": 1e-8,
                                "stabilization_window": 2, "max_power": 12}
    c = clone(est.set_params(residual_tol=1e-7))
    assert c.get_params()["residual_tol"] == 1e-7
    assert MultiWoldDecomposer(depth=2).get_params()["depth"] == 2


def test_not_fitted():
    with pytest.raises(NotFittedError):
        WoldDecomposer().transform(np.eye(3))


def test_wold_attributes():
    V, P = mixed_operator()
    est = WoldDecomposer().fit(V, interior=P)
    assert est.classification_ == "Mixed" and est.multiplicity_ == 1
    assert (est.shift_part_.dim, est.unitary_part_.dim) == (3, 2)
    assert est.basis_.shape == (5, 5)


def test_transform_round_trip_and_predict():
    V, P = mixed_operator()
    est = WoldDecomposer().fit(V, interior=P)
    Y = np.random.default_rng(0).standard_normal((6, 5))
    assert np.allclose(est.inverse_transform(est.transform(Y)), Y)
    # e_0 lies in the shift block, e_4 in the unitary block
    assert list(est.predict(np.eye(5)[[0, 4]])) == [0, 1]
    assert np.allclose(est.block_energy(Y).sum(axis=1), (np.abs(Y) ** 2).sum(axis=1))


def test_transform_wrong_width():
    est = WoldDecomposer().fit(circular_shift(4))
    with pytest.raises(ValueError):
        est.transform(np.ones((2, 3)))


def test_multi_estimator_matches_function():
    spec = FixtureSpec.simple(2, {(1, 2): 1, (1,): 1, (): 1}, (2, 2), (2, 2), scramble_seed=1)
    t, oracle = build_fixture(spec)
    est = MultiWoldDecomposer(method="recursive").fit(t)
    assert est.block_dims_ == oracle.block_dims
    for A, S in oracle.block_spaces.items():
        assert subspace_distance(est.decomposition_.space(A), S) <= 1e-8
    stack = np.stack(t.operators)
    est2 = MultiWoldDecomposer().fit(stack, interior=t.interior)
    assert est2.block_dims_ == oracle.block_dims


def test_multi_fit_transform():
    est = MultiWoldDecomposer()
    Z = est.fit(hardy_pair()).transform(np.eye(9))
    assert est.labels_[0] == (1, 2) and Z.shape == (9, 9)
    assert np.allclose(Z @ Z.conj().T, np.eye(9))


def test_bad_method():
    with pytest.raises(ValueError):
        MultiWoldDecomposer(method="fast").fit(hardy_pair())
