import numpy as np
import pytest

from woldkit.fixtures import circular_shift, random_unitary, truncated_shift
from woldkit.operators import IsometryTuple
from woldkit.subspace import Subspace, ToleranceConfig, orthonormalize

ACCEPTANCE_RESULTS = []


def basis(k, N):
    v = np.zeros(N, dtype=np.complex128)
    v[k] = 1.0
    return v


def span(*vectors):
    return orthonormalize(np.column_stack(vectors))


def coordinate_span(indices, N):
    return Subspace(np.eye(N, dtype=np.complex128)[:, list(indices)])


def random_subspace(N, d, seed):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((N, d)) + 1j * rng.standard_normal((N, d))
    return Subspace(np.linalg.qr(Z)[0][:, :d])


def tensor_pair(A, B):
    """``(A (x) I, I (x) B)``: exactly doubly commuting."""
    return IsometryTuple((np.kron(A, np.eye(B.shape[0])), np.kron(np.eye(A.shape[0]), B)))


def shift_interior(D):
    return np.diag([1.0] * (D - 1) + [0.0])


def hardy_pair(D=3):
    J = truncated_shift(D)
    P = np.kron(shift_interior(D), shift_interior(D))
    return IsometryTuple((np.kron(J, np.eye(D)), np.kron(np.eye(D), J)), P)


@pytest.fixture
def cfg():
    return ToleranceConfig()


@pytest.fixture
def J3():
    return truncated_shift(3)


@pytest.fixture
def C3():
    return circular_shift(3)


@pytest.fixture
def Q7():
    return random_unitary(7, 11)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
