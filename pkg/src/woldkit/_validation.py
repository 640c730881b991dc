"""Input validation helpers shared by the functional core and the estimators."""

import numpy as np

from .exceptions import InputError


def check_matrix(X, name="matrix", square=False, allow_empty=True):
    """Return ``X`` as a 2-D complex128 array, rejecting non-finite entries.

    Parameters
    ----------
    X : array_like
        Candidate matrix.
    name : str
        Used in error messages.
    square : bool
        Require ``X.shape[0] == X.shape[1]``.
    allow_empty : bool
        Whether a zero-sized axis is acceptable.
    """
    try:
        A = np.asarray(X, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: cannot convert to a complex array ({exc})") from exc
    if A.ndim != 2:
        raise InputError(f"{name}: expected a 2-D array, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise InputError(f"{name}: expected a square matrix, got shape {A.shape}")
    if not allow_empty and 0 in A.shape:
        raise InputError(f"{name}: empty matrix")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name}: non-finite entries")
    return A


def check_operator_stack(X, name="operators"):
    """Coerce a sequence of square matrices of equal size to an ``(n, N, N)`` array."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = X[None]
    mats = [check_matrix(M, f"{name}[{i}]", square=True) for i, M in enumerate(X)]
    if not mats:
        raise InputError(f"{name}: at least one operator is required")
    N = mats[0].shape[0]
    for i, M in enumerate(mats):
        if M.shape != (N, N):
            raise InputError(f"{name}[{i}]: shape {M.shape} differs from ({N}, {N})")
    return np.stack(mats)


def check_vectors(Y, ambient_dim, name="Y"):
    """Coerce sample vectors to shape ``(n_samples, ambient_dim)``."""
    A = np.asarray(Y, dtype=np.complex128)
    if A.ndim == 1:
        A = A[None, :]
    A = check_matrix(A, name)
    if A.shape[1] != ambient_dim:
        raise InputError(f"{name}: expected {ambient_dim} features, got {A.shape[1]}")
    return A


def freeze(A):
    """Return a read-only copy of ``A``."""
    B = np.array(A, dtype=np.complex128, copy=True)
    B.setflags(write=False)
    return B
