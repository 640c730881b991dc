"""scikit-learn style estimators over the decomposition routines.

``fit`` takes the operator (or a stack of operators), learns the
decomposition, and ``transform`` expresses sample vectors (rows of ``Y``)
in the adapted orthonormal basis: the block frames concatenated in label
order.  ``predict`` returns, for each sample, the index of the block
carrying most of its energy.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_operator_stack, check_vectors
from .multi import decompose_direct, decompose_recursive
from .operators import IsometryTuple
from .subspace import ToleranceConfig
from .wold import wold_decompose


class _DecompositionTransformer(TransformerMixin, BaseEstimator):
    def _config(self):
        return ToleranceConfig(
            rank_tol=self.rank_tol,
            residual_tol=self.residual_tol,
            stabilization_window=self.stabilization_window,
            max_power=self.max_power,
        )

    def _set_basis(self, spaces):
        self.block_frames_ = [S.frame for S in spaces]
        self.block_sizes_ = np.array([S.dim for S in spaces])
        self.basis_ = np.hstack(self.block_frames_)
        self.n_features_in_ = self.basis_.shape[0]

    def transform(self, Y):
        """Coordinates of the rows of ``Y`` in the adapted basis."""
        check_is_fitted(self, "basis_")
        Y = check_vectors(Y, self.n_features_in_)
        return Y @ self.basis_.conj()

    def inverse_transform(self, Z):
        check_is_fitted(self, "basis_")
        Z = check_vectors(Z, self.basis_.shape[1], "Z")
        return Z @ self.basis_.T

    def block_energy(self, Y):
        """Squared norm of each sample's component in each block, shape ``(n_samples, n_blocks)``."""
        Z = np.abs(self.transform(Y)) ** 2
        edges = np.cumsum(np.concatenate([[0], self.block_sizes_]))
        return np.stack([Z[:, a:b].sum(axis=1) for a, b in zip(edges[:-1], edges[1:])], axis=1)

    def predict(self, Y):
        return np.argmax(self.block_energy(Y), axis=1)


class WoldDecomposer(_DecompositionTransformer):
    """Wold decomposition of a single isometry as a transformer.

    Parameters
    ----------
    rank_tol, residual_tol, stabilization_window, max_power
        See :class:`~woldkit.subspace.ToleranceConfig`.

    Attributes
    ----------
    decomposition_ : WoldDecomposition
    shift_part_, unitary_part_, wandering_ : Subspace
    multiplicity_ : int
    classification_ : str
    labels_ : list
        ``["shift", "unitary"]``, the block order used by ``transform``.

    Examples
    --------
    >>> import numpy as np
    >>> from woldkit.fixtures import circular_shift
    >>> WoldDecomposer().fit(circular_shift(4)).classification_
    'Unitary'
    """

    def __init__(self, rank_tol=1e-10, residual_tol=1e-8, stabilization_window=2, max_power=None):
        self.rank_tol = rank_tol
        self.residual_tol = residual_tol
        self.stabilization_window = stabilization_window
        self.max_power = max_power

    def fit(self, X, y=None, interior=None):
        V = check_matrix(X, "X", square=True)
        res = wold_decompose(V, self._config(), interior=interior)
        self.decomposition_ = res
        self.shift_part_ = res.shift_part
        self.unitary_part_ = res.unitary_part
        self.wandering_ = res.wandering
        self.multiplicity_ = res.multiplicity
        self.classification_ = res.classification
        self.labels_ = ["shift", "unitary"]
        self._set_basis([res.shift_part, res.unitary_part])
        return self


class MultiWoldDecomposer(_DecompositionTransformer):
    """The ``2^m`` block decomposition of a doubly commuting tuple as a transformer.

    ``fit`` accepts an :class:`~woldkit.operators.IsometryTuple` or an array of
    shape ``(n, N, N)``; ``interior`` may be given as a fit parameter.
    """

    def __init__(self, depth=None, method="direct", rank_tol=1e-10, residual_tol=1e-8,
                 stabilization_window=2, max_power=None):
        self.depth = depth
        self.method = method
        self.rank_tol = rank_tol
        self.residual_tol = residual_tol
        self.stabilization_window = stabilization_window
        self.max_power = max_power

    def fit(self, X, y=None, interior=None):
        if self.method not in ("direct", "recursive"):
            raise ValueError(f"method must be 'direct' or 'recursive', got {self.method!r}")
        if isinstance(X, IsometryTuple):
            t = X if interior is None else IsometryTuple(X.operators, interior)
        else:
            t = IsometryTuple(tuple(check_operator_stack(X, "X")), interior)
        fn = decompose_direct if self.method == "direct" else decompose_recursive
        res = fn(t, self.depth, self._config())
        self.decomposition_ = res
        self.labels_ = list(res.blocks)
        self.block_dims_ = res.dims()
        self._set_basis([b.space for b in res.blocks.values()])
        return self
