"""Tolerance-aware arithmetic of subspaces of C^N.

A subspace is carried by an orthonormal frame (an ``N x d`` matrix).  Every
rank decision goes through one singular-value cut, and a cut whose gap is
thin is flagged on the result rather than silently accepted.
"""

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
import scipy.linalg

from ._validation import check_matrix, freeze
from .exceptions import ConsistencyError, DomainError, InputError

# a cut with sigma_kept / sigma_dropped below this ratio is reported as marginal
MARGINAL_GAP = 10.0


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared by every operation.

    Attributes
    ----------
    rank_tol : float
        Relative singular-value cutoff for rank decisions.
    residual_tol : float
        Acceptance threshold for operator-norm residuals and principal angles.
    stabilization_window : int
        Consecutive iterations with unchanged dimension needed to declare an
        iterated intersection converged.
    max_power : int or None
        Budget on operator powers. ``None`` resolves to ``N + stabilization_window``
        for an ambient dimension ``N``, enough for any strictly shrinking iteration.
    """

    rank_tol: float = 1e-10
    residual_tol: float = 1e-8
    stabilization_window: int = 2
    max_power: int | None = None

    def __post_init__(self):
        if not self.rank_tol > 0:
            raise InputError("rank_tol must be positive")
        if not self.residual_tol > 0:
            raise InputError("residual_tol must be positive")
        if int(self.stabilization_window) < 1:
            raise InputError("stabilization_window must be >= 1")
        if self.max_power is not None and int(self.max_power) < 1:
            raise InputError("max_power must be >= 1")

    def power_budget(self, ambient_dim):
        if self.max_power is not None:
            return int(self.max_power)
        return int(ambient_dim) + int(self.stabilization_window)

    def with_overrides(self, **kwargs):
        """Return a copy with the non-``None`` keyword values replaced."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_CONFIG = ToleranceConfig()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of C^N given by an orthonormal frame.

    Zero-dimensional subspaces are ordinary values with an ``N x 0`` frame.
    ``marginal`` is set when the rank cut that produced the frame had a
    singular-value gap below ``MARGINAL_GAP``.
    """

    frame: np.ndarray
    marginal: bool = False
    singular_values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        F = check_matrix(self.frame, "frame")
        if F.shape[1] > F.shape[0]:
            raise InputError(f"frame has more columns ({F.shape[1]}) than rows ({F.shape[0]})")
        object.__setattr__(self, "frame", freeze(F))

    @property
    def ambient_dim(self):
        return self.frame.shape[0]

    @property
    def dim(self):
        return self.frame.shape[1]

    def __repr__(self):
        flag = ", marginal" if self.marginal else ""
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim}{flag})"

    @classmethod
    def zero(cls, ambient_dim):
        return cls(np.zeros((ambient_dim, 0), dtype=np.complex128))

    @classmethod
    def full(cls, ambient_dim):
        return cls(np.eye(ambient_dim, dtype=np.complex128))

    @classmethod
    def from_frame(cls, frame, atol=1e-10):
        """Wrap a frame that is already orthonormal, checking it."""
        F = check_matrix(frame, "frame")
        err = _orthonormality_defect(F)
        if err > atol:
            raise InputError(f"frame is not orthonormal (defect {err:.3e})")
        return cls(F)

    def orthonormality_defect(self):
        return _orthonormality_defect(self.frame)

    def embed(self, outer):
        """Map a subspace of ``ran(outer)`` given in local coordinates to the outer space."""
        outer = outer.frame if isinstance(outer, Subspace) else outer
        return Subspace(outer @ self.frame, marginal=self.marginal)

    def transform(self, Q):
        """Return the image ``Q S`` under a unitary ``Q``."""
        return Subspace(Q @ self.frame, marginal=self.marginal)


def _orthonormality_defect(F):
    d = F.shape[1]
    if d == 0:
        return 0.0
    return float(np.linalg.norm(F.conj().T @ F - np.eye(d), 2))


def _cut(s, rank_tol, reference):
    """Number of singular values kept and whether the cut is marginal."""
    if s.size == 0 or reference <= 0:
        return 0, False
    r = int(np.count_nonzero(s >= rank_tol * reference))
    marginal = False
    if 0 < r < s.size:
        dropped = s[r]
        marginal = dropped > 0 and s[r - 1] / dropped < MARGINAL_GAP
    return r, marginal


def _check_same_ambient(spaces):
    dims = {S.ambient_dim for S in spaces}
    if len(dims) > 1:
        raise InputError(f"subspaces live in different ambient dimensions {sorted(dims)}")


def orthonormalize(columns, cfg=DEFAULT_CONFIG, scale=None):
    """Orthonormal frame of the column space of ``columns``.

    Singular values below ``rank_tol * max(sigma_max, scale)`` are dropped.
    With ``scale=None`` the cut is purely relative to the largest singular
    value; callers that know the natural size of the data (e.g. the norm of
    the operator that produced it) pass it so that numerically-null input is
    recognised as null.
    """
    A = check_matrix(columns, "columns")
    N, k = A.shape
    if k == 0 or N == 0:
        return Subspace.zero(N)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    reference = s[0] if scale is None else max(s[0], float(scale))
    r, marginal = _cut(s, cfg.rank_tol, reference)
    return Subspace(U[:, :r], marginal=marginal, singular_values=s)


def kernel(T, cfg=DEFAULT_CONFIG):
    """Numerical kernel ``{x : |Tx| <= rank_tol |T| |x|}`` of a square matrix."""
    T = check_matrix(T, "T", square=True)
    N = T.shape[0]
    if N == 0:
        return Subspace.zero(0)
    _, s, Vh = np.linalg.svd(T)
    r, marginal = _cut(s, cfg.rank_tol, s[0])
    return Subspace(Vh[r:].conj().T, marginal=marginal, singular_values=s)


def range_space(T, cfg=DEFAULT_CONFIG):
    """Numerical range (column space) of ``T``, rank cut relative to ``|T|``."""
    return orthonormalize(T, cfg)


def image(V, S, cfg=DEFAULT_CONFIG, scale=1.0):
    """The image ``V S`` of a subspace, rank cut relative to ``scale`` (``|V|``)."""
    if S.dim == 0:
        return Subspace.zero(V.shape[0])
    return orthonormalize(V @ S.frame, cfg, scale=scale)


def join(spaces, cfg=DEFAULT_CONFIG):
    """Closed linear span of a collection of subspaces."""
    spaces = list(spaces)
    if not spaces:
        raise InputError("join of an empty list")
    _check_same_ambient(spaces)
    return orthonormalize(np.hstack([S.frame for S in spaces]), cfg, scale=1.0)


def intersect(spaces, cfg=DEFAULT_CONFIG):
    """Intersection of subspaces as the kernel of their stacked complementary projectors.

    The smallest space is taken as the base; in its coordinates the stacked
    matrix ``[(I - P_2) F_1; ...; (I - P_k) F_1]`` is factored once and its
    numerical kernel is mapped back.  Singular values of the stack are sines
    of angles, so the cut is made relative to ``max(sigma_max, 1)``.
    """
    spaces = list(spaces)
    if not spaces:
        raise InputError("intersect needs at least one subspace")
    _check_same_ambient(spaces)
    N = spaces[0].ambient_dim
    if any(S.dim == 0 for S in spaces):
        return Subspace.zero(N)
    order = sorted(range(len(spaces)), key=lambda i: spaces[i].dim)
    base = spaces[order[0]]
    others = [spaces[i] for i in order[1:] if spaces[i].dim < N]
    if not others:
        return base
    F = base.frame
    stack = np.vstack([F - S.frame @ (S.frame.conj().T @ F) for S in others])
    _, s, Vh = np.linalg.svd(stack, full_matrices=True)
    # pad: directions beyond the stack's row count have singular value 0
    s_full = np.zeros(F.shape[1])
    s_full[: s.size] = s
    r, marginal = _cut(s_full, cfg.rank_tol, max(s_full[0], 1.0))
    return Subspace(F @ Vh[r:].conj().T, marginal=marginal, singular_values=s_full)


def orth_complement(S):
    """Orthogonal complement; its dimension is exactly ``N - dim S``."""
    N, d = S.ambient_dim, S.dim
    if d == 0:
        return Subspace.full(N)
    U, _, _ = np.linalg.svd(S.frame, full_matrices=True)
    return Subspace(U[:, d:])


def containment_angle(inner, outer):
    """Largest principal angle between ``inner`` and its projection onto ``outer``."""
    _check_same_ambient([inner, outer])
    if inner.dim == 0:
        return 0.0
    R = inner.frame - outer.frame @ (outer.frame.conj().T @ inner.frame)
    return float(np.arcsin(min(1.0, np.linalg.norm(R, 2))))


def subspace_minus(S1, S2, cfg=DEFAULT_CONFIG):
    """``S1 (-) S2 = S1 & S2^perp`` for ``S2`` contained in ``S1``.

    Raises
    ------
    DomainError
        If ``S2`` is not inside ``S1`` up to an angle of ``residual_tol``.
    """
    _check_same_ambient([S1, S2])
    angle = containment_angle(S2, S1)
    if angle > cfg.residual_tol:
        raise DomainError(f"subspace_minus: S2 is not contained in S1 (angle {angle:.3e})", angle)
    d = S1.dim - S2.dim
    if d <= 0:
        return Subspace.zero(S1.ambient_dim)
    if S2.dim == 0:
        return S1
    F = S1.frame
    Y = F - S2.frame @ (S2.frame.conj().T @ F)
    U, s, _ = np.linalg.svd(Y, full_matrices=False)
    marginal = d < s.size and s[d] > 0 and s[d - 1] / s[d] < MARGINAL_GAP
    return Subspace(U[:, :d], marginal=bool(marginal), singular_values=s)


def projector(S):
    """Orthogonal projector ``F F*`` onto ``S``."""
    return S.frame @ S.frame.conj().T


def principal_angles(S1, S2):
    """Principal angles in nonincreasing order (``min(dim S1, dim S2)`` of them)."""
    _check_same_ambient([S1, S2])
    if S1.dim == 0 or S2.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(S1.frame, S2.frame)


def subspace_distance(S1, S2):
    """Largest principal angle; ``pi/2`` when the dimensions differ.

    This is the equality measure used throughout: two subspaces agree
    within ``tol`` iff ``subspace_distance(S1, S2) <= tol``.
    """
    _check_same_ambient([S1, S2])
    if S1.dim != S2.dim:
        return float(np.pi / 2)
    if S1.dim == 0:
        return 0.0
    return float(principal_angles(S1, S2)[0])


def direct_sum_residual(spaces, complete=False):
    """Largest pairwise cross-Gram norm, plus ``|sum dims - N|`` if ``complete``."""
    spaces = list(spaces)
    if not spaces:
        return 0.0
    _check_same_ambient(spaces)
    worst = 0.0
    for S, T in combinations(spaces, 2):
        if S.dim and T.dim:
            worst = max(worst, float(np.linalg.norm(S.frame.conj().T @ T.frame, 2)))
    if complete:
        worst += abs(sum(S.dim for S in spaces) - spaces[0].ambient_dim)
    return worst


def check_agreement(S1, S2, tol, what="subspaces"):
    """Raise ``ConsistencyError`` unless ``S1`` and ``S2`` agree within ``tol``."""
    dist = subspace_distance(S1, S2)
    if dist > tol:
        raise ConsistencyError(
            f"{what} disagree: dims {S1.dim} vs {S2.dim}, max angle {dist:.3e}",
            {"dims": (S1.dim, S2.dim), "max_angle": dist},
        )
    return dist
