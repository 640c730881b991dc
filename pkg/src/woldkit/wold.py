"""Classical Wold decomposition of a single isometry.

``H = H_s (+) H_u`` where ``H_s`` is spanned by the iterates ``V^m W`` of the
wandering subspace ``W = ran(I - VV*) = ker V*`` and ``H_u`` is its
orthogonal complement.  ``H_u`` is also computed independently as the
stabilised iterated range ``V^m H`` and the two are cross-checked.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix
from .exceptions import DecompositionError, GateError
from .operators import isometry_defects, opnorm, reducing_defect
from .subspace import (
    DEFAULT_CONFIG,
    Subspace,
    check_agreement,
    direct_sum_residual,
    image,
    kernel,
    orth_complement,
    orthonormalize,
    subspace_distance,
)

SHIFT = "Shift"
UNITARY = "Unitary"
MIXED = "Mixed"


@dataclass(frozen=True)
class Iteration:
    """Outcome of an iterated subspace construction.

    ``status`` is one of ``"exhausted"`` (a zero increment was reached),
    ``"stabilized"`` (dimension unchanged for the stabilisation window) or
    ``"unresolved"`` (power budget spent first).  ``marginal`` is set if any
    intermediate rank cut was marginal.
    """

    space: Subspace
    status: str
    steps: int
    dims: tuple = ()
    nonorthogonality: float = 0.0
    leakage: tuple = ()
    stabilized_at: int | None = None
    marginal: bool = False

    @property
    def resolved(self):
        return self.status != "unresolved"


@dataclass(frozen=True)
class WoldDecomposition:
    """Result of :func:`wold_decompose`.

    ``marginal`` names the stages (``"wandering"``, ``"shift_part"``,
    ``"unitary_part"``) whose rank decisions were marginal.
    """

    shift_part: Subspace
    unitary_part: Subspace
    wandering: Subspace
    classification: str
    residuals: dict = field(default_factory=dict)
    status: str = "accepted"
    shift_iteration: Iteration | None = field(default=None, repr=False)
    unitary_iteration: Iteration | None = field(default=None, repr=False)
    marginal: tuple = ()

    @property
    def multiplicity(self):
        return self.wandering.dim

    @property
    def ambient_dim(self):
        return self.shift_part.ambient_dim


def _scale(V):
    return max(1.0, opnorm(V))


def classify(dim_shift, dim_unitary):
    if dim_unitary == 0:
        return SHIFT
    if dim_shift == 0:
        return UNITARY
    return MIXED


def wandering_subspace(V, cfg=DEFAULT_CONFIG):
    """``ran(I - VV*)``, cross-checked against ``ker V*``.

    Raises
    ------
    ConsistencyError
        If the two constructions differ by more than ``residual_tol``.
    """
    V = check_matrix(V, "V", square=True)
    N = V.shape[0]
    defect = np.eye(N) - V @ V.conj().T
    W = orthonormalize(defect, cfg, scale=_scale(V) ** 2)
    check_agreement(W, kernel(V.conj().T, cfg), cfg.residual_tol, "ran(I - VV*) and ker V*")
    return W


def shift_part(V, W, cfg=DEFAULT_CONFIG):
    """Accumulate ``W, VW, V^2 W, ...`` until an increment vanishes.

    Each new image is orthogonalised against the accumulation; the largest
    overlap seen is kept as ``nonorthogonality`` (zero for a genuine
    wandering subspace).  A drop in image dimension is recorded in
    ``leakage`` and the iteration continues.
    """
    V = check_matrix(V, "V", square=True)
    N = V.shape[0]
    if W.dim == 0:
        return Iteration(Subspace.zero(N), "exhausted", 0, (0,))
    scale = _scale(V)
    budget = cfg.power_budget(N)
    acc = W.frame
    current = W
    dims = [W.dim]
    leakage = []
    overlap = 0.0
    marginal = False
    m = 0
    status = "unresolved"
    while m < budget:
        m += 1
        current = image(V, current, cfg, scale)
        marginal |= current.marginal
        if current.dim < dims[-1] and current.dim > 0:
            leakage.append(m)
        dims.append(current.dim)
        if current.dim == 0:
            status = "exhausted"
            break
        C = acc.conj().T @ current.frame
        overlap = max(overlap, opnorm(C))
        increment = orthonormalize(current.frame - acc @ C, cfg, scale=1.0)
        marginal |= increment.marginal
        if increment.dim == 0:
            status = "exhausted"
            break
        acc = np.hstack([acc, increment.frame])
    return Iteration(Subspace(acc), status, m, tuple(dims), overlap, tuple(leakage),
                     marginal=marginal)


def unitary_part_iterative(V, cfg=DEFAULT_CONFIG):
    """Iterated range ``S_{m+1} = V S_m`` from ``S_0 = H`` until its dimension stabilises."""
    V = check_matrix(V, "V", square=True)
    N = V.shape[0]
    scale = _scale(V)
    budget = cfg.power_budget(N)
    S = Subspace.full(N)
    dims = [N]
    run = 0
    marginal = False
    for m in range(1, budget + 1):
        S = image(V, S, cfg, scale)
        marginal |= S.marginal
        run = run + 1 if S.dim == dims[-1] else 0
        dims.append(S.dim)
        # {0} is a fixed point of the iteration
        if S.dim == 0:
            return Iteration(S, "stabilized", m, tuple(dims), stabilized_at=m - run,
                             marginal=marginal)
        if run >= cfg.stabilization_window:
            return Iteration(S, "stabilized", m, tuple(dims), stabilized_at=m - run + 1,
                             marginal=marginal)
    return Iteration(S, "unresolved", budget, tuple(dims), marginal=marginal)


def wold_decompose(V, cfg=DEFAULT_CONFIG, interior=None):
    """Wold decomposition ``H = H_s (+) H_u`` of an isometry.

    Parameters
    ----------
    V : (N, N) array_like
        The isometry. Truncated shifts are admitted through ``interior``.
    cfg : ToleranceConfig
    interior : (N, N) array_like, optional
        Projector on which ``V*V = I`` must hold; the identity by default.

    Returns
    -------
    WoldDecomposition
        ``status`` is ``"unresolved"`` if the shift part did not exhaust
        within the power budget; verification is then skipped.

    Raises
    ------
    GateError
        If ``V`` is not isometric on the interior.
    DecompositionError
        If any residual of an exhausted decomposition exceeds ``residual_tol``.
    """
    V = check_matrix(V, "V", square=True)
    N = V.shape[0]
    tol = cfg.residual_tol
    P = None if interior is None else check_matrix(interior, "interior", square=True)
    iso, iso_interior, coiso = isometry_defects(V, P)
    if iso_interior > tol:
        raise GateError(f"V is not an isometry on the interior (defect {iso_interior:.3e})")

    W = wandering_subspace(V, cfg)
    shift_it = shift_part(V, W, cfg)
    Hs = shift_it.space
    Hu = orth_complement(Hs)
    unitary_it = unitary_part_iterative(V, cfg)

    residuals = {
        "isometry_defect": iso,
        "interior_isometry_defect": iso_interior,
        "orthogonality": direct_sum_residual([Hs, Hu]),
        "completeness": float(abs(Hs.dim + Hu.dim - N)),
        "reducing_shift": reducing_defect(V, Hs),
        "reducing_unitary": reducing_defect(V, Hu),
        "exhaustion": shift_it.nonorthogonality,
    }
    if Hu.dim:
        R = Hu.frame.conj().T @ V @ Hu.frame
        eye = np.eye(Hu.dim)
        residuals["unitary_defect"] = max(
            opnorm(R.conj().T @ R - eye), opnorm(R @ R.conj().T - eye)
        )
    else:
        residuals["unitary_defect"] = 0.0
    if unitary_it.resolved:
        residuals["unitary_agreement"] = subspace_distance(Hu, unitary_it.space)

    status = "accepted" if shift_it.resolved else "unresolved"
    marginal = tuple(name for name, flag in (
        ("wandering", W.marginal), ("shift_part", shift_it.marginal),
        ("unitary_part", unitary_it.marginal),
    ) if flag)
    result = WoldDecomposition(
        Hs, Hu, W, classify(Hs.dim, Hu.dim), residuals, status, shift_it, unitary_it, marginal
    )
    if status == "accepted":
        bad = {k: v for k, v in residuals.items() if k != "isometry_defect" and v > tol}
        if bad:
            worst = ", ".join(f"{k}={v:.3e}" for k, v in bad.items())
            raise DecompositionError(f"Wold decomposition failed verification: {worst}", residuals)
    return result
