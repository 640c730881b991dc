"""Operator tuples, defect functionals, and compression to subspaces.

Operators are plain ``(N, N)`` complex arrays.  An :class:`IsometryTuple`
groups ``n`` of them with an optional interior projector, the subspace on
which the isometry relations are expected to hold exactly (truncated shifts
fail ``V*V = I`` only at their top grade).
"""

from dataclasses import asdict, dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from ._validation import check_matrix, check_operator_stack, freeze
from .exceptions import DomainError, GateError, InputError
from .subspace import DEFAULT_CONFIG


def opnorm(A):
    """Spectral norm; zero for empty matrices."""
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


@dataclass(frozen=True)
class DefectReport:
    """Spectral-norm defects of a tuple.

    ``isometry_defect[i] = |V_i* V_i - I|``, ``interior_isometry_defect[i]``
    is the same with the interior projector applied on the right,
    ``commutation_defect = max_{i<j} |V_i V_j - V_j V_i|`` and
    ``double_commutation_defect = max_{i<j} |V_i V_j* - V_j* V_i|``.
    """

    isometry_defect: tuple
    interior_isometry_defect: tuple
    commutation_defect: float
    double_commutation_defect: float

    def gate_failures(self, cfg=DEFAULT_CONFIG):
        """Human-readable reasons the tuple fails the acceptance gate (empty if it passes)."""
        tol = cfg.residual_tol
        reasons = []
        for i, d in enumerate(self.interior_isometry_defect, start=1):
            if d > tol:
                reasons.append(f"V_{i} interior isometry defect {d:.3e} > {tol:g}")
        if self.commutation_defect > tol:
            reasons.append(f"commutation defect {self.commutation_defect:.3e} > {tol:g}")
        if self.double_commutation_defect > tol:
            reasons.append(
                f"double commutation defect {self.double_commutation_defect:.3e} > {tol:g}"
            )
        return reasons

    def passes(self, cfg=DEFAULT_CONFIG):
        return not self.gate_failures(cfg)

    def to_dict(self):
        d = asdict(self)
        d["isometry_defect"] = list(self.isometry_defect)
        d["interior_isometry_defect"] = list(self.interior_isometry_defect)
        return d


@dataclass(frozen=True, eq=False)
class IsometryTuple:
    """An ``n``-tuple of operators on C^N with an optional interior projector."""

    operators: tuple
    interior: np.ndarray = None

    def __post_init__(self):
        ops = check_operator_stack(self.operators)
        object.__setattr__(self, "operators", tuple(freeze(V) for V in ops))
        if self.interior is not None:
            P = check_matrix(self.interior, "interior", square=True)
            if P.shape[0] != self.dim:
                raise InputError(f"interior projector has size {P.shape[0]}, expected {self.dim}")
            object.__setattr__(self, "interior", freeze(P))

    @property
    def n(self):
        return len(self.operators)

    @property
    def dim(self):
        return self.operators[0].shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.operators[i]

    def __repr__(self):
        return f"IsometryTuple(n={self.n}, dim={self.dim})"

    @cached_property
    def defects(self):
        return defect_report(self)

    @cached_property
    def norms(self):
        return tuple(opnorm(V) for V in self.operators)

    def conjugate(self, Q):
        """Simultaneous unitary conjugation ``Q V_i Q*`` (interior included)."""
        Qh = Q.conj().T
        P = None if self.interior is None else Q @ self.interior @ Qh
        return IsometryTuple(tuple(Q @ V @ Qh for V in self.operators), P)

    def compress(self, S):
        """Tuple of compressions ``F* V_i F`` to a (jointly reducing) subspace."""
        F = S.frame
        Fh = F.conj().T
        P = None if self.interior is None else Fh @ self.interior @ F
        return IsometryTuple(tuple(Fh @ V @ F for V in self.operators), P)


def defect_report(t):
    """Compute the :class:`DefectReport` of a tuple."""
    N = t.dim
    eye = np.eye(N)
    P = eye if t.interior is None else t.interior
    iso, interior = [], []
    for V in t.operators:
        G = V.conj().T @ V - eye
        iso.append(opnorm(G))
        interior.append(opnorm(G @ P))
    comm = dcomm = 0.0
    for Vi, Vj in combinations(t.operators, 2):
        comm = max(comm, opnorm(Vi @ Vj - Vj @ Vi))
        Vjh = Vj.conj().T
        dcomm = max(dcomm, opnorm(Vi @ Vjh - Vjh @ Vi))
    return DefectReport(tuple(iso), tuple(interior), comm, dcomm)


def check_gate(t, cfg=DEFAULT_CONFIG):
    """Raise :class:`GateError` unless the tuple may be decomposed."""
    reasons = t.defects.gate_failures(cfg)
    if reasons:
        raise GateError("tuple rejected: " + "; ".join(reasons), t.defects)
    return t.defects


def isometry_defects(V, interior=None):
    """``(|V*V - I|, |(V*V - I) P|, |VV* - I|)`` for a single operator."""
    eye = np.eye(V.shape[0])
    G = V.conj().T @ V - eye
    interior_defect = opnorm(G if interior is None else G @ interior)
    return opnorm(G), interior_defect, opnorm(V @ V.conj().T - eye)


def invariance_defect(V, S):
    """``|(I - P_S) V P_S|``: zero iff ``S`` is invariant under ``V``."""
    if S.dim == 0:
        return 0.0
    F = S.frame
    VF = V @ F
    return opnorm(VF - F @ (F.conj().T @ VF))


def reducing_defect(V, S):
    """``max(|(I-P) V P|, |P V (I-P)|)``: zero iff ``S`` reduces ``V``."""
    return max(invariance_defect(V, S), invariance_defect(V.conj().T, S))


def restrict(V, S, cfg=DEFAULT_CONFIG):
    """Matrix of ``V|_S`` in the frame of ``S`` (``F* V F``).

    Raises
    ------
    DomainError
        If ``S`` is not invariant under ``V`` within ``residual_tol``.
    """
    V = check_matrix(V, "V", square=True)
    if V.shape[0] != S.ambient_dim:
        raise InputError(f"operator size {V.shape[0]} does not match ambient dim {S.ambient_dim}")
    defect = invariance_defect(V, S)
    if defect > cfg.residual_tol:
        raise DomainError(f"restrict: subspace is not invariant (defect {defect:.3e})", defect)
    F = S.frame
    return F.conj().T @ V @ F

