"""Doubly commuting tuples with known decompositions, and the polydisc shift model.

A fixture is a direct sum over subset labels ``A`` of tensor blocks

    (atom_1 (x) ... (x) atom_n) (x) C^{e_A}

where ``atom_i`` is a truncated shift when ``i in A`` and a unitary
otherwise; ``V_i`` acts in slot ``i`` and as the identity elsewhere, so the
tuple is exactly doubly commuting.  The blocks are the expected ``H_A``.
An optional seeded unitary conjugation removes all basis alignment.
"""

from dataclasses import dataclass, field
from itertools import product
from math import prod

import numpy as np
import scipy.linalg

from .exceptions import (
    ConsistencyError,
    DomainError,
    GateError,
    InputError,
    ResourceError,
    WoldkitError,
)
from .multi import block_span, canonical_label, format_label, subsets, wandering_intersection
from .operators import IsometryTuple, opnorm
from .subspace import DEFAULT_CONFIG, Subspace, intersect, subspace_distance
from .wold import SHIFT, wandering_subspace, wold_decompose

DEFAULT_MAX_DIM = 2000


def truncated_shift(depth):
    """Raising map on C^depth: ``e_k -> e_{k+1}``, top grade to zero."""
    return np.eye(depth, k=-1, dtype=np.complex128)


def circular_shift(dim):
    """Cyclic permutation ``e_k -> e_{k+1 mod dim}``; exactly unitary."""
    return np.roll(np.eye(dim, dtype=np.complex128), 1, axis=0)


def random_unitary(dim, seed):
    """Haar-distributed unitary from the QR factorisation of a seeded complex Gaussian."""
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


@dataclass(frozen=True)
class ShiftAtom:
    depth: int

    def __post_init__(self):
        if self.depth < 2:
            raise InputError(f"shift depth must be >= 2, got {self.depth}")

    @property
    def dim(self):
        return self.depth

    def matrix(self):
        return truncated_shift(self.depth)

    def interior(self):
        return np.diag([1.0] * (self.depth - 1) + [0.0]).astype(np.complex128)

    def to_dict(self):
        return {"kind": "shift", "depth": self.depth}


@dataclass(frozen=True)
class UnitaryAtom:
    dim: int
    kind: str = "circular"
    seed: int | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"unitary dim must be >= 1, got {self.dim}")
        if self.kind not in ("circular", "random"):
            raise InputError(f"unknown unitary kind {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise InputError("random unitary atoms need a seed")

    def matrix(self):
        if self.kind == "circular":
            return circular_shift(self.dim)
        return random_unitary(self.dim, self.seed)

    def interior(self):
        return np.eye(self.dim, dtype=np.complex128)

    def to_dict(self):
        d = {"kind": self.kind, "dim": self.dim}
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def atom_from_dict(d):
    kind = d.get("kind")
    if kind == "shift":
        return ShiftAtom(int(d["depth"]))
    if kind in ("circular", "random"):
        return UnitaryAtom(int(d["dim"]), kind, d.get("seed"))
    raise InputError(f"unknown atom kind {kind!r}")


@dataclass(frozen=True)
class BlockRecipe:
    atoms: tuple
    multiplicity: int = 1

    @property
    def dim(self):
        return self.multiplicity * prod(a.dim for a in self.atoms)


@dataclass(frozen=True)
class FixtureSpec:
    """Recipe for a fixture: one :class:`BlockRecipe` per present label.

    Labels are sorted tuples of 1-based coordinates.  ``scramble_seed``
    conjugates the whole tuple by a seeded random unitary.
    """

    n: int
    blocks: dict
    scramble_seed: int | None = None
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        blocks = {}
        for A, recipe in self.blocks.items():
            A = canonical_label(A, self.n)
            if len(recipe.atoms) != self.n:
                raise InputError(f"block {format_label(A)} needs {self.n} atoms")
            for i, atom in enumerate(recipe.atoms, start=1):
                want = ShiftAtom if i in A else UnitaryAtom
                if not isinstance(atom, want):
                    raise InputError(
                        f"block {format_label(A)}: coordinate {i} must be a {want.__name__}"
                    )
            if recipe.multiplicity < 0:
                raise InputError("multiplicities must be >= 0")
            blocks[A] = recipe
        if not any(r.multiplicity > 0 for r in blocks.values()):
            raise InputError("a fixture needs at least one block with positive multiplicity")
        object.__setattr__(self, "blocks", {A: blocks[A] for A in subsets(self.n) if A in blocks})

    @property
    def ambient_dim(self):
        return sum(r.dim for r in self.blocks.values())

    @property
    def max_depth(self):
        depths = [a.depth for r in self.blocks.values() for a in r.atoms if isinstance(a, ShiftAtom)]
        return max(depths, default=1)

    def tolerances(self, base=DEFAULT_CONFIG):
        """``base`` with the power budget set to four times the largest shift depth."""
        return base.with_overrides(max_power=4 * self.max_depth)

    @classmethod
    def simple(cls, n, multiplicities, depths=None, unitary_dims=None,
               unitary_kind="circular", seed=0, scramble_seed=None, max_dim=DEFAULT_MAX_DIM):
        """Uniform recipe: coordinate ``i`` uses depth ``depths[i]`` or unitary dim ``unitary_dims[i]``.

        ``multiplicities`` maps labels to ``e_A``; random unitary atoms get
        distinct seeds derived from ``seed``.
        """
        depths = depths or (3,) * n
        unitary_dims = unitary_dims or (2,) * n
        blocks = {}
        for b, (A, e) in enumerate(multiplicities.items()):
            A = canonical_label(A, n)
            atoms = []
            for i in range(1, n + 1):
                if i in A:
                    atoms.append(ShiftAtom(depths[i - 1]))
                else:
                    s = None if unitary_kind == "circular" else seed * 1000 + 10 * b + i
                    atoms.append(UnitaryAtom(unitary_dims[i - 1], unitary_kind, s))
            blocks[A] = BlockRecipe(tuple(atoms), e)
        return cls(n, blocks, scramble_seed, max_dim)

    def to_dict(self):
        return {
            "n": self.n,
            "scramble_seed": self.scramble_seed,
            "max_dim": self.max_dim,
            "blocks": [
                {"label": list(A), "multiplicity": r.multiplicity,
                 "atoms": [a.to_dict() for a in r.atoms]}
                for A, r in self.blocks.items()
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            blocks = {
                tuple(b["label"]): BlockRecipe(
                    tuple(atom_from_dict(a) for a in b["atoms"]), int(b.get("multiplicity", 1))
                )
                for b in d["blocks"]
            }
            return cls(int(d["n"]), blocks, d.get("scramble_seed"),
                       int(d.get("max_dim", DEFAULT_MAX_DIM)))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed fixture spec: {exc}") from exc


@dataclass(frozen=True, eq=False)
class FixtureOracle:
    """Ground truth for a built fixture."""

    block_dims: dict
    multiplicities: tuple
    joint_wandering_dim: int
    block_spaces: dict = field(repr=False)
    scramble: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "blocks": [{"label": list(A), "dim": d} for A, d in self.block_dims.items()],
            "multiplicities": list(self.multiplicities),
            "joint_wandering_dim": self.joint_wandering_dim,
        }


def _slot_operator(mats, i, e):
    """``I (x) ... (x) mats[i] (x) ... (x) I (x) I_e``."""
    factors = [mats[j] if j == i else np.eye(mats[j].shape[0]) for j in range(len(mats))]
    factors.append(np.eye(e))
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def _kron_all(mats):
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def build_fixture(spec):
    """Assemble the tuple and its oracle from a :class:`FixtureSpec`.

    Raises
    ------
    ResourceError
        If the ambient dimension exceeds ``spec.max_dim``.
    """
    N = spec.ambient_dim
    if N > spec.max_dim:
        raise ResourceError(f"fixture dimension {N} exceeds cap {spec.max_dim}")
    n = spec.n
    per_coord = [[] for _ in range(n)]
    interiors = []
    block_dims, offsets = {}, {}
    offset = 0
    for A in subsets(n):
        recipe = spec.blocks.get(A)
        dim = recipe.dim if recipe else 0
        block_dims[A] = dim
        offsets[A] = (offset, offset + dim)
        offset += dim
        if not dim:
            continue
        mats = [a.matrix() for a in recipe.atoms]
        for i in range(n):
            per_coord[i].append(_slot_operator(mats, i, recipe.multiplicity))
        interiors.append(_kron_all([a.interior() for a in recipe.atoms] + [np.eye(recipe.multiplicity)]))
    ops = [scipy.linalg.block_diag(*blocks).astype(np.complex128) for blocks in per_coord]
    P = scipy.linalg.block_diag(*interiors).astype(np.complex128)
    if spec.scramble_seed is not None:
        Q = random_unitary(N, spec.scramble_seed)
    else:
        Q = np.eye(N, dtype=np.complex128)
    Qh = Q.conj().T
    t = IsometryTuple(tuple(Q @ V @ Qh for V in ops), Q @ P @ Qh)

    multiplicities = []
    for i in range(1, n + 1):
        total = 0
        for A, r in spec.blocks.items():
            if i in A:
                total += r.multiplicity * prod(a.dim for j, a in enumerate(r.atoms, 1) if j != i)
        multiplicities.append(total)
    full = tuple(range(1, n + 1))
    joint = spec.blocks[full].multiplicity if full in spec.blocks else 0
    spaces = {A: Subspace(Q[:, lo:hi]) for A, (lo, hi) in offsets.items()}
    oracle = FixtureOracle(block_dims, tuple(multiplicities), joint, spaces, Q)
    return t, oracle


@dataclass(frozen=True, eq=False)
class PolydiscModel:
    """Truncated ``(M_z1, ..., M_zn)`` on ``E``-valued polynomials, ``dim E = e``.

    The basis is ``z^k (x) eta_j`` ordered as ``C^{D_1} (x) ... (x) C^{D_n} (x) C^e``.
    """

    e: int
    degrees: tuple
    tuple: IsometryTuple = field(repr=False)

    @property
    def n(self):
        return len(self.degrees)

    @property
    def dim(self):
        return self.tuple.dim

    @property
    def operators(self):
        return self.tuple.operators

    def basis_index(self, k, j):
        return int(np.ravel_multi_index(tuple(k) + (j,), self.degrees + (self.e,)))


def build_polydisc(e, D, n, max_dim=DEFAULT_MAX_DIM):
    """The polydisc model with coefficient dimension ``e`` and degree cap ``D`` (int or per-coordinate)."""
    degrees = (int(D),) * n if np.isscalar(D) else tuple(int(x) for x in D)
    if e < 1 or n < 1 or len(degrees) != n or min(degrees) < 2:
        raise InputError(f"invalid polydisc parameters e={e}, D={D}, n={n}")
    N = e * prod(degrees)
    if N > max_dim:
        raise ResourceError(f"polydisc dimension {N} exceeds cap {max_dim}")
    shifts = [truncated_shift(d) for d in degrees]
    ops = tuple(_slot_operator(shifts, i, e) for i in range(n))
    P = _kron_all([ShiftAtom(d).interior() for d in degrees] + [np.eye(e)])
    return PolydiscModel(e, degrees, IsometryTuple(ops, P))


def polydisc_spec(e, D, n, scramble_seed=None):
    """The polydisc model as a single-block :class:`FixtureSpec`."""
    degrees = (D,) * n if np.isscalar(D) else tuple(D)
    atoms = tuple(ShiftAtom(d) for d in degrees)
    return FixtureSpec(n, {tuple(range(1, n + 1)): BlockRecipe(atoms, e)}, scramble_seed)


def joint_wandering(t, cfg=DEFAULT_CONFIG):
    """``W = & ran(I - V_i V_i*)`` over all coordinates."""
    if t.n == 1:
        return wandering_subspace(t[0], cfg)
    return wandering_intersection(t, tuple(range(1, t.n + 1)), cfg)


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of each of the five joint-shift conditions, keyed ``"i"`` .. ``"v"``."""

    conditions: dict

    @property
    def all_pass(self):
        return all(c.passed for c in self.conditions.values())

    @property
    def none_pass(self):
        return not any(c.passed for c in self.conditions.values())

    @property
    def consistent(self):
        return self.all_pass or self.none_pass


def _coordinate_wold(t, cfg):
    out = []
    for V in t.operators:
        try:
            out.append(wold_decompose(V, cfg, interior=t.interior))
        except WoldkitError as exc:
            out.append(exc)
    return out


def _iv(t, cfg):
    W = intersect([wandering_subspace(V, cfg) for V in t.operators], cfg)
    span = block_span(t, tuple(range(1, t.n + 1)), W, cfg)
    ok = (
        W.dim > 0
        and span.resolved
        and span.nonorthogonality <= cfg.residual_tol
        and span.space.dim == t.dim
    )
    return W, ConditionResult(bool(ok), {
        "wandering_dim": W.dim,
        "span_dim": span.space.dim,
        "nonorthogonality": span.nonorthogonality,
        "status": span.status,
    })


def check_equivalence_conditions(t, cfg=DEFAULT_CONFIG):
    """Evaluate the five equivalent characterisations of a pure joint shift.

    (i) some wandering ``W`` generates ``H`` (evaluated through its canonical
    candidate, so it is reported equal to (iv)); (ii) every ``V_m`` is a shift
    and the tuple doubly commutes; (iii) some ``V_m`` is a shift whose
    wandering subspace is the span of ``V^k W`` over ``k`` with ``k_m = 0``;
    (iv) ``W = & W_i`` is wandering and generates ``H``; (v) the tuple is
    unitarily equivalent to the polydisc model.

    Only the isometry and commutation gates are enforced; double
    commutation is part of condition (ii).
    """
    d = t.defects
    tol = cfg.residual_tol
    if any(x > tol for x in d.interior_isometry_defect) or d.commutation_defect > tol:
        raise GateError("tuple is not a commuting tuple of (interior) isometries", d)
    wolds = _coordinate_wold(t, cfg)
    classes = [w.classification if not isinstance(w, Exception) else "Failed" for w in wolds]
    cond = {}
    cond["ii"] = ConditionResult(
        all(c == SHIFT for c in classes) and d.double_commutation_defect <= tol,
        {"classifications": classes, "double_commutation_defect": d.double_commutation_defect},
    )
    W, cond["iv"] = _iv(t, cfg)
    cond["i"] = ConditionResult(cond["iv"].passed, {"via": "iv"})

    angles = {}
    for mth in range(1, t.n + 1):
        if classes[mth - 1] != SHIFT:
            continue
        others = tuple(i for i in range(1, t.n + 1) if i != mth)
        span = block_span(t, others, W, cfg).space
        angles[mth] = subspace_distance(wolds[mth - 1].wandering, span)
    cond["iii"] = ConditionResult(
        any(a <= tol for a in angles.values()), {"max_angle_by_coordinate": angles}
    )

    if cond["iv"].passed:
        try:
            eq = build_mz_equivalence(t, cfg)
            cond["v"] = ConditionResult(
                eq.residual <= tol and eq.unitarity_defect <= tol,
                {"residual": eq.residual, "unitarity_defect": eq.unitarity_defect,
                 "e": eq.model.e, "degrees": list(eq.model.degrees)},
            )
        except WoldkitError as exc:
            cond["v"] = ConditionResult(False, {"error": str(exc)})
    else:
        cond["v"] = ConditionResult(False, {"reason": "condition iv fails"})
    return EquivalenceReport({k: cond[k] for k in ("i", "ii", "iii", "iv", "v")})


@dataclass(frozen=True, eq=False)
class MzEquivalence:
    """Unitary ``U`` with ``U V_i = M_zi U`` on the interior of the truncation."""

    U: np.ndarray
    model: PolydiscModel
    residual: float
    unitarity_defect: float
    basis: tuple = field(repr=False, default=())


def build_mz_equivalence(t, cfg=DEFAULT_CONFIG):
    """Map ``V^k eta_j`` to ``z^k (x) eta_j`` for a frame ``eta`` of the joint wandering subspace.

    Multi-indices are taken in graded lexicographic order, then coefficient
    index.  The intertwining residual is measured on basis vectors with
    ``k_i < D_i - 1`` for each coordinate ``i``.

    Raises
    ------
    DomainError
        If the joint wandering subspace does not generate ``H``.
    """
    W, res = _iv(t, cfg)
    if not res.passed:
        raise DomainError(f"joint wandering subspace does not generate the space: {res.detail}")
    budget = cfg.power_budget(t.dim)
    eta = W.frame
    degrees = []
    for V in t.operators:
        S = eta
        for p in range(1, budget + 1):
            S = V @ S
            if opnorm(S) <= cfg.rank_tol * max(1.0, opnorm(V)) ** p:
                degrees.append(p)
                break
        else:
            raise ConsistencyError("coordinate does not exhaust the joint wandering subspace")
    e = W.dim
    if e * prod(degrees) != t.dim:
        raise ConsistencyError(
            f"generated lattice e*prod(D)={e * prod(degrees)} does not match dimension {t.dim}"
        )
    model = build_polydisc(e, degrees, t.n, max_dim=max(t.dim, DEFAULT_MAX_DIM))
    indices = sorted(product(*(range(d) for d in degrees)), key=lambda k: (sum(k), tuple(-x for x in k)))
    columns, rows, order = [], [], []
    for k in indices:
        X = eta
        for i, power in enumerate(k):
            for _ in range(power):
                X = t[i] @ X
        for j in range(e):
            columns.append(X[:, j])
            rows.append(model.basis_index(k, j))
            order.append((k, j))
    B = np.column_stack(columns)
    U = np.zeros((model.dim, t.dim), dtype=np.complex128)
    U[rows, :] = B.conj().T
    unitarity = opnorm(U @ U.conj().T - np.eye(model.dim))
    residual = 0.0
    for i in range(t.n):
        cols = [c for c, (k, _) in enumerate(order) if k[i] < degrees[i] - 1]
        if cols:
            D = (U @ t[i] - model.operators[i] @ U) @ B[:, cols]
            residual = max(residual, opnorm(D))
    return MzEquivalence(U, model, residual, unitarity, tuple(order))


def random_spec(n, seed, scramble=True, max_dim=400):
    """A seeded random :class:`FixtureSpec` with dimension at most ``max_dim``.

    Each label is present with probability 0.6 (at least one is), shift
    depths are drawn from 2..4, unitary dims from 1..3, and unitary atoms
    are circular or random with equal odds.
    """
    rng = np.random.default_rng(seed)
    labels = subsets(n)
    while True:
        present = [A for A in labels if rng.random() < 0.6]
        if not present:
            present = [labels[int(rng.integers(len(labels)))]]
        mult = {A: int(rng.integers(1, 3)) for A in present}
        depths = tuple(int(x) for x in rng.integers(2, 5, size=n))
        udims = tuple(int(x) for x in rng.integers(1, 4, size=n))
        kind = "random" if rng.random() < 0.5 else "circular"
        spec = FixtureSpec.simple(
            n, mult, depths, udims, kind, seed=seed,
            scramble_seed=(seed + 7919) if scramble else None, max_dim=max_dim,
        )
        if spec.ambient_dim <= max_dim:
            return spec
