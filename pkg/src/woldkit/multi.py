"""Wold-type decomposition of a doubly commuting tuple of isometries.

For ``A`` a subset of ``{1..m}`` the block ``H_A`` is the span of
``V_A^k C_A`` over multi-indices ``k`` supported on ``A``, where the core
``C_A`` is the part of ``W_A = ran prod_{i in A} (I - V_i V_i*)`` that
survives every power of the coordinates outside ``A`` (``C_emptyset`` starts
from the whole space).  On ``H_A`` each ``V_i`` is a shift for ``i in A`` and
unitary otherwise.

Two constructions are provided: :func:`decompose_direct` evaluates the block
formula for each label, :func:`decompose_recursive` splits by the classical
Wold decomposition one coordinate at a time.  They share the verification
in :func:`_assemble`.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .exceptions import DecompositionError, DomainError, InputError, WoldkitError
from .operators import IsometryTuple, check_gate, opnorm, reducing_defect, restrict
from .subspace import (
    DEFAULT_CONFIG,
    Subspace,
    check_agreement,
    direct_sum_residual,
    image,
    intersect,
    join,
    orthonormalize,
    subspace_distance,
    subspace_minus,
)
from .wold import SHIFT, UNITARY, Iteration, wandering_subspace, wold_decompose

SLOCINSKI_NAMES = {(1, 2): "ss", (1,): "su", (2,): "us", (): "uu"}


def subsets(m):
    """All subsets of ``{1..m}`` as sorted tuples, largest first, then lexicographic."""
    labels = []
    for size in range(m, -1, -1):
        labels.extend(combinations(range(1, m + 1), size))
    return labels


def canonical_label(A, m=None):
    label = tuple(sorted({int(i) for i in A}))
    if label and label[0] < 1:
        raise InputError(f"subset labels are 1-based, got {A}")
    if m is not None and label and label[-1] > m:
        raise InputError(f"label {label} is not a subset of {{1..{m}}}")
    return label


def format_label(A):
    return "{" + ",".join(str(i) for i in A) + "}"


class _Cache:
    """Per-tuple memo of coordinate wandering subspaces and operator norms."""

    def __init__(self, t, cfg):
        self.t = t
        self.cfg = cfg
        self._w = {}
        self._norms = [max(1.0, x) for x in t.norms]

    def norm(self, i):
        return self._norms[i - 1]

    def wandering(self, i):
        if i not in self._w:
            self._w[i] = wandering_subspace(self.t[i - 1], self.cfg)
        return self._w[i]


def _cache(t, cfg, cache):
    return cache if cache is not None else _Cache(t, cfg)


def wandering_intersection(t, A, cfg=DEFAULT_CONFIG, cache=None):
    """``W_A``: range of the product of the defect projectors ``I - V_i V_i*``, ``i in A``.

    The intersection of the individual ``W_i`` is computed as well and the
    two must agree within ``residual_tol``.

    Raises
    ------
    ConsistencyError
        When the projector product and the intersection disagree (the
        projections do not commute).
    """
    A = canonical_label(A, t.n)
    if not A:
        raise InputError("wandering_intersection needs a non-empty label")
    c = _cache(t, cfg, cache)
    N = t.dim
    product = np.eye(N, dtype=np.complex128)
    for i in A:
        V = t[i - 1]
        product = product @ (np.eye(N) - V @ V.conj().T)
    scale = max(c.norm(i) for i in A) ** (2 * len(A))
    W_A = orthonormalize(product, cfg, scale=scale)
    if len(A) > 1:
        check_agreement(
            W_A,
            intersect([c.wandering(i) for i in A], cfg),
            cfg.residual_tol,
            f"range of projector product and intersection for {format_label(A)}",
        )
    return W_A


@dataclass(frozen=True)
class IdentityReport:
    """Both sides of ``W_A (-) V_j W_A = W_A & W_j`` and their distance."""

    label: tuple
    j: int
    lhs: Subspace
    rhs: Subspace
    reducing_defect: float
    max_angle: float

    @property
    def dims(self):
        return self.lhs.dim, self.rhs.dim


def generalized_wandering_identity(t, A, j, cfg=DEFAULT_CONFIG, cache=None):
    """Compute ``W_A (-) V_j W_A`` and ``(& W_i) & W_j`` independently.

    Raises
    ------
    DomainError
        If ``W_A`` does not reduce ``V_j`` (tuple not doubly commuting).
    """
    A = canonical_label(A, t.n)
    if j in A or not 1 <= j <= t.n:
        raise InputError(f"j={j} must be a coordinate outside {format_label(A)}")
    c = _cache(t, cfg, cache)
    W_A = wandering_intersection(t, A, cfg, c)
    Vj = t[j - 1]
    defect = reducing_defect(Vj, W_A)
    if defect > cfg.residual_tol:
        raise DomainError(
            f"W_{format_label(A)} does not reduce V_{j} (defect {defect:.3e})", defect
        )
    lhs = subspace_minus(W_A, image(Vj, W_A, cfg, c.norm(j)), cfg)
    rhs = intersect([c.wandering(i) for i in A] + [c.wandering(j)], cfg)
    return IdentityReport(A, j, lhs, rhs, defect, subspace_distance(lhs, rhs))


def inner_core(t, A, m=None, cfg=DEFAULT_CONFIG, cache=None):
    """The core ``C_A``: ``W_A`` (or ``H`` for empty ``A``) cut down by powers of ``V_j``, ``j`` in ``{1..m}`` minus ``A``.

    Coordinates are applied round-robin; a sweep is one pass over them.
    The iteration stops once the dimension is unchanged for
    ``stabilization_window`` sweeps, or reaches ``{0}``.
    """
    m = t.n if m is None else m
    A = canonical_label(A, m)
    c = _cache(t, cfg, cache)
    start = wandering_intersection(t, A, cfg, c) if A else Subspace.full(t.dim)
    outside = [j for j in range(1, m + 1) if j not in A]
    if not outside or start.dim == 0:
        return Iteration(start, "stabilized", 0, (start.dim,), stabilized_at=0,
                         marginal=start.marginal)
    S = start
    dims = [S.dim]
    run = 0
    marginal = start.marginal
    budget = cfg.power_budget(t.dim)
    for sweep in range(1, budget + 1):
        for j in outside:
            S = image(t[j - 1], S, cfg, c.norm(j))
            marginal |= S.marginal
        run = run + 1 if S.dim == dims[-1] else 0
        dims.append(S.dim)
        if S.dim == 0:
            return Iteration(S, "stabilized", sweep, tuple(dims), stabilized_at=sweep - run,
                             marginal=marginal)
        if run >= cfg.stabilization_window:
            return Iteration(S, "stabilized", sweep, tuple(dims), stabilized_at=sweep - run + 1,
                             marginal=marginal)
    return Iteration(S, "unresolved", budget, tuple(dims), marginal=marginal)


def block_span(t, A, core, cfg=DEFAULT_CONFIG, cache=None):
    """Span of ``V_A^k core`` over multi-indices ``k`` in graded lexicographic order.

    ``V^k core`` is obtained from one predecessor ``V^{k - e_p} core``; an
    index is only generated when every predecessor is non-zero, since a
    vanishing image kills all its multiples.  The largest overlap between a
    new image and the accumulation is recorded as ``nonorthogonality``.
    """
    A = canonical_label(A, t.n)
    c = _cache(t, cfg, cache)
    N = t.dim
    if core.dim == 0:
        return Iteration(Subspace.zero(N), "exhausted", 0, (0,))
    if not A:
        return Iteration(core, "exhausted", 0, (core.dim,))
    zero = (0,) * len(A)
    alive = {zero: core}
    acc = core.frame
    overlap = 0.0
    marginal = False
    dims = [core.dim]
    budget = cfg.power_budget(N)
    grade = 0
    while alive:
        if grade >= budget:
            return Iteration(Subspace(acc), "unresolved", grade, tuple(dims), overlap,
                             marginal=marginal)
        grade += 1
        candidates = set()
        for k in alive:
            for p in range(len(A)):
                candidates.add(k[:p] + (k[p] + 1,) + k[p + 1 :])
        nxt = {}
        added = 0
        for k in sorted(candidates, reverse=True):
            preds = [(p, k[:p] + (k[p] - 1,) + k[p + 1 :]) for p in range(len(A)) if k[p] > 0]
            if not all(pk in alive for _, pk in preds):
                continue
            p, pk = preds[0]
            S = image(t[A[p] - 1], alive[pk], cfg, c.norm(A[p]))
            marginal |= S.marginal
            if S.dim == 0:
                continue
            C = acc.conj().T @ S.frame
            overlap = max(overlap, opnorm(C))
            inc = orthonormalize(S.frame - acc @ C, cfg, scale=1.0)
            marginal |= inc.marginal
            if inc.dim:
                acc = np.hstack([acc, inc.frame])
                added += inc.dim
            nxt[k] = S
        dims.append(added)
        alive = nxt
    return Iteration(Subspace(acc), "exhausted", grade, tuple(dims), overlap, marginal=marginal)


@dataclass(frozen=True)
class Block:
    """One block ``H_A`` with per-coordinate classification of ``V_i|H_A``, ``i = 1..m``."""

    label: tuple
    space: Subspace
    classification: tuple | None
    residuals: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.space.dim


@dataclass(frozen=True)
class MultiWoldDecomposition:
    """The ``2^m`` labelled blocks of a doubly commuting tuple.

    ``marginal`` lists the stages whose rank decisions were marginal; it is
    diagnostic only and does not change ``status``.
    """

    n: int
    m: int
    method: str
    blocks: dict
    core_spaces: dict
    residuals: dict
    status: str
    failures: tuple = ()
    marginal: tuple = ()

    @property
    def labels(self):
        return list(self.blocks)

    @property
    def ambient_dim(self):
        return next(iter(self.blocks.values())).space.ambient_dim

    def dims(self):
        return {A: b.dim for A, b in self.blocks.items()}

    def space(self, A):
        return self.blocks[canonical_label(A)].space

    def nonzero(self):
        return [A for A, b in self.blocks.items() if b.dim]


def _classify_block(t, A, S, m, cfg):
    """Run ``wold_decompose`` on each restriction ``V_i|S`` and compare to membership in ``A``."""
    if S.dim == 0:
        return None, {}, [], []
    P = None if t.interior is None else S.frame.conj().T @ t.interior @ S.frame
    classes, res, failures, marginal = [], {}, [], []
    for i in range(1, m + 1):
        expected = SHIFT if i in A else UNITARY
        try:
            wd = wold_decompose(restrict(t[i - 1], S, cfg), cfg, interior=P)
        except WoldkitError as exc:
            classes.append("Failed")
            failures.append(f"V_{i} on block {format_label(A)}: {exc}")
            continue
        classes.append(wd.classification)
        marginal.extend(f"V_{i} {stage} on block {format_label(A)}" for stage in wd.marginal)
        res[f"unitary_defect_{i}"] = wd.residuals["unitary_defect"]
        if wd.status != "accepted":
            failures.append(f"V_{i} on block {format_label(A)}: restriction unresolved")
        elif wd.classification != expected:
            failures.append(
                f"V_{i} on block {format_label(A)} is {wd.classification}, expected {expected}"
            )
    return tuple(classes), res, failures, marginal


def _assemble(t, m, spaces, cores, method, unresolved, cfg, marginal=()):
    tol = cfg.residual_tol
    failures = []
    marginal = list(marginal)
    blocks = {}
    for A, S in spaces.items():
        res = {"reducing": max((reducing_defect(t[i - 1], S) for i in range(1, m + 1)), default=0.0)}
        if res["reducing"] > tol:
            failures.append(f"block {format_label(A)} is not jointly reducing ({res['reducing']:.3e})")
        classes, cres, cfail, cmarg = _classify_block(t, A, S, m, cfg)
        res.update(cres)
        failures.extend(cfail)
        marginal.extend(cmarg)
        blocks[A] = Block(A, S, classes, res)
    residuals = {
        "completeness": int(sum(S.dim for S in spaces.values()) - t.dim),
        "orthogonality": direct_sum_residual(spaces.values()),
        "reducing": max(b.residuals["reducing"] for b in blocks.values()),
    }
    if residuals["completeness"] != 0:
        failures.append(f"block dimensions sum to {t.dim + residuals['completeness']}, expected {t.dim}")
    if residuals["orthogonality"] > tol:
        failures.append(f"blocks are not orthogonal ({residuals['orthogonality']:.3e})")
    if unresolved:
        return MultiWoldDecomposition(
            t.n, m, method, blocks, cores, residuals, "unresolved", tuple(unresolved + failures),
            tuple(marginal),
        )
    if failures:
        raise DecompositionError("; ".join(failures), residuals)
    return MultiWoldDecomposition(
        t.n, m, method, blocks, cores, residuals, "accepted", marginal=tuple(marginal)
    )


def _check_depth(t, m):
    m = t.n if m is None else int(m)
    if not 1 <= m <= t.n:
        raise InputError(f"depth m={m} must satisfy 1 <= m <= n={t.n}")
    return m


def decompose_direct(t, m=None, cfg=DEFAULT_CONFIG):
    """Blocks ``H_A = span V_A^k C_A`` for every ``A`` in ``{1..m}``, verified.

    Raises
    ------
    GateError
        If the tuple is not (interior-)isometric and doubly commuting.
    DecompositionError
        If completeness, orthogonality, joint reduction or the per-coordinate
        classification fails.
    """
    m = _check_depth(t, m)
    check_gate(t, cfg)
    c = _Cache(t, cfg)
    spaces, cores, unresolved, marginal = {}, {}, [], []
    for A in subsets(m):
        core = inner_core(t, A, m, cfg, c)
        span = block_span(t, A, core.space, cfg, c)
        marginal.extend(f"{what} of {format_label(A)}" for what, it in (("core", core), ("span", span))
                        if it.marginal)
        for what, it in (("core", core), ("span", span)):
            if not it.resolved:
                unresolved.append(f"{what} of {format_label(A)} unresolved after {it.steps} steps")
        if span.nonorthogonality > cfg.residual_tol:
            unresolved.append(
                f"span of {format_label(A)} has non-orthogonal increments ({span.nonorthogonality:.3e})"
            )
        cores[A] = core.space
        spaces[A] = span.space
    return _assemble(t, m, spaces, cores, "direct", unresolved, cfg, marginal)


def decompose_recursive(t, m=None, cfg=DEFAULT_CONFIG):
    """Split by the Wold decomposition of ``V_1``, restrict the rest, and recurse.

    Leaf blocks are mapped back to the ambient space through the chain of
    frames.  Restriction failures are reported with the label path.
    """
    m = _check_depth(t, m)
    check_gate(t, cfg)
    N = t.dim
    spaces, unresolved, marginal = {}, [], []

    def descend(local, embed, level, label):
        if level == m:
            spaces[label] = Subspace(embed)
            return
        if local.dim == 0:
            for rest in subsets(m - level):
                tail = tuple(level + i for i in rest)
                spaces[label + tail] = Subspace(np.zeros((N, 0), dtype=np.complex128))
            return
        wd = wold_decompose(local[level], cfg, interior=local.interior)
        if wd.status != "accepted":
            unresolved.append(f"Wold decomposition of V_{level + 1} on path {format_label(label)}")
        marginal.extend(f"V_{level + 1} {stage} on path {format_label(label)}" for stage in wd.marginal)
        for part, member in ((wd.shift_part, True), (wd.unitary_part, False)):
            path = label + ((level + 1,) if member else ())
            for j in range(level + 1, m):
                try:
                    restrict(local[j], part, cfg)
                except DomainError as exc:
                    raise DecompositionError(
                        f"V_{j + 1} does not leave the part on path {format_label(path)} invariant",
                        {"invariance_defect": exc.value},
                        label=path,
                    ) from exc
            descend(local.compress(part), embed @ part.frame, level + 1, path)

    head = IsometryTuple(t.operators[:m], t.interior)
    descend(head, np.eye(N, dtype=np.complex128), 0, ())
    ordered = {A: spaces[A] for A in subsets(m)}
    return _assemble(t, m, ordered, {}, "recursive", unresolved, cfg, marginal)


def slocinski_blocks(t, cfg=DEFAULT_CONFIG):
    """The four blocks ``H_ss, H_su, H_us, H_uu`` of a doubly commuting pair."""
    if t.n != 2:
        raise InputError(f"slocinski_blocks needs a pair, got n={t.n}")
    res = decompose_direct(t, 2, cfg)
    return {name: res.blocks[A].space for A, name in SLOCINSKI_NAMES.items()}


def compare_decompositions(a, b):
    """Largest principal angle per label between two decompositions of equal depth."""
    if a.m != b.m:
        raise InputError(f"depths differ ({a.m} vs {b.m})")
    return {A: subspace_distance(a.blocks[A].space, b.blocks[A].space) for A in a.blocks}


def partial_depth_agreement(coarse, fine, cfg=DEFAULT_CONFIG):
    """Compare each depth-``m`` block with the join of the deeper blocks restricting to it.

    Returns a mapping ``A -> (coarse dim, joined dim, max angle)``.
    """
    if coarse.m >= fine.m:
        raise InputError("coarse decomposition must have smaller depth")
    out = {}
    m = coarse.m
    for A, block in coarse.blocks.items():
        parts = [b.space for B, b in fine.blocks.items() if tuple(i for i in B if i <= m) == A]
        nonzero = [S for S in parts if S.dim]
        joined = join(nonzero, cfg) if nonzero else Subspace.zero(block.space.ambient_dim)
        out[A] = (block.dim, joined.dim, subspace_distance(block.space, joined))
    return out
