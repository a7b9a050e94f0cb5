"""Faces generated by points of the state space and its constrained subsets.

In finite dimension the face of the state space generated by ``rho`` is the
set of states supported on ``supp(rho)``; its affine hull is ``rho`` plus the
traceless Hermitian matrices with range inside the support. Intersecting
with expected-value constraints keeps only directions ``V`` with
``Tr H_k V = 0`` for every active constraint, since an inactive sublevel
constraint leaves room to move a little in both directions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    SUPPORT_RTOL,
    TAU_PSD,
    TAU_TRACE,
    ConstraintSet,
    DensityOperator,
    Kind,
    StateLike,
    SubnormalizedState,
    as_matrix,
    check_same_dim,
    herm_coords,
    herm_from_coords,
    membership,
    support_projector,
    tau_act,
)
from .errors import NotInSet

RANK_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class DirectionSpace:
    projector: np.ndarray
    rank: int
    basis: np.ndarray  # shape (m, d, d), Hilbert-Schmidt orthonormal
    active: tuple[int, ...]
    constraint_rank: int
    ambiguous: bool

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def as_real_vectors(self) -> np.ndarray:
        """Basis flattened to real vectors, isometric for ``Re Tr(A^* B)``."""
        flat = self.basis.reshape(self.dim, -1)
        return np.concatenate([flat.real, flat.imag], axis=1)


@dataclass(frozen=True, eq=False)
class FaceReport:
    ambient_dim: int
    constrained_dim: int
    active: tuple[int, ...]
    rank: int
    directions: DirectionSpace | None
    case: str = "state"
    flags: tuple[str, ...] = ()

    @property
    def extreme(self) -> bool:
        return self.constrained_dim == 0

    @property
    def drop(self) -> int:
        return self.ambient_dim - self.constrained_dim

    def to_dict(self) -> dict:
        out = {
            "ambient_dim": self.ambient_dim,
            "constrained_dim": self.constrained_dim,
            "active": list(self.active),
            "extreme": self.extreme,
            "rank": self.rank,
        }
        if self.case != "state":
            out["case"] = self.case
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def _complement_basis(rows: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis (as rows) of the complement of orthonormal ``rows`` in R^n."""
    if rows.shape[0] == 0:
        return np.eye(n)
    _, _, vh = np.linalg.svd(rows, full_matrices=True)
    return vh[rows.shape[0]:]


def constrained_null_space(compressed: list[np.ndarray], r: int, traceless: bool = True):
    """Coordinates of ``{K : Tr K = 0, Tr(A_k K) = 0}`` for r x r Hermitian ``K``.

    ``compressed`` holds the observables compressed to the support. Returns
    ``(null_coords, constraint_rank, ambiguous)``; the constraint rank is taken
    modulo the trace direction with a singular-value cutoff of
    ``RANK_RTOL`` times the largest constraint row norm.
    """
    n = r * r
    t = herm_coords(np.eye(r)) / np.sqrt(r)
    if compressed:
        c = herm_coords(np.stack(compressed))
        scale = float(np.max(np.linalg.norm(c, axis=1)))
        if traceless:
            c = c - np.outer(c @ t, t)
    else:
        c = np.zeros((0, n))
        scale = 0.0
    if c.shape[0] and scale > 0:
        _, s, vh = np.linalg.svd(c, full_matrices=False)
        cut = RANK_RTOL * scale
        k = int(np.count_nonzero(s > cut))
        ambiguous = bool(np.any((s > cut / 10) & (s <= cut * 10)))
        rowspace = vh[:k]
    else:
        k, ambiguous, rowspace = 0, False, np.zeros((0, n))
    fixed = np.vstack([t[None, :], rowspace]) if traceless else rowspace
    return _complement_basis(fixed, n), k, ambiguous


def _active_indices(rho: StateLike, cs: ConstraintSet) -> tuple[int, ...]:
    rep = membership(rho, cs)
    if not rep.ok:
        bad = [s.index for s in rep.slacks if not s.ok]
        raise NotInSet(f"state violates constraints {bad}")
    active = []
    for s in rep.slacks:
        if s.kind is Kind.LEVEL or abs(s.slack) <= tau_act(s.bound):
            active.append(s.index)
    return tuple(active)


def _directions(state, cs: ConstraintSet, active, tol, traceless) -> DirectionSpace:
    sup = support_projector(state, tol)
    b = sup.basis
    comp = [b.conj().T @ cs[k].observable.matrix @ b for k in active]
    null, k, ambiguous = constrained_null_space(comp, sup.rank, traceless)
    ks = herm_from_coords(null, sup.rank)
    basis = b @ ks @ b.conj().T if len(ks) else np.zeros((0,) + sup.projector.shape, complex)
    return DirectionSpace(sup.projector, sup.rank, basis, tuple(active), k, ambiguous or sup.near_threshold)


def _as_density(rho) -> DensityOperator:
    return rho if isinstance(rho, DensityOperator) else DensityOperator(as_matrix(rho))


def face_dimension_unconstrained(rho, tol: float = SUPPORT_RTOL) -> int:
    """Dimension ``r**2 - 1`` of the face of the state space generated by ``rho``."""
    r = support_projector(_as_density(rho), tol).rank
    return r * r - 1


def face_membership(sigma, rho, tol: float = TAU_PSD) -> bool:
    """Whether ``sigma`` lies in the face generated by ``rho`` (support inclusion)."""
    check_same_dim(sigma, rho)
    p = support_projector(_as_density(rho)).projector
    q = np.eye(p.shape[0]) - p
    s = as_matrix(sigma)
    return bool(np.linalg.norm(q @ s @ q, 2) <= tol and np.linalg.norm(q @ s @ p, 2) <= tol)


def ri_membership(sigma, rho, tol: float = TAU_PSD) -> bool:
    """Whether ``sigma`` lies in the relative interior of the face generated by ``rho``.

    Equivalent to both states generating the same face, i.e. equal supports.
    """
    check_same_dim(sigma, rho)
    r_s = support_projector(_as_density(sigma)).rank
    r_r = support_projector(_as_density(rho)).rank
    return r_s == r_r and face_membership(sigma, rho, tol)


DEFAULT_LAMBDA_GRID = -np.geomspace(10.0, 1e-6, 200)


def segment_oracle(sigma, rho, lambda_grid=DEFAULT_LAMBDA_GRID) -> bool:
    """Brute-force membership test: is ``(1 - l) rho + l sigma`` PSD for some grid ``l < 0``."""
    check_same_dim(sigma, rho)
    s, r = as_matrix(sigma), as_matrix(rho)
    for lam in lambda_grid:
        if lam >= 0:
            continue
        m = (1 - lam) * r + lam * s
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] >= -TAU_PSD:
            return True
    return False


def direction_space(rho, cs: ConstraintSet, tol: float = SUPPORT_RTOL) -> DirectionSpace:
    """Two-sided feasible directions at ``rho`` inside the constrained set."""
    rho = _as_density(rho)
    active = _active_indices(rho, cs)
    return _directions(rho, cs, active, tol, traceless=True)


def face_report(rho, cs: ConstraintSet = ConstraintSet(), tol: float = SUPPORT_RTOL) -> FaceReport:
    rho = _as_density(rho)
    ds = direction_space(rho, cs, tol)
    ambient = ds.rank ** 2 - 1
    m = ds.dim
    drop = ambient - m
    assert 0 <= drop <= len(ds.active) <= len(cs), (ambient, m, ds.active)
    flags = ("rank_ambiguous",) if ds.ambiguous else ()
    return FaceReport(ambient, m, ds.active, ds.rank, ds, flags=flags)


def face_report_subnormalized(a, cs: ConstraintSet = ConstraintSet(), tol: float = SUPPORT_RTOL) -> FaceReport:
    """Face report in the pyramid of trace-at-most-one positive matrices.

    Three cases: the apex ``0`` (an extreme point), a unit-trace point (the face
    is the face of the state space), or an interior point of a segment to the
    apex, whose face is the pyramid over the face of ``a / Tr a``.
    """
    a = a if isinstance(a, SubnormalizedState) else SubnormalizedState(as_matrix(a))
    tr = a.trace
    active = _active_indices(a, cs)
    if tr <= TAU_TRACE:
        return FaceReport(0, 0, active, 0, None, case="apex")
    if abs(tr - 1.0) <= TAU_TRACE:
        rep = face_report(DensityOperator(a.matrix / tr), cs, tol)
        return FaceReport(rep.ambient_dim, rep.constrained_dim, rep.active, rep.rank, rep.directions,
                          case="base", flags=rep.flags)
    ds = _directions(a, cs, active, tol, traceless=False)
    ambient = ds.rank ** 2
    assert 0 <= ambient - ds.dim <= len(active)
    flags = ("rank_ambiguous",) if ds.ambiguous else ()
    return FaceReport(ambient, ds.dim, active, ds.rank, ds, case="pyramid", flags=flags)


def intersection_dimension(a: DirectionSpace, b: DirectionSpace, tol: float = 1e-8) -> int:
    """Dimension of the intersection of two direction spaces at the same point."""
    if a.dim == 0 or b.dim == 0:
        return 0
    s = np.linalg.svd(a.as_real_vectors() @ b.as_real_vectors().T, compute_uv=False)
    return int(np.count_nonzero(s >= 1 - tol))
