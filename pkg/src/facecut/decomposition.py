"""Constructive decomposition of constrained states into pure states.

A mixed state ``rho`` of rank ``r >= 2`` that satisfies ``l <= 2`` expected
value constraints always admits a traceless direction ``V`` supported on
``supp(rho)`` with ``Tr H_k V = 0`` for every ``k``. Moving along ``+V`` and
``-V`` until the boundary of the positive cone gives two states of lower
rank that carry exactly the same constraint values, and ``rho`` is their
convex combination. Recursing down to rank one yields a pure-state
decomposition, which is then thinned with Caratheodory steps.

Internally a state is carried as a factor ``G`` with ``rho = G G^*``. The
boundary child is formed as a new factor whose vanishing column is removed
outright, so the rank drop never depends on an eigenvalue threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    SUPPORT_RTOL,
    ConstraintSet,
    Constraint,
    DensityOperator,
    HermitianObservable,
    Kind,
    PureState,
    as_matrix,
    expected_value,
    herm_coords,
    herm_from_coords,
    membership,
    support_projector,
)
from .errors import (
    BadFactorization,
    BadRank,
    DimensionMismatch,
    DirectionUnsupported,
    DirectionZero,
    ExtremeMixedState,
    NotInSet,
    NumericalDependencyFailure,
)
from .faces import constrained_null_space

WEIGHT_FLOOR = 1e-12
FACTOR_RTOL = 1e-15
COLUMN_ZERO = 1e-12
BARYCENTER_TOL = 1e-10
DEPENDENCY_RTOL = 1e-9


class BoundaryStep(NamedTuple):
    t_plus: float
    t_minus: float


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Weighted pure states with a reconstruction certificate.

    ``values[i, k]`` is ``<phi_i|H_k|phi_i>``. ``reduced_from`` is the number
    of leaves produced by splitting before Caratheodory reduction.
    """

    weights: np.ndarray
    vectors: np.ndarray  # shape (n, d), unit rows
    values: np.ndarray
    residual: float
    reduced_from: int
    names: tuple[str, ...] = ()
    dropped_mass: float = 0.0
    flags: tuple[str, ...] = ()
    marginals: np.ndarray | None = None

    def __len__(self):
        return len(self.weights)

    @property
    def components(self) -> list[tuple[float, PureState]]:
        return [(float(p), PureState(v)) for p, v in zip(self.weights, self.vectors)]

    def projectors(self) -> np.ndarray:
        return np.einsum("ni,nj->nij", self.vectors, self.vectors.conj())

    def reconstruct(self) -> np.ndarray:
        return np.einsum("n,ni,nj->ij", self.weights, self.vectors, self.vectors.conj())

    def to_dict(self) -> dict:
        comps = []
        for n, (p, v) in enumerate(zip(self.weights, self.vectors)):
            item = {
                "weight": float(p),
                "vector": [[float(z.real), float(z.imag)] for z in v],
                "values": {name: float(self.values[n, k]) for k, name in enumerate(self.names)},
            }
            if self.marginals is not None:
                item["marginals"] = {"A": float(self.marginals[n, 0]), "B": float(self.marginals[n, 1])}
            comps.append(item)
        out = {"components": comps, "residual": self.residual, "reduced_from": self.reduced_from}
        if self.dropped_mass:
            out["dropped_mass"] = self.dropped_mass
        if self.flags:
            out["flags"] = list(self.flags)
        return out


# factor-level primitives -------------------------------------------------


def _thin(g: np.ndarray):
    """``g = B S X`` with the numerically zero singular values removed."""
    b, s, _ = np.linalg.svd(g, full_matrices=False)
    keep = s > FACTOR_RTOL * s[0]
    return b[:, keep], s[keep]


def _split_factor(g: np.ndarray, observables: list[np.ndarray]):
    """Split ``g g^*`` along the first admissible direction.

    Returns ``(p, g_plus, q, g_minus)`` or raises ExtremeMixedState.
    """
    b, s = _thin(g)
    r = len(s)
    comp = [b.conj().T @ h @ b for h in observables]
    null, _, _ = constrained_null_space(comp, r, traceless=True)
    if null.shape[0] == 0:
        raise ExtremeMixedState(f"no admissible direction at rank {r} with {len(observables)} constraints")
    k = herm_from_coords(null[0], r)
    w_mat = k / np.outer(s, s)
    w, u = np.linalg.eigh(w_mat)
    if not (w[0] < 0 < w[-1]):
        raise ExtremeMixedState("direction does not reach the boundary on both sides")
    t_plus, t_minus = -1.0 / w[0], 1.0 / w[-1]
    base = (b * s) @ u
    children = []
    for t in (t_plus, -t_minus):
        scale = 1.0 + t * w
        scale[scale <= COLUMN_ZERO] = 0.0
        keep = scale > 0
        children.append(base[:, keep] * np.sqrt(scale[keep]))
    p = t_minus / (t_plus + t_minus)
    q = t_plus / (t_plus + t_minus)
    return p, children[0], q, children[1]


def _leaves(g: np.ndarray, weight: float, observables, out: list) -> None:
    """Depth-first split; the plus child is visited first."""
    if g.shape[1] == 1 or len(_thin(g)[1]) == 1:
        b, s = _thin(g)
        vec = b[:, 0]
        out.append((weight * float(s[0] ** 2), vec))
        return
    p, gp, q, gm = _split_factor(g, observables)
    _leaves(gp, weight * p, observables, out)
    _leaves(gm, weight * q, observables, out)


def _factor(rho: DensityOperator, tol: float = SUPPORT_RTOL) -> np.ndarray:
    sup = support_projector(rho, tol)
    return sup.basis * np.sqrt(sup.eigenvalues)


def _as_density(rho) -> DensityOperator:
    return rho if isinstance(rho, DensityOperator) else DensityOperator(as_matrix(rho))


# public operations -------------------------------------------------------


def step_to_boundary(rho, V) -> BoundaryStep:
    """Largest steps ``t`` with ``rho + t V`` and ``rho - t V`` positive semidefinite."""
    rho = _as_density(rho)
    v = as_matrix(V)
    if v.shape != rho.matrix.shape:
        raise DimensionMismatch(f"state is {rho.matrix.shape}, direction is {v.shape}")
    vn = np.linalg.norm(v)
    if vn == 0:
        raise DirectionZero("direction is the zero matrix")
    sup = support_projector(rho)
    q = np.eye(rho.dim) - sup.projector
    if np.linalg.norm(q @ v) > 1e-9 * vn:
        raise DirectionUnsupported("direction has range outside the support of the state")
    if abs(np.trace(v)) > 1e-9 * vn:
        raise DirectionUnsupported("direction is not traceless")
    b = sup.basis
    k = b.conj().T @ v @ b
    k = 0.5 * (k + k.conj().T)
    isq = 1.0 / np.sqrt(sup.eigenvalues)
    w = np.linalg.eigvalsh(k * np.outer(isq, isq))
    assert w[0] < 0 < w[-1], w
    t_plus, t_minus = float(-1.0 / w[0]), float(1.0 / w[-1])
    edge = support_projector(rho.matrix + t_plus * v).rank
    assert edge <= sup.rank - 1, (edge, sup.rank)
    return BoundaryStep(t_plus, t_minus)


def split_once(rho, cs: ConstraintSet = ConstraintSet()):
    """One binary split ``rho = p rho_plus + q rho_minus`` preserving every constraint value.

    All constraints are treated as active here, so Sublevel values are kept
    exactly as well.
    """
    rho = _as_density(rho)
    g = _factor(rho)
    if g.shape[1] < 2:
        raise BadRank("split_once needs a state of rank at least 2")
    obs = [c.observable.matrix for c in cs]
    p, gp, q, gm = _split_factor(g, obs)
    plus = DensityOperator(gp @ gp.conj().T)
    minus = DensityOperator(gm @ gm.conj().T)
    return (p, plus), (q, minus)


def caratheodory_reduce(weights, vectors):
    """Drop components while the projectors are affinely dependent.

    Each step moves the weights along an affine dependency ``c`` (with
    ``sum c = 0`` and ``sum c_i P_i = 0``) until one weight vanishes. The
    component vectors are never modified, only reweighted or removed.
    Returns ``(weights, vectors)``.
    """
    p = np.array(weights, dtype=float)
    vecs = np.array(vectors, dtype=complex)
    d = vecs.shape[1]
    while len(p) > 1:
        proj = np.einsum("ni,nj->nij", vecs, vecs.conj())
        a = np.vstack([herm_coords(proj).T, np.ones((1, len(p)))])
        _, s, vh = np.linalg.svd(a, full_matrices=True)
        rank = int(np.count_nonzero(s > DEPENDENCY_RTOL * s[0]))
        if rank == len(p):
            break
        c = vh[-1].real
        if not np.any(c > 0):
            c = -c
        pos = c > 0
        ratios = np.full(len(p), np.inf)
        ratios[pos] = p[pos] / c[pos]
        i = int(np.argmin(ratios))
        alpha = ratios[i]
        shift = alpha * np.einsum("n,nij->ij", c, proj)
        if np.max(np.abs(shift)) > BARYCENTER_TOL:
            raise NumericalDependencyFailure(f"affine dependency moved the barycenter by {np.max(np.abs(shift)):.3g}")
        p = p - alpha * c
        p[i] = 0.0
        keep = p > 0
        p, vecs = p[keep], vecs[keep]
    assert len(p) <= max(d * d, 1)
    return p, vecs


def _certify(rho: DensityOperator, cs: ConstraintSet, weights, vectors, reduced_from, flags=()) -> Decomposition:
    weights = np.asarray(weights, dtype=float)
    small = weights < WEIGHT_FLOOR
    dropped = float(weights[small].sum())
    weights, vectors = weights[~small], vectors[~small]
    weights = weights / weights.sum()
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    values = np.array(
        [[float(np.real(v.conj() @ c.observable.matrix @ v)) for c in cs] for v in vectors]
    ).reshape(len(vectors), len(cs))
    recon = np.einsum("n,ni,nj->ij", weights, vectors, vectors.conj())
    residual = float(np.max(np.abs(rho.matrix - recon)))
    return Decomposition(weights, vectors, values, residual, reduced_from, tuple(cs.names()), dropped, tuple(flags))


def pure_decompose(rho, cs: ConstraintSet = ConstraintSet(), reduce: bool = True) -> Decomposition:
    """Convex decomposition of ``rho`` into pure states with ``rho``'s constraint values."""
    rho = _as_density(rho)
    if not membership(rho, cs).ok:
        raise NotInSet("state does not satisfy the constraints")
    obs = [c.observable.matrix for c in cs]
    leaves: list = []
    _leaves(_factor(rho), 1.0, obs, leaves)
    weights = np.array([w for w, _ in leaves])
    vectors = np.array([v for _, v in leaves])
    n0 = len(weights)
    flags = []
    if reduce:
        try:
            weights, vectors = caratheodory_reduce(weights, vectors)
        except NumericalDependencyFailure:
            flags.append("reduction_skipped")
    return _certify(rho, cs, weights, vectors, n0, flags)


def _resolve_dims(d: int, dims) -> tuple[int, int]:
    da, db = (int(x) for x in dims)
    if da < 1 or db < 1 or da * db != d:
        raise BadFactorization(f"dimension {d} does not factor as {da} x {db}")
    return da, db


def partial_trace_matrix(m: np.ndarray, dims, trace_out="B") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    da, db = _resolve_dims(m.shape[0], dims)
    t = m.reshape(da, db, da, db)
    if trace_out in ("B", 1):
        return np.einsum("ijkj->ik", t)
    if trace_out in ("A", 0):
        return np.einsum("ijil->jl", t)
    raise ValueError(f"trace_out must be 'A' or 'B', got {trace_out!r}")


def partial_trace(rho, dims, trace_out="B") -> DensityOperator:
    """Reduced state after tracing out subsystem ``trace_out`` of a ``dims = (d_A, d_B)`` system."""
    return DensityOperator(partial_trace_matrix(as_matrix(rho), dims, trace_out))


def bipartite_decompose(rho, H_A, H_B) -> Decomposition:
    """Pure decomposition preserving both local expectations ``Tr H_A rho_A`` and ``Tr H_B rho_B``."""
    rho = _as_density(rho)
    ha = H_A if isinstance(H_A, HermitianObservable) else HermitianObservable(H_A, "H_A")
    hb = H_B if isinstance(H_B, HermitianObservable) else HermitianObservable(H_B, "H_B")
    dims = _resolve_dims(rho.dim, (ha.dim, hb.dim))
    e_a = expected_value(partial_trace(rho, dims, "B"), ha)
    e_b = expected_value(partial_trace(rho, dims, "A"), hb)
    cs = ConstraintSet.of(
        Constraint(HermitianObservable(np.kron(ha.matrix, np.eye(dims[1])), "H_A"), e_a, Kind.LEVEL),
        Constraint(HermitianObservable(np.kron(np.eye(dims[0]), hb.matrix), "H_B"), e_b, Kind.LEVEL),
    )
    dec = pure_decompose(rho, cs)
    marg = []
    for v in dec.vectors:
        pv = np.outer(v, v.conj())
        marg.append([
            float(np.real(np.trace(ha.matrix @ partial_trace_matrix(pv, dims, "B")))),
            float(np.real(np.trace(hb.matrix @ partial_trace_matrix(pv, dims, "A")))),
        ])
    return Decomposition(dec.weights, dec.vectors, dec.values, dec.residual, dec.reduced_from,
                         dec.names, dec.dropped_mass, dec.flags, np.array(marg))
