"""Matrices, states, observables and expected-value constraints.

All matrices are dense ``numpy`` complex arrays. State and observable types
validate on construction, store a read-only Hermitian copy of their matrix and
never mutate afterwards.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, ValidationError, ZeroMatrix

TAU_HERM = 1e-9
TAU_PSD = 1e-9
TAU_TRACE = 1e-9
TAU_NORM = 1e-12
SUPPORT_RTOL = 1e-9


def tau_act(bound: float) -> float:
    """Activity tolerance for a constraint with bound ``bound``."""
    return 1e-9 * max(1.0, abs(bound))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(x) -> np.ndarray:
    """Return the underlying complex array of a state/observable or array-like."""
    m = getattr(x, "matrix", x)
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def check_hermitian(m: np.ndarray, tol: float = TAU_HERM, what: str = "matrix") -> np.ndarray:
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} has non-finite entries")
    if dev > tol:
        raise ValidationError(f"{what} is not Hermitian (max deviation {dev:.3g})")
    return hermitian_part(m)


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    matrix: np.ndarray
    name: str | None = None

    def __post_init__(self):
        m = check_hermitian(as_matrix(self.matrix), what=self.name or "observable")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues in ascending order."""
        return np.linalg.eigvalsh(self.matrix)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.spectrum))) if self.dim else 0.0


class _SpectralState:
    """Shared eigen-cache for positive semidefinite states."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def _init_spectrum(self, matrix, what):
        m = check_hermitian(as_matrix(matrix), what=what)
        w, v = np.linalg.eigh(m)
        w, v = w[::-1], v[:, ::-1]
        if w.size and w[-1] < -TAU_PSD:
            raise ValidationError(f"{what} is not positive semidefinite (eigenvalue {w[-1]:.3g})")
        object.__setattr__(self, "matrix", _frozen(m))
        w = np.array(w, copy=True)
        w.setflags(write=False)
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", _frozen(v))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def rank(self, tol: float = SUPPORT_RTOL) -> int:
        return support_projector(self, tol).rank


@dataclass(frozen=True, eq=False)
class DensityOperator(_SpectralState):
    """Positive semidefinite, unit-trace matrix with cached eigen-data.

    Eigenvalues are stored in descending order; ``eigenvectors[:, i]`` belongs
    to ``eigenvalues[i]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._init_spectrum(self.matrix, "state")
        if abs(self.trace - 1.0) > TAU_TRACE:
            raise ValidationError(f"state has trace {self.trace!r}, expected 1")

    @classmethod
    def from_vector(cls, vec) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(np.eye(d) / d)


@dataclass(frozen=True, eq=False)
class SubnormalizedState(_SpectralState):
    """Element of the pyramid of positive matrices with trace at most one."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._init_spectrum(self.matrix, "subnormalized state")
        if self.trace > 1.0 + TAU_TRACE:
            raise ValidationError(f"subnormalized state has trace {self.trace!r} > 1")


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector; the global phase is irrelevant."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).ravel()
        if abs(np.linalg.norm(v) - 1.0) > TAU_NORM:
            raise ValidationError(f"pure state vector has norm {np.linalg.norm(v)!r}")
        object.__setattr__(self, "vector", _frozen(v))

    @classmethod
    def normalized(cls, vec) -> "PureState":
        v = np.asarray(vec, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise ZeroMatrix("cannot normalize the zero vector")
        return cls(v / n)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())

    def density(self) -> DensityOperator:
        return DensityOperator(self.projector())


class Kind(str, enum.Enum):
    SUBLEVEL = "sublevel"
    LEVEL = "level"


@dataclass(frozen=True, eq=False)
class Constraint:
    observable: HermitianObservable
    bound: float
    kind: Kind = Kind.SUBLEVEL

    def __post_init__(self):
        if not isinstance(self.observable, HermitianObservable):
            object.__setattr__(self, "observable", HermitianObservable(self.observable))
        b = float(self.bound)
        if not np.isfinite(b):
            raise ValidationError("constraint bound must be finite")
        object.__setattr__(self, "bound", b)
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def name(self) -> str | None:
        return self.observable.name


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        cs = tuple(self.constraints)
        dims = {c.observable.dim for c in cs}
        if len(dims) > 1:
            raise DimensionMismatch(f"constraint observables have differing dimensions {sorted(dims)}")
        object.__setattr__(self, "constraints", cs)

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def __getitem__(self, i):
        return self.constraints[i]

    def __add__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(self.constraints + tuple(other))

    @property
    def dim(self) -> int | None:
        return self.constraints[0].observable.dim if self.constraints else None

    def names(self) -> list[str]:
        return [c.name or f"H{k + 1}" for k, c in enumerate(self.constraints)]

    @classmethod
    def of(cls, *items: Union[Constraint, tuple]) -> "ConstraintSet":
        """Build from ``Constraint`` objects or ``(matrix, bound, kind)`` tuples."""
        out = []
        for it in items:
            out.append(it if isinstance(it, Constraint) else Constraint(*it))
        return cls(tuple(out))


StateLike = Union[DensityOperator, SubnormalizedState, np.ndarray]


def expected_value(rho: StateLike, H) -> float:
    """``Re Tr(H rho)``; raises if the imaginary residual is not negligible."""
    r = as_matrix(rho)
    h = as_matrix(H)
    if r.shape != h.shape:
        raise DimensionMismatch(f"state is {r.shape}, observable is {h.shape}")
    val = np.einsum("ij,ji->", h, r)
    h_norm = H.norm if isinstance(H, HermitianObservable) else np.linalg.norm(h, 2)
    if isinstance(rho, _SpectralState):
        r_norm = np.abs(rho.eigenvalues).sum()
    else:
        r_norm = np.linalg.norm(r, "nuc")
    bound = 1e-12 * h_norm * r_norm
    if abs(val.imag) > max(bound, 1e-300):
        raise ValidationError(f"Tr(H rho) has imaginary part {val.imag:.3g}")
    return float(val.real)


class Slack(NamedTuple):
    index: int
    kind: Kind
    value: float
    bound: float
    slack: float
    ok: bool


class MembershipReport(NamedTuple):
    ok: bool
    slacks: list[Slack]

    def __bool__(self):
        return self.ok


def membership(rho: StateLike, cs: ConstraintSet) -> MembershipReport:
    r = as_matrix(rho)
    if cs.dim is not None and cs.dim != r.shape[0]:
        raise DimensionMismatch(f"state has dimension {r.shape[0]}, constraints {cs.dim}")
    slacks = []
    for k, c in enumerate(cs):
        v = expected_value(r, c.observable)
        s = c.bound - v
        tol = tau_act(c.bound)
        ok = s >= -tol if c.kind is Kind.SUBLEVEL else abs(s) <= tol
        slacks.append(Slack(k, c.kind, v, c.bound, s, ok))
    return MembershipReport(all(s.ok for s in slacks), slacks)


class Support(NamedTuple):
    projector: np.ndarray
    rank: int
    basis: np.ndarray
    eigenvalues: np.ndarray
    near_threshold: bool


def support_projector(rho: StateLike, tol: float = SUPPORT_RTOL) -> Support:
    """Projector onto the eigenvectors with eigenvalue ``> tol * lambda_max``.

    ``near_threshold`` flags spectra with an eigenvalue within a factor of 10
    of the cutoff, where the rank decision is tolerance-dependent.
    """
    if isinstance(rho, _SpectralState):
        w, v = rho.eigenvalues, rho.eigenvectors
    else:
        m = check_hermitian(as_matrix(rho))
        w, v = np.linalg.eigh(m)
        w, v = w[::-1], v[:, ::-1]
    lmax = w[0] if w.size else 0.0
    if lmax <= TAU_PSD:
        raise ZeroMatrix("matrix has no eigenvalue above the PSD tolerance")
    cut = tol * lmax
    keep = w > cut
    r = int(np.count_nonzero(keep))
    near = bool(np.any((w > cut / 10) & (w <= cut * 10)))
    basis = v[:, :r]
    proj = basis @ basis.conj().T
    return Support(proj, r, basis, w[:r], near)


def herm_coords(k: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of an r x r Hermitian matrix.

    Order: diagonal, then ``sqrt(2) Re k_ij`` and ``sqrt(2) Im k_ij`` for
    ``i < j``. The Euclidean inner product of coordinates equals ``Tr(AB)``.
    """
    r = k.shape[-1]
    iu = np.triu_indices(r, 1)
    off = k[..., iu[0], iu[1]]
    return np.concatenate(
        [np.real(np.diagonal(k, axis1=-2, axis2=-1)), np.sqrt(2) * off.real, np.sqrt(2) * off.imag],
        axis=-1,
    )


def herm_from_coords(c: np.ndarray, r: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    iu = np.triu_indices(r, 1)
    n = len(iu[0])
    out = np.zeros(c.shape[:-1] + (r, r), dtype=complex)
    idx = np.arange(r)
    out[..., idx, idx] = c[..., :r]
    z = (c[..., r:r + n] + 1j * c[..., r + n:]) / np.sqrt(2)
    out[..., iu[0], iu[1]] = z
    out[..., iu[1], iu[0]] = z.conj()
    return out


def pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Identity and the three Pauli matrices."""
    i2 = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return i2, x, y, z


def check_same_dim(*mats: Sequence) -> int:
    dims = {as_matrix(m).shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()
