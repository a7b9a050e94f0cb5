"""Random states, observables and constraint sets for randomized checks."""
from __future__ import annotations

import numpy as np

from .core import Constraint, ConstraintSet, DensityOperator, HermitianObservable, Kind, expected_value
from .errors import BadRank


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary(d: int, rng) -> np.ndarray:
    rng = make_rng(rng)
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_vector(d: int, rng) -> np.ndarray:
    rng = make_rng(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_state(d: int, rank: int | None = None, seed=None) -> DensityOperator:
    """Haar-rotated Dirichlet(1, ..., 1) spectrum of the given rank, padded with zeros."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise BadRank(f"rank must lie in [1, {d}], got {rank}")
    rng = make_rng(seed)
    u = haar_unitary(d, rng)
    w = np.zeros(d)
    w[:rank] = rng.dirichlet(np.ones(rank))
    m = (u * w) @ u.conj().T
    return DensityOperator(0.5 * (m + m.conj().T))


def random_hermitian(d: int, seed=None, psd: bool = False) -> np.ndarray:
    """GUE sample scaled to unit spectral norm, or a Wishart sample when ``psd``."""
    rng = make_rng(seed)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = g @ g.conj().T if psd else g + g.conj().T
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def random_constraints(d: int, ell: int, kinds=None, anchored_at=None, seed=None) -> ConstraintSet:
    """``ell`` random constraints; anchored ones are feasible at ``anchored_at`` by construction.

    ``kinds`` is a sequence of kinds, a single kind, or None for a fair coin
    per constraint. Anchored Sublevel bounds get zero slack with probability
    1/2 (so the constraint is active) and otherwise a slack in ``[0.1, 1)``.
    """
    rng = make_rng(seed)
    if kinds is None:
        kinds = [Kind.LEVEL if rng.random() < 0.5 else Kind.SUBLEVEL for _ in range(ell)]
    elif isinstance(kinds, (str, Kind)):
        kinds = [Kind(kinds)] * ell
    out = []
    for k in range(ell):
        h = HermitianObservable(random_hermitian(d, rng), f"H{k + 1}")
        kind = Kind(kinds[k])
        if anchored_at is not None:
            e = expected_value(anchored_at, h)
            if kind is Kind.SUBLEVEL and rng.random() >= 0.5:
                e += rng.uniform(0.1, 1.0)
        else:
            w = h.spectrum
            e = rng.uniform(w[0], w[-1])
        out.append(Constraint(h, e, kind))
    return ConstraintSet(tuple(out))
