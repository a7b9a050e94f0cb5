"""Classical convex sets: the simplex of discrete densities and the polynomial cone.

Finite densities and polynomials use exact ``Fraction`` arithmetic. Densities
with infinite support are symbolic families evaluated in binary64; for them
face membership is never decided, only classified from a truncated ratio
sequence with an explicit advisory flag.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .core import DensityOperator, Kind, ConstraintSet, Constraint
from .errors import InputNotInCone, TailUnavailable, ValidationError
from .faces import face_report

SQRT2 = float(np.sqrt(2.0))
QUARTIC2 = float(2.0 ** 0.25)


# finite densities --------------------------------------------------------


@dataclass(frozen=True)
class FiniteDensity:
    """Probability density on a finite set of positive integers, exact weights."""

    weights: Mapping[int, Fraction]

    def __post_init__(self):
        w = {}
        for n, p in dict(self.weights).items():
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ValidationError(f"support points must be positive integers, got {n!r}")
            p = Fraction(p)
            if p <= 0:
                raise ValidationError(f"weight at {n} must be positive, got {p}")
            w[n] = p
        if sum(w.values()) != 1:
            raise ValidationError(f"weights sum to {sum(w.values())}, expected 1")
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.weights)

    def __call__(self, n: int) -> Fraction:
        return self.weights.get(n, Fraction(0))

    @classmethod
    def uniform(cls, points) -> "FiniteDensity":
        pts = list(points)
        return cls({n: Fraction(1, len(pts)) for n in pts})

    @classmethod
    def delta(cls, n: int) -> "FiniteDensity":
        return cls({n: Fraction(1)})


def simplex_face_witness(q: FiniteDensity, p: FiniteDensity):
    """``(mu, lam)`` with ``mu = max q/p`` and ``(1 - lam) p + lam q >= 0`` for ``lam < 0``.

    Returns None when ``supp(q)`` is not inside ``supp(p)``.
    """
    if not q.support <= p.support:
        return None
    mu = max(q(n) / p(n) for n in p.support)
    lam = Fraction(-1) if mu == 1 else -1 / (mu - 1)
    return mu, lam


def _segment_ok(q: FiniteDensity, p: FiniteDensity, lam: Fraction) -> bool:
    pts = p.support | q.support
    return lam < 0 and all((1 - lam) * p(n) + lam * q(n) >= 0 for n in pts)


def simplex_face_membership(q: FiniteDensity, p: FiniteDensity) -> bool:
    """Whether ``q`` lies in the face of the simplex generated by ``p``."""
    member = q.support <= p.support
    wit = simplex_face_witness(q, p)
    assert member == (wit is not None and _segment_ok(q, p, wit[1]))
    return member


def simplex_ri_membership(q: FiniteDensity, p: FiniteDensity) -> bool:
    return q.support == p.support


# symbolic densities on the positive integers ----------------------------


@dataclass(frozen=True, eq=False)
class SymbolicDensity:
    """Density on ``{1, 2, ...}`` given by a vectorized evaluator and optionally its tail.

    ``tail(n)`` is ``r_n = sum_{m >= n} p(m)``.
    """

    family: str
    params: tuple
    pmf: Callable[[np.ndarray], np.ndarray]
    tail_fn: Callable[[np.ndarray], np.ndarray] | None = None
    k: int = 0

    def __call__(self, n) -> np.ndarray:
        return self.pmf(np.asarray(n, dtype=float))

    def tail(self, n) -> np.ndarray:
        if self.tail_fn is None:
            raise TailUnavailable(f"family {self.family} has no tail evaluator")
        return self.tail_fn(np.asarray(n, dtype=float))

    @property
    def label(self) -> str:
        args = ",".join(str(a) for a in self.params)
        base = f"{self.family}({args})"
        return base if self.k == 0 else f"H^{self.k}[{base}]"


def geometric(a: float) -> SymbolicDensity:
    """``p(n) = (1 - a) a^(n-1)`` with tail ``a^(n-1)``."""
    if not 0 < a < 1:
        raise ValidationError("geometric ratio must lie in (0, 1)")
    return SymbolicDensity("geometric", (a,), lambda n: (1 - a) * a ** (n - 1), lambda n: a ** (n - 1))


def zeta_density(s: float) -> SymbolicDensity:
    """``p(n) = n^(-s) / zeta(s)``; the tail is a Hurwitz zeta ratio."""
    if not s > 1:
        raise ValidationError("zeta density needs s > 1")
    z = float(hurwitz_zeta(s, 1))
    return SymbolicDensity("zeta", (s,), lambda n: n ** (-s) / z, lambda n: hurwitz_zeta(s, n) / z)


def custom_density(name: str, pmf: Callable, tail: Callable | None = None) -> SymbolicDensity:
    return SymbolicDensity(name, (), pmf, tail)


def zeta_tail_interval(s: float, n: int, N: int | None = None) -> tuple[float, float]:
    """Bounds on ``r_n`` from the partial sum up to ``N`` plus integral remainder bounds."""
    N = n + 1000 if N is None else N
    m = np.arange(n, N + 1, dtype=float)
    partial = float(np.sum(m ** (-s)))
    lo = partial + (N + 1) ** (1 - s) / (s - 1)
    hi = partial + N ** (1 - s) / (s - 1)
    z = float(hurwitz_zeta(s, 1))
    return lo / z, hi / z


def hadamard_transform(p: SymbolicDensity) -> SymbolicDensity:
    """``p_H(n) = sqrt(r_n) - sqrt(r_{n+1})``, evaluated as ``p(n) / (sqrt(r_n) + sqrt(r_{n+1}))``."""
    if p.tail_fn is None:
        raise TailUnavailable(f"family {p.family} has no tail evaluator")

    def pmf(n):
        return p.pmf(n) / (np.sqrt(p.tail_fn(n)) + np.sqrt(p.tail_fn(n + 1)))

    def tail(n):
        return np.sqrt(p.tail_fn(n))

    return SymbolicDensity(p.family, p.params, pmf, tail, p.k + 1)


def hadamard_iterate(p: SymbolicDensity, k: int) -> SymbolicDensity:
    for _ in range(k):
        p = hadamard_transform(p)
    return p


def ratio_limit_report(q: SymbolicDensity, p: SymbolicDensity, N: int) -> dict:
    """Truncated evidence for ``sup q/p < infinity`` (membership of ``q`` in the face of ``p``).

    Compares the largest ratio on ``(N/2, N]`` with the largest on ``[1, N/2]``:
    growth ``>= sqrt 2`` reads as diverging, ``<= 2^(1/4)`` as bounded, and
    anything between as indeterminate. The verdict is advisory only.
    """
    n = np.arange(1, N + 1, dtype=float)
    r = q(n) / p(n)
    half = N // 2
    early, late = float(np.max(r[:half])), float(np.max(r[half:]))
    growth = late / early
    if growth >= SQRT2:
        verdict = "diverging"
    elif growth <= QUARTIC2:
        verdict = "bounded"
    else:
        verdict = "indeterminate"
    return {
        "q": q.label,
        "p": p.label,
        "N": N,
        "sup": float(np.max(r)),
        "early_max": early,
        "late_max": late,
        "growth": growth,
        "verdict": verdict,
        "advisory": True,
    }


# univariate polynomials ---------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """Nonzero polynomial with exact coefficients, lowest degree first."""

    coefficients: tuple

    def __post_init__(self):
        c = [Fraction(a) for a in self.coefficients]
        while c and c[-1] == 0:
            c.pop()
        if not c:
            raise ValidationError("the zero polynomial has no degree")
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> Fraction:
        return self.coefficients[-1]

    def combine(self, other: "Polynomial", lam: Fraction):
        """``(1 - lam) self + lam other``, or None if it vanishes."""
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (Fraction(0),) * (n - len(self.coefficients))
        b = other.coefficients + (Fraction(0),) * (n - len(other.coefficients))
        c = [(1 - lam) * x + lam * y for x, y in zip(a, b)]
        return Polynomial(tuple(c)) if any(c) else None

    def __str__(self):
        terms = [f"{a}x^{i}" if i else f"{a}" for i, a in enumerate(self.coefficients) if a]
        return " + ".join(reversed(terms))


def _check_cone(*ps: Polynomial) -> None:
    for p in ps:
        if p.leading <= 0:
            raise InputNotInCone(f"polynomial {p} has non-positive leading coefficient")


def poly_segment_witness(q: Polynomial, p: Polynomial) -> Fraction | None:
    """Exact ``lam < 0`` with ``(1 - lam) p + lam q`` in the cone, or None if none exists."""
    _check_cone(q, p)
    if q.degree < p.degree:
        return Fraction(-1)
    if q.degree == p.degree:
        a, b = p.leading, q.leading
        return -a / (2 * (a + b))
    return None


def poly_face_membership(q: Polynomial, p: Polynomial) -> bool:
    """Whether ``q`` lies in the face generated by ``p`` in the cone of positive-leading polynomials."""
    _check_cone(q, p)
    member = q.degree <= p.degree
    lam = poly_segment_witness(q, p)
    if lam is not None:
        comb = p.combine(q, lam)
        assert lam < 0 and comb is not None and comb.leading > 0
    assert member == (lam is not None)
    return member


def poly_ri_membership(q: Polynomial, p: Polynomial) -> bool:
    _check_cone(q, p)
    return q.degree == p.degree


# the triangle of classical qutrit states --------------------------------


def _rank_exact(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def diagonal_direction_dim(x, observables, bounds, kinds) -> int:
    """Dimension of the two-sided direction space at a probability vector ``x``.

    Directions are real vectors on ``supp(x)`` with zero sum, annihilated by
    every active constraint ``sum_i f_i v_i``. Exact arithmetic throughout.
    """
    x = [Fraction(t) for t in x]
    supp = [i for i, t in enumerate(x) if t != 0]
    rows = [[Fraction(1)] * len(supp)]
    for f, e, kind in zip(observables, bounds, kinds):
        f = [Fraction(t) for t in f]
        val = sum(a * b for a, b in zip(f, x))
        if Kind(kind) is Kind.LEVEL or val == Fraction(e):
            rows.append([f[i] for i in supp])
    return len(supp) - _rank_exact(rows)


def triangle_counterexample() -> dict:
    """Classical states on three points with ``f(x) = x_3`` and ``alpha = 1/2``.

    ``rho_i = (sigma_i + sigma_3) / 2`` for ``i = 1, 2`` are extreme points of
    both the level set ``f = 1/2`` and the sublevel set ``f <= 1/2`` of the
    triangle, yet have rank two. Every pure (vertex) state in the sublevel set
    has ``f = 0``, so the supremum of ``f`` is not reached on pure states.
    """
    half = Fraction(1, 2)
    f = [0, 0, 1]
    sigmas = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    rhos = {"rho1": [half, 0, half], "rho2": [0, half, half]}
    points = {}
    for name, x in rhos.items():
        dim_level = diagonal_direction_dim(x, [f], [half], [Kind.LEVEL])
        dim_sub = diagonal_direction_dim(x, [f], [half], [Kind.SUBLEVEL])
        rank = sum(1 for t in x if t != 0)
        q = face_report(DensityOperator(np.diag([float(t) for t in x])),
                        ConstraintSet.of(Constraint(np.diag(f).astype(float), 0.5, Kind.LEVEL)))
        points[name] = {
            "direction_dim_level": dim_level,
            "direction_dim_sublevel": dim_sub,
            "extreme_level": dim_level == 0,
            "extreme_sublevel": dim_sub == 0,
            "rank": rank,
            "quantum_constrained_dim": q.constrained_dim,
        }
    pure_values = [sum(Fraction(a) * b for a, b in zip(f, s)) for s in sigmas]
    feasible_pure = [v for v in pure_values if v <= half]
    sup_pure = max(feasible_pure)
    sup_all = half  # f is at most alpha on the sublevel set and rho1 attains it
    f_rho1 = sum(Fraction(a) * b for a, b in zip(f, rhos["rho1"]))
    facts = {
        "extreme_with_rank_two": all(
            p["extreme_level"] and p["extreme_sublevel"] and p["rank"] == 2 for p in points.values()
        ),
        "rank_two": all(p["rank"] == 2 for p in points.values()),
        "pure_supremum_fails": pure_values[0] == 0 and pure_values[1] == 0 and sup_pure < f_rho1 == sup_all,
    }
    return {
        "points": points,
        "f_sigma": [float(v) for v in pure_values],
        "sup_f_pure": float(sup_pure),
        "sup_f_all": float(sup_all),
        "facts": facts,
        "holds": all(facts.values()),
    }
