"""Energy-constrained optimization over pure states.

Three problems share one geometric primitive: for a two-dimensional subspace
the pure states form a Bloch sphere, expected values are affine in the Bloch
vector, and the best state under one expected-value constraint is available
in closed form (``_best_in_plane``).

* ``constrained_linear_max`` solves ``sup Tr M rho`` s.t. ``Tr H rho <= E``
  through the Lagrange dual ``min_{lam >= 0} lam E + lambda_max(M - lam H)``
  and recovers a pure primal optimizer inside the top eigenspace.
* ``enorm_dual`` / ``enorm_pure`` compute the operator E-norm by the dual
  route and by direct ascent over constrained unit vectors.
* ``min_output_entropy`` minimizes the output entropy of a channel over
  constrained pure inputs by Riemannian gradient descent.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    TAU_PSD,
    DensityOperator,
    HermitianObservable,
    Kind,
    PureState,
    as_matrix,
    check_hermitian,
    tau_act,
)
from .errors import DimensionMismatch, Infeasible, NoConvergence, ValidationError

GAP_RTOL = 1e-7
EIG_DEGEN_RTOL = 1e-10


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAXITER = "maxiter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    value: float
    state: PureState | None
    multiplier: float | None
    iterations: int
    restarts: int
    status: Status
    constraint_value: float | None = None
    gap: float | None = None

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "multiplier": self.multiplier,
            "status": self.status.value,
            "iterations": self.iterations,
            "restarts": self.restarts,
        }
        if self.constraint_value is not None:
            out["constraint_value"] = self.constraint_value
        if self.gap is not None:
            out["duality_gap"] = self.gap
        if self.state is not None:
            out["state"] = [[float(z.real), float(z.imag)] for z in self.state.vector]
        return out


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel ``rho -> sum_j K_j rho K_j^*`` with trace-preservation checked on construction."""

    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValidationError("a channel needs at least one Kraus operator")
        shapes = {k.shape for k in ks}
        if len(shapes) != 1 or ks[0].ndim != 2:
            raise DimensionMismatch(f"Kraus operators have inconsistent shapes {sorted(shapes)}")
        for k in ks:
            k.setflags(write=False)
        tp = sum(k.conj().T @ k for k in ks)
        dev = np.max(np.abs(tp - np.eye(ks[0].shape[1])))
        if dev > 1e-9:
            raise ValidationError(f"Kraus operators are not trace preserving (deviation {dev:.3g})")
        object.__setattr__(self, "kraus", ks)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        return sum(k.conj().T @ x @ k for k in self.kraus)

    def complementary(self) -> "KrausChannel":
        """Complementary channel with Kraus operators ``L_k = sum_j |j><k| K_j``."""
        stack = np.stack(self.kraus)  # (n, d_out, d_in)
        return KrausChannel(tuple(stack[:, k, :] for k in range(self.d_out)))


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d),))


def amplitude_damping(gamma: float) -> KrausChannel:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausChannel((k0, k1))


def depolarizing(p: float = 1.0) -> KrausChannel:
    """Qubit depolarizing channel; ``p = 1`` maps every state to the maximally mixed state."""
    i2 = np.eye(2)
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0])
    return KrausChannel((np.sqrt(1 - 3 * p / 4) * i2, np.sqrt(p / 4) * x, np.sqrt(p / 4) * y, np.sqrt(p / 4) * z))


def apply_channel(phi: KrausChannel, rho) -> DensityOperator:
    r = as_matrix(rho)
    if r.shape[0] != phi.d_in:
        raise DimensionMismatch(f"channel input dimension {phi.d_in}, state dimension {r.shape[0]}")
    return DensityOperator(phi(r))


def von_neumann_entropy(rho) -> float:
    """Entropy in nats over the eigenvalues above ``TAU_PSD``."""
    w = np.linalg.eigvalsh(as_matrix(rho))
    w = w[w > TAU_PSD]
    w = w / w.sum()
    return max(0.0, float(-np.sum(w * np.log(w))))


# two-dimensional subspace solver ----------------------------------------


def _bloch(a: np.ndarray):
    a0 = 0.5 * (a[0, 0] + a[1, 1]).real
    vec = np.array([a[1, 0].real, a[1, 0].imag, 0.5 * (a[0, 0] - a[1, 1]).real])
    return a0, vec


def _vector_from_bloch(n: np.ndarray) -> np.ndarray:
    theta = np.arccos(np.clip(n[2], -1.0, 1.0))
    phi = np.arctan2(n[1], n[0])
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _orthogonal_unit(h: np.ndarray) -> np.ndarray:
    e = np.eye(3)[int(np.argmin(np.abs(h)))]
    u = e - (e @ h) * h
    return u / np.linalg.norm(u)


def _best_in_plane(q: np.ndarray, m: np.ndarray, h: np.ndarray, e: float, level: bool = False):
    """Maximize ``<psi|m|psi>`` over unit ``psi`` in the span of the orthonormal columns of ``q``.

    Subject to ``<psi|h|psi> <= e`` (or ``== e`` when ``level``). Returns the
    vector in the ambient space, or None when the plane holds no feasible state.
    """
    mc = q.conj().T @ m @ q
    hc = q.conj().T @ h @ q
    _, mv = _bloch(mc)
    h0, hv = _bloch(hc)
    c = e - h0
    tol = tau_act(e)
    hn = np.linalg.norm(hv)
    mn = np.linalg.norm(mv)
    mhat = mv / mn if mn > 0 else np.array([0.0, 0.0, 1.0])
    if hn <= 1e-15 * max(1.0, abs(h0)):
        if c < -tol or (level and abs(c) > tol):
            return None
        return q @ _vector_from_bloch(mhat)
    hhat = hv / hn
    if c < -hn - tol or (level and c > hn + tol):
        return None
    if not level and hhat @ mhat <= c / hn:
        return q @ _vector_from_bloch(mhat)
    cos = np.clip(c / hn, -1.0, 1.0)
    perp = mhat - (mhat @ hhat) * hhat
    pn = np.linalg.norm(perp)
    perp = perp / pn if pn > 1e-14 else _orthogonal_unit(hhat)
    n = cos * hhat + np.sqrt(max(0.0, 1 - cos * cos)) * perp
    return q @ _vector_from_bloch(n)


def _plane(u: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    """Orthonormal basis of span{u, v} with ``u`` first, or None if ``v`` adds nothing."""
    u = u / np.linalg.norm(u)
    w = v - (u.conj() @ v) * u
    wn = np.linalg.norm(w)
    if wn <= 1e-14 * max(1.0, np.linalg.norm(v)):
        return None
    # second pass: near-parallel inputs leave w far from orthogonal after one
    w = w / wn
    w = w - (u.conj() @ w) * u
    return np.stack([u, w / np.linalg.norm(w)], axis=1)


def _rayleigh(x: np.ndarray, a: np.ndarray) -> float:
    return float(np.real(x.conj() @ a @ x))


def _unit(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x)


def _herm(x, name: str) -> np.ndarray:
    if isinstance(x, HermitianObservable):
        return x.matrix
    return check_hermitian(as_matrix(x), what=name)


# linear objective --------------------------------------------------------


def _dual(m, h, e, lam):
    w, v = np.linalg.eigh(m - lam * h)
    return lam * e + w[-1], v[:, -1]


def constrained_linear_max(M, H, E: float, max_iter: int = 200) -> OptimizationResult:
    """Maximize ``Tr M rho`` over states with ``Tr H rho <= E``; the optimizer is pure."""
    m, h = _herm(M, "M"), _herm(H, "H")
    if m.shape != h.shape:
        raise DimensionMismatch(f"M is {m.shape}, H is {h.shape}")
    E = float(E)
    tol = tau_act(E)
    hw, hv = np.linalg.eigh(h)
    if E < hw[0] - tol:
        raise Infeasible(f"bound {E} is below the smallest eigenvalue {hw[0]} of H")
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(m)))))

    def finish(x, lam, iters, gap=None):
        x = _unit(x)
        return OptimizationResult(_rayleigh(x, m), PureState(x), lam, iters, 0, Status.CONVERGED, _rayleigh(x, h), gap)

    if E <= hw[0] + tol:
        # feasible pure states live in the (near-)ground space of H
        g = hv[:, hw <= E + tol]
        w, u = np.linalg.eigh(g.conj().T @ m @ g)
        return finish(g @ u[:, -1], None, 0)

    mw, mv = np.linalg.eigh(m)
    top = mv[:, mw >= mw[-1] - EIG_DEGEN_RTOL * scale]
    w, u = np.linalg.eigh(top.conj().T @ h @ top)
    if w[0] <= E + tol:
        return finish(top @ u[:, 0], 0.0, 0)

    lo, hi = 0.0, 2.0 * scale / max(tol, E - hw[0])
    v_lo = mv[:, -1]
    _, v_hi = _dual(m, h, E, hi)
    ext = 0
    while _rayleigh(v_hi, h) > E and ext < 200:
        lo, v_lo = hi, v_hi
        hi *= 2.0
        _, v_hi = _dual(m, h, E, hi)
        ext += 1
    it = 0
    while it < max_iter and hi - lo > 1e-15 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        _, v = _dual(m, h, E, mid)
        if _rayleigh(v, h) > E:
            lo, v_lo = mid, v
        else:
            hi, v_hi = mid, v
        it += 1
    q = _plane(v_hi, v_lo)
    x = v_hi if q is None else _best_in_plane(q, m, h, E)
    if x is None:
        x = v_hi
    primal = _rayleigh(_unit(x), m)
    dual = min(_dual(m, h, E, hi)[0], _dual(m, h, E, lo)[0])
    gap = float(dual - primal)
    if gap > GAP_RTOL * scale:
        raise NoConvergence(f"duality gap {gap:.3g} after {it} bisection steps")
    return finish(x, float(hi), it + ext, gap)


def _shift_nonnegative(h: np.ndarray, E: float):
    lmin = float(np.linalg.eigvalsh(h)[0])
    if lmin < 0:
        warnings.warn(f"H has negative eigenvalue {lmin:.6g}; shifting H and E by {-lmin:.6g}", stacklevel=3)
        return h - lmin * np.eye(h.shape[0]), E - lmin
    return h, E


def _gram(A) -> np.ndarray:
    a = np.asarray(A, dtype=complex)
    if a.ndim != 2:
        raise ValidationError("A must be a matrix")
    return a.conj().T @ a


def enorm_dual(A, H, E: float) -> float:
    """E-norm ``sup sqrt(Tr A rho A^*)`` over states with ``Tr H rho <= E``, via the dual bisection."""
    h, E = _shift_nonnegative(_herm(H, "H"), float(E))
    res = constrained_linear_max(_gram(A), h, E)
    return float(np.sqrt(max(res.value, 0.0)))


# direct ascent over constrained unit vectors ------------------------------


def _haar_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    return _unit(rng.normal(size=d) + 1j * rng.normal(size=d))


def _make_feasible(x, h, E, hv, level: bool):
    """Nearest constrained unit vector in the plane spanned by ``x`` and an eigenvector of ``h``."""
    hx = _rayleigh(x, h)
    tol = tau_act(E)
    if (not level and hx <= E) or (level and abs(hx - E) <= tol):
        return x
    anchor = hv[:, 0] if hx > E else hv[:, -1]
    q = _plane(x, anchor)
    if q is None:
        return anchor
    y = _best_in_plane(q, np.outer(x, x.conj()), h, E, level=level)
    return anchor if y is None else _unit(y)


def _ascent(m, h, E, x0, max_iter: int):
    """Ascent of ``<x|m|x>`` over unit vectors with ``<x|h|x> <= E``.

    Interior moves are exact maximizations on the plane through ``x`` and the
    gradient. Once the constraint binds, steps follow the manifold
    ``<x|h|x> = E`` with conjugate directions, backtracking and a Newton
    retraction. Iterates stay feasible and the objective never decreases.
    """
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(m)))))
    tol = tau_act(E)
    x = x0
    f = _rayleigh(x, m)
    d_prev = g_prev = None
    t = 1.0 / scale
    for it in range(1, max_iter + 1):
        g = 2.0 * (m @ x - f * x)
        hx = _rayleigh(x, h)
        n = h @ x - hx * x
        nn = float(np.real(n.conj() @ n))
        binding = hx >= E - tol and nn > 1e-28 and np.real(n.conj() @ g) > 0
        if not binding:
            d_prev = g_prev = None
            if np.linalg.norm(g) <= 1e-10 * scale:
                return x, f, it, True
            q = _plane(x, g)
            y = None if q is None else _best_in_plane(q, m, h, E)
            if y is None:
                return x, f, it, True
            y = _unit(y)
            fy = _rayleigh(y, m)
            if fy <= f:
                return x, f, it, True
            x, f = y, fy
            continue
        gp = g - (np.real(n.conj() @ g) / nn) * n
        if np.linalg.norm(gp) <= 1e-10 * scale:
            return x, f, it, True
        d = gp
        if d_prev is not None:
            dp = d_prev - np.real(x.conj() @ d_prev) * x
            dp = dp - (np.real(n.conj() @ dp) / nn) * n
            beta = max(0.0, np.real(gp.conj() @ (gp - g_prev)) / max(np.real(g_prev.conj() @ g_prev), 1e-300))
            d = gp + beta * dp
            if np.real(d.conj() @ gp) <= 0:
                d = gp
        slope = float(np.real(d.conj() @ gp))
        # exact search along the level circle in span{x, d}; d is tangent to it at x
        q = _plane(x, d)
        y = None if q is None else _best_in_plane(q, m, h, E, level=True)
        if y is not None:
            y, ok = _restore(_unit(y), h, E, level=True)
            fy = _rayleigh(y, m)
            if ok and fy > f:
                if fy - f <= 1e-14 * scale:
                    return (y, fy, it, True) if fy > f else (x, f, it, True)
                x, f = y, fy
                d_prev, g_prev = d, gp
                continue
        t = 2.0 * t
        accepted = False
        for _ in range(60):
            y, ok = _restore(_unit(x + t * d), h, E, level=True)
            if ok:
                fy = _rayleigh(y, m)
                if fy > f and fy >= f + 1e-4 * t * slope:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return x, f, it, True
        x, f = y, fy
        d_prev, g_prev = d, gp
    return x, f, max_iter, False


def enorm_pure_result(A, H, E: float, restarts: int = 4, seed: int = 0, max_iter: int = 500) -> OptimizationResult:
    """Best ``||A phi||^2`` found by multi-start ascent; ``value`` is the squared norm."""
    h, E = _shift_nonnegative(_herm(H, "H"), float(E))
    m = _gram(A)
    if m.shape != h.shape:
        raise DimensionMismatch(f"A^*A is {m.shape}, H is {h.shape}")
    hw, hv = np.linalg.eigh(h)
    if E < hw[0] - tau_act(E):
        raise Infeasible(f"bound {E} is below the smallest eigenvalue {hw[0]} of H")
    mv = np.linalg.eigh(m)[1]
    starts = [mv[:, -1]]
    for i in range(restarts):
        starts.append(_haar_vector(np.random.default_rng([seed, i]), h.shape[0]))
    best = None
    iters = 0
    all_ok = True
    for x0 in starts:
        x, f, it, ok = _ascent(m, h, E, _make_feasible(x0, h, E, hv, level=False), max_iter)
        iters += it
        if best is None or f > best[1]:
            best = (x, f, ok)
        all_ok = all_ok and ok
    x, f, ok = best
    status = Status.CONVERGED if ok else Status.MAXITER
    return OptimizationResult(f, PureState(_unit(x)), None, iters, len(starts), status, _rayleigh(x, h))


def enorm_pure(A, H, E: float, restarts: int = 4, seed: int = 0, max_iter: int = 500) -> float:
    """E-norm as ``sup ||A phi||`` over unit vectors with ``<phi|H|phi> <= E``."""
    res = enorm_pure_result(A, H, E, restarts, seed, max_iter)
    return float(np.sqrt(max(res.value, 0.0)))


# constrained minimal output entropy ------------------------------------


def _output_entropy(phi: KrausChannel, x: np.ndarray):
    sigma = phi(np.outer(x, x.conj()))
    w, u = np.linalg.eigh(sigma)
    return von_neumann_entropy(sigma), w, u


def _entropy_grad(phi: KrausChannel, x: np.ndarray, w, u) -> np.ndarray:
    logs = (u * np.log(np.clip(w, 1e-15, None))) @ u.conj().T
    g = -2.0 * phi.adjoint(logs) @ x
    return g - np.real(x.conj() @ g) * x


def _restore(x, h, E, level: bool, rounds: int = 8):
    """Newton steps along the tangent normal of ``<x|h|x>`` back onto the constraint."""
    tol = tau_act(E)
    # aim at the bound itself so iterates cannot creep along the tolerance band
    tight = 1e-14 * max(1.0, abs(E))
    for _ in range(rounds):
        hx = _rayleigh(x, h)
        if (level and abs(hx - E) <= tight) or (not level and hx <= E):
            return x, True
        n = h @ x - hx * x
        nn = float(np.real(n.conj() @ n))
        if nn <= 1e-30:
            return x, False
        x = _unit(x + (E - hx) / (2.0 * nn) * n)
    hx = _rayleigh(x, h)
    return x, (abs(hx - E) <= tol) if level else (hx <= E + tol)


def _descend(phi, h, E, level, x, max_iter):
    tol = tau_act(E)
    f, w, u = _output_entropy(phi, x)
    t = 1.0
    for it in range(1, max_iter + 1):
        g = _entropy_grad(phi, x, w, u)
        hx = _rayleigh(x, h)
        n = h @ x - hx * x
        nn = float(np.real(n.conj() @ n))
        if nn > 1e-28 and (level or (hx >= E - tol and np.real(n.conj() @ g) < 0)):
            g = g - (np.real(n.conj() @ g) / nn) * n
        gn2 = float(np.real(g.conj() @ g))
        if np.sqrt(gn2) <= 1e-8:
            return x, f, it, True
        t = min(1.0, 4.0 * t)
        moved = False
        for _ in range(60):
            y, ok = _restore(_unit(x - t * g), h, E, level)
            if ok:
                fy, wy, uy = _output_entropy(phi, y)
                if fy < f and fy <= f - 1e-4 * t * gn2:
                    x, f, w, u = y, fy, wy, uy
                    moved = True
                    break
            t *= 0.5
        if not moved:
            # stalled line search: accept only a pure output or a roundoff-level gradient
            return x, f, it, f <= 1e-12 or np.sqrt(gn2) <= 1e-6
    return x, f, max_iter, False


def min_output_entropy(phi: KrausChannel, H, E: float, kind=Kind.SUBLEVEL, restarts: int = 32,
                       seed: int = 0, max_iter: int = 500) -> OptimizationResult:
    """Smallest output entropy found over pure inputs with ``<phi|H|phi> <= E`` (or ``== E``).

    Only local minima are certified; the result is an upper bound on the
    constrained infimum.
    """
    kind = Kind(kind)
    level = kind is Kind.LEVEL
    h = _herm(H, "H")
    if h.shape[0] != phi.d_in:
        raise DimensionMismatch(f"H has dimension {h.shape[0]}, channel input {phi.d_in}")
    E = float(E)
    tol = tau_act(E)
    hw, hv = np.linalg.eigh(h)
    if E < hw[0] - tol or (level and E > hw[-1] + tol):
        raise Infeasible(f"bound {E} is outside the admissible range for {kind.value} constraints")
    best = None
    iters = 0
    for i in range(restarts):
        x0 = _haar_vector(np.random.default_rng([seed, i]), phi.d_in)
        x0, _ = _restore(_make_feasible(x0, h, E, hv, level), h, E, level)
        x, f, it, ok = _descend(phi, h, E, level, x0, max_iter)
        iters += it
        if best is None or f < best[1]:
            best = (x, f, ok)
    x, f, ok = best
    status = Status.CONVERGED if ok else Status.MAXITER
    return OptimizationResult(f, PureState(_unit(x)), None, iters, restarts, status, _rayleigh(x, h))
