"""Randomized verification suites.

Each suite draws independent instances from ``default_rng([seed, suite_id,
index])``, so any instance can be regenerated on its own from the triple
recorded in a violation, and results do not depend on execution order.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classical import triangle_counterexample
from .core import (
    ConstraintSet,
    Constraint,
    DensityOperator,
    Kind,
    SUPPORT_RTOL,
    expected_value,
    membership,
    pauli,
    tau_act,
)
from .decomposition import pure_decompose
from .errors import ExtremeMixedState
from .faces import face_report
from .io import encode_matrix, problem_to_dict
from .optimize import constrained_linear_max, enorm_dual, enorm_pure, von_neumann_entropy
from .sampling import haar_vector, random_constraints, random_hermitian, random_state

SUITES = ("purity", "dim-drop", "decompose", "enorm", "jensen", "counterexamples")

DEFAULT_SAMPLES = {
    "purity": 1000,
    "dim-drop": 1000,
    "decompose": 200,
    "enorm": 50,
    "jensen": 200,
    "counterexamples": 1,
}


@dataclass
class RunConfig:
    seed: int = 0
    samples: int | None = None
    dims: tuple[int, ...] | None = None
    ell: int | None = None
    restarts: int = 4
    threads: int | None = None
    timing: bool = False


@dataclass
class VerificationReport:
    suite: str
    instances: int
    violations: list = field(default_factory=list)
    wall_time: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "instances": self.instances,
            "passed": self.passed,
            "violations": self.violations,
            "params": self.params,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def instance_rng(seed: int, suite: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, SUITES.index(suite), index])


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("FACECUT_THREADS", "1")))
    except ValueError:
        return 1


# independent oracle --------------------------------------------------------


def direction_dim_oracle(rho, cs: ConstraintSet, tol: float = SUPPORT_RTOL) -> int:
    """Two-sided direction dimension from the real ``2 d^2`` parametrization of ``V``.

    Imposes Hermiticity, ``(1 - P) V = 0``, ``Tr V = 0`` and ``Re Tr H_k V = 0``
    for active constraints as real linear equations and counts the null space.
    """
    r = np.asarray(getattr(rho, "matrix", rho))
    d = r.shape[0]
    w, v = np.linalg.eigh(r)
    keep = w > tol * w[-1]
    p = v[:, keep] @ v[:, keep].conj().T
    q = np.eye(d) - p
    active = []
    for c in cs:
        val = float(np.real(np.trace(c.observable.matrix @ r)))
        if c.kind is Kind.LEVEL or abs(val - c.bound) <= tau_act(c.bound):
            active.append(c.observable.matrix)

    def residual(x):
        vr, vi = x[: d * d].reshape(d, d), x[d * d:].reshape(d, d)
        vv = vr + 1j * vi
        parts = [(vr - vr.T).ravel(), (vi + vi.T).ravel()]
        qv = q @ vv
        parts += [qv.real.ravel(), qv.imag.ravel(), [np.trace(vr)]]
        parts.append([np.real(np.trace(h @ vv)) for h in active])
        return np.concatenate([np.asarray(t, dtype=float) for t in parts])

    n = 2 * d * d
    mat = np.stack([residual(e) for e in np.eye(n)], axis=1)
    s = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.count_nonzero(s > 1e-9 * s[0]))
    return n - rank


# suites ------------------------------------------------------------------


def _reproducer(state, cs, **extra) -> dict:
    out = problem_to_dict(state, cs)
    out.update(extra)
    return out


def _pick_dim(rng, dims):
    return int(dims[rng.integers(len(dims))])


def _purity(rng, cfg):
    d = _pick_dim(rng, cfg.dims or (2, 3, 4))
    ell = int(rng.integers(0, 3)) if cfg.ell is None else cfg.ell
    rank = int(rng.integers(1, d + 1))
    rho = random_state(d, rank, rng)
    cs = random_constraints(d, ell, anchored_at=rho, seed=rng)
    rep = face_report(rho, cs)
    lam2 = rho.eigenvalues[1] if d > 1 else 0.0
    if rep.extreme and lam2 > 1e-8:
        return {"message": f"extreme point with second eigenvalue {lam2:.3g}", "input": _reproducer(rho, cs)}
    return None


def _dim_drop(rng, cfg):
    d = _pick_dim(rng, cfg.dims or (2, 3, 4))
    ell = int(rng.integers(1, 4)) if cfg.ell is None else cfg.ell
    rank = int(rng.integers(1, d + 1))
    rho = random_state(d, rank, rng)
    cs = random_constraints(d, ell, anchored_at=rho, seed=rng)
    rep = face_report(rho, cs)
    drop = rep.ambient_dim - rep.constrained_dim
    problems = []
    if not 0 <= drop <= len(rep.active) <= ell:
        problems.append(f"drop {drop} outside [0, {len(rep.active)}]")
    if ell == 1 and drop not in (0, 1):
        problems.append(f"single-constraint drop {drop}")
    oracle = direction_dim_oracle(rho, cs)
    if oracle != rep.constrained_dim:
        problems.append(f"oracle dimension {oracle} != {rep.constrained_dim}")
    if problems:
        return {"message": "; ".join(problems), "input": _reproducer(rho, cs)}
    return None


def _decompose(rng, cfg):
    d = _pick_dim(rng, cfg.dims or (2, 3, 4, 5, 6))
    ell = 2 if cfg.ell is None else cfg.ell
    rho = random_state(d, int(rng.integers(1, d + 1)), rng)
    cs = random_constraints(d, ell, kinds=Kind.LEVEL, anchored_at=rho, seed=rng)
    dec = pure_decompose(rho, cs)
    problems = []
    if dec.residual > 1e-9:
        problems.append(f"residual {dec.residual:.3g}")
    if len(dec) > d * d:
        problems.append(f"{len(dec)} components > {d * d}")
    if abs(dec.weights.sum() - 1) > 1e-12 or np.any(dec.weights <= 0):
        problems.append("weights are not a probability vector")
    for k, c in enumerate(cs):
        dev = float(np.max(np.abs(dec.values[:, k] - c.bound)))
        if dev > 1e-8 * max(1.0, abs(c.bound)):
            problems.append(f"constraint {k} deviates by {dev:.3g}")
    if problems:
        return {"message": "; ".join(problems), "input": _reproducer(rho, cs)}
    return None


def _enorm(rng, cfg):
    d = _pick_dim(rng, cfg.dims or (2, 3, 4, 5, 6))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = random_hermitian(d, rng, psd=True)
    w = np.linalg.eigvalsh(h)
    e = float(rng.uniform(w[0], w[-1]))
    problems = []
    dual = enorm_dual(a, h, e)
    pure = enorm_pure(a, h, e, restarts=cfg.restarts, seed=int(rng.integers(2**31)))
    if abs(dual - pure) > 1e-6:
        problems.append(f"dual {dual!r} vs pure {pure!r}")
    smax = float(np.linalg.norm(a, 2))
    top = enorm_dual(a, h, float(w[-1]))
    if abs(top - smax) > 1e-8 * max(1.0, smax):
        problems.append(f"norm at E = max spectrum {top!r} vs operator norm {smax!r}")
    e1, e2 = sorted(rng.uniform(w[0], w[-1], size=2))
    v1, v2, vm = enorm_dual(a, h, e1), enorm_dual(a, h, e2), enorm_dual(a, h, 0.5 * (e1 + e2))
    if vm < 0.5 * (v1 + v2) - 1e-7:
        problems.append(f"midpoint concavity fails by {0.5 * (v1 + v2) - vm:.3g}")
    if v2 < v1 - 1e-9:
        problems.append("value decreases in E")
    if problems:
        return {"message": "; ".join(problems),
                "input": {"A": encode_matrix(a), "H": encode_matrix(h), "E": e, "E1": e1, "E2": e2}}
    return None


def _jensen(rng, cfg):
    d = _pick_dim(rng, cfg.dims or (2, 3, 4))
    ell = int(rng.integers(0, 3)) if cfg.ell is None else cfg.ell
    rho = random_state(d, int(rng.integers(2, d + 1)) if d > 1 else 1, rng)
    cs = random_constraints(d, ell, anchored_at=rho, seed=rng)
    dec = pure_decompose(rho, cs)
    problems = []
    lmax = float(rho.eigenvalues[0])
    if lmax > 1 + 1e-12:
        problems.append("largest eigenvalue exceeds the pure-state value")
    if -von_neumann_entropy(rho) > 1e-12:
        problems.append("negative entropy")
    m = random_hermitian(d, rng)
    vals = np.real(np.einsum("ni,ij,nj->n", dec.vectors.conj(), m, dec.vectors))
    if expected_value(rho, m) > vals.max() + 1e-9:
        problems.append("linear objective at rho exceeds every component")
    # pure reduction for linear objectives under one sublevel constraint
    h = random_hermitian(d, rng, psd=True)
    hw = np.linalg.eigvalsh(h)
    e = float(rng.uniform(hw[0], hw[-1]))
    best = constrained_linear_max(m, h, e).value
    for _ in range(20):
        sigma = random_state(d, seed=rng)
        if expected_value(sigma, h) <= e and expected_value(sigma, m) > best + 1e-7:
            problems.append("mixed feasible state beats the pure optimum")
            break
    if problems:
        return {"message": "; ".join(problems), "input": _reproducer(rho, cs)}
    return None


def three_pauli_instance(level: tuple[bool, bool, bool] = (True, True, True)) -> ConstraintSet:
    i2, x, y, z = pauli()
    kinds = [Kind.LEVEL if lv else Kind.SUBLEVEL for lv in level]
    return ConstraintSet.of(*[Constraint(i2 + p, 1.0, k) for p, k in zip((x, y, z), kinds)])


def pauli_image(level: tuple[bool, bool, bool], n: int = 400) -> tuple[float, float]:
    """Range of ``f = Tr (X + Y + Z) rho`` over pure states of the three-Pauli set.

    Bloch vectors ``n`` in the closed negative octant; a Level constraint
    pins its coordinate to zero. Grid over both angles, endpoints included.
    """
    t = np.linspace(0.0, np.pi / 2, n)
    th, ph = np.meshgrid(t, t, indexing="ij")
    pts = -np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    for k, lv in enumerate(level):
        if lv:
            pts = pts[np.abs(pts[:, k]) <= 1e-12]
    if len(pts) == 0:
        return float("nan"), float("nan")
    f = pts.sum(axis=1)
    return float(f.min()), float(f.max())


def _counterexamples(rng, cfg):
    problems = []
    cs = three_pauli_instance()
    rho = DensityOperator.maximally_mixed(2)
    rep = face_report(rho, cs)
    if not (rep.extreme and rep.rank == 2):
        problems.append(f"trace state not reported extreme of rank 2: {rep.to_dict()}")
    try:
        pure_decompose(rho, cs)
        problems.append("pure_decompose did not raise ExtremeMixedState")
    except ExtremeMixedState:
        pass
    i2, x, y, z = pauli()
    f_mixed = expected_value(rho, x + y + z)
    if f_mixed != 0.0:
        problems.append(f"f(1/2) = {f_mixed}")
    for level in ((False, False, False), (False, False, True), (False, True, True)):
        t = 3 - sum(level)
        lo, hi = pauli_image(level)
        if lo < -np.sqrt(t) - 1e-6 or hi > -1 + 1e-3 or abs(lo + np.sqrt(t)) > 1e-3 or abs(hi + 1) > 1e-3:
            problems.append(f"pure image for t={t} is [{lo}, {hi}]")
    # random pure states filtered by the library's membership test stay in the image
    cs_sub = three_pauli_instance((False, False, False))
    for _ in range(200):
        v = haar_vector(2, rng)
        pr = np.outer(v, v.conj())
        if membership(pr, cs_sub).ok:
            fv = expected_value(pr, x + y + z)
            if not -np.sqrt(3) - 1e-9 <= fv <= -1 + 1e-9:
                problems.append(f"pure feasible state with f = {fv}")
                break
    tri = triangle_counterexample()
    if not tri["holds"]:
        problems.append(f"triangle certificate fails: {tri['facts']}")
    if problems:
        return {"message": "; ".join(problems)}
    return None


_RUNNERS: dict[str, Callable] = {
    "purity": _purity,
    "dim-drop": _dim_drop,
    "decompose": _decompose,
    "enorm": _enorm,
    "jensen": _jensen,
    "counterexamples": _counterexamples,
}


def run_instance(name: str, config: RunConfig, index: int):
    """Run one instance; returns None or a violation dict with its reproducer."""
    rng = instance_rng(config.seed, name, index)
    try:
        v = _RUNNERS[name](rng, config)
    except Exception as exc:  # a crash is a violation with the same reproducer
        v = {"message": f"{type(exc).__name__}: {exc}"}
    if v is not None:
        v = {"index": index, "seed": config.seed, "suite": name, **v}
    return v


def verify_suite(name: str, config: RunConfig | None = None) -> VerificationReport:
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    config = config or RunConfig()
    n = config.samples if config.samples is not None else DEFAULT_SAMPLES[name]
    threads = min(config.threads or thread_cap(), thread_cap())
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: run_instance(name, config, i), range(n)))
    else:
        results = [run_instance(name, config, i) for i in range(n)]
    violations = [v for v in results if v is not None]
    params = {"seed": config.seed, "samples": n}
    if config.dims:
        params["dims"] = list(config.dims)
    if config.ell is not None:
        params["ell"] = config.ell
    return VerificationReport(name, n, violations, time.perf_counter() - t0, params)
