import numpy as np
import pytest
from hypothesis import given, strategies as st

from facecut import verify
from facecut.core import Kind, membership
from facecut.errors import BadRank
from facecut.io import parse_problem
from facecut.sampling import haar_unitary, random_constraints, random_hermitian, random_state
from facecut.verify import RunConfig, instance_rng, pauli_image, run_instance, verify_suite


def test_random_state_ranks(rng):
    rho = random_state(4, seed=rng)
    assert rho.rank() == 4 and abs(rho.trace - 1) <= 1e-12
    assert random_state(4, 1, rng).rank() == 1
    with pytest.raises(BadRank):
        random_state(3, 0, rng)
    with pytest.raises(BadRank):
        random_state(3, 4, rng)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(5, rng)
    assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-13)


def test_random_hermitian_scaling(rng):
    h = random_hermitian(4, rng)
    assert np.max(np.abs(np.linalg.eigvalsh(h))) == pytest.approx(1.0)
    assert np.linalg.eigvalsh(random_hermitian(4, rng, psd=True))[0] >= -1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 4))
def test_anchored_constraints_always_feasible(seed, d, ell):
    rng = np.random.default_rng(seed)
    rho = random_state(d, int(rng.integers(1, d + 1)), rng)
    for kinds in (None, Kind.LEVEL, Kind.SUBLEVEL):
        assert membership(rho, random_constraints(d, ell, kinds, anchored_at=rho, seed=rng)).ok


def test_random_constraints_are_reproducible():
    a = random_constraints(3, 2, seed=7)
    b = random_constraints(3, 2, seed=7)
    for x, y in zip(a, b):
        assert np.array_equal(x.observable.matrix, y.observable.matrix) and x.bound == y.bound


def test_instance_rng_depends_on_triple_only():
    a = instance_rng(3, "purity", 17).random(4)
    b = instance_rng(3, "purity", 17).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, instance_rng(3, "dim-drop", 17).random(4))
    assert not np.array_equal(a, instance_rng(3, "purity", 18).random(4))


@pytest.mark.parametrize("suite, samples", [
    ("purity", 300), ("dim-drop", 200), ("decompose", 60), ("enorm", 8), ("jensen", 60), ("counterexamples", 1),
])
def test_suites_pass(suite, samples):
    rep = verify_suite(suite, RunConfig(seed=1, samples=samples))
    assert rep.passed, rep.violations[:3]
    assert rep.instances == samples


def test_dim_drop_single_constraint():
    assert verify_suite("dim-drop", RunConfig(seed=2, samples=200, ell=1)).passed


def test_reports_are_deterministic_and_timing_is_optional(monkeypatch):
    cfg = RunConfig(seed=5, samples=50, dims=(2, 3))
    a = verify_suite("purity", cfg).to_dict()
    monkeypatch.setenv("FACECUT_THREADS", "3")
    b = verify_suite("purity", RunConfig(seed=5, samples=50, dims=(2, 3), threads=3)).to_dict()
    assert a == b
    assert "wall_time" not in a
    assert "wall_time" in verify_suite("purity", cfg).to_dict(timing=True)
    assert a["params"] == {"seed": 5, "samples": 50, "dims": [2, 3]}


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify_suite("bogus")


def test_violation_carries_rerunnable_reproducer(monkeypatch):
    def broken(rng, cfg):
        rho = random_state(2, seed=rng)
        cs = random_constraints(2, 1, anchored_at=rho, seed=rng)
        return {"message": "forced", "input": verify._reproducer(rho, cs)}

    monkeypatch.setitem(verify._RUNNERS, "purity", broken)
    rep = verify_suite("purity", RunConfig(seed=9, samples=3))
    assert not rep.passed and len(rep.violations) == 3
    v = rep.violations[1]
    assert (v["suite"], v["seed"], v["index"]) == ("purity", 9, 1)
    prob = parse_problem(v["input"])
    again = run_instance("purity", RunConfig(seed=9), 1)
    assert again["input"] == v["input"]
    assert membership(prob.state, prob.constraints).ok


def test_crash_is_reported_as_violation(monkeypatch):
    def crash(rng, cfg):
        raise RuntimeError("boom")

    monkeypatch.setitem(verify._RUNNERS, "jensen", crash)
    rep = verify_suite("jensen", RunConfig(samples=2))
    assert rep.violations[0]["message"] == "RuntimeError: boom"


def test_pauli_image_ranges():
    for level, t in (((False, False, False), 3), ((False, False, True), 2), ((False, True, True), 1)):
        lo, hi = pauli_image(level)
        assert lo == pytest.approx(-np.sqrt(t), abs=1e-3) and hi == pytest.approx(-1.0, abs=1e-3)
