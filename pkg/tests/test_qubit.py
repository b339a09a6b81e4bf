import math

import numpy as np
import pytest
from scipy.linalg import expm

from refocus import qubit
from refocus.matcore import RngStream, haar_unitaries, hs_norm_dist
from refocus.qubit import (
    GlobalPhaseError,
    QubitProtocolConfig,
    Su2Params,
    epsilon_after_f,
    f_qubit,
    g_qubit,
    in_jumping_region,
    in_shrinking_region,
    jump_probability_mc,
    pulse_count_bound,
    qubit_k,
    qubit_m,
    refocus_qubit,
    su2_decompose,
)
from refocus.sequence import verify
from refocus.weyl import PAULI_X, PAULI_Z

from .conftest import random_near_identity, su2_from

U_STAR = (1 - 1j) / 2 * np.array([[1, 1j], [-1, 1j]])
CYCLE_A = (1 - 1j) / 2 * np.array([[1j, 1j], [-1, 1]])
CYCLE_B = (1 - 1j) / 2 * np.array([[1, -1], [1j, 1j]])


def test_su2_params_invariant():
    with pytest.raises(ValueError):
        Su2Params(1, 1, 0, 0)


def test_decompose_examples():
    p = su2_decompose(np.eye(2))
    assert (p.a, p.b, p.c, p.d) == (1, 0, 0, 0)
    p = su2_decompose(expm(1j * math.pi / 3 * PAULI_X))
    assert np.allclose([p.a, p.b, p.c, p.d], [0.5, math.sqrt(3) / 2, 0, 0], atol=1e-12)
    p = su2_decompose(U_STAR)
    assert np.max(np.abs(p.matrix() - U_STAR)) <= 1e-10


def test_decompose_roundtrip_all_components(gen):
    for u in haar_unitaries(2, 100, gen):
        assert np.max(np.abs(su2_decompose(u).matrix() - u)) <= 1e-12


def test_decompose_rejects_global_phase():
    with pytest.raises(GlobalPhaseError, match="phase"):
        su2_decompose(1j * np.eye(2))


def test_f_fixed_point_and_two_cycle():
    assert np.allclose(f_qubit(np.eye(2)), np.eye(2))
    assert np.max(np.abs(f_qubit(U_STAR) - U_STAR)) <= 1e-12
    assert np.max(np.abs(f_qubit(CYCLE_A) - CYCLE_B)) <= 1e-12
    assert np.max(np.abs(f_qubit(CYCLE_B) - CYCLE_A)) <= 1e-12


def test_epsilon_after_f_examples():
    s = 1 / math.sqrt(2)
    assert epsilon_after_f(Su2Params(0.6, 0, 0.8, 0)) == 0
    assert epsilon_after_f(Su2Params(0.6, 0, 0, 0.8)) == 0
    p = Su2Params(0, s, 0, s)
    assert epsilon_after_f(p) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert hs_norm_dist(f_qubit(p.matrix()), np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_closed_form_global(gen):
    for u in haar_unitaries(2, 10**4, gen):
        lhs = epsilon_after_f(su2_decompose(u))
        assert lhs == pytest.approx(hs_norm_dist(f_qubit(u), np.eye(2)), abs=1e-9)


def test_f_stays_special(gen):
    for u in haar_unitaries(2, 500, gen):
        assert abs(np.linalg.det(f_qubit(u)) - 1) <= 1e-10


def test_shrinking_region_examples():
    assert in_shrinking_region(np.eye(2))
    assert in_shrinking_region(su2_from(15 / 16, math.sqrt(1 - (15 / 16) ** 2), 0, 0))
    assert not in_shrinking_region(1j * PAULI_X)


def test_jumping_region_examples(gen):
    for u in haar_unitaries(2, 20, gen):
        diag = np.diag(np.exp(1j * np.angle(u[0, 0]) * np.array([1, -1])))
        assert in_jumping_region(diag)
    s = 1 / math.sqrt(2)
    assert not in_jumping_region(su2_from(0, s, 0, s))
    # |b d| = 1/sqrt(128) exactly: b = d = 128^(-1/4)
    b = 128 ** -0.25
    p = Su2Params(math.sqrt(1 - 2 * b * b), b, 0, b)
    assert in_jumping_region(p.matrix())
    assert epsilon_after_f(p) == pytest.approx(0.25, abs=1e-15)


def test_jumping_implies_shrinking_on_grid():
    # hyperspherical grid over S^3, ~10^5 points
    n = 48
    t1 = np.linspace(0, math.pi, n)
    t2 = np.linspace(0, math.pi, n)
    ph = np.linspace(0, 2 * math.pi, n, endpoint=False)
    a1, a2, a3 = np.meshgrid(t1, t2, ph, indexing="ij")
    a = np.cos(a1)
    b = np.sin(a1) * np.cos(a2)
    c = np.sin(a1) * np.sin(a2) * np.cos(a3)
    d = np.sin(a1) * np.sin(a2) * np.sin(a3)
    pts = np.stack([a, b, c, d], axis=-1).reshape(-1, 4)
    checked = 0
    for q in pts:
        p = Su2Params(*q)
        u = p.matrix()
        if abs(p.b * p.d) <= qubit.JUMP_BOUND:
            checked += 1
            assert in_shrinking_region(f_qubit(u)) or hs_norm_dist(f_qubit(u), np.eye(2)) <= 0.25 + 1e-12
    assert checked > 10**4


def test_g_axis_case_and_invariants(gen):
    u = haar_unitaries(2, 1, gen)[0]
    p = su2_decompose(u)
    z = PAULI_Z
    q = su2_decompose(z @ u @ z)
    assert np.allclose([q.b, q.c, q.d], [-p.b, -p.c, p.d], atol=1e-12)
    for _ in range(100):
        v, r = g_qubit(u, gen)
        q = su2_decompose(v)
        assert q.a == pytest.approx(p.a, abs=1e-12)
        assert np.linalg.norm(q.u) == pytest.approx(np.linalg.norm(p.u), abs=1e-12)
        assert np.allclose(r, r.conj().T) and np.allclose(r @ r, np.eye(2))
        # reflection: same r twice is the identity map
        assert np.allclose(r @ v @ r.conj().T, u, atol=1e-12)


def test_jump_probability_small_runs():
    p, half = jump_probability_mc(10**5, RngStream(4), threshold=0.5)
    assert p == 1.0
    p, _ = jump_probability_mc(10**5, RngStream(4), threshold=0.0)
    assert p <= 0.001
    p1 = jump_probability_mc(10**4, RngStream(8))
    assert p1 == jump_probability_mc(10**4, RngStream(8))
    _, half = jump_probability_mc(1000, RngStream(8))
    assert half > 0.02
    with pytest.raises(ValueError):
        jump_probability_mc(999, RngStream(8))


def test_k_formula(oracles):
    assert qubit_k(1e-6, 0.1) == oracles["qubit_k"]["eps=1e-6,eta=0.1"]
    assert qubit_k(1e-4, 0.25) == oracles["qubit_k"]["eps=1e-4,eta=0.25"]
    # eta -> 1: only the log log term and the +1 remain
    rest = math.log2(math.log2(1 / (math.sqrt(8) * 1e-6))) + 1
    assert qubit_k(1e-6, 1 - 1e-12) == math.ceil(rest)
    assert 4**14 <= pulse_count_bound(1e-6, 0.1)
    for bad in [(0, 0.5), (0.25, 0.5), (1e-3, 0), (1e-3, 1)]:
        with pytest.raises(ValueError):
            qubit_k(*bad)


def test_m_iterations_bound(gen):
    for u in random_near_identity(2, math.sqrt(2) * 0.25, gen, 200):
        e0 = hs_norm_dist(u, np.eye(2))
        if e0 > 0.25:
            continue
        cur = u
        for m in range(1, 5):
            cur = f_qubit(cur)
            bound = math.sqrt(8) ** (2**m - 1) * e0 ** (2**m)
            assert hs_norm_dist(cur, np.eye(2)) <= bound + 1e-13  # rounding floor


def test_config_validation():
    with pytest.raises(ValueError):
        QubitProtocolConfig(epsilon=0.3, eta=0.5)
    with pytest.raises(ValueError):
        QubitProtocolConfig(epsilon=1e-3, eta=0.5, mode="other")


def test_monitored_identity_returns_immediately():
    t = refocus_qubit(np.eye(2), QubitProtocolConfig(1e-4, 0.25, mode="monitored"))
    assert t.n_rounds == 0 and t.success and t.random_rounds == 0


def test_monitored_distances_non_increasing_after_jump(gen):
    for i, u in enumerate(haar_unitaries(2, 50, gen)):
        t = refocus_qubit(u, QubitProtocolConfig(1e-8, 0.25, mode="monitored", seed=RngStream(i)))
        assert t.success
        jumped = [k for k, r in enumerate(t.rounds) if r.jumped]
        assert jumped
        after = [r.eps_after for r in t.rounds[jumped[0] :]]
        assert all(x >= y - 1e-15 for x, y in zip(after, after[1:]))
        assert verify(t.sequence, u) <= 1e-8


def test_oblivious_small_run(gen):
    cfg = QubitProtocolConfig(1e-2, 0.5, mode="oblivious", seed=RngStream(3))
    k = qubit_k(1e-2, 0.5)
    u = haar_unitaries(2, 1, gen)[0]
    t = refocus_qubit(u, cfg)
    assert t.n_rounds == k and all(r.pulse is not None for r in t.rounds)
    assert t.sequence.uses_of_U == 4**k
    assert verify(t.sequence, u) == pytest.approx(t.final_eps, abs=1e-9)


def test_trace_json_shape(gen):
    u = haar_unitaries(2, 1, gen)[0]
    t = refocus_qubit(u, QubitProtocolConfig(1e-3, 0.25, mode="monitored"))
    obj = t.to_json()
    assert obj["dim"] == 2
    assert set(obj["rounds"][0]) == {"eps_before", "eps_after", "pulse", "jumped"}
    assert obj["sequence"]["uses_of_U"] == t.sequence.uses_of_U
