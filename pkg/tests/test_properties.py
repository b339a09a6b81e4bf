"""Property-based checks over random inputs drawn by hypothesis."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from refocus.matcore import RngStream, haar_unitary, hs_norm_dist, op_norm_dist, project_special_unitary
from refocus.qubit import f_qubit, hs_dist_to_identity, su2_decompose
from refocus.qudit import f_qudit, hybrid_bound_check
from refocus.sequence import PulseSequence, deserialize, map_sequence, serialize
from refocus.skc import standard_gateset, word_product
from refocus.skc.gates import free_reduce
from refocus.skc.sk import group_commutator

seeds = st.integers(min_value=0, max_value=2**63 - 1)
GS = standard_gateset()


def su2(seed):
    return project_special_unitary(haar_unitary(2, RngStream(seed)))


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_qubit_contraction(seed):
    u = su2(seed)
    eps = hs_dist_to_identity(u)
    if eps <= 0.25:
        assert hs_dist_to_identity(f_qubit(u)) <= np.sqrt(8) * eps * eps + 1e-15


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_f_commutes_with_pauli_conjugation_and_is_unitary(seed):
    u = su2(seed)
    fu = f_qubit(u)
    assert np.allclose(fu.conj().T @ fu, np.eye(2), atol=1e-12)
    p = su2_decompose(u)
    assert abs(p.a**2 + p.b**2 + p.c**2 + p.d**2 - 1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=4))
def test_qudit_hybrid_bound(seed, d):
    gen = RngStream(seed).generator()
    lhs, rhs = hybrid_bound_check(haar_unitary(d, gen), haar_unitary(d, gen))
    assert lhs <= rhs + 1e-9


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=4))
def test_flattened_map_reproduces_f(seed, d):
    u = haar_unitary(d, RngStream(seed))
    seq = map_sequence("weyl", d)
    assert op_norm_dist(seq.product(u), f_qudit(u)) <= 1e-11


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=0, max_value=6))
def test_serialize_round_trip(seed, n):
    gen = RngStream(seed).generator()
    pulses = np.stack([haar_unitary(2, gen) for _ in range(n)]) if n else np.zeros((0, 2, 2))
    seq = PulseSequence(2, pulses, norm="hs")
    back = deserialize(serialize(seq))
    assert np.array_equal(back.pulses, seq.pulses) and back.uses_of_U == n


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=9), max_size=40))
def test_free_reduction_preserves_product(symbols):
    r = free_reduce(symbols, GS.size)
    assert np.allclose(word_product(r, GS), word_product(symbols, GS), atol=1e-11)
    assert free_reduce(r, GS.size).tolist() == r.tolist()


@settings(max_examples=200, deadline=None)
@given(seeds, st.floats(min_value=1e-6, max_value=0.5))
def test_group_commutator_reproduces_residual(seed, scale):
    gen = RngStream(seed).generator()
    axis = gen.standard_normal(3)
    axis /= np.linalg.norm(axis)
    x, y, z = axis * scale
    delta = np.cos(scale) * np.eye(2) + 1j * np.sin(scale) * np.array([[z, x - 1j * y], [x + 1j * y, -z]]) / scale
    v, w = group_commutator(delta)
    assert hs_norm_dist(v @ w @ v.conj().T @ w.conj().T, delta) <= 1e-9
