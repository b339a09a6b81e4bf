from pathlib import Path

import numpy as np
import pytest

from refocus.matcore import DimensionError, RngStream, haar_unitaries, haar_unitary
from refocus.qubit import QubitProtocolConfig, f_qubit, refocus_qubit
from refocus.qudit import QuditProtocolConfig, f_qudit, refocus_qudit
from refocus.sequence import (
    PulseSequence,
    SequenceFormatError,
    UnsupportedVersionError,
    deserialize,
    flatten,
    map_sequence,
    normalize,
    serialize,
    verify,
)
from refocus.weyl import PAULI_X, PAULI_Z

DATA = Path(__file__).parent / "data"


def test_single_qubit_f_pulses(gen):
    seq = map_sequence("qubit", 2)
    assert seq.uses_of_U == 4 and seq.has_trailing
    for u in haar_unitaries(2, 20, gen):
        expected = -PAULI_X @ u @ PAULI_Z @ u @ PAULI_X @ u @ PAULI_Z @ u
        assert np.max(np.abs(seq.product(u) - expected)) <= 1e-12
        assert np.max(np.abs(seq.product(u) - f_qubit(u))) <= 1e-12
    # -X, Z, X, Z up to the leftmost phase; the trailing pulse is 1
    assert np.allclose(seq.trailing, np.eye(2))
    assert np.allclose(seq.pulses[1:], [PAULI_Z, PAULI_X, PAULI_Z])
    assert np.allclose(seq.pulses[0], -PAULI_X)


@pytest.mark.parametrize("d", (2, 3, 4))
def test_single_weyl_f_uses(d, gen):
    seq = map_sequence("weyl", d)
    assert seq.uses_of_U == d * d
    u = haar_unitary(d, gen)
    assert np.max(np.abs(seq.product(u) - f_qudit(u))) <= 1e-11


@pytest.mark.parametrize("k", (1, 2, 3))
def test_k_rounds_qubit(k):
    assert map_sequence("qubit", 2, rounds=k).uses_of_U == 4**k


def test_flatten_reconstructs_trace(gen):
    for i, u in enumerate(haar_unitaries(2, 10, gen)):
        t = refocus_qubit(u, QubitProtocolConfig(1e-4, 0.25, "oblivious", RngStream(3, i)))
        assert t.sequence.uses_of_U == 4 ** t.n_rounds
        assert np.max(np.abs(t.sequence.product(u) - t.final)) <= 1e-9
        assert abs(verify(t.sequence, u) - t.final_eps) <= 1e-9


def test_flatten_dimension_mismatch():
    t = refocus_qubit(np.eye(2), QubitProtocolConfig(1e-4, 0.25, "monitored"))
    with pytest.raises(DimensionError):
        flatten(t, np.eye(3))


def test_normalize_preserves_distance(gen):
    for i, u in enumerate(haar_unitaries(2, 10, gen)):
        t = refocus_qubit(u, QubitProtocolConfig(1e-4, 0.25, "monitored", RngStream(4, i), emit_sequence=False))
        raw = flatten(t, u)
        norm = normalize(raw)
        assert not norm.has_trailing and norm.uses_of_U == raw.uses_of_U
        assert abs(verify(raw, u) - verify(norm, u)) <= 1e-11
        assert verify(norm, u) <= 1e-4


def test_normalize_identity_trailing():
    seq = PulseSequence(2, [PAULI_X, PAULI_Z], trailing=np.eye(2))
    out = normalize(seq)
    assert not out.has_trailing
    assert np.array_equal(out.pulses, seq.pulses)
    assert normalize(out) is out


def test_verify_empty_and_dims():
    assert verify(PulseSequence(3, np.zeros((0, 3, 3))), np.eye(3)) == 0.0
    with pytest.raises(DimensionError):
        verify(PulseSequence(2, [PAULI_X]), np.eye(3))


def test_sequence_is_specific_to_its_target(gen):
    us = haar_unitaries(2, 20, gen)
    others = haar_unitaries(2, 20, gen)
    dists = []
    for i, (u, v) in enumerate(zip(us, others)):
        t = refocus_qubit(u, QubitProtocolConfig(1e-4, 0.25, "monitored", RngStream(5, i)))
        assert verify(t.sequence, u) <= 1e-4
        dists.append(verify(t.sequence, v))
    assert np.mean(dists) > 10 * 1e-4


def test_pulses_do_not_depend_on_u(gen):
    t = refocus_qubit(haar_unitary(2, gen), QubitProtocolConfig(1e-4, 0.25, "oblivious", RngStream(6)))
    a = flatten(t, haar_unitary(2, gen))
    b = flatten(t, haar_unitary(2, gen))
    assert np.array_equal(a.pulses, b.pulses) and np.array_equal(a.trailing, b.trailing)


def test_monitored_qudit_pulse_count(gen):
    u = haar_unitary(3, gen)
    t = refocus_qudit(u, QuditProtocolConfig(1e-8, seed=RngStream(7)))
    assert t.sequence.uses_of_U == 9**t.n_rounds


def test_round_trip(gen):
    t = refocus_qubit(haar_unitary(2, gen), QubitProtocolConfig(1e-4, 0.25, "monitored", RngStream(8)))
    back = deserialize(serialize(t.sequence))
    assert back.dim == 2 and back.norm == "hs"
    assert np.array_equal(back.pulses, t.sequence.pulses)
    with pytest.raises(ValueError):
        serialize(map_sequence("qubit", 2))


def test_field_order_fixed():
    text = serialize(PulseSequence(2, [PAULI_X])).decode()
    keys = ["format_version", "dim", "norm", "uses_of_U", "pulses"]
    pos = [text.index(f'"{k}"') for k in keys]
    assert pos == sorted(pos)


def test_wrong_version_rejected():
    raw = serialize(PulseSequence(2, [PAULI_X])).replace(b'"format_version": 1', b'"format_version": 2')
    with pytest.raises(UnsupportedVersionError) as exc:
        deserialize(raw)
    assert exc.value.offset == raw.index(b'"format_version"')


def test_malformed_input_offsets():
    raw = serialize(PulseSequence(2, [PAULI_X]))
    with pytest.raises(SequenceFormatError) as exc:
        deserialize(raw[:40])
    assert exc.value.offset > 0
    bad = raw.replace(b'"uses_of_U": 1', b'"uses_of_U": 2')
    with pytest.raises(SequenceFormatError) as exc:
        deserialize(bad)
    assert exc.value.offset == bad.index(b'"uses_of_U"')
    with pytest.raises(SequenceFormatError):
        deserialize(b"\xff\xfe")
    with pytest.raises(SequenceFormatError):
        deserialize(b"[]")
    nonunitary = raw.replace(b'"re": [[0,1],[1,0]]', b'"re": [[0,2],[1,0]]')
    with pytest.raises(SequenceFormatError):
        deserialize(nonunitary)


def test_hand_built_fixture():
    seq = deserialize((DATA / "one_pulse.json").read_bytes())
    assert seq.uses_of_U == 1 and seq.norm == "hs"
    assert verify(seq, PAULI_X) == 0.0
    assert verify(seq, np.eye(2)) == pytest.approx(1.0)


def test_hs_norm_needs_qubit():
    with pytest.raises(DimensionError):
        PulseSequence(3, np.eye(3)[None], norm="hs")


def test_oversized_sequence_is_refused():
    from refocus.sequence import ProtocolTrace, RoundRecord, SequenceTooLong, emit_sequence

    t = ProtocolTrace(2, "qubit", "hs", "fixed", 1e-3, status="ok")
    t.rounds = [RoundRecord(0, 0, None, False)] * 12
    assert t.uses_of_U == 4**12
    with pytest.raises(SequenceTooLong):
        flatten(t, np.eye(2))
    emit_sequence(t, np.eye(2))
    assert t.sequence is None and "not emitted" in t.status
