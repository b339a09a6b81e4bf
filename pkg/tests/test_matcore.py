import json
import math

import numpy as np
import pytest

from refocus import matcore
from refocus.matcore import (
    DimensionError,
    NotUnitaryError,
    RngStream,
    check_unitary,
    haar_unitaries,
    haar_unitary,
    hs_norm_dist,
    matrix_from_json,
    matrix_to_json,
    multiply,
    op_norm_dist,
    product,
    random_unit_vector3,
    random_unit_vectors3,
    tolerances,
)
from refocus.weyl import PAULI_X, weyl_x, weyl_z

from .conftest import su2_from


def test_multiply_identity_and_pauli():
    assert np.allclose(multiply(np.eye(2), np.eye(2)), np.eye(2))
    assert np.allclose(multiply(PAULI_X, PAULI_X), np.eye(2), atol=1e-15)


def test_weyl_commutation_entrywise_d3():
    w = np.exp(2j * np.pi / 3)
    x, z = weyl_x(3), weyl_z(3)
    assert np.max(np.abs(multiply(z, x) - w * multiply(x, z))) < 1e-15


def test_multiply_dimension_mismatch():
    with pytest.raises(DimensionError):
        multiply(np.eye(2), np.eye(3))


def test_op_norm_examples():
    assert op_norm_dist(np.eye(2), np.eye(2)) == 0
    assert op_norm_dist(-np.eye(2), np.eye(2)) == pytest.approx(2, abs=1e-15)
    th = 0.3
    u = np.diag([np.exp(1j * th), np.exp(-1j * th)])
    assert op_norm_dist(u, np.eye(2)) == pytest.approx(2 * math.sin(0.15), abs=1e-15)


def test_hs_examples():
    assert hs_norm_dist(np.eye(2), np.eye(2)) == 0
    assert hs_norm_dist(1j * PAULI_X, np.eye(2)) == pytest.approx(1, abs=1e-15)
    b = math.sqrt(1 - (15 / 16) ** 2)
    assert hs_norm_dist(su2_from(15 / 16, b, 0, 0), np.eye(2)) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(DimensionError):
        hs_norm_dist(np.eye(3), np.eye(3))


def test_hs_matches_sqrt_one_minus_a(gen):
    for u in haar_unitaries(2, 200, gen):
        a = (u[0, 0] + u[1, 1]).real / 2
        assert hs_norm_dist(u, np.eye(2)) ** 2 + a == pytest.approx(1, abs=1e-12)


def test_check_unitary_rejects():
    with pytest.raises(NotUnitaryError):
        check_unitary(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        check_unitary(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(DimensionError):
        check_unitary(np.ones((2, 3)))


def test_tolerance_override():
    m = np.diag([1, 1 + 1e-9])
    with pytest.raises(NotUnitaryError):
        check_unitary(m)
    with tolerances(unitary=1e-8):
        check_unitary(m)
    assert matcore.TOL.unitary == 1e-12


def test_haar_deterministic_and_special():
    a = haar_unitary(3, RngStream(7, 2))
    b = haar_unitary(3, RngStream(7, 2))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, haar_unitary(3, RngStream(7, 3)))
    for d in (2, 3, 5, 8):
        for u in haar_unitaries(d, 50, RngStream(d)):
            assert abs(np.linalg.det(u) - 1) <= 1e-10
            assert matcore.unitarity_defect(u) <= 1e-12 * d


def test_haar_trace_moment_against_oracle(oracles):
    ref = oracles["haar_su2_trace_sq"]
    n = 10**5
    v = haar_unitaries(2, n, RngStream(99))
    x = np.abs(np.trace(v, axis1=1, axis2=2)) ** 2
    se = x.std() / math.sqrt(n)
    assert abs(x.mean() - ref["mean"]) <= 3 * se


def test_conjugation_invariance(gen):
    for d in (2, 3, 4):
        us = haar_unitaries(d, 30, gen)
        vs = haar_unitaries(d, 30, gen)
        for u, v in zip(us, vs):
            lhs = op_norm_dist(v @ u @ v.conj().T, np.eye(d))
            assert lhs == pytest.approx(op_norm_dist(u, np.eye(d)), abs=1e-12)


def test_unitary_invariance_of_both_norms(gen):
    a, b, v, w = haar_unitaries(2, 4, gen)
    assert op_norm_dist(v @ a @ w, v @ b @ w) == pytest.approx(op_norm_dist(a, b), abs=1e-12)
    assert hs_norm_dist(v @ a @ w, v @ b @ w) == pytest.approx(hs_norm_dist(a, b), abs=1e-12)


def test_long_products_stay_unitary(gen):
    for d in (2, 4):
        us = haar_unitaries(d, 10**4, gen)
        p = product(us)
        assert matcore.unitarity_defect(p) <= 1e-11 * d
        seq = np.eye(d)
        for u in us[:2000]:
            seq = seq @ u
        assert np.allclose(seq, product(us[:2000]), atol=1e-11)


def test_unit_vectors():
    r = random_unit_vector3(RngStream(1))
    assert abs(np.linalg.norm(r) - 1) <= 1e-12
    rs = random_unit_vectors3(10**6, RngStream(2))
    assert np.all(np.abs(rs.mean(axis=0)) <= 0.005)
    assert abs(np.mean(rs[:, 2] > 0.5) - 0.25) <= 0.005


def test_rng_stream_validation_and_children():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)
    s = RngStream(5)
    assert s.child(3) == s.child(3)
    assert s.child(3) != s.child(4)
    assert s.generator().integers(0, 2**63, 4).tolist() == RngStream(5).generator().integers(0, 2**63, 4).tolist()


def test_matrix_json_roundtrip(gen):
    u = haar_unitary(3, gen)
    obj = json.loads(json.dumps(matrix_to_json(u)))
    assert set(obj) == {"dim", "re", "im"}
    assert np.array_equal(matrix_from_json(obj), u)
    with pytest.raises(DimensionError):
        matrix_from_json({"dim": 3, "re": [[1]], "im": [[0]]})
    with pytest.raises(ValueError):
        matrix_from_json({"re": [[1]]})
