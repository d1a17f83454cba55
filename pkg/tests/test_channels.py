import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import X, random_density
from rewindq.channels import (
    apply_channel,
    channel_distance,
    choi_to_superop,
    compose,
    depolarizing,
    identity_superop,
    kraus_to_superop,
    partial_trace,
    superop_tensor,
    superop_to_choi,
    unitary_to_superop,
    unvec,
    validate_cptp,
    vec,
)
from rewindq.exceptions import ShapeError, ValidationError
from rewindq.haar import haar_unitary, random_channel


def transpose_superop(d=2):
    S = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = 1
            S[:, i + d * j] = vec(E.T)
    return S


def test_vec_convention(rng):
    A, B, rho = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    assert np.allclose(vec(A @ rho @ B), np.kron(B.T, A) @ vec(rho))
    assert np.array_equal(unvec(vec(rho)), rho)


def test_unitary_superop_basics():
    assert np.array_equal(unitary_to_superop(np.eye(2)), np.eye(4))
    zero, one = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert np.allclose(apply_channel(unitary_to_superop(X), zero), one)
    with pytest.raises(ValidationError):
        unitary_to_superop(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_unitary_superop_matches_conjugation(rng):
    for d in (2, 4):
        U = haar_unitary(d, rng)
        rho = random_density(d, rng)
        assert np.allclose(apply_channel(unitary_to_superop(U), rho), U @ rho @ U.conj().T, atol=1e-13)


def test_superop_is_homomorphism(rng):
    for _ in range(10):
        U, V = haar_unitary(4, rng), haar_unitary(4, rng)
        assert np.allclose(unitary_to_superop(U @ V), unitary_to_superop(U) @ unitary_to_superop(V), atol=1e-12)


def test_apply_channel_shape_check():
    with pytest.raises(ShapeError):
        apply_channel(identity_superop(2), np.eye(4))


def test_compose_matches_sequential_application(rng):
    S1, S2, S3 = (random_channel(2, rng) for _ in range(3))
    rho = random_density(2, rng)
    direct = apply_channel(S3, apply_channel(S2, apply_channel(S1, rho)))
    assert np.allclose(apply_channel(compose(S3, S2, S1), rho), direct, atol=1e-13)
    assert np.allclose(compose(S3, compose(S2, S1)), compose(compose(S3, S2), S1), atol=1e-13)


def test_depolarizing_examples(rng):
    assert np.array_equal(depolarizing(0.0), np.eye(4))
    assert np.allclose(apply_channel(depolarizing(1.0), np.diag([1.0, 0.0])), np.eye(2) / 2)
    rho = random_density(2, rng)
    assert np.allclose(apply_channel(depolarizing(1.0), rho), np.eye(2) / 2)
    assert np.allclose(apply_channel(depolarizing(0.3), rho), 0.7 * rho + 0.3 * np.eye(2) / 2)
    with pytest.raises(ValidationError):
        depolarizing(1.5)
    with pytest.raises(ValidationError):
        depolarizing(-0.1)


def test_depolarizing_is_a_channel():
    report = validate_cptp(depolarizing(0.01))
    assert report.tp_defect < 1e-14
    assert report.min_choi_eigenvalue >= 0
    assert validate_cptp(depolarizing(0.5), tol=1e-10).is_channel


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0))
def test_depolarizing_cptp_for_all_p(p):
    assert validate_cptp(depolarizing(p), tol=1e-12)
    assert validate_cptp(depolarizing(p, 2), tol=1e-12)


def test_two_qubit_depolarizing_acts_per_qubit(rng):
    rho = random_density(4, rng)
    p = 0.2
    out = apply_channel(depolarizing(p, 2), rho)
    # oracle: depolarize qubit A then qubit B by explicit partial traces
    mixA = np.kron(np.eye(2) / 2, partial_trace(rho, (2, 2), [1]))
    step = (1 - p) * rho + p * mixA
    mixB = np.kron(partial_trace(step, (2, 2), [0]), np.eye(2) / 2)
    assert np.allclose(out, (1 - p) * step + p * mixB, atol=1e-14)


def test_superop_tensor_on_product_states(rng):
    SA, SB = random_channel(2, rng), random_channel(2, rng)
    rA, rB = random_density(2, rng), random_density(2, rng)
    out = apply_channel(superop_tensor(SA, SB), np.kron(rA, rB))
    assert np.allclose(out, np.kron(apply_channel(SA, rA), apply_channel(SB, rB)), atol=1e-13)
    UA, UB = haar_unitary(2, rng), haar_unitary(2, rng)
    assert np.allclose(superop_tensor(unitary_to_superop(UA), unitary_to_superop(UB)), unitary_to_superop(np.kron(UA, UB)))


def test_partial_trace_of_product(rng):
    rA, rB, rC = random_density(2, rng), random_density(3, rng), random_density(2, rng)
    rho = np.kron(np.kron(rA, rB), rC)
    assert np.allclose(partial_trace(rho, (2, 3, 2), [1]), rB)
    assert np.allclose(partial_trace(rho, (2, 3, 2), [2, 0]), np.kron(rC, rA))


def test_unitary_channel_validates(rng):
    report = validate_cptp(unitary_to_superop(haar_unitary(2, rng)))
    assert report.tp_defect < 1e-12
    assert report.min_choi_eigenvalue >= -1e-12


def test_transpose_map_is_not_cp():
    T = transpose_superop()
    # Choi of the transpose is the swap operator, eigenvalues +-1; normalised by d=2
    J = sum(np.kron(np.outer(np.eye(2)[i], np.eye(2)[j]), np.outer(np.eye(2)[j], np.eye(2)[i])) for i in range(2) for j in range(2))
    expected = np.linalg.eigvalsh(J)[0] / 2
    report = validate_cptp(T)
    assert expected == -0.5
    assert report.min_choi_eigenvalue == pytest.approx(-0.5, abs=1e-14)
    assert report.tp_defect < 1e-14
    assert not report.is_channel


def test_choi_round_trip_and_definition(rng):
    S = random_channel(2, rng)
    assert np.allclose(choi_to_superop(superop_to_choi(S)), S)
    J = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = 1
            J += np.kron(E, apply_channel(S, E))
    assert np.allclose(superop_to_choi(S), J)


def test_kraus_channel_matches_sum(rng):
    K = [np.sqrt(0.7) * np.eye(2), np.sqrt(0.3) * X]
    rho = random_density(2, rng)
    assert np.allclose(apply_channel(kraus_to_superop(K), rho), 0.7 * rho + 0.3 * X @ rho @ X)


def test_identity_channel_has_norm_sqrt2():
    zero_map = np.zeros((4, 4))
    assert channel_distance(identity_superop(2), zero_map) == pytest.approx(np.sqrt(2), abs=1e-15)


def test_distance_basics(rng):
    S = random_channel(2, rng)
    assert channel_distance(S, S) == 0
    with pytest.raises(ShapeError):
        channel_distance(identity_superop(2), identity_superop(4))


def test_distance_to_depolarizing_increases_with_p():
    ps = np.linspace(0.1, 1.0, 10)
    dist = [channel_distance(identity_superop(2), depolarizing(p)) for p in ps]
    assert np.all(np.diff(dist) > 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_channel(2, rng) for _ in range(3))
    dAB, dBC, dAC = channel_distance(A, B), channel_distance(B, C), channel_distance(A, C)
    assert dAB == pytest.approx(channel_distance(B, A), abs=1e-15)
    assert dAC <= dAB + dBC + 1e-12
    assert dAB > 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_channels_are_cptp(seed):
    assert validate_cptp(random_channel(2, np.random.default_rng(seed)), tol=1e-12)
