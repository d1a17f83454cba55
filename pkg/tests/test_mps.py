import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import H
from rewindq.circuits import Circuit, Gate, apply_gate_tensor
from rewindq.exceptions import DegeneracyError, ShapeError, ValidationError
from rewindq.haar import haar_unitary
from rewindq.mps import (
    BoundaryMPS,
    canonicalize,
    cluster_mps,
    contract,
    ghz_mps,
    isometry_to_unitary,
    mps_to_circuit,
    physical_state,
    product_zero_mps,
    random_mps,
    w_mps,
)
from rewindq.simulator import run_statevector

CZ = np.diag([1.0, 1.0, 1.0, -1.0])


def overlap(a, b):
    return abs(np.vdot(a, b)) ** 2


def compiled_fidelity(mps, **kw):
    circuit = mps_to_circuit(mps, **kw)
    b = circuit.width - mps.n
    phys = physical_state(run_statevector(circuit).amplitudes, mps.n, b)
    return overlap(phys.amplitudes, contract(mps)[0].amplitudes)


def test_contract_product_state():
    psi, norm = contract(product_zero_mps(3))
    assert norm == pytest.approx(1.0)
    np.testing.assert_allclose(psi.amplitudes, np.eye(8)[0])


def test_contract_ghz():
    psi, _ = contract(ghz_mps(5))
    expected = np.zeros(32)
    expected[[0, 31]] = 1 / np.sqrt(2)
    assert np.allclose(psi.amplitudes, expected, atol=1e-12)


def test_contract_w_state():
    psi, _ = contract(w_mps(6))
    expected = np.zeros(64)
    expected[[1 << k for k in range(6)]] = 1 / np.sqrt(6)
    assert np.allclose(psi.amplitudes, expected, atol=1e-12)


def test_contract_cluster_state():
    n = 5
    state = np.full((2,) * n, 2 ** (-n / 2), dtype=complex)
    for q in range(n - 1):
        state = apply_gate_tensor(state, CZ, (q, q + 1))
    assert overlap(contract(cluster_mps(n))[0].amplitudes, state.reshape(-1)) == pytest.approx(1.0, abs=1e-12)


def test_contract_zero_state_is_degenerate():
    mps = BoundaryMPS(np.zeros((3, 2, 2, 2)), [1.0, 0.0], [1.0, 0.0])
    with pytest.raises(DegeneracyError):
        contract(mps)


def test_boundary_validation():
    with pytest.raises(ValidationError):
        BoundaryMPS(np.ones((2, 2, 2, 2)), [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ShapeError):
        BoundaryMPS(np.ones((2, 2, 2, 3)), [1.0, 0.0], [1.0, 0.0])
    with pytest.raises(ShapeError):
        BoundaryMPS(np.ones((2, 2, 2, 2)), [1.0, 0.0, 0.0], [1.0, 0.0])


@pytest.mark.parametrize("make", [ghz_mps, w_mps, cluster_mps])
def test_canonical_form_keeps_the_state(make):
    mps = make(6)
    canon = canonicalize(mps)
    assert canon.is_isometric(1e-10)
    assert overlap(contract(canon)[0].amplitudes, contract(mps)[0].amplitudes) == pytest.approx(1.0, abs=1e-10)


def test_canonical_scale_restores_amplitudes(rng):
    mps = random_mps(5, 2, rng)
    canon = canonicalize(mps)
    psi, norm = contract(mps)
    psi_c, norm_c = contract(canon)
    assert np.allclose(canon.scale * norm_c * psi_c.amplitudes, norm * psi.amplitudes, atol=1e-10)


def test_random_chi3_sites_are_isometric(rng):
    canon = canonicalize(random_mps(6, 3, rng))
    for i in range(6):
        V = canon.site_isometry(i)
        assert np.allclose(V.conj().T @ V, np.eye(3), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.sampled_from([1, 2, 3, 4]), st.integers(0, 2**32 - 1))
def test_canonicalize_is_idempotent(n, chi, seed):
    once = canonicalize(random_mps(n, chi, seed))
    twice = canonicalize(once)
    assert np.allclose(twice.tensors, once.tensors, atol=1e-10)
    assert np.allclose(twice.phi_I, once.phi_I, atol=1e-10)
    assert abs(twice.scale - once.scale) < 1e-10 * abs(once.scale)


def test_isometric_input_unchanged_up_to_phase():
    canon = canonicalize(ghz_mps(4))
    again = canonicalize(canon)
    a, b = contract(canon)[0].amplitudes, contract(again)[0].amplitudes
    assert overlap(a, b) == pytest.approx(1.0, abs=1e-12)


def test_rank_deficient_bonds_are_flagged():
    assert canonicalize(product_zero_mps(3)).padded is False
    assert canonicalize(ghz_mps(4)).padded is False
    lifted = BoundaryMPS(np.repeat(np.stack([np.eye(2), np.zeros((2, 2))])[None], 3, axis=0), [1, 0], [1, 0])
    assert canonicalize(lifted).padded is True


def test_isometry_to_unitary_examples(rng):
    V = np.kron(np.array([[1.0], [0.0]]), np.eye(2))
    np.testing.assert_allclose(isometry_to_unitary(V), np.eye(4), atol=1e-15)
    v = haar_unitary(2, rng)[:, :1]
    U = isometry_to_unitary(v)
    assert np.linalg.norm(U[:, 0] - v[:, 0]) < 1e-12
    with pytest.raises(ValidationError):
        isometry_to_unitary(2 * V)
    with pytest.raises(ShapeError):
        isometry_to_unitary(np.eye(3)[:, :2])


@pytest.mark.parametrize("chi", [1, 2, 4, 8])
def test_isometry_to_unitary_random(chi, rng):
    V = haar_unitary(2 * chi, rng)[:, :chi]
    U = isometry_to_unitary(V)
    assert np.linalg.norm(U.conj().T @ U - np.eye(2 * chi)) < 1e-10
    assert np.linalg.norm(U[:, :chi] - V) < 1e-10
    np.testing.assert_array_equal(U, isometry_to_unitary(V))


def test_product_state_compiles_to_single_qubit_gates():
    circuit = mps_to_circuit(product_zero_mps(4))
    assert circuit.width == 4
    assert len(circuit.gates) == 4 and all(len(g.targets) == 1 for g in circuit.gates)


@pytest.mark.parametrize("make", [ghz_mps, w_mps, cluster_mps])
def test_standard_states_compile(make):
    assert compiled_fidelity(make(6)) >= 1 - 1e-9


@pytest.mark.parametrize("chi", [1, 2, 4])
@pytest.mark.parametrize("n", [1, 3, 5, 8])
def test_random_states_compile(n, chi, rng):
    if n + chi.bit_length() - 1 > 11:
        pytest.skip("register too large for a quick test")
    assert compiled_fidelity(canonicalize(random_mps(n, chi, rng))) >= 1 - 1e-9


def test_non_canonical_input_compiles(rng):
    assert compiled_fidelity(random_mps(5, 2, rng)) >= 1 - 1e-9


def test_non_power_of_two_bond(rng):
    mps = random_mps(4, 3, rng)
    with pytest.raises(ValidationError):
        mps_to_circuit(mps)
    assert mps_to_circuit(mps, embed=True).width == 6
    assert compiled_fidelity(mps, embed=True) >= 1 - 1e-9


def test_circuit_is_a_staircase():
    circuit = mps_to_circuit(ghz_mps(5))
    assert circuit.gates[0].targets == (5,)
    assert [g.targets for g in circuit.gates[1:]] == [(k - 1, k) for k in range(5, 0, -1)]


def test_physical_state_checks_virtual_register():
    plus = run_statevector(Circuit(2, (Gate(H, (0,)),))).amplitudes
    with pytest.raises(ValidationError):
        physical_state(plus, 1, 1)
    np.testing.assert_allclose(physical_state(plus, 1, 1, postselect=True).amplitudes, [1.0, 0.0])


def test_json_round_trip(rng):
    mps = random_mps(3, 2, rng)
    back = BoundaryMPS.loads(mps.dumps())
    np.testing.assert_array_equal(back.tensors, mps.tensors)
    np.testing.assert_array_equal(back.phi_I, mps.phi_I)
    data = mps.to_dict()
    assert data["n"] == 3 and data["chi"] == 2
    data["chi"] = 4
    with pytest.raises(ShapeError):
        BoundaryMPS.from_dict(data)
