"""Shared test utilities."""

import numpy as np

SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def random_density(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_nn_circuit(n, n_gates, rng):
    """Random circuit of Haar two-qubit gates on nearest-neighbour pairs, with occasional one-qubit gates."""
    from rewindq.circuits import Circuit, Gate
    from rewindq.haar import haar_unitary

    gates = []
    for _ in range(n_gates):
        if rng.random() < 0.2:
            gates.append(Gate(haar_unitary(2, rng), (int(rng.integers(n)),)))
        else:
            i = int(rng.integers(n - 1))
            pair = (i, i + 1) if rng.random() < 0.5 else (i + 1, i)
            gates.append(Gate(haar_unitary(4, rng), pair))
    return Circuit(n, tuple(gates))


# criterion -> list of (check, passed, detail); printed by the terminal summary hook
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion, check, passed, detail):
    """Log an acceptance check, print its line and fail the test if it did not pass."""
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'} criterion {criterion} [{check}]: {detail}")
    assert passed, f"criterion {criterion} [{check}]: {detail}"
