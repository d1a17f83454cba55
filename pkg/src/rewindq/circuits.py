"""Gate sequences, idle-qubit detection and the rewinding construction.

Qubits are indexed from 0, so the 1-based pair label ``U_{i,i+1}`` acts on
qubits ``(i - 1, i)``. A gate's matrix acts on its targets in the order
given, the first target being the most significant tensor factor; the same
ordering is used for the full register (qubit 0 is the leftmost factor).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from rewindq.exceptions import ShapeError, ValidationError

UNITARY_ATOL = 1e-10


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return np.allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=atol)


@dataclass(frozen=True)
class Gate:
    """A unitary acting on an ordered tuple of qubits."""

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128)
        targets = tuple(int(t) for t in self.targets)
        if len(targets) == 0:
            raise ValidationError("a gate needs at least one target")
        if len(set(targets)) != len(targets):
            raise ValidationError(f"gate targets must be distinct, got {targets}")
        if min(targets) < 0:
            raise ValidationError(f"negative qubit index in {targets}")
        dim = 2 ** len(targets)
        if matrix.shape != (dim, dim):
            raise ShapeError(f"gate on {len(targets)} qubits needs a {dim}x{dim} matrix, got {matrix.shape}")
        if not is_unitary(matrix):
            raise ValidationError("gate matrix is not unitary to 1e-10")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "targets", targets)

    def dagger(self) -> Gate:
        return Gate(self.matrix.conj().T, self.targets)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return self.targets == other.targets and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.targets, self.matrix.tobytes()))


@dataclass(frozen=True)
class Circuit:
    """An ordered gate sequence on ``width`` qubits; the empty circuit is the identity.

    ``window`` optionally records the declared window size of a convolutional circuit.
    """

    width: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)
    window: int | None = None

    def __post_init__(self):
        gates = tuple(self.gates)
        if self.width < 1:
            raise ValidationError(f"circuit width must be positive, got {self.width}")
        for g in gates:
            if max(g.targets) >= self.width:
                raise ValidationError(f"gate targets {g.targets} exceed width {self.width}")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        if other.width != self.width:
            raise ShapeError("cannot concatenate circuits of different width")
        return Circuit(self.width, self.gates + other.gates, self.window)

    def prefix(self, split: int) -> Circuit:
        """Gates ``[0, split)``: the part that may be rewound."""
        _check_split(self, split)
        return Circuit(self.width, self.gates[:split], self.window)

    def suffix(self, split: int) -> Circuit:
        """Gates ``[split, N)``: the part still running."""
        _check_split(self, split)
        return Circuit(self.width, self.gates[split:], self.window)

    def unitary(self) -> np.ndarray:
        """Dense matrix of the whole circuit; only sensible for small widths."""
        psi = np.eye(2**self.width, dtype=np.complex128).reshape([2] * self.width + [-1])
        for g in self.gates:
            psi = apply_gate_tensor(psi, g.matrix, g.targets)
        return psi.reshape(2**self.width, -1)

    def touched(self) -> frozenset[int]:
        return frozenset(t for g in self.gates for t in g.targets)


def apply_gate_tensor(psi: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` to the leading qubit axes ``targets`` of tensor ``psi``.

    Trailing axes beyond the qubit axes are carried along untouched.
    """
    k = len(targets)
    op = matrix.reshape([2] * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(targets)))
    return np.moveaxis(out, list(range(k)), list(targets))


def _check_split(circuit: Circuit, split: int) -> None:
    if not 0 <= split <= len(circuit.gates):
        raise IndexError(f"split {split} out of range [0, {len(circuit.gates)}]")


def idle_qubits(circuit: Circuit, split: int) -> frozenset[int]:
    """Qubits touched by no gate in ``gates[split:]``.

    Qubits that no gate touches at all are idle as well.
    """
    _check_split(circuit, split)
    busy = circuit.suffix(split).touched()
    return frozenset(range(circuit.width)) - busy


def restrict_to_idle(prefix: Circuit, idle: Iterable[int]) -> Circuit:
    """Subsequence of ``prefix`` whose gates act exclusively on ``idle`` (order kept)."""
    idle = frozenset(idle)
    if any(q < 0 or q >= prefix.width for q in idle):
        raise ValidationError(f"idle set {sorted(idle)} not within width {prefix.width}")
    kept = tuple(g for g in prefix.gates if idle.issuperset(g.targets))
    return Circuit(prefix.width, kept, prefix.window)


def rewinding_circuit(sub: Circuit) -> Circuit:
    """Reverse the gate order and take the adjoint of every gate."""
    return Circuit(sub.width, tuple(g.dagger() for g in reversed(sub.gates)), sub.window)


def rewind(circuit: Circuit, split: int, idle: Iterable[int] | None = None) -> Circuit:
    """Full protocol: ``circuit`` followed by the rewinding of its idle part.

    ``idle`` defaults to every idle qubit after ``split``; callers may pass a
    subset to rewind fewer qubits.
    """
    if idle is None:
        idle = idle_qubits(circuit, split)
    else:
        idle = frozenset(idle)
        if not idle <= idle_qubits(circuit, split):
            raise ValidationError("requested qubits are not idle after the split")
    return circuit + rewinding_circuit(restrict_to_idle(circuit.prefix(split), idle))


def _check_pair_gate(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (4, 4):
        raise ShapeError(f"{name} must be 4x4, got {m.shape}")
    return m


def build_convolutional(n: int, bulk, last) -> Circuit:
    """Staircase ``U_{1,2}, ..., U_{n-2,n-1}, V_{n-1,n}`` on ``n`` qubits.

    ``bulk`` is either one 4x4 matrix reused at every site or a sequence of
    ``n - 2`` matrices (one per site, first acting on qubits (0, 1)).
    """
    if n < 2:
        raise ValidationError(f"a convolutional circuit needs n >= 2, got {n}")
    bulk_list = _bulk_list(n, bulk)
    last = _check_pair_gate(last, "last")
    gates = [Gate(u, (i, i + 1)) for i, u in enumerate(bulk_list)]
    gates.append(Gate(last, (n - 2, n - 1)))
    return Circuit(n, tuple(gates), window=2)


def _bulk_list(n: int, bulk) -> list[np.ndarray]:
    arr = np.asarray(bulk, dtype=np.complex128) if not isinstance(bulk, (list, tuple)) else None
    if arr is not None and arr.ndim == 2:
        return [_check_pair_gate(arr, "bulk")] * (n - 2)
    bulk_list = [_check_pair_gate(u, "bulk") for u in bulk]
    if len(bulk_list) != n - 2:
        raise ShapeError(f"need {n - 2} bulk gates for n={n}, got {len(bulk_list)}")
    return bulk_list


def build_rewound_convolutional(n: int, bulk, last) -> Circuit:
    """Convolutional staircase followed by the rewind of every gate except ``last``.

    Gate count is ``2n - 3``; qubits ``0 .. n-2`` are the ones being reset.
    """
    forward = build_convolutional(n, bulk, last)
    # qubit n-1 carries on into the rest of the computation; 0..n-2 are idle
    return rewind(forward, len(forward.gates), idle=range(n - 1))


# -- JSON ---------------------------------------------------------------------


def circuit_to_dict(circuit: Circuit) -> dict:
    gates = []
    for g in circuit.gates:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in g.matrix]
        gates.append({"targets": list(g.targets), "matrix": rows})
    out = {"width": circuit.width, "gates": gates}
    if circuit.window is not None:
        out["window"] = circuit.window
    return out


def circuit_from_dict(data: dict) -> Circuit:
    gates = []
    for g in data["gates"]:
        m = np.array([[complex(re, im) for re, im in row] for row in g["matrix"]])
        gates.append(Gate(m, tuple(g["targets"])))
    return Circuit(int(data["width"]), tuple(gates), data.get("window"))


def dumps(circuit: Circuit) -> str:
    # repr-based float formatting in json makes the round trip exact
    return json.dumps(circuit_to_dict(circuit))


def loads(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))
