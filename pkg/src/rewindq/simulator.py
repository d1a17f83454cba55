"""Exact circuit simulation: dense statevector, noisy density matrix and MPS.

All back-ends start from ``|0...0>`` and use the register ordering of
:mod:`rewindq.circuits` (qubit 0 is the most significant tensor factor).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from rewindq.channels import partial_trace
from rewindq.circuits import Circuit, apply_gate_tensor
from rewindq.exceptions import ResourceError, TopologyError, ValidationError

STATEVECTOR_CAP = 20
DENSITY_CAP = 8
DEFAULT_MAX_BOND = 16
# singular values below this fraction of the largest are treated as exact zeros
RANK_RTOL = 1e-12

_I2 = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit depolarizing noise with probability ``p`` after every gate, on each of its targets."""

    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"noise probability must lie in [0, 1], got {self.p}")


@dataclass
class PureState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n,):
            raise ValidationError(f"expected {2**self.n} amplitudes, got {self.amplitudes.shape}")
        if abs(np.linalg.norm(self.amplitudes) - 1.0) > 1e-10:
            raise ValidationError("state vector is not normalised to 1e-10")

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass
class DensityState:
    n: int
    matrix: np.ndarray

    def check(self, atol: float = 1e-9) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValidationError(f"density matrix has trace {np.trace(m).real}")
        if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -atol:
            raise ValidationError("density matrix has a negative eigenvalue")


@dataclass
class MPSState:
    """Matrix product state with site tensors of shape ``(chi_left, 2, chi_right)``.

    Attributes:
        tensors: Site tensors; sites left of ``center`` are left-canonical and
            sites right of it right-canonical.
        center: Orthogonality centre.
        max_bond: Bond dimension cap; exceeding it raises ``ResourceError``
            rather than truncating.
        truncation_error: Weight removed by deliberate truncation. The
            simulator never truncates, so this stays exactly 0.
        discarded_weight: Squared singular values dropped as numerical zeros
            (below ``RANK_RTOL`` relative to the largest), for diagnostics.
        max_bond_seen: Largest bond dimension reached during the run.
    """

    tensors: list[np.ndarray]
    center: int = 0
    max_bond: int = DEFAULT_MAX_BOND
    truncation_error: float = 0.0
    discarded_weight: float = 0.0
    max_bond_seen: int = 1

    @classmethod
    def zeros(cls, n: int, max_bond: int = DEFAULT_MAX_BOND) -> MPSState:
        t = np.zeros((1, 2, 1), dtype=np.complex128)
        t[0, 0, 0] = 1.0
        return cls([t.copy() for _ in range(n)], 0, max_bond)

    @property
    def n(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def move_center(self, site: int) -> None:
        while self.center < site:
            c = self.center
            l, d, r = self.tensors[c].shape
            q, rr = np.linalg.qr(self.tensors[c].reshape(l * d, r))
            self.tensors[c] = q.reshape(l, d, -1)
            self.tensors[c + 1] = np.tensordot(rr, self.tensors[c + 1], axes=(1, 0))
            self.center += 1
        while self.center > site:
            c = self.center
            l, d, r = self.tensors[c].shape
            q, rr = np.linalg.qr(self.tensors[c].reshape(l, d * r).T)
            self.tensors[c] = q.T.reshape(-1, d, r)
            self.tensors[c - 1] = np.tensordot(self.tensors[c - 1], rr.T, axes=(2, 0))
            self.center -= 1

    def apply_one(self, matrix: np.ndarray, site: int) -> None:
        self.tensors[site] = np.einsum("st,atb->asb", matrix, self.tensors[site])

    def apply_two(self, matrix: np.ndarray, site: int) -> None:
        """Apply a 4x4 gate to ``(site, site + 1)`` with an exact SVD split."""
        self.move_center(site)
        A, B = self.tensors[site], self.tensors[site + 1]
        theta = np.einsum("asc,ctb->astb", A, B)
        theta = np.einsum("uvst,astb->auvb", matrix.reshape(2, 2, 2, 2), theta)
        l, _, _, r = theta.shape
        u, s, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
        keep = s > RANK_RTOL * s[0]
        rank = int(keep.sum())
        if rank > self.max_bond:
            raise ResourceError(f"bond dimension {rank} exceeds max_bond={self.max_bond}")
        total = float(np.sum(s**2))
        self.discarded_weight += float(np.sum(s[~keep] ** 2)) / total if total else 0.0
        self.tensors[site] = u[:, keep].reshape(l, 2, rank)
        self.tensors[site + 1] = (s[keep, None] * vh[keep]).reshape(rank, 2, r)
        self.center = site + 1
        self.max_bond_seen = max(self.max_bond_seen, rank)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def to_statevector(self) -> np.ndarray:
        psi = np.ones((1, 1), dtype=np.complex128)
        for t in self.tensors:
            psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)

    def _environments(self):
        left = [np.ones((1, 1), dtype=np.complex128)]
        for t in self.tensors:
            left.append(np.einsum("ab,asc,bsd->cd", left[-1], t, t.conj()))
        right = [np.ones((1, 1), dtype=np.complex128)]
        for t in reversed(self.tensors):
            right.append(np.einsum("asc,bsd,cd->ab", t, t.conj(), right[-1]))
        return left, right[::-1]

    def single_site_marginals(self) -> list[np.ndarray]:
        left, right = self._environments()
        out = []
        for i, t in enumerate(self.tensors):
            rho = np.einsum("ab,asc,btd,cd->st", left[i], t, t.conj(), right[i + 1])
            out.append(rho / np.trace(rho))
        return out

    def reduced_density_matrix(self, targets: Sequence[int]) -> np.ndarray:
        """Marginal on a contiguous, increasing run of sites."""
        targets = list(targets)
        if targets != list(range(targets[0], targets[0] + len(targets))):
            raise TopologyError("MPS marginals are only supported on contiguous increasing sites")
        left, right = self._environments()
        lo, hi = targets[0], targets[-1]
        L = left[lo]
        env = L.reshape(1, L.shape[0], 1, L.shape[1])  # [ket phys, ket bond, bra phys, bra bond]
        for i in range(lo, hi + 1):
            t = self.tensors[i]
            env = np.einsum("iajb,asc,btd->iscjtd", env, t, t.conj())
            k = env.shape
            env = env.reshape(k[0] * k[1], k[2], k[3] * k[4], k[5])
        rho = np.einsum("iajb,ab->ij", env, right[hi + 1])
        return rho / np.trace(rho)


State = Union[PureState, DensityState, MPSState]


def _check_width(circuit: Circuit, cap: int, name: str) -> None:
    if circuit.width > cap:
        raise ResourceError(f"{name} simulation capped at {cap} qubits, circuit has {circuit.width}")


def run_statevector(circuit: Circuit, cap: int = STATEVECTOR_CAP, validate: bool = False) -> PureState:
    """Apply the gates of ``circuit`` in order to ``|0...0>``."""
    _check_width(circuit, cap, "statevector")
    n = circuit.width
    psi = np.zeros(2**n, dtype=np.complex128)
    psi[0] = 1.0
    psi = psi.reshape([2] * n)
    for k, g in enumerate(circuit.gates):
        psi = apply_gate_tensor(psi, g.matrix, g.targets)
        if validate and abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ValidationError(f"norm drift after gate {k}")
    return PureState(n, psi.reshape(-1))


def depolarize_qubit(rho: np.ndarray, n: int, q: int, p: float) -> np.ndarray:
    """Depolarize qubit ``q`` of a density tensor with ``2n`` axes (rows then columns)."""
    moved = np.moveaxis(rho, [q, n + q], [0, 1])
    reduced = moved[0, 0] + moved[1, 1]
    mixed = np.multiply.outer(_I2 / 2, reduced)
    return np.moveaxis((1.0 - p) * moved + p * mixed, [0, 1], [q, n + q])


def run_density(
    circuit: Circuit,
    noise: NoiseModel | float | None = None,
    cap: int = DENSITY_CAP,
    validate: bool = False,
) -> DensityState:
    """Evolve ``|0...0><0...0|``: each gate conjugates, then every target is depolarized."""
    _check_width(circuit, cap, "density-matrix")
    if noise is None or isinstance(noise, (int, float)):
        noise = NoiseModel(float(noise or 0.0))
    n = circuit.width
    rho = np.zeros((2**n, 2**n), dtype=np.complex128)
    rho[0, 0] = 1.0
    rho = rho.reshape([2] * (2 * n))
    col_offset = lambda targets: [n + t for t in targets]  # noqa: E731
    for k, g in enumerate(circuit.gates):
        rho = apply_gate_tensor(rho, g.matrix, g.targets)
        rho = apply_gate_tensor(rho, g.matrix.conj(), col_offset(g.targets))
        if noise.p:
            for q in g.targets:
                rho = depolarize_qubit(rho, n, q, noise.p)
        if validate:
            DensityState(n, rho.reshape(2**n, 2**n)).check()
    return DensityState(n, rho.reshape(2**n, 2**n))


def run_mps(circuit: Circuit, max_bond: int = DEFAULT_MAX_BOND, validate: bool = False) -> MPSState:
    """Exact MPS simulation of a circuit of one- and nearest-neighbour two-qubit gates."""
    state = MPSState.zeros(circuit.width, max_bond)
    swap = np.eye(4, dtype=np.complex128)[[0, 2, 1, 3]]
    for k, g in enumerate(circuit.gates):
        if len(g.targets) == 1:
            state.apply_one(g.matrix, g.targets[0])
        elif len(g.targets) == 2:
            a, b = g.targets
            if abs(a - b) != 1:
                raise TopologyError(f"gate {k} on {g.targets} is not nearest-neighbour")
            m = g.matrix if a < b else swap @ g.matrix @ swap
            state.apply_two(m, min(a, b))
        else:
            raise TopologyError(f"gate {k} acts on {len(g.targets)} qubits; MPS supports at most 2")
        if validate and abs(state.norm() - 1.0) > 1e-10:
            raise ValidationError(f"MPS norm drift after gate {k}")
    return state


# -- observables ----------------------------------------------------------------


def _check_index(state: State, i: int) -> None:
    if not 0 <= i < state.n:
        raise IndexError(f"qubit {i} out of range for {state.n} qubits")


def reduced_density_matrix(state: State, targets: Sequence[int]) -> np.ndarray:
    targets = list(targets)
    for t in targets:
        _check_index(state, t)
    if isinstance(state, MPSState):
        return state.reduced_density_matrix(targets)
    rho = state.density_matrix() if isinstance(state, PureState) else state.matrix
    return partial_trace(rho, [2] * state.n, targets)


def qubit_fidelities(state: State) -> np.ndarray:
    """``<0|rho_i|0>`` for every qubit ``i``."""
    if isinstance(state, MPSState):
        return np.array([m[0, 0].real for m in state.single_site_marginals()])
    if isinstance(state, PureState):
        probs = np.abs(state.amplitudes.reshape([2] * state.n)) ** 2
        return np.array([np.take(probs, 0, axis=i).sum() for i in range(state.n)])
    diag = np.real(np.diag(state.matrix)).reshape([2] * state.n)
    return np.array([np.take(diag, 0, axis=i).sum() for i in range(state.n)])


def qubit_fidelity(state: State, i: int) -> float:
    _check_index(state, i)
    return float(qubit_fidelities(state)[i])


def expectation(state: State, observable: np.ndarray, targets: Sequence[int]) -> float:
    """``Tr[rho_targets O]`` for a Hermitian observable ``O`` on ``targets``."""
    O = np.asarray(observable, dtype=np.complex128)
    if not np.allclose(O, O.conj().T, atol=1e-10):
        raise ValidationError("observable is not Hermitian to 1e-10")
    if O.shape != (2 ** len(targets),) * 2:
        raise ValidationError(f"observable shape {O.shape} does not match {len(targets)} targets")
    rho = reduced_density_matrix(state, targets)
    return float(np.real(np.trace(rho @ O)))
