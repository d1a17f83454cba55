"""Superoperator algebra in the column-stacking convention.

``vec`` stacks columns, so ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)`` and a
channel ``S`` acts as ``unvec(S @ vec(rho))``. Superoperators are plain
``(d*d, d*d)`` complex arrays.

Choi matrices use ``J = sum_ij E_ij (x) S(E_ij)`` (input factor first). The
norm on channel space is the Frobenius norm of ``J`` divided by ``sqrt(d)``,
so the one-qubit identity channel has norm ``sqrt(2)``. Because ``J`` is an
entry permutation of the superoperator matrix, this is also ``||S||_F / sqrt(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rewindq.circuits import is_unitary
from rewindq.exceptions import ShapeError, ValidationError


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ShapeError(f"vector of length {v.size} is not a vectorised square matrix")
    return v.reshape(d, d, order="F")


def superop_dim(S: np.ndarray) -> int:
    S = np.asarray(S)
    d = int(round(np.sqrt(S.shape[0])))
    if S.ndim != 2 or S.shape[0] != S.shape[1] or d * d != S.shape[0]:
        raise ShapeError(f"not a superoperator matrix: shape {S.shape}")
    return d


def identity_superop(d: int = 2) -> np.ndarray:
    return np.eye(d * d, dtype=np.complex128)


def unitary_to_superop(U: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> U rho U^dagger``, i.e. ``conj(U) (x) U``."""
    U = np.asarray(U, dtype=np.complex128)
    if not is_unitary(U):
        raise ValidationError("unitary_to_superop needs a unitary matrix (tolerance 1e-10)")
    return np.kron(U.conj(), U)


def apply_channel(S: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = superop_dim(S)
    rho = np.asarray(rho)
    if rho.shape != (d, d):
        raise ShapeError(f"channel on dimension {d} cannot act on a {rho.shape} matrix")
    return unvec(S @ vec(rho))


def compose(*superops: np.ndarray) -> np.ndarray:
    """``compose(S2, S1)`` applies S1 first, matching function composition."""
    out = superops[-1]
    for S in reversed(superops[:-1]):
        if S.shape != out.shape:
            raise ShapeError("cannot compose channels of different dimension")
        out = S @ out
    return out


def kraus_to_superop(kraus: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(np.asarray(k).conj(), np.asarray(k)) for k in kraus)


def depolarizing(p: float, n_qubits: int = 1) -> np.ndarray:
    """``rho -> (1-p) rho + p Tr(rho) I/2`` applied independently to each of ``n_qubits``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    one = (1.0 - p) * np.eye(4, dtype=np.complex128) + p * np.outer(vec(np.eye(2) / 2), vec(np.eye(2)).conj())
    out = one
    for _ in range(n_qubits - 1):
        out = superop_tensor(out, one)
    return out


# -- subsystem structure ------------------------------------------------------


def to_natural(S: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Reshape a superoperator to indices ``[out_row..., out_col..., in_row..., in_col...]``.

    Each group holds one index per subsystem in ``dims``; composite Hilbert
    indices are row-major (the first subsystem is most significant).
    """
    D = int(np.prod(dims))
    if S.shape != (D * D, D * D):
        raise ShapeError(f"superoperator shape {S.shape} does not match subsystem dims {tuple(dims)}")
    return S.reshape(D, D, D, D, order="F").reshape(tuple(dims) * 4)


def from_natural(N: np.ndarray) -> np.ndarray:
    D = int(round(np.prod(N.shape) ** 0.25))
    return N.reshape(D, D, D, D).reshape(D * D, D * D, order="F")


def superop_tensor(SA: np.ndarray, SB: np.ndarray) -> np.ndarray:
    """Superoperator of the product channel ``S_A (x) S_B`` on ``A (x) B``."""
    dA, dB = superop_dim(SA), superop_dim(SB)
    NA = to_natural(SA, (dA,))
    NB = to_natural(SB, (dB,))
    N = np.einsum("ijkl,mnop->imjnkolp", NA, NB)
    return from_natural(N.reshape(dA, dB, dA, dB, dA, dB, dA, dB))


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on subsystems ``keep`` (returned in the order given)."""
    dims = tuple(dims)
    n = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    keep = list(keep)
    drop = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    bra = [letters[i] for i in range(n)]
    ket = [letters[i].upper() for i in range(n)]
    for i in drop:
        ket[i] = bra[i]
    out = "".join(bra[i] for i in keep) + "".join(ket[i] for i in keep)
    red = np.einsum("".join(bra) + "".join(ket) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return red.reshape(dk, dk)


# -- Choi and validity --------------------------------------------------------


def superop_to_choi(S: np.ndarray) -> np.ndarray:
    d = superop_dim(S)
    S4 = S.reshape(d, d, d, d, order="F")  # [k, l, i, j] = S(E_ij)[k, l]
    return S4.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_to_superop(J: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(J.shape[0])))
    J4 = np.asarray(J).reshape(d, d, d, d)  # [i, k, j, l]
    return J4.transpose(1, 3, 0, 2).reshape(d * d, d * d, order="F")


@dataclass(frozen=True)
class CPTPReport:
    """Diagnostic returned by :func:`validate_cptp`.

    ``min_choi_eigenvalue`` refers to the trace-normalised Choi matrix ``J / d``,
    which is a density matrix for every channel.
    """

    tp_defect: float
    min_choi_eigenvalue: float
    tol: float

    @property
    def is_channel(self) -> bool:
        return self.tp_defect <= self.tol and self.min_choi_eigenvalue >= -self.tol

    def __bool__(self) -> bool:
        return self.is_channel


def validate_cptp(S: np.ndarray, tol: float = 1e-10) -> CPTPReport:
    d = superop_dim(S)
    trace_row = vec(np.eye(d)).conj()
    # Tr(S(X)) = trace_row @ S @ vec(X); the functional's induced norm is its 2-norm
    tp_defect = float(np.linalg.norm(trace_row @ S - trace_row))
    J = superop_to_choi(S) / d
    J = (J + J.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(J)[0])
    return CPTPReport(tp_defect, min_eig, tol)


def channel_norm(S: np.ndarray) -> float:
    return float(np.linalg.norm(S) / np.sqrt(superop_dim(S)))


def channel_inner(S1: np.ndarray, S2: np.ndarray) -> complex:
    if S1.shape != S2.shape:
        raise ShapeError("channels act on different dimensions")
    return complex(np.vdot(S1, S2) / superop_dim(S1))


def channel_distance(S1: np.ndarray, S2: np.ndarray) -> float:
    if np.shape(S1) != np.shape(S2):
        raise ShapeError(f"cannot compare channels with shapes {np.shape(S1)} and {np.shape(S2)}")
    return channel_norm(np.asarray(S1) - np.asarray(S2))
