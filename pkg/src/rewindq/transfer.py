"""Transfer operators on the space of one-qubit channels.

For a two-qubit gate ``U`` on ``(A, B)`` the transfer operator maps a channel
``Phi`` on ``B`` to the channel on ``A``::

    rho -> Tr_B[ U^dag (I_A (x) Phi)(U (rho (x) |0><0|) U^dag) U ]

It is stored as a 16x16 matrix acting on ``vec(S)`` (column stacking) of the
4x4 superoperator ``S`` of ``Phi``, and is extended linearly to all 4x4
matrices. Noise replaces each unitary conjugation by the conjugation followed
by single-qubit depolarizing noise on both qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from rewindq.channels import (
    channel_norm,
    choi_to_superop,
    depolarizing,
    superop_to_choi,
    to_natural,
    unitary_to_superop,
    unvec,
    vec,
)
from rewindq.circuits import is_unitary
from rewindq.exceptions import NumericalError, ShapeError, ValidationError
from rewindq.haar import random_channel

ZERO = np.array([[1, 0], [0, 0]], dtype=np.complex128)
UNIT_TOL = 1e-9
GENERIC_GAP = 1e-3


def _check_pair(U: np.ndarray, name: str = "U") -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (4, 4):
        raise ShapeError(f"{name} must be a 4x4 matrix, got {U.shape}")
    if not is_unitary(U):
        raise ValidationError(f"{name} is not unitary to 1e-10")
    return U


def _noisy_gate(U: np.ndarray, p: float) -> np.ndarray:
    """Natural-form superoperator of conjugation by ``U`` followed by ``D_p (x) D_p``."""
    S = unitary_to_superop(U)
    if p:
        S = depolarizing(p, 2) @ S
    return to_natural(S, (2, 2))


def noisy_transfer_operator(U: np.ndarray, p: float) -> np.ndarray:
    """Transfer operator with depolarizing noise after both ``U`` and ``U^dag``."""
    U = _check_pair(U)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    fwd = _noisy_gate(U, p)[:, :, :, :, :, 0, :, 0]  # input on B fixed to |0><0|
    bwd = _noisy_gate(U.conj().T, p)
    # output indices (e, g) on A after tracing B (f); (b, d) -> (bp, dp) is Phi's action
    T8 = np.einsum("efgfabcd,aBcDxz->egxzbdBD", bwd, fwd, optimize=True)
    return T8.reshape(16, 16, order="F")


def transfer_operator(U: np.ndarray) -> np.ndarray:
    return noisy_transfer_operator(U, 0.0)


def base_channel(V: np.ndarray, p: float = 0.0) -> np.ndarray:
    """Superoperator of ``rho -> Tr_B[V (rho (x) |0><0|) V^dag]``, optionally with noise after ``V``."""
    V = _check_pair(V, "V")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    G = _noisy_gate(V, p)[:, :, :, :, :, 0, :, 0]
    return np.einsum("efgfxz->egxz", G).reshape(4, 4, order="F")


def apply_transfer(U: np.ndarray, phi: np.ndarray, p: float = 0.0) -> np.ndarray:
    """Reference implementation of ``T_U[phi]`` by explicit density-matrix steps.

    Slow but independent of the index bookkeeping in :func:`noisy_transfer_operator`.
    """
    U = _check_pair(U)
    dep = depolarizing(p, 2) if p else None
    out = np.zeros((4, 4), dtype=np.complex128)
    for k in range(4):
        rho = np.zeros(4, dtype=np.complex128)
        rho[k] = 1.0
        s = U @ np.kron(unvec(rho), ZERO) @ U.conj().T
        if dep is not None:
            s = unvec(dep @ vec(s))
        blocks = s.reshape(2, 2, 2, 2)  # [a, b, a', b']
        res = np.empty_like(blocks)
        for a in range(2):
            for ap in range(2):
                res[a, :, ap, :] = unvec(phi @ vec(blocks[a, :, ap, :]))
        s = U.conj().T @ res.reshape(4, 4) @ U
        if dep is not None:
            s = unvec(dep @ vec(s))
        out[:, k] = vec(np.einsum("ajbj->ab", s.reshape(2, 2, 2, 2)))
    return out


def apply(T: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Image of the superoperator ``phi`` under the transfer matrix ``T``."""
    if T.shape[1] != phi.size:
        raise ShapeError(f"transfer matrix of shape {T.shape} cannot act on a {phi.shape} superoperator")
    return unvec(T @ vec(phi))


def iterate(T: np.ndarray, phi0: np.ndarray, steps: int) -> list[np.ndarray]:
    """Return ``[phi0, T[phi0], ..., T^steps[phi0]]``."""
    out = [np.asarray(phi0, dtype=np.complex128)]
    for _ in range(steps):
        out.append(apply(T, out[-1]))
    return out


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of a transfer matrix and the derived decay rate.

    Attributes:
        eigenvalues: All eigenvalues, sorted by modulus, then real part, then
            imaginary part (all descending).
        lambda2: Largest modulus left after removing the eigenvalue closest to 1.
        alpha_pred: ``-ln(lambda2)``; ``inf`` when ``lambda2 == 0``.
        unique_unit: False when a second eigenvalue sits on the unit circle, in
            which case convergence to a unique fixed point is not guaranteed.
        generic: ``lambda2`` is a simple, real, positive eigenvalue bounded
            away from 1. Only then can a non-negative infidelity follow
            ``lambda2**x`` asymptotically.
    """

    eigenvalues: np.ndarray
    lambda2: float
    alpha_pred: float
    unique_unit: bool
    generic: bool
    second: complex = field(default=0j)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "lambda2": float(self.lambda2),
            "alpha_pred": float(self.alpha_pred),
        }


def sort_eigenvalues(ev: np.ndarray) -> np.ndarray:
    ev = np.asarray(ev, dtype=np.complex128)
    order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
    return ev[order]


def spectrum(T: np.ndarray) -> SpectrumResult:
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ShapeError(f"spectrum needs a square matrix, got {T.shape}")
    try:
        ev = np.linalg.eigvals(T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericalError("eigensolver returned non-finite values")
    ev = sort_eigenvalues(ev)
    dist = np.abs(ev - 1.0)
    # closest to 1; ties go to the larger real part, which lexsort order already gives first
    unit = int(np.flatnonzero(dist <= dist.min() + 1e-14)[0])
    rest = np.delete(ev, unit)
    if rest.size == 0:
        return SpectrumResult(ev, 0.0, np.inf, True, False)
    second = rest[0]
    lambda2 = float(abs(second))
    unique_unit = lambda2 < 1.0 - UNIT_TOL
    simple = rest.size == 1 or abs(rest[1]) < lambda2 * (1 - 1e-6)
    real_positive = abs(second.imag) <= 1e-9 * max(lambda2, 1e-300) and second.real > 0
    generic = unique_unit and lambda2 < 1.0 - GENERIC_GAP and simple and real_positive
    with np.errstate(divide="ignore"):
        alpha = float(-np.log(lambda2)) if lambda2 > 0 else np.inf
    return SpectrumResult(ev, lambda2, alpha, unique_unit, generic, complex(second))


# -- contraction and perturbation -----------------------------------------------


def _hermitian_basis(n: int) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of n x n Hermitian matrices."""
    basis = []
    for i in range(n):
        for j in range(n):
            M = np.zeros((n, n), dtype=np.complex128)
            if i == j:
                M[i, i] = 1.0
            elif i < j:
                M[i, j] = M[j, i] = 1 / np.sqrt(2)
            else:
                M[i, j] = -1j / np.sqrt(2)
                M[j, i] = 1j / np.sqrt(2)
            basis.append(M)
    return basis


def difference_subspace_basis(d: int = 2) -> np.ndarray:
    """Orthonormal real basis (as columns of vec'd superoperators) of the
    Hermiticity-preserving, trace-annihilating maps on ``d``-dimensional input.

    Differences of two channels always lie in this subspace.
    """
    H = _hermitian_basis(d * d)
    rows = []
    for h in H:
        tr_out = np.einsum("ikjk->ij", h.reshape(d, d, d, d))
        rows.append(np.concatenate([tr_out.real.ravel(), tr_out.imag.ravel()]))
    coeffs = null_space(np.array(rows).T)
    cols = [vec(choi_to_superop(sum(c * h for c, h in zip(col, H)))) for col in coeffs.T]
    return np.array(cols).T


def restricted_matrix(T: np.ndarray) -> np.ndarray:
    """Real matrix of ``T`` on the difference subspace, in the basis of :func:`difference_subspace_basis`."""
    B = difference_subspace_basis(2)
    return np.real(B.conj().T @ T @ B)


@dataclass(frozen=True)
class ContractionEstimate:
    """``subspace_bound`` is an upper bound on the contraction coefficient,
    ``sampled_max`` a lower estimate from explicit channel pairs."""

    subspace_bound: float
    sampled_max: float


def _ratio(T: np.ndarray, diff: np.ndarray) -> float:
    den = channel_norm(diff)
    if den == 0.0:
        return 0.0
    return channel_norm(apply(T, diff)) / den


def contraction_coefficient(T: np.ndarray, samples: int = 100, seed: int = 0) -> ContractionEstimate:
    """Estimate ``sup ||T[Phi1 - Phi2]|| / ||Phi1 - Phi2||`` over channel pairs.

    Besides ``samples`` random pairs, each real invariant direction (or
    invariant plane, for complex eigenvalues) of ``T`` on the difference
    subspace is realised as a pair ``Phi_c +- eps * D`` around the completely
    depolarizing channel, which makes ``sampled_max >= lambda2``.
    """
    if samples < 1:
        raise ValidationError("contraction_coefficient needs at least one sample")
    B = difference_subspace_basis(2)
    M = np.real(B.conj().T @ T @ B)
    bound = float(np.linalg.norm(M, 2))
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        best = max(best, _ratio(T, random_channel(2, rng) - random_channel(2, rng)))

    centre = depolarizing(1.0)
    vals, vecs = np.linalg.eig(M)
    for lam, v in zip(vals, vecs.T):
        if abs(lam.imag) > 1e-12:
            if lam.imag < 0:
                continue
            P, _ = np.linalg.qr(np.stack([v.real, v.imag], axis=1))
        else:
            P = (v.real / np.linalg.norm(v.real))[:, None]
        _, _, vh = np.linalg.svd(P.T @ M @ P)
        direction = unvec(B @ (P @ vh[0]))
        eps = 0.25 / np.linalg.norm(superop_to_choi(direction), 2)
        best = max(best, _ratio(T, (centre + eps * direction) - (centre - eps * direction)))
    return ContractionEstimate(bound, float(best))


def operator_norm_distance(T1: np.ndarray, T2: np.ndarray) -> float:
    """Largest singular value of ``T1 - T2``.

    The channel-space norm is a rescaled Frobenius norm, and the rescaling
    cancels in the induced operator norm.
    """
    if np.shape(T1) != np.shape(T2):
        raise ShapeError(f"shape mismatch: {np.shape(T1)} vs {np.shape(T2)}")
    return float(np.linalg.norm(np.asarray(T1) - np.asarray(T2), 2))


def fixed_point(T: np.ndarray) -> np.ndarray:
    """Eigen-channel of ``T`` for the eigenvalue closest to 1, scaled to be trace preserving."""
    vals, vecs = np.linalg.eig(T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    S = unvec(vecs[:, k])
    d = int(round(np.sqrt(S.shape[0])))
    scale = np.trace(unvec(S @ vec(np.eye(d))))
    if abs(scale) < 1e-12:
        raise NumericalError("leading eigenvector is trace-annihilating; no fixed channel")
    return S * (d / scale)
