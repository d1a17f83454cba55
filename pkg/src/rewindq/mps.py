"""Boundary-vector MPS and their compilation into staircase circuits.

The state has amplitudes ``<phi_F| A_1^{s_1} ... A_n^{s_n} |phi_I>`` with site
1 as the most significant qubit. Site ``i`` defines the map
``V_i = sum_s |s> (x) A_i^{(s)}`` from the virtual space to physical (x)
virtual, as a ``(d*chi, chi)`` matrix with rows ordered ``(s, beta)``.
After :func:`canonicalize` every ``V_i`` is an isometry, ``phi_F = e_0`` and
the virtual register of the compiled circuit finishes in ``|0...0>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from rewindq.circuits import Circuit, Gate
from rewindq.exceptions import DegeneracyError, ResourceError, ShapeError, ValidationError
from rewindq.simulator import PureState

CONTRACT_CAP = 2**24
ISOMETRY_ATOL = 1e-8


@dataclass(frozen=True)
class BoundaryMPS:
    """MPS with open boundaries closed by the vectors ``phi_F`` (left) and ``phi_I`` (right).

    Attributes:
        tensors: Array of shape ``(n, d, chi, chi)``; ``tensors[i, s]`` is ``A_{i+1}^{(s)}``.
        phi_I: Right boundary vector.
        phi_F: Left boundary vector (enters as a bra).
        scale: Scalar absorbed by canonicalization; the original unnormalized
            amplitudes equal ``scale`` times those of the canonical form.
        padded: True when some bond was rank deficient and had to be
            completed with arbitrary orthonormal directions.
    """

    tensors: np.ndarray
    phi_I: np.ndarray
    phi_F: np.ndarray
    scale: complex = 1.0
    padded: bool = False

    def __post_init__(self):
        t = np.array(self.tensors, dtype=np.complex128)
        if t.ndim != 4 or t.shape[2] != t.shape[3]:
            raise ShapeError(f"tensors must have shape (n, d, chi, chi), got {t.shape}")
        chi = t.shape[2]
        phi_I = np.array(self.phi_I, dtype=np.complex128).reshape(-1)
        phi_F = np.array(self.phi_F, dtype=np.complex128).reshape(-1)
        if phi_I.shape != (chi,) or phi_F.shape != (chi,):
            raise ShapeError(f"boundary vectors must have length chi={chi}")
        if not np.any(phi_I) or not np.any(phi_F):
            raise ValidationError("boundary vectors must be nonzero")
        object.__setattr__(self, "tensors", t)
        object.__setattr__(self, "phi_I", phi_I)
        object.__setattr__(self, "phi_F", phi_F)

    @property
    def n(self) -> int:
        return self.tensors.shape[0]

    @property
    def d(self) -> int:
        return self.tensors.shape[1]

    @property
    def chi(self) -> int:
        return self.tensors.shape[2]

    def site_isometry(self, i: int) -> np.ndarray:
        """``V_{i+1}`` as a ``(d*chi, chi)`` matrix with rows ``(s, beta)``."""
        return self.tensors[i].reshape(self.d * self.chi, self.chi)

    def is_isometric(self, atol: float = 1e-10) -> bool:
        eye = np.eye(self.chi)
        return all(np.allclose(V.conj().T @ V, eye, atol=atol) for V in map(self.site_isometry, range(self.n)))

    def to_dict(self) -> dict:
        enc = lambda a: [float(a.real), float(a.imag)]  # noqa: E731
        return {
            "n": self.n,
            "d": self.d,
            "chi": self.chi,
            "tensors": [[[[enc(z) for z in row] for row in A] for A in site] for site in self.tensors],
            "phi_I": [enc(z) for z in self.phi_I],
            "phi_F": [enc(z) for z in self.phi_F],
        }

    @classmethod
    def from_dict(cls, data: dict) -> BoundaryMPS:
        dec = lambda a: np.array(a, dtype=float)[..., 0] + 1j * np.array(a, dtype=float)[..., 1]  # noqa: E731
        mps = cls(dec(data["tensors"]), dec(data["phi_I"]), dec(data["phi_F"]))
        if (mps.n, mps.d, mps.chi) != (data["n"], data["d"], data["chi"]):
            raise ShapeError("declared n, d, chi do not match the tensor data")
        return mps

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> BoundaryMPS:
        return cls.from_dict(json.loads(text))


def contract(mps: BoundaryMPS, cap: int = CONTRACT_CAP) -> tuple[PureState, float]:
    """Dense normalized state and the norm it had before normalization.

    Raises:
        ResourceError: ``d**n * chi**2`` above ``cap``.
        DegeneracyError: The MPS contracts to the zero vector.
    """
    if mps.d**mps.n * mps.chi**2 > cap:
        raise ResourceError(f"dense contraction of {mps.n} sites exceeds the cap of {cap}")
    psi = mps.phi_F.conj()[None, :]  # [physical prefix, bond]
    for site in mps.tensors:
        psi = np.einsum("pa,sab->psb", psi, site).reshape(-1, mps.chi)
    amps = psi @ mps.phi_I
    norm = float(np.linalg.norm(amps))
    if norm < 1e-300:
        raise DegeneracyError("MPS contracts to the zero vector")
    if mps.d != 2:
        raise ShapeError("PureState holds qubit registers only; use d=2")
    return PureState(mps.n, amps / norm), norm


def _phase_fixed_qr(M: np.ndarray):
    Q, R = np.linalg.qr(M)
    diag = np.diag(R)
    ph = np.where(np.abs(diag) > 0, diag / np.where(diag == 0, 1, np.abs(diag)), 1.0)
    return Q * ph, ph.conj()[:, None] * R


def canonicalize(mps: BoundaryMPS, rank_rtol: float = 1e-12) -> BoundaryMPS:
    """Left-to-right QR sweep to isometric form with ``phi_F = e_0``.

    ``phi_F`` is absorbed into site 1, so that site's virtual input is one
    dimensional. Bond ``i`` then carries at most ``min(d**i, chi)`` directions;
    the unused columns of each isometry are filled with standard-basis vectors
    on rows that are never populated, which keeps the isometry condition and
    leaves the state unchanged. The remainder of the sweep is absorbed into
    ``phi_I``, whose norm is recorded in ``scale``. QR phases are fixed so
    that ``R`` has a non-negative diagonal, which makes the map idempotent.
    """
    d, chi = mps.d, mps.chi
    out = np.zeros_like(mps.tensors)
    carry = mps.phi_F.conj()[None, :]  # (D_prev, chi)
    padded = False
    for i, site in enumerate(mps.tensors):
        D_prev = carry.shape[0]
        M = np.einsum("pa,sab->spb", carry, site).reshape(d * D_prev, chi)
        Q, R = _phase_fixed_qr(M)
        K = Q.shape[1]
        diag = np.abs(np.diag(R))
        if diag.size and diag.min() <= rank_rtol * max(diag.max(), 1e-300):
            padded = True
        V = np.zeros((d, chi, chi), dtype=np.complex128)
        V[:, :D_prev, :K] = Q.reshape(d, D_prev, K)
        free_rows = [(s, b) for s in range(d) for b in range(D_prev, chi)]
        for j, (s, b) in enumerate(free_rows[: chi - K]):
            V[s, b, K + j] = 1.0
        out[i] = V
        carry = R
    phi_I = carry @ mps.phi_I
    norm = np.linalg.norm(phi_I)
    if norm < 1e-300:
        raise DegeneracyError("MPS contracts to the zero vector")
    phi_I_full = np.zeros(chi, dtype=np.complex128)
    phi_I_full[: phi_I.size] = phi_I / norm
    e0 = np.zeros(chi, dtype=np.complex128)
    e0[0] = 1.0
    return BoundaryMPS(out, phi_I_full, e0, complex(mps.scale * norm), padded or mps.padded)


def complete_unitary(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal ``columns`` to a unitary by Gram-Schmidt over the standard basis."""
    cols = [c for c in np.asarray(columns, dtype=np.complex128).T]
    dim = columns.shape[0]
    for k in range(dim):
        if len(cols) == dim:
            break
        v = np.zeros(dim, dtype=np.complex128)
        v[k] = 1.0
        for _ in range(2):  # re-orthogonalize for stability
            for c in cols:
                v = v - np.vdot(c, v) * c
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cols.append(v / nv)
    return np.stack(cols, axis=1)


def isometry_to_unitary(V: np.ndarray, d: int = 2) -> np.ndarray:
    """Unitary ``U`` on physical (x) virtual with ``U (|0> (x) I_v) = V``.

    ``V`` has shape ``(d*chi, chi)`` and rows ordered ``(s, beta)``, so the
    first ``chi`` columns of ``U`` are exactly ``V``.
    """
    V = np.asarray(V, dtype=np.complex128)
    if V.ndim != 2 or V.shape[0] != d * V.shape[1]:
        raise ShapeError(f"expected a (d*chi, chi) matrix with d={d}, got {V.shape}")
    if not np.allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=ISOMETRY_ATOL):
        raise ValidationError("input is not an isometry (V^dag V != I to 1e-8)")
    return complete_unitary(V)


def _swap_to_virtual_first(d: int, chi: int) -> np.ndarray:
    """Permutation ``|s>|beta> -> |beta>|s>``."""
    P = np.zeros((d * chi, d * chi))
    for s in range(d):
        for b in range(chi):
            P[b * d + s, s * chi + b] = 1.0
    return P


def _embed_power_of_two(mps: BoundaryMPS) -> BoundaryMPS:
    chi = mps.chi
    new = 1 << (chi - 1).bit_length()
    t = np.zeros((mps.n, mps.d, new, new), dtype=np.complex128)
    t[:, :, :chi, :chi] = mps.tensors
    pad = lambda v: np.concatenate([v, np.zeros(new - chi, dtype=np.complex128)])  # noqa: E731
    return BoundaryMPS(t, pad(mps.phi_I), pad(mps.phi_F), mps.scale, mps.padded)


def mps_to_circuit(mps: BoundaryMPS, embed: bool = False) -> Circuit:
    """Staircase circuit on ``n + b`` qubits (``chi = 2**b``) preparing the MPS.

    Layout: ``phi_I`` is prepared on wires ``n .. n+b-1``. Then for sites
    ``k = n, ..., 1`` one gate acts on wires ``k-1 .. k+b-1``; it applies the
    completed isometry of site ``k`` (fresh physical qubit on wire ``k-1``,
    virtual register on the wires after it) and moves the virtual register
    one wire to the left. Afterwards physical site ``k`` sits on wire
    ``k+b-1`` and the virtual register is on wires ``0 .. b-1`` in ``|0...0>``.
    See :func:`physical_state`.

    Raises:
        ValidationError: ``d != 2``, or ``chi`` not a power of two and ``embed`` is False.
    """
    if mps.d != 2:
        raise ValidationError("only qubit MPS (d=2) can be compiled")
    chi = mps.chi
    if chi & (chi - 1):
        if not embed:
            raise ValidationError(f"chi={chi} is not a power of two; pass embed=True to zero-pad")
        mps = _embed_power_of_two(mps)
        chi = mps.chi
    b = chi.bit_length() - 1
    n = mps.n
    canon = canonicalize(mps)
    gates = []
    if b:
        prep = complete_unitary(canon.phi_I[:, None])
        gates.append(Gate(prep, tuple(range(n, n + b))))
    P = _swap_to_virtual_first(2, chi)
    for k in range(n, 0, -1):
        U = isometry_to_unitary(canon.site_isometry(k - 1))
        gates.append(Gate(P @ U, tuple(range(k - 1, k + b))))
    return Circuit(n + b, tuple(gates))


def physical_state(amplitudes: np.ndarray, n: int, b: int, postselect: bool = False, tol: float = 1e-9) -> PureState:
    """Physical ``n``-qubit state from the output of :func:`mps_to_circuit`.

    By default the virtual register (wires ``0 .. b-1``) must be found in
    ``|0...0>`` with probability at least ``1 - tol``; it is then discarded.
    With ``postselect`` the register is projected onto ``|0...0>`` whatever
    the probability.
    """
    psi = np.asarray(amplitudes).reshape(2**b, 2**n)
    kept = psi[0]
    p0 = float(np.vdot(kept, kept).real)
    if not postselect and p0 < 1.0 - tol:
        raise ValidationError(f"virtual register ends in |0> with probability {p0:.3e} only")
    if p0 < 1e-300:
        raise DegeneracyError("post-selection probability is zero")
    return PureState(n, kept / np.sqrt(p0))


# -- standard states ------------------------------------------------------------


def _uniform(n: int, A0, A1, phi_I, phi_F) -> BoundaryMPS:
    site = np.stack([np.asarray(A0, dtype=complex), np.asarray(A1, dtype=complex)])
    return BoundaryMPS(np.repeat(site[None], n, axis=0), phi_I, phi_F)


def product_zero_mps(n: int) -> BoundaryMPS:
    return _uniform(n, [[1.0]], [[0.0]], [1.0], [1.0])


def ghz_mps(n: int) -> BoundaryMPS:
    """(|0...0> + |1...1>) / sqrt(2) with bond dimension 2."""
    h = np.array([1.0, 1.0]) / np.sqrt(2)
    return _uniform(n, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), h, h)


def w_mps(n: int) -> BoundaryMPS:
    """Equal superposition of the ``n`` single-excitation basis states."""
    return _uniform(n, np.eye(2), [[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], [1.0, 0.0])


def cluster_mps(n: int) -> BoundaryMPS:
    """Linear cluster state: CZ on every neighbouring pair of ``|+>^n``."""
    A0 = np.array([[1.0, 1.0], [0.0, 0.0]]) / np.sqrt(2)
    A1 = np.array([[0.0, 0.0], [1.0, -1.0]]) / np.sqrt(2)
    return _uniform(n, A0, A1, [1.0, 0.0], np.array([1.0, 1.0]) / np.sqrt(2))


def random_mps(n: int, chi: int, rng=None, d: int = 2) -> BoundaryMPS:
    """Random complex Gaussian tensors and boundary vectors."""
    rng = np.random.default_rng(rng)
    g = lambda *shape: rng.standard_normal(shape) + 1j * rng.standard_normal(shape)  # noqa: E731
    return BoundaryMPS(g(n, d, chi, chi), g(chi), g(chi))
