"""Haar-random unitaries, random channels and per-trial random streams."""

from __future__ import annotations

import numpy as np


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based (Philox) stream keyed by ``(seed, trial)``.

    Streams for different trials are statistically independent and do not
    depend on the order in which trials are executed.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Sample from the Haar measure on SU(d).

    QR of a complex Ginibre matrix, with the phases of R's diagonal moved into
    Q, followed by a global phase fixing the determinant to 1.
    """
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    rng = _rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))
    det = np.linalg.det(q)
    return q * np.exp(-1j * np.angle(det) / d)


def random_channel(d: int = 2, rng=None, n_kraus: int | None = None) -> np.ndarray:
    """Superoperator of a random CPTP map obtained from a Haar isometry (Stinespring)."""
    rng = _rng(rng)
    k = d * d if n_kraus is None else n_kraus
    W = haar_unitary(d * k, rng)[:, :d]  # isometry C^d -> C^k (x) C^d
    kraus = W.reshape(k, d, d)
    return sum(np.kron(K.conj(), K) for K in kraus)
