"""Random-gate experiments on rewound convolutional circuits.

A trial draws Haar-random two-qubit gates ``U`` (bulk) and ``V`` (last), builds
the rewound staircase on ``n`` qubits and records how close each reset qubit
is to ``|0>``. Qubit ``i`` (0-based) sits at distance ``x = n - 1 - i`` from
the last gate, so the profile runs over ``x = 1 .. n-1``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from rewindq.circuits import build_rewound_convolutional
from rewindq.exceptions import ConfigError, FitError, ShapeError
from rewindq.haar import haar_unitary, trial_rng
from rewindq.simulator import (
    DENSITY_CAP,
    qubit_fidelities,
    run_density,
    run_mps,
    run_statevector,
)
from rewindq.transfer import SpectrumResult, base_channel, noisy_transfer_operator, spectrum

METHODS = ("recursion", "mps", "dense")
GATE_MODES = ("shared_bulk", "independent")
FIT_WINDOW = (1e-12, 1e-1)
PLATEAU_POINTS = 20
ROUNDING_SCALE = 1e-9
THREADS_ENV = "REWINDQ_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a batch of random trials.

    Attributes:
        n: Number of qubits in the staircase.
        trials: Number of independent gate draws.
        seed: Master seed; trial ``k`` uses the stream ``(seed, k)``.
        noise_p: Depolarizing probability after every gate.
        method: ``recursion`` (transfer-operator iteration, exact for the
            channel seen by each qubit), ``mps`` (noiseless full-circuit
            marginals) or ``dense`` (density matrix, small ``n`` only).
        gate_mode: ``shared_bulk`` reuses one ``U`` on every bulk pair,
            ``independent`` draws a fresh ``U`` per pair.
    """

    n: int = 150
    trials: int = 2000
    seed: int = 0
    noise_p: float = 0.0
    method: str = "recursion"
    gate_mode: str = "shared_bulk"

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"n must be at least 3, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ConfigError(f"noise_p must lie in [0, 1], got {self.noise_p}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.gate_mode not in GATE_MODES:
            raise ConfigError(f"unknown gate_mode {self.gate_mode!r}; choose from {GATE_MODES}")
        if self.method == "dense" and self.n > DENSITY_CAP:
            raise ConfigError(f"dense method supports n <= {DENSITY_CAP}, got {self.n}")
        if self.method == "mps" and self.noise_p > 0:
            raise ConfigError("the mps method is noiseless; use recursion or dense for noise")


@dataclass(frozen=True)
class FidelityProfile:
    """Per-distance fidelity ``<0|rho|0>`` of the reset qubits.

    ``fidelity[k]`` belongs to ``x_values[k]``. Median profiles use
    ``trial = -1``.
    """

    x_values: np.ndarray
    fidelity: np.ndarray
    method: str = "recursion"
    trial: int = -1
    seed: int | None = None
    noise_p: float = 0.0

    def __post_init__(self):
        if self.x_values.shape != self.fidelity.shape:
            raise ShapeError("x_values and fidelity must have the same shape")
        if np.any(np.diff(self.x_values) <= 0):
            raise ShapeError("x_values must be strictly increasing")

    @property
    def infidelity(self) -> np.ndarray:
        return 1.0 - self.fidelity

    def monotone_violations(self, start: int = 5, tol: float = 1e-12) -> np.ndarray:
        """x values (>= ``start``) where the fidelity drops below its predecessor by more than ``tol``."""
        drops = np.diff(self.fidelity) < -tol
        xs = self.x_values[1:][drops]
        return xs[xs >= start]


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``gap(x) = c * exp(-alpha * x)``.

    ``gap`` is the infidelity for noiseless profiles and the distance to the
    plateau for noisy ones (``plateau`` is then set).
    """

    alpha: float
    c: float
    fit_window: tuple[int, int]
    residual: float
    n_points: int
    plateau: float | None = None


# -- gate sampling and single trials ------------------------------------------


def sample_gates(config: ExperimentConfig, trial: int):
    """Return ``(bulk, V)``; ``bulk`` is one matrix or a list of ``n - 2``."""
    rng = trial_rng(config.seed, trial)
    if config.gate_mode == "shared_bulk":
        U = haar_unitary(4, rng)
    else:
        U = [haar_unitary(4, rng) for _ in range(config.n - 2)]
    V = haar_unitary(4, rng)
    return U, V


def recursion_fidelities(bulk, V: np.ndarray, n: int, p: float = 0.0) -> np.ndarray:
    """Fidelities for ``x = 1 .. n-1`` by iterating the transfer operator from the base channel."""
    if isinstance(bulk, np.ndarray) and bulk.ndim == 2:
        T = noisy_transfer_operator(bulk, p)
        ops = [T] * (n - 2)
    else:
        ops = [noisy_transfer_operator(u, p) for u in bulk]
    phi = base_channel(V, p).reshape(-1, order="F")
    out = np.empty(n - 1)
    out[0] = phi[0].real  # <0|Phi(|0><0|)|0> is the (0, 0) entry of the superoperator
    # x = 2 belongs to qubit n - 3, which sees the bulk gate on (n - 3, n - 2)
    for k, T in enumerate(reversed(ops), start=1):
        phi = T @ phi
        out[k] = phi[0].real
    return out


def fidelity_profile(config: ExperimentConfig, trial: int) -> FidelityProfile:
    bulk, V = sample_gates(config, trial)
    n = config.n
    if config.method == "recursion":
        fid = recursion_fidelities(bulk, V, n, config.noise_p)
    else:
        circuit = build_rewound_convolutional(n, bulk, V)
        if config.method == "mps":
            state = run_mps(circuit)
        elif config.noise_p > 0:
            state = run_density(circuit, config.noise_p)
        else:
            state = run_statevector(circuit)
        # qubit i sits at x = n - 1 - i; qubit n - 1 is never reset
        fid = qubit_fidelities(state)[: n - 1][::-1]
    return FidelityProfile(np.arange(1, n), np.asarray(fid, dtype=float), config.method, trial, config.seed, config.noise_p)


def trial_spectrum(config: ExperimentConfig, trial: int) -> SpectrumResult:
    """Spectrum of the (noisy) transfer operator of the trial's bulk gate."""
    if config.gate_mode != "shared_bulk":
        raise ConfigError("a single transfer spectrum is only defined for gate_mode='shared_bulk'")
    U, _ = sample_gates(config, trial)
    return spectrum(noisy_transfer_operator(U, config.noise_p))


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def run_trials(config: ExperimentConfig, workers: int | None = None) -> list[FidelityProfile]:
    """All trial profiles, ordered by trial index whatever the completion order."""
    workers = min(worker_count(workers), config.trials)
    job = partial(fidelity_profile, config)
    if workers == 1:
        return [job(k) for k in range(config.trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(config.trials), chunksize=max(1, config.trials // (4 * workers))))


# -- aggregation and fitting ----------------------------------------------------


def _stack(profiles: Sequence[FidelityProfile]) -> np.ndarray:
    if not profiles:
        raise ShapeError("no profiles to aggregate")
    x = profiles[0].x_values
    for p in profiles[1:]:
        if not np.array_equal(p.x_values, x):
            raise ShapeError("profiles do not share an x grid")
    return np.stack([p.fidelity for p in profiles])


def aggregate_median(profiles: Sequence[FidelityProfile]) -> FidelityProfile:
    """Pointwise median; for an even count the lower of the two middle values."""
    F = np.sort(_stack(profiles), axis=0)
    med = F[(len(profiles) - 1) // 2]
    first = profiles[0]
    return FidelityProfile(first.x_values.copy(), med, first.method, -1, first.seed, first.noise_p)


def aggregate_geometric(profiles: Sequence[FidelityProfile], floor: float = 1e-16) -> FidelityProfile:
    """Profile whose infidelity is the pointwise geometric mean of the trial infidelities.

    Infidelities are clipped at ``floor`` (rounding level) so that trials
    hitting exactly 1 do not dominate the log average.
    """
    inf = np.clip(1.0 - _stack(profiles), floor, None)
    first = profiles[0]
    fid = 1.0 - np.exp(np.mean(np.log(inf), axis=0))
    return FidelityProfile(first.x_values.copy(), fid, first.method, -1, first.seed, first.noise_p)


def _linear_fit(x: np.ndarray, gap: np.ndarray, min_points: int, plateau: float | None) -> DecayFit:
    if x.size < min_points:
        raise FitError(f"only {x.size} points inside the fit window; need at least {min_points}")
    y = np.log(gap)
    # ln(gap) carries relative rounding error ~eps/gap; downweight gaps near the float floor
    w = gap / (gap + ROUNDING_SCALE)
    slope, intercept = np.polyfit(x, y, 1, w=w)
    resid = y - (slope * x + intercept)
    return DecayFit(
        alpha=float(-slope),
        c=float(np.exp(intercept)),
        fit_window=(int(x.min()), int(x.max())),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(x.size),
        plateau=plateau,
    )


def fit_decay(
    profile: FidelityProfile,
    window: tuple[float, float] = FIT_WINDOW,
    min_points: int = 5,
    noisy: bool | None = None,
) -> DecayFit:
    """Fit an exponential approach of the fidelity to its limit.

    Noiseless profiles regress ``ln(1 - F)`` on ``x`` for points with
    ``1 - F`` inside ``window``. Noisy profiles (``noise_p > 0`` unless
    ``noisy`` says otherwise) first estimate the plateau as the mean of the
    last 20 points and regress ``ln(plateau - F)``; the lower end of the
    window is raised above the tail's own spread so the plateau estimate's
    jitter is not fitted. Points are weighted by ``gap / (gap + 1e-9)`` so
    values dominated by float rounding barely move the slope.

    Raises:
        FitError: Fewer than ``min_points`` usable points.
    """
    if noisy is None:
        noisy = profile.noise_p > 0
    x = profile.x_values.astype(float)
    F = profile.fidelity
    lo, hi = window
    if not noisy:
        gap = 1.0 - F
        mask = (gap >= lo) & (gap <= hi)
        return _linear_fit(x[mask], gap[mask], min_points, None)
    tail = F[-PLATEAU_POINTS:]
    plateau = float(np.mean(tail))
    lo = max(lo, 100.0 * float(np.ptp(tail)), 1e-9 * plateau)
    gap = plateau - F
    mask = (gap >= lo) & (gap <= hi)
    return _linear_fit(x[mask], gap[mask], min_points, plateau)


def steps_to_error(profile: FidelityProfile, epsilon: float) -> int | None:
    """Smallest ``x`` with ``1 - F <= epsilon``; ``None`` if never reached."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    hit = np.flatnonzero(profile.infidelity <= epsilon)
    return int(profile.x_values[hit[0]]) if hit.size else None


def trial_alphas(profiles: Sequence[FidelityProfile]) -> np.ndarray:
    """Per-trial fitted decay rates; trials without enough in-window points give ``nan``."""
    out = np.full(len(profiles), np.nan)
    for k, p in enumerate(profiles):
        try:
            out[k] = fit_decay(p).alpha
        except FitError:
            pass
    return out


@dataclass
class Summary:
    """Aggregate of a batch: fit of the median profile plus per-trial statistics."""

    alpha_median: float
    alpha_iqr: float
    c: float
    steps_1e2: int | None
    steps_1e3: int | None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha_median": self.alpha_median,
            "alpha_iqr": self.alpha_iqr,
            "c": self.c,
            "steps_to_1e-2": self.steps_1e2,
            "steps_to_1e-3": self.steps_1e3,
            "diagnostics": self.diagnostics,
        }


def summarize(profiles: Sequence[FidelityProfile]) -> Summary:
    """Fit the median profile and collect per-trial statistics.

    ``alpha_median`` is the decay rate of the median profile and ``alpha_iqr``
    the interquartile range of the per-trial rates. ``diagnostics`` carries the
    median and mean of per-trial rates and the step counts of the
    geometric-mean profile.
    """
    med = aggregate_median(profiles)
    noisy = med.noise_p > 0
    try:
        fit = fit_decay(med)
        alpha, c = fit.alpha, fit.c
    except FitError:
        fit, alpha, c = None, float("nan"), float("nan")
    alphas = trial_alphas(profiles) if not noisy else np.array([])
    finite = alphas[np.isfinite(alphas)]
    q1, q3 = np.percentile(finite, [25, 75]) if finite.size else (np.nan, np.nan)
    diagnostics = {
        "trials": len(profiles),
        "trials_fitted": int(finite.size),
        "alpha_trial_median": float(np.median(finite)) if finite.size else None,
        "alpha_trial_mean": float(np.mean(finite)) if finite.size else None,
    }
    if fit is not None:
        diagnostics["fit_window"] = list(fit.fit_window)
        diagnostics["fit_residual"] = fit.residual
        if fit.plateau is not None:
            diagnostics["plateau"] = fit.plateau
    if not noisy:
        geo = aggregate_geometric(profiles)
        diagnostics["geometric_steps_to_1e-2"] = steps_to_error(geo, 1e-2)
        diagnostics["geometric_steps_to_1e-3"] = steps_to_error(geo, 1e-3)
    return Summary(
        alpha_median=alpha,
        alpha_iqr=float(q3 - q1),
        c=c,
        steps_1e2=steps_to_error(med, 1e-2),
        steps_1e3=steps_to_error(med, 1e-3),
        diagnostics=diagnostics,
    )
