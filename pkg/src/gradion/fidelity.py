"""Internal-state-induced qubit frequency spread and single-qubit gate error.

In a field gradient each ion's equilibrium position, and hence its local
resonance, depends on the internal states of all other ions through their
state-dependent magnetic forces.  This module estimates the resulting
per-ion frequency spread sigma_k by re-solving the chain equilibrium over
internal-state configurations, and converts the mean spread into an average
gate error, both in closed form and by direct numerical averaging of the
detuned-Rabi dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import truncnorm

from .core import CONSTANTS, TrapConfig
from .crystal import ConvergenceError, _newton_batch, length_scale, solve_equilibrium
from .zeeman import LOWER, UPPER, QubitLevels, kappa, transition_frequency

ERROR_COEFF = 41.0 / 120.0        # leading coefficient of the averaged gate error
DETUNING_CUTOFF_SIGMAS = 2.0      # detuning distribution support in units of sigma
MIN_ORACLE_SAMPLES = 10_000
EXHAUSTIVE_MAX_IONS = 12          # exhaustive enumeration up to 2^11 configurations
SAMPLE_BUDGET_MIN = 256
CONVENTIONS = ("mean", "pinned")


@dataclass(frozen=True)
class SpreadEstimate:
    """Per-ion and chain-averaged spread of the qubit resonance frequencies."""

    sigma_k: np.ndarray           # rad/s, per ion
    sigma: float                  # rad/s, mean over ions
    max_deviation: float          # rad/s, worst |omega - mean| over all samples
    sample_count: int             # configurations evaluated per ion
    mean_frequencies: np.ndarray  # rad/s, per ion
    seed: int
    convention: str
    exhaustive: bool

    def to_dict(self) -> dict:
        return {
            "sigma_rad_per_s": float(self.sigma),
            "sigma_hz": float(self.sigma) / (2.0 * math.pi),
            "sigma_k_rad_per_s": [float(s) for s in self.sigma_k],
            "max_deviation_rad_per_s": float(self.max_deviation),
            "mean_frequencies_rad_per_s": [float(w) for w in self.mean_frequencies],
            "sample_count": int(self.sample_count),
            "seed": int(self.seed),
            "convention": self.convention,
            "exhaustive": bool(self.exhaustive),
        }


@dataclass(frozen=True)
class GateErrorEstimate:
    """Average single-qubit rotation error for a given Rabi frequency."""

    rabi_frequency: float         # rad/s
    error_closed_form: float
    error_numeric: float | None = None

    def __post_init__(self):
        for value in (self.error_closed_form, self.error_numeric):
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"gate error {value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "rabi_frequency_rad_per_s": float(self.rabi_frequency),
            "rabi_frequency_hz": float(self.rabi_frequency) / (2.0 * math.pi),
            "error_closed_form": float(self.error_closed_form),
            "error_numeric": None if self.error_numeric is None else float(self.error_numeric),
        }


def _level_force_factors(config: TrapConfig, levels: QubitLevels, positions):
    """Per-ion force (N) for each qubit level at the baseline local fields."""
    fields = config.field_at(np.asarray(positions, dtype=float))
    scale = -CONSTANTS.mu_B * config.gradient_b
    force_lower = scale * np.asarray(kappa(levels, fields, LOWER), dtype=float)
    force_upper = scale * np.asarray(kappa(levels, fields, UPPER), dtype=float)
    return force_lower, force_upper


def _tie_break_force(force_lower, force_upper, ion_index: int, convention: str) -> float:
    if convention == "mean":
        return 0.5 * (force_lower[ion_index] + force_upper[ion_index])
    if convention == "pinned":
        return force_lower[ion_index]
    raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


def state_dependent_forces(config: TrapConfig, levels: QubitLevels, internal_states,
                           ion_index: int | None = None, convention: str = "mean",
                           positions=None) -> np.ndarray:
    """Constant axial forces (N) produced by one internal-state configuration.

    internal_states: array of N labels in {0, 1}.  If ion_index is given,
    that ion's own label is replaced by the tie-break convention: 'mean'
    applies the average of its two level forces, 'pinned' holds it in the
    lower level.  Level derivatives are evaluated at the local fields of the
    zero-force equilibrium (passed in as positions, or solved here).
    """
    states = np.asarray(internal_states)
    n = config.n_ions
    if states.shape != (n,) or not np.all((states == 0) | (states == 1)):
        raise ValueError(f"internal_states must be {n} labels in {{0, 1}}")
    if positions is None:
        positions = solve_equilibrium(config)
    force_lower, force_upper = _level_force_factors(config, levels, positions)
    forces = np.where(states == 1, force_upper, force_lower)
    if ion_index is not None:
        forces[ion_index] = _tie_break_force(force_lower, force_upper, ion_index, convention)
    return forces


def configuration_frequency(config: TrapConfig, levels: QubitLevels, internal_states,
                            ion_index: int, convention: str = "mean") -> float:
    """Resonance of ion k (rad/s) with the other ions in a given configuration.

    Builds the state-dependent force set, re-solves the equilibrium, and
    evaluates the ion's resonance at its shifted position.  Solver failures
    propagate with the offending configuration attached.
    """
    if not 0 <= ion_index < config.n_ions:
        raise IndexError(f"ion_index {ion_index} out of range")
    baseline = solve_equilibrium(config)
    forces = state_dependent_forces(config, levels, internal_states, ion_index,
                                    convention, positions=baseline)
    try:
        shifted = solve_equilibrium(config, forces, initial_guess=baseline)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"equilibrium failed for configuration {np.asarray(internal_states).tolist()}"
        ) from exc
    return float(transition_frequency(levels, config.field_at(shifted[ion_index])))


def _exhaustive_other_configs(n_others: int) -> np.ndarray:
    codes = np.arange(2**n_others, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n_others)[None, :]) & 1).astype(np.int8)


def _resolve_budget(n_ions: int, sample_budget):
    full = 2 ** (n_ions - 1)
    if sample_budget is None:
        exhaustive = n_ions <= EXHAUSTIVE_MAX_IONS
        return (full, True) if exhaustive else (4 * n_ions * n_ions, False)
    if sample_budget < 1:
        raise ValueError("sample_budget must be positive")
    if full <= sample_budget:
        return full, True
    return max(4 * n_ions * n_ions, SAMPLE_BUDGET_MIN, int(sample_budget)), False


def estimate_spread(config: TrapConfig, levels: QubitLevels | None = None,
                    sample_budget: int | None = None, seed: int = 0,
                    convention: str = "mean") -> SpreadEstimate:
    """Per-ion resonance spread over internal-state configurations of the others.

    Enumerates all 2^(N-1) other-ion configurations when the budget covers
    them (always for N <= 12 by default), otherwise draws 4 N^2 uniform
    configurations per ion with a fixed seed.  All configuration samples are
    generated up front, so the per-configuration equilibrium solves can run
    in any order without changing the result.
    """
    n = config.n_ions
    if n < 2:
        raise ValueError("estimate_spread needs at least two ions")
    if levels is None:
        levels = QubitLevels(config.species)
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")

    n_cfg, exhaustive = _resolve_budget(n, sample_budget)
    rng = np.random.default_rng(seed)
    if exhaustive:
        other_configs = _exhaustive_other_configs(n - 1)
        samples = np.broadcast_to(other_configs, (n,) + other_configs.shape)
    else:
        samples = rng.integers(0, 2, size=(n, n_cfg, n - 1), dtype=np.int8)

    baseline = solve_equilibrium(config)
    z0 = length_scale(config)
    u0 = baseline / z0
    force_lower, force_upper = _level_force_factors(config, levels, baseline)
    force_scale = config.species.mass * config.omega_z**2 * z0

    sigma_k = np.empty(n)
    mean_k = np.empty(n)
    max_dev = 0.0
    chunk = max(1, 2_000_000 // (n * n))
    others = np.arange(n)
    for k in range(n):
        other_idx = np.concatenate([others[:k], others[k + 1:]])
        freqs = np.empty(n_cfg)
        tie = _tie_break_force(force_lower, force_upper, k, convention)
        for start in range(0, n_cfg, chunk):
            block = samples[k][start:start + chunk]
            forces = np.empty((len(block), n))
            forces[:, other_idx] = np.where(block == 1, force_upper[other_idx],
                                            force_lower[other_idx])
            forces[:, k] = tie
            try:
                u = _newton_batch(u0, forces / force_scale)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"equilibrium failed while sampling ion {k} configurations"
                ) from exc
            freqs[start:start + len(block)] = transition_frequency(
                levels, config.field_at(u[:, k] * z0))
        mean_k[k] = np.mean(freqs)
        sigma_k[k] = np.std(freqs, ddof=0 if exhaustive else 1)
        max_dev = max(max_dev, float(np.max(np.abs(freqs - mean_k[k]))))

    return SpreadEstimate(
        sigma_k=sigma_k,
        sigma=float(np.mean(sigma_k)),
        max_deviation=max_dev,
        sample_count=n_cfg,
        mean_frequencies=mean_k,
        seed=seed,
        convention=convention,
        exhaustive=exhaustive,
    )


def gate_error_closed_form(sigma: float, rabi_frequency: float) -> float:
    """Average rotation error (41/120) (sigma / Omega_R)^2."""
    if not rabi_frequency > 0.0:
        raise ValueError("rabi_frequency must be positive")
    return ERROR_COEFF * (sigma / rabi_frequency) ** 2


def _truncated_detunings(sigma: float, samples: int, rng) -> np.ndarray:
    """Zero-mean detunings with support +-2 sigma and variance sigma^2.

    The distribution is a truncated normal whose cutoff sits exactly at two
    observed standard deviations; the parent scale is solved so that the
    post-truncation variance equals sigma^2.
    """
    if sigma == 0.0:
        return np.zeros(samples)
    cut = DETUNING_CUTOFF_SIGMAS

    def excess(t):
        return truncnorm.var(-cut * t, cut * t) / (t * t) - 1.0

    t = brentq(excess, 1e-3, 1.0)
    return truncnorm.rvs(-cut * t, cut * t, loc=0.0, scale=sigma / t,
                         size=samples, random_state=rng)


def _rabi_overlap_squared(alpha, phi, t, rabi_frequency, detuning):
    """|<ideal|actual>|^2 for a resonant vs detuned Rabi pulse of duration t."""
    half_ideal = 0.5 * rabi_frequency * t
    omega_eff = np.sqrt(rabi_frequency**2 + detuning**2)
    half_actual = 0.5 * omega_eff * t
    nx = rabi_frequency / omega_eff
    nz = detuning / omega_eff

    sin_i, cos_i = np.sin(half_ideal), np.cos(half_ideal)
    sin_a, cos_a = np.sin(half_actual), np.cos(half_actual)
    c0 = cos_i * cos_a + nx * sin_i * sin_a
    cx = sin_i * cos_a - nx * cos_i * sin_a
    cy = -nz * sin_i * sin_a
    cz = -nz * cos_i * sin_a

    trans = 2.0 * alpha * np.sqrt(1.0 - alpha**2)
    sx = trans * np.cos(phi)
    sy = trans * np.sin(phi)
    sz = 1.0 - 2.0 * alpha**2
    return c0**2 + (cx * sx + cy * sy + cz * sz) ** 2


def gate_error_numeric_oracle(sigma: float, rabi_frequency: float,
                              samples: int = 200_000, seed: int = 0) -> float:
    """Directly averaged rotation error, independent of the closed form.

    Monte-Carlo averages the exact two-level infidelity over initial states
    alpha |0> + e^{i phi} sqrt(1 - alpha^2) |1> (alpha, phi uniform), pulse
    durations uniform in [0, pi/Omega_R], and detunings from the truncated
    normal of _truncated_detunings.
    """
    if not rabi_frequency > 0.0:
        raise ValueError("rabi_frequency must be positive")
    if samples < MIN_ORACLE_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_ORACLE_SAMPLES}")
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 1.0, samples)
    phi = rng.uniform(0.0, 2.0 * math.pi, samples)
    t = rng.uniform(0.0, math.pi / rabi_frequency, samples)
    delta = _truncated_detunings(sigma, samples, rng)
    overlap = _rabi_overlap_squared(alpha, phi, t, rabi_frequency, delta)
    return float(np.mean(1.0 - overlap))


def gate_error_estimate(spread: SpreadEstimate, rabi_frequency: float,
                        numeric_samples: int | None = None, seed: int = 0) -> GateErrorEstimate:
    """Bundle the closed-form error (and optionally the numeric oracle)."""
    numeric = None
    if numeric_samples is not None:
        numeric = gate_error_numeric_oracle(spread.sigma, rabi_frequency,
                                            numeric_samples, seed)
    return GateErrorEstimate(
        rabi_frequency=rabi_frequency,
        error_closed_form=gate_error_closed_form(spread.sigma, rabi_frequency),
        error_numeric=numeric,
    )
