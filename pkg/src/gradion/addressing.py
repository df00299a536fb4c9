"""Spin-phonon couplings, resonance spectra, and the gradient needed to
address ions in frequency space.

Two couplings drive sidebands: the photon-recoil Lamb-Dicke parameter
eta = zeta k_z dz and the gradient-induced coupling
eps_c = zeta dz |kappa_1 - kappa_0| mu_B b / (hbar omega_l), where
dz = sqrt(hbar / (2 m omega_l)) is the ground-state wave-packet size and
zeta the addressed ion's component of the mode eigenvector.  Sideband
dynamics are governed by the effective parameter sqrt(eta^2 + eps_c^2).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import CONSTANTS, TrapConfig
from .crystal import ChainSolution, solve_chain
from .zeeman import QubitLevels, kappa_difference, transition_frequency

# Coefficients of the addressing-gradient bound
# b >= (hbar omega_z / (2 mu_B z0 |kappa_1 - kappa_0|)) (4.7 N^0.56 + 0.5 N^1.56).
_GRADIENT_COEFF_LOW = 4.7
_GRADIENT_EXP_LOW = 0.56
_GRADIENT_COEFF_HIGH = 0.5
_GRADIENT_EXP_HIGH = 1.56


@dataclass(frozen=True)
class DriveField:
    """Externally applied driving field: frequency, geometry, strength."""

    drive_frequency: float      # rad/s
    incidence_angle: float = 0.0   # rad, between beam and trap axis
    rabi_frequency: float = 0.0     # rad/s

    def __post_init__(self):
        if not self.drive_frequency > 0.0:
            raise ValueError("drive_frequency must be positive")
        if self.rabi_frequency < 0.0:
            raise ValueError("rabi_frequency must be >= 0")
        if not 0.0 <= self.incidence_angle <= math.pi / 2.0:
            raise ValueError("incidence_angle must lie in [0, pi/2]")

    @property
    def axial_wavenumber(self) -> float:
        """k_z = (omega_M / c) cos(theta) in rad/m."""
        return self.drive_frequency / CONSTANTS.speed_of_light * math.cos(self.incidence_angle)


def wavepacket_size(mass: float, omega_l: float) -> float:
    """Ground-state wave-packet width sqrt(hbar / (2 m omega_l)) in metres."""
    return math.sqrt(CONSTANTS.hbar / (2.0 * mass * omega_l))


def _mode_component(chain: ChainSolution, ion_index: int, mode_index: int) -> float:
    n = chain.n_ions
    if not 0 <= mode_index < n:
        raise IndexError(f"mode_index {mode_index} out of range for {n} ions")
    if not 0 <= ion_index < n:
        raise IndexError(f"ion_index {ion_index} out of range for {n} ions")
    return float(chain.mode_vectors[ion_index, mode_index])


def epsilon_c(config: TrapConfig, chain: ChainSolution, levels: QubitLevels,
              ion_index: int, mode_index: int) -> float:
    """Gradient-induced spin-phonon coupling of one ion to one axial mode.

    The level-derivative difference is evaluated at the ion's local field.
    Zero gradient gives exactly zero coupling.
    """
    zeta = _mode_component(chain, ion_index, mode_index)
    omega_l = float(chain.mode_frequencies[mode_index])
    dz = wavepacket_size(config.species.mass, omega_l)
    local_field = config.field_at(float(chain.positions[ion_index]))
    dkappa = kappa_difference(levels, local_field)
    return abs(zeta) * dz * dkappa * CONSTANTS.mu_B * config.gradient_b / (
        CONSTANTS.hbar * omega_l)


def lamb_dicke(config: TrapConfig, chain: ChainSolution, drive: DriveField,
               ion_index: int, mode_index: int) -> float:
    """Photon-recoil Lamb-Dicke parameter zeta sqrt(hbar k_z^2 / (2 m omega_l))."""
    zeta = _mode_component(chain, ion_index, mode_index)
    omega_l = float(chain.mode_frequencies[mode_index])
    return abs(zeta) * drive.axial_wavenumber * wavepacket_size(config.species.mass, omega_l)


def effective_lamb_dicke(eta: float, eps_c: float) -> float:
    """Effective sideband coupling sqrt(eta^2 + eps_c^2)."""
    if eta < 0.0 or eps_c < 0.0:
        raise ValueError("eta and eps_c must be >= 0")
    return math.hypot(eta, eps_c)


def required_gradient(config: TrapConfig, levels: QubitLevels) -> float:
    """Smallest field gradient (T/m) separating neighbouring qubit resonances.

    Closed-form design bound derived from the fitted minimum-spacing and
    highest-mode laws, requiring the nearest spectral neighbours (one ion's
    highest sideband vs. the next ion's bus sideband) to clear omega_z.
    The kappa difference is evaluated at the offset field b0.
    """
    n = config.n_ions
    if n < 2:
        raise ValueError("required_gradient needs at least two ions")
    dkappa = kappa_difference(levels, config.offset_b0)
    geometry = (4.0 * math.pi * CONSTANTS.epsilon_0 * config.species.mass
                / CONSTANTS.e_charge**2) ** (1.0 / 3.0)
    envelope = (_GRADIENT_COEFF_LOW * n**_GRADIENT_EXP_LOW
                + _GRADIENT_COEFF_HIGH * n**_GRADIENT_EXP_HIGH)
    return (CONSTANTS.hbar / (2.0 * CONSTANTS.mu_B) / dkappa
            * geometry * config.omega_z ** (5.0 / 3.0) * envelope)


@dataclass(frozen=True)
class ChainSpectrum:
    """Carrier and first-order sideband frequencies for every ion."""

    carriers: np.ndarray          # (N,) rad/s, ion order = position order
    mode_frequencies: np.ndarray  # (N,) rad/s, ascending

    @property
    def n_ions(self) -> int:
        return len(self.carriers)

    def upper_sidebands(self) -> np.ndarray:
        """(N_ions, N_modes) array of carrier + omega_l."""
        return self.carriers[:, None] + self.mode_frequencies[None, :]

    def lower_sidebands(self) -> np.ndarray:
        """(N_ions, N_modes) array of carrier - omega_l."""
        return self.carriers[:, None] - self.mode_frequencies[None, :]


def spectrum(config: TrapConfig, chain: ChainSolution, levels: QubitLevels) -> ChainSpectrum:
    """Per-ion carrier plus first-order sidebands at every mode frequency.

    Second-order sidebands are suppressed by the coupling squared and left out.
    """
    carriers = transition_frequency(levels, config.field_at(chain.positions))
    return ChainSpectrum(carriers=np.asarray(carriers, dtype=float),
                         mode_frequencies=np.asarray(chain.mode_frequencies, dtype=float))


def min_spectral_gap(spec: ChainSpectrum, bus_mode: int = 0) -> float:
    """Signed worst-case margin between neighbouring ions' working resonances.

    For each adjacent pair the bus sideband of one ion must clear the other
    ion's extreme sideband (highest mode); both adjacent-pair orderings
    reduce to the same margin carrier_splitting - omega_top - omega_bus, and
    the minimum over pairs is returned.  The addressing design requires the
    result to be at least the bus-mode frequency; negative values mean the
    resonances have collided (for example at zero gradient).
    """
    if spec.n_ions < 2:
        raise ValueError("min_spectral_gap needs at least two ions")
    omega_bus = float(spec.mode_frequencies[bus_mode])
    omega_top = float(spec.mode_frequencies[-1])
    dw = np.diff(np.sort(spec.carriers))
    return float(np.min(dw - omega_top - omega_bus))


@dataclass(frozen=True)
class CouplingReport:
    """Design summary: per-ion couplings plus chain-level addressing figures."""

    positions: np.ndarray        # m
    local_fields: np.ndarray     # T
    resonances: np.ndarray       # rad/s
    epsilon_c: np.ndarray        # dimensionless
    eta: np.ndarray              # dimensionless
    eta_eff: np.ndarray          # dimensionless
    required_gradient: float     # T/m
    min_gap: float               # rad/s (signed margin)
    bus_mode: int
    bus_frequency: float         # rad/s

    def __post_init__(self):
        if np.any(self.epsilon_c < 0.0) or np.any(self.eta < 0.0):
            raise ValueError("couplings must be non-negative")

    @property
    def n_ions(self) -> int:
        return len(self.positions)

    def to_dict(self) -> dict:
        return {
            "bus_mode_index": self.bus_mode,
            "bus_frequency_rad_per_s": self.bus_frequency,
            "bus_frequency_hz": self.bus_frequency / (2.0 * math.pi),
            "required_gradient_t_per_m": self.required_gradient,
            "min_spectral_gap_rad_per_s": self.min_gap,
            "min_spectral_gap_hz": self.min_gap / (2.0 * math.pi),
            "gap_requirement_met": bool(self.min_gap >= self.bus_frequency),
            "ions": [
                {
                    "index": i,
                    "position_m": float(self.positions[i]),
                    "local_field_t": float(self.local_fields[i]),
                    "resonance_rad_per_s": float(self.resonances[i]),
                    "resonance_hz": float(self.resonances[i]) / (2.0 * math.pi),
                    "epsilon_c": float(self.epsilon_c[i]),
                    "eta": float(self.eta[i]),
                    "eta_eff": float(self.eta_eff[i]),
                }
                for i in range(self.n_ions)
            ],
        }

    def to_csv_rows(self) -> list[dict]:
        """Flat rows, one per ion; chain-level figures repeated on each row."""
        rows = []
        for entry in self.to_dict()["ions"]:
            row = dict(entry)
            row.update(
                bus_mode_index=self.bus_mode,
                bus_frequency_rad_per_s=self.bus_frequency,
                required_gradient_t_per_m=self.required_gradient,
                min_spectral_gap_rad_per_s=self.min_gap,
            )
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        rows = self.to_csv_rows()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


def coupling_report(config: TrapConfig, chain: ChainSolution | None = None,
                    levels: QubitLevels | None = None,
                    drive: DriveField | None = None,
                    bus_mode: int = 0) -> CouplingReport:
    """Assemble the full addressing report for one configuration.

    Without an explicit drive, eta is computed for a field at the qubit
    frequency propagating along the trap axis (theta = 0), the worst case
    for residual photon recoil.
    """
    if chain is None:
        chain = solve_chain(config)
    if levels is None:
        levels = QubitLevels(config.species)
    if drive is None:
        drive = DriveField(drive_frequency=config.species.hyperfine_splitting,
                           incidence_angle=0.0,
                           rabi_frequency=config.omega_z / 10.0)
    n = config.n_ions
    eps = np.array([epsilon_c(config, chain, levels, i, bus_mode) for i in range(n)])
    eta = np.array([lamb_dicke(config, chain, drive, i, bus_mode) for i in range(n)])
    eta_eff = np.hypot(eta, eps)
    spec = spectrum(config, chain, levels)
    gap = min_spectral_gap(spec, bus_mode) if n >= 2 else float("nan")
    b_min = required_gradient(config, levels) if n >= 2 else float("nan")
    return CouplingReport(
        positions=chain.positions.copy(),
        local_fields=np.asarray(config.field_at(chain.positions), dtype=float),
        resonances=spec.carriers,
        epsilon_c=eps,
        eta=eta,
        eta_eff=eta_eff,
        required_gradient=b_min,
        min_gap=gap,
        bus_mode=bus_mode,
        bus_frequency=float(chain.mode_frequencies[bus_mode]),
    )
