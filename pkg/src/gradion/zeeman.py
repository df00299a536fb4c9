"""Hyperfine Zeeman energies of the qubit pair and their field derivatives.

The qubit is the (F=0, mF=0) -> (F=1, mF=+1) pair of a J=1/2, I=1/2 ion.
Both energies are exact eigenvalues of the hyperfine + Zeeman Hamiltonian
for an axial field of either sign when the states are labelled by their
zero-field character (fixed-branch convention):

    E_upper(B) = +E_HFS/4 + mu_B B (gJ + gI)/2          (stretched state)
    E_lower(B) = -E_HFS/4 - (E_HFS/2) sqrt(1 + x^2)     (singlet-like state)

with x(B) = (gJ - gI) mu_B B / E_HFS.  A chain centred on a field zero
(offset_b0 = 0) therefore poses no difficulty: the branches continue
smoothly through B = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CONSTANTS, IonSpecies, TrapConfig

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class QubitLevels:
    """Qubit level pair of one species, with its field-coupling parameters."""

    species: IonSpecies

    @property
    def e_hfs(self) -> float:
        """Zero-field hyperfine splitting in joules."""
        return CONSTANTS.hbar * self.species.hyperfine_splitting

    @property
    def gJ(self) -> float:
        return self.species.gJ

    @property
    def gI(self) -> float:
        return self.species.gI

    def x(self, field):
        """Dimensionless field parameter x = (gJ - gI) mu_B B / E_HFS."""
        return (self.gJ - self.gI) * CONSTANTS.mu_B * np.asarray(field, dtype=float) / self.e_hfs


def _check_which(which: str) -> None:
    if which not in (UPPER, LOWER):
        raise ValueError(f"which must be '{UPPER}' or '{LOWER}', got {which!r}")


def _energy(levels: QubitLevels, field, which: str):
    field = np.asarray(field, dtype=float)
    if which == UPPER:
        return levels.e_hfs / 4.0 + CONSTANTS.mu_B * field * (levels.gJ + levels.gI) / 2.0
    x = levels.x(field)
    return -levels.e_hfs / 4.0 - levels.e_hfs / 2.0 * np.sqrt(1.0 + x * x)


def breit_rabi_energy(levels: QubitLevels, field, which: str):
    """Hyperfine Zeeman energy (J) of the upper or lower qubit level at B >= 0.

    Negative fields are rejected here; use transition_frequency / kappa for
    positions past a field zero, where the fixed-branch convention applies.
    """
    _check_which(which)
    field = np.asarray(field, dtype=float)
    if np.any(field < 0.0):
        raise ValueError("breit_rabi_energy requires B >= 0")
    return _energy(levels, field, which)


def kappa(levels: QubitLevels, field, which: str):
    """Dimensionless field derivative (dE/dB) / mu_B of one qubit level.

    With the default g-factors kappa_upper = 1 for all fields and
    kappa_lower = -x / sqrt(1 + x^2), which is 0 at zero field and tends to
    -1 in the strong-field limit.  Accepts signed fields (odd lower branch).
    """
    _check_which(which)
    if which == UPPER:
        value = (levels.gJ + levels.gI) / 2.0 * np.ones_like(np.asarray(field, dtype=float))
        return value if value.ndim else float(value)
    x = levels.x(field)
    value = -(levels.gJ - levels.gI) / 2.0 * x / np.sqrt(1.0 + x * x)
    return value if value.ndim else float(value)


def kappa_difference(levels: QubitLevels, field):
    """|kappa_upper - kappa_lower| at the given (signed) field."""
    return np.abs(kappa(levels, field, UPPER) - kappa(levels, field, LOWER))


def transition_frequency(levels: QubitLevels, field):
    """Qubit angular frequency (E_upper - E_lower) / hbar at a signed field."""
    field = np.asarray(field, dtype=float)
    value = (_energy(levels, field, UPPER) - _energy(levels, field, LOWER)) / CONSTANTS.hbar
    return value if value.ndim else float(value)


def resonance_frequency(levels: QubitLevels, config: TrapConfig, z):
    """Position-dependent qubit resonance omega(z) along the trap axis (rad/s).

    Evaluates the fixed-branch transition frequency at B(z) = b z + b0; with
    b > 0 this is monotonically increasing in z, and it passes smoothly
    through a field zero inside the chain (offset_b0 = 0 configurations).
    """
    return transition_frequency(levels, config.field_at(np.asarray(z, dtype=float)))
