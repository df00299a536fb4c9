"""Physical constants, ion species registry, and trap configuration.

All quantities are SI; every frequency stored on a config or species object
is an angular frequency in rad/s.  Config files may declare values in Hz,
in which case they are converted exactly once at load time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import yaml

CONFIG_SCHEMA_VERSION = 1

# Threshold for the linear-chain (zig-zag) criterion omega_r/omega_z >= C * N**p.
LINEARITY_COEFF = 0.73
LINEARITY_EXPONENT = 0.86
# Safety factor applied when choosing omega_r automatically.
_DEFAULT_RADIAL_MARGIN = 1.05


class ConfigError(ValueError):
    """Raised for missing, malformed, or physically invalid configuration input."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 constants used throughout; fixed at build time."""

    hbar: float = 1.054571817e-34          # J s
    mu_B: float = 9.2740100783e-24         # J/T
    e_charge: float = 1.602176634e-19      # C (exact)
    epsilon_0: float = 8.8541878128e-12    # F/m
    atomic_mass_unit: float = 1.66053906660e-27  # kg
    speed_of_light: float = 299792458.0    # m/s (exact)

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0.0:
                raise ValueError(f"constant {name} must be positive, got {value}")


CONSTANTS = PhysicalConstants()

# Coulomb coupling e^2 / (4 pi eps0), J m
COULOMB_COEFF = CONSTANTS.e_charge**2 / (4.0 * math.pi * CONSTANTS.epsilon_0)


@dataclass(frozen=True)
class IonSpecies:
    """One ion type: mass, qubit hyperfine splitting, and electronic g-factors.

    hyperfine_splitting is the zero-field qubit transition angular frequency.
    gI_over_gJ is the nuclear correction; the built-in 171Yb+ entry uses 0,
    which makes the upper-level field derivative exactly one Bohr magneton.
    """

    name: str
    mass: float                   # kg
    hyperfine_splitting: float    # rad/s
    gJ: float = 2.0
    gI_over_gJ: float = 0.0

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ConfigError(f"ion mass must be positive, got {self.mass}")
        if not self.hyperfine_splitting > 0.0:
            raise ConfigError(
                f"hyperfine splitting must be positive, got {self.hyperfine_splitting}"
            )

    @property
    def gI(self) -> float:
        return self.gJ * self.gI_over_gJ


YB171 = IonSpecies(
    name="171Yb+",
    mass=170.936330 * CONSTANTS.atomic_mass_unit,
    hyperfine_splitting=2.0 * math.pi * 12.6e9,
)

_SPECIES_REGISTRY: dict[str, IonSpecies] = {YB171.name: YB171}


def get_species(name: str) -> IonSpecies:
    """Look up a registered ion species by name."""
    try:
        return _SPECIES_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_SPECIES_REGISTRY))
        raise ConfigError(f"unknown species {name!r}; registered: {known}") from None


def register_species(species: IonSpecies) -> None:
    """Add (or replace) a species in the registry."""
    _SPECIES_REGISTRY[species.name] = species


@dataclass(frozen=True)
class TrapConfig:
    """Immutable description of one linear-trap configuration.

    The static field along the trap axis is B(z) = gradient_b * z + offset_b0.
    With offset_b0 = 0 the field changes sign at the chain center; Zeeman
    energies then follow the fixed-branch convention of :mod:`gradion.zeeman`.
    """

    species: IonSpecies
    n_ions: int
    omega_z: float       # rad/s, axial
    omega_r: float       # rad/s, radial
    gradient_b: float    # T/m
    offset_b0: float = 0.0  # T

    def __post_init__(self):
        if self.n_ions < 1:
            raise ConfigError(f"n_ions >= 1 violated, got {self.n_ions}")
        if not self.omega_z > 0.0:
            raise ConfigError(f"omega_z must be positive, got {self.omega_z}")
        if not self.omega_r > 0.0:
            raise ConfigError(f"omega_r must be positive, got {self.omega_r}")
        if self.gradient_b < 0.0:
            raise ConfigError(f"gradient_b must be >= 0, got {self.gradient_b}")
        if self.offset_b0 < 0.0:
            raise ConfigError(f"offset_b0 must be >= 0, got {self.offset_b0}")

    def field_at(self, z):
        """Signed axial field B(z) = b z + b0 in tesla; z in metres."""
        return self.gradient_b * z + self.offset_b0

    def to_dict(self) -> dict:
        """Serializable form; round-trips exactly through load_config."""
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "frequency_units": "rad/s",
            "species": {
                "name": self.species.name,
                "mass_kg": self.species.mass,
                "hyperfine_splitting": self.species.hyperfine_splitting,
                "gJ": self.species.gJ,
                "gI_over_gJ": self.species.gI_over_gJ,
            },
            "n_ions": self.n_ions,
            "omega_z": self.omega_z,
            "omega_r": self.omega_r,
            "gradient_b": self.gradient_b,
            "offset_b0": self.offset_b0,
        }


class LinearityCheck(NamedTuple):
    is_linear: bool
    margin: float


def check_linearity(config: TrapConfig) -> LinearityCheck:
    """Test the zig-zag threshold omega_r/omega_z >= 0.73 N^0.86.

    Returns the boolean verdict and the margin
    (omega_r/omega_z) / (0.73 N^0.86); margin >= 1 means linear.
    """
    threshold = LINEARITY_COEFF * config.n_ions**LINEARITY_EXPONENT
    margin = (config.omega_r / config.omega_z) / threshold
    return LinearityCheck(margin >= 1.0, margin)


def default_radial_frequency(n_ions: int, omega_z: float) -> float:
    """Smallest omega_r satisfying the linearity criterion, with a 5% margin."""
    return _DEFAULT_RADIAL_MARGIN * LINEARITY_COEFF * n_ions**LINEARITY_EXPONENT * omega_z


def _require(mapping: dict, key: str):
    if key not in mapping:
        raise ConfigError(f"missing required config field {key!r}")
    return mapping[key]


def _frequency_scale(mapping: dict) -> float:
    units = mapping.get("frequency_units", "rad/s")
    if units in ("rad/s", "rad_per_s"):
        return 1.0
    if units in ("Hz", "hz"):
        return 2.0 * math.pi
    raise ConfigError(f"frequency_units must be 'Hz' or 'rad/s', got {units!r}")


def _species_from_entry(entry, scale: float) -> IonSpecies:
    if isinstance(entry, str):
        return get_species(entry)
    if isinstance(entry, dict):
        if not ({"mass_amu", "mass_kg"} & entry.keys()):
            return get_species(_require(entry, "name"))
        if "mass_kg" in entry:
            mass = float(entry["mass_kg"])
        else:
            mass = float(entry["mass_amu"]) * CONSTANTS.atomic_mass_unit
        return IonSpecies(
            name=entry.get("name", "custom"),
            mass=mass,
            hyperfine_splitting=float(_require(entry, "hyperfine_splitting")) * scale,
            gJ=float(entry.get("gJ", 2.0)),
            gI_over_gJ=float(entry.get("gI_over_gJ", 0.0)),
        )
    raise ConfigError(f"species entry must be a name or a mapping, got {type(entry).__name__}")


def load_config(source) -> TrapConfig:
    """Build a validated TrapConfig from a YAML file, YAML text, or mapping.

    Required fields: species, n_ions, omega_z.  Optional: omega_r (default
    chosen to satisfy the linearity criterion), gradient_b (default 0),
    offset_b0 (default 0), frequency_units ('rad/s' default, or 'Hz').

    Raises ConfigError for missing fields, non-positive frequencies, or an
    unknown species name.
    """
    if isinstance(source, TrapConfig):
        return source
    if isinstance(source, dict):
        doc = dict(source)
    else:
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                        and Path(source).expanduser().is_file()):
            text = Path(source).expanduser().read_text()
        else:
            text = str(source)
        doc = yaml.safe_load(text)
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a mapping")

    version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version}; this build reads version {CONFIG_SCHEMA_VERSION}"
        )

    scale = _frequency_scale(doc)
    species = _species_from_entry(_require(doc, "species"), scale)

    n_ions = _require(doc, "n_ions")
    if not isinstance(n_ions, int) or isinstance(n_ions, bool):
        raise ConfigError(f"n_ions must be an integer, got {n_ions!r}")

    omega_z = float(_require(doc, "omega_z")) * scale
    if not omega_z > 0.0:
        raise ConfigError(f"omega_z must be positive, got {omega_z}")

    if "omega_r" in doc and doc["omega_r"] is not None:
        omega_r = float(doc["omega_r"]) * scale
    else:
        omega_r = default_radial_frequency(n_ions, omega_z)

    return TrapConfig(
        species=species,
        n_ions=n_ions,
        omega_z=omega_z,
        omega_r=omega_r,
        gradient_b=float(doc.get("gradient_b", 0.0)),
        offset_b0=float(doc.get("offset_b0", 0.0)),
    )


def with_gradient(config: TrapConfig, gradient_b: float) -> TrapConfig:
    """Copy of config with a different field gradient."""
    return replace(config, gradient_b=gradient_b)
