import math

import numpy as np
import pytest

from gradion.core import CONSTANTS, IonSpecies, YB171, load_config
from gradion.crystal import solve_equilibrium
from gradion.zeeman import (
    LOWER,
    UPPER,
    QubitLevels,
    breit_rabi_energy,
    kappa,
    kappa_difference,
    resonance_frequency,
    transition_frequency,
)

LEVELS = QubitLevels(YB171)
# Field at which the dimensionless parameter x = 2 mu_B B / E_HFS equals 2.
FIELD_X2 = LEVELS.e_hfs / CONSTANTS.mu_B


def table_config(gradient_b=9.89, offset_b0=0.0):
    return load_config({
        "species": "171Yb+",
        "n_ions": 10,
        "omega_z": 1e5,
        "frequency_units": "Hz",
        "gradient_b": gradient_b,
        "offset_b0": offset_b0,
    })


def test_zero_field_splitting():
    upper = breit_rabi_energy(LEVELS, 0.0, UPPER)
    lower = breit_rabi_energy(LEVELS, 0.0, LOWER)
    assert (upper - lower) == pytest.approx(LEVELS.e_hfs, rel=1e-15)
    assert transition_frequency(LEVELS, 0.0) == pytest.approx(
        YB171.hyperfine_splitting, rel=1e-15)


def test_kappa_anchors():
    assert kappa(LEVELS, 0.0, UPPER) == 1.0
    assert kappa(LEVELS, 123.0, UPPER) == 1.0
    assert kappa(LEVELS, 0.0, LOWER) == 0.0
    # Non-linear regime: x = 2 gives kappa_lower = -2/sqrt(5) = -0.894.
    assert kappa(LEVELS, FIELD_X2, LOWER) == pytest.approx(-2.0 / math.sqrt(5.0), rel=1e-12)
    assert kappa(LEVELS, FIELD_X2, LOWER) == pytest.approx(-0.894, abs=5e-4)


def _derivative_oracle(levels, field, which, step=3e-4):
    """Richardson-extrapolated centred difference of the level energy."""
    def centred(h):
        return (breit_rabi_energy(levels, field + h, which)
                - breit_rabi_energy(levels, field - h, which)) / (2.0 * h)
    return (4.0 * centred(step / 2.0) - centred(step)) / 3.0


def test_kappa_matches_finite_difference():
    for field in (0.01, 0.05, 0.3, FIELD_X2, 3.0):
        for which in (UPPER, LOWER):
            numeric = _derivative_oracle(LEVELS, field, which)
            assert kappa(LEVELS, field, which) == pytest.approx(
                numeric / CONSTANTS.mu_B, rel=1e-8)


def test_kappa_lower_range_and_asymptote():
    fields = np.linspace(0.0, 50.0, 200)
    values = kappa(LEVELS, fields, LOWER)
    assert np.all(values <= 0.0)
    assert np.all(values > -1.0)
    assert kappa(LEVELS, 1e4, LOWER) == pytest.approx(-1.0, abs=1e-6)


def test_kappa_lower_is_odd_in_field():
    for field in (0.01, 0.4, 2.0):
        assert kappa(LEVELS, -field, LOWER) == pytest.approx(
            -kappa(LEVELS, field, LOWER), rel=1e-14)


def test_lower_energy_small_field_expansion():
    x = 1e-3
    field = x * LEVELS.e_hfs / (2.0 * CONSTANTS.mu_B)
    exact = breit_rabi_energy(LEVELS, field, LOWER)
    series = -0.75 * LEVELS.e_hfs - 0.25 * x**2 * LEVELS.e_hfs
    assert abs(exact - series) < x**4 * LEVELS.e_hfs


def test_breit_rabi_rejects_negative_field():
    with pytest.raises(ValueError, match=">= 0"):
        breit_rabi_energy(LEVELS, -0.1, LOWER)
    with pytest.raises(ValueError, match="which"):
        breit_rabi_energy(LEVELS, 0.1, "middle")


def test_resonance_flat_without_field():
    config = table_config(gradient_b=0.0)
    for z in (-1e-4, 0.0, 5e-5):
        assert resonance_frequency(LEVELS, config, z) == pytest.approx(
            2.0 * math.pi * 12.6e9, rel=1e-15)


def test_resonance_weak_field_slope():
    config = table_config()
    z = 1e-6
    slope = (resonance_frequency(LEVELS, config, z)
             - resonance_frequency(LEVELS, config, -z)) / (2.0 * z)
    expected = CONSTANTS.mu_B * config.gradient_b / CONSTANTS.hbar
    assert slope == pytest.approx(expected, rel=1e-6)
    assert kappa_difference(LEVELS, 0.0) == 1.0


def test_resonance_monotone_through_field_zero():
    config = table_config()
    z = np.linspace(-6e-5, 6e-5, 301)
    omega = resonance_frequency(LEVELS, config, z)
    assert np.all(np.diff(omega) > 0.0)


def test_resonance_linearity_over_chain_extent():
    config = table_config()
    positions = solve_equilibrium(config)
    omega = resonance_frequency(LEVELS, config, positions)
    slope, intercept = np.polyfit(positions, omega, 1)
    residual = np.max(np.abs(omega - (slope * positions + intercept)))
    assert residual / omega.mean() < 1e-6


def test_transition_frequency_with_nuclear_correction():
    species = IonSpecies(name="toy", mass=YB171.mass,
                         hyperfine_splitting=YB171.hyperfine_splitting,
                         gJ=2.0, gI_over_gJ=5e-4)
    levels = QubitLevels(species)
    assert levels.gI == pytest.approx(1e-3)
    assert kappa(levels, 0.0, UPPER) == pytest.approx((2.0 + 1e-3) / 2.0, rel=1e-12)
    field = 0.2
    step = 1e-6
    numeric = (breit_rabi_energy(levels, field + step, LOWER)
               - breit_rabi_energy(levels, field - step, LOWER)) / (2.0 * step)
    assert kappa(levels, field, LOWER) == pytest.approx(numeric / CONSTANTS.mu_B, rel=1e-7)


def test_vectorised_evaluation():
    fields = np.array([0.0, 0.1, 1.0])
    energies = breit_rabi_energy(LEVELS, fields, LOWER)
    assert energies.shape == (3,)
    freqs = transition_frequency(LEVELS, fields)
    assert np.all(np.diff(freqs) > 0.0)
