import itertools
import math

import numpy as np
import pytest

from gradion.core import load_config, with_gradient
from gradion.fidelity import (
    ERROR_COEFF,
    GateErrorEstimate,
    configuration_frequency,
    estimate_spread,
    gate_error_closed_form,
    gate_error_estimate,
    gate_error_numeric_oracle,
    state_dependent_forces,
    _resolve_budget,
    _truncated_detunings,
)
from gradion.zeeman import QubitLevels


def table_config(n_ions=10, omega_z_hz=1e5, gradient_b=9.89):
    return load_config({
        "species": "171Yb+",
        "n_ions": n_ions,
        "omega_z": omega_z_hz,
        "frequency_units": "Hz",
        "gradient_b": gradient_b,
    })


LEVELS = QubitLevels(table_config().species)


def test_forces_zero_without_gradient():
    config = table_config(n_ions=4, gradient_b=0.0)
    forces = state_dependent_forces(config, LEVELS, [0, 1, 1, 0])
    assert forces == pytest.approx(np.zeros(4), abs=1e-30)


def test_forces_follow_levels():
    config = table_config(n_ions=3, gradient_b=5.0)
    forces = state_dependent_forces(config, LEVELS, [1, 0, 1])
    # upper level feels -mu_B b; lower level force is O(x) small
    from gradion.core import CONSTANTS
    assert forces[0] == pytest.approx(-CONSTANTS.mu_B * 5.0, rel=1e-6)
    assert abs(forces[1]) < 1e-3 * abs(forces[0])
    # tie-break replaces the addressed ion's own force
    pinned = state_dependent_forces(config, LEVELS, [1, 0, 1], ion_index=0,
                                    convention="pinned")
    assert pinned[0] == pytest.approx(forces[1], rel=1e-9)
    mean = state_dependent_forces(config, LEVELS, [1, 0, 1], ion_index=0,
                                  convention="mean")
    assert mean[0] == pytest.approx(0.5 * (forces[0] + pinned[0]), rel=1e-9)


def test_forces_validation():
    config = table_config(n_ions=3)
    with pytest.raises(ValueError):
        state_dependent_forces(config, LEVELS, [0, 2, 0])
    with pytest.raises(ValueError):
        state_dependent_forces(config, LEVELS, [0, 1])
    with pytest.raises(ValueError):
        state_dependent_forces(config, LEVELS, [0, 1, 0], ion_index=1,
                               convention="other")


def test_configuration_frequency_gradient_free():
    config = table_config(n_ions=3, gradient_b=0.0)
    values = {configuration_frequency(config, LEVELS, states, 1)
              for states in itertools.product((0, 1), repeat=3)}
    assert len(values) == 1


def test_configuration_frequency_distinguishes_extremes():
    config = table_config(n_ions=4)
    all_zero = configuration_frequency(config, LEVELS, [0, 0, 0, 0], 1)
    all_one = configuration_frequency(config, LEVELS, [1, 1, 1, 1], 1)
    assert all_zero != all_one


def test_neighbor_flip_shift_quadratic_in_gradient():
    gradients = [2.0, 4.0, 8.0, 16.0, 20.0]
    shifts = []
    for b in gradients:
        config = table_config(n_ions=2, gradient_b=b)
        base = configuration_frequency(config, LEVELS, [0, 0], 0)
        flipped = configuration_frequency(config, LEVELS, [0, 1], 0)
        shifts.append(abs(flipped - base))
    slope = np.polyfit(np.log(gradients), np.log(shifts), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_estimate_spread_zero_gradient():
    spread = estimate_spread(table_config(n_ions=5, gradient_b=0.0), LEVELS)
    assert spread.sigma == 0.0
    assert np.all(spread.sigma_k == 0.0)


def test_estimate_spread_frozen_reference_cell():
    spread = estimate_spread(table_config(), LEVELS, seed=0)
    assert spread.exhaustive
    assert spread.sample_count == 2**9
    assert spread.sigma == pytest.approx(100.3857, rel=1e-4)
    assert spread.sigma == pytest.approx(np.mean(spread.sigma_k), rel=1e-12)
    # spread extremes stay within the distribution's cut-off scale
    assert spread.max_deviation < 4.0 * np.max(spread.sigma_k)


def test_estimate_spread_deterministic():
    config = table_config(n_ions=14)  # sampled branch
    one = estimate_spread(config, LEVELS, seed=42)
    two = estimate_spread(config, LEVELS, seed=42)
    assert not one.exhaustive
    assert np.array_equal(one.sigma_k, two.sigma_k)
    assert one.sigma == two.sigma


def test_estimate_spread_matches_configuration_frequency():
    config = table_config(n_ions=4)
    spread = estimate_spread(config, LEVELS)
    k = 2
    freqs = [configuration_frequency(config, LEVELS, list(states[:k]) + [0] + list(states[k:]), k)
             for states in itertools.product((0, 1), repeat=3)]
    assert spread.mean_frequencies[k] == pytest.approx(np.mean(freqs), rel=1e-12)
    assert spread.sigma_k[k] == pytest.approx(np.std(freqs), rel=1e-9)


def test_estimate_spread_sampling_consistent_with_exhaustive():
    config = table_config(n_ions=5)
    exact = estimate_spread(config, LEVELS)
    assert exact.exhaustive
    sampled = estimate_spread(config, LEVELS, sample_budget=10, seed=5)
    assert not sampled.exhaustive
    # 3 standard errors of a std estimate from n samples
    n = sampled.sample_count
    assert sampled.sigma == pytest.approx(exact.sigma, rel=3.0 / math.sqrt(2 * (n - 1)))


def test_spread_invariant_under_global_relabeling():
    config = table_config(n_ions=4)
    k = 1
    freqs, mirrored = [], []
    for states in itertools.product((0, 1), repeat=4):
        freqs.append(configuration_frequency(config, LEVELS, states, k))
        flipped = tuple(1 - s for s in states)
        mirrored.append(configuration_frequency(config, LEVELS, flipped, k))
    assert np.std(sorted(freqs)) == pytest.approx(np.std(sorted(mirrored)), rel=1e-12)


def test_conventions_agree_on_sigma():
    # The addressed ion's own force is shared by every sampled configuration,
    # so it shifts the mean but not the spread.
    config = table_config(n_ions=5)
    mean = estimate_spread(config, LEVELS, convention="mean")
    pinned = estimate_spread(config, LEVELS, convention="pinned")
    assert pinned.sigma == pytest.approx(mean.sigma, rel=1e-6)
    assert pinned.mean_frequencies != pytest.approx(mean.mean_frequencies, abs=1.0)


def test_resolve_budget_semantics():
    assert _resolve_budget(10, None) == (512, True)
    assert _resolve_budget(20, None) == (1600, False)
    assert _resolve_budget(20, 2**19) == (2**19, True)
    assert _resolve_budget(20, 100) == (1600, False)
    assert _resolve_budget(40, 20000) == (20000, False)
    with pytest.raises(ValueError):
        _resolve_budget(10, 0)


def test_estimate_spread_needs_two_ions():
    with pytest.raises(ValueError):
        estimate_spread(table_config(n_ions=1), LEVELS)


def test_gate_error_closed_form():
    assert gate_error_closed_form(0.0, 1.0) == 0.0
    assert gate_error_closed_form(0.01, 1.0) == pytest.approx(3.4166667e-5, rel=1e-6)
    assert gate_error_closed_form(2.0, 100.0) == pytest.approx(
        4.0 * gate_error_closed_form(1.0, 100.0), rel=1e-15)
    with pytest.raises(ValueError):
        gate_error_closed_form(1.0, 0.0)


def test_truncated_detunings_moments():
    rng = np.random.default_rng(0)
    sigma = 2.5
    draws = _truncated_detunings(sigma, 400_000, rng)
    assert np.max(np.abs(draws)) <= 2.0 * sigma * (1.0 + 1e-12)
    assert np.std(draws) == pytest.approx(sigma, rel=5e-3)
    assert np.mean(draws) == pytest.approx(0.0, abs=3 * sigma / math.sqrt(400_000))


def test_numeric_oracle_zero_spread():
    assert gate_error_numeric_oracle(0.0, 1.0, samples=20_000) == pytest.approx(0.0, abs=1e-12)


def test_numeric_oracle_matches_closed_form():
    error = gate_error_numeric_oracle(0.01, 1.0, samples=200_000, seed=2)
    assert error == pytest.approx(gate_error_closed_form(0.01, 1.0), rel=0.05)


def test_numeric_oracle_quadratic_scaling():
    ratios = (0.005, 0.01, 0.02)
    errors = [gate_error_numeric_oracle(r, 1.0, samples=200_000, seed=2) for r in ratios]
    slope = np.polyfit(np.log(ratios), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_numeric_oracle_sample_floor():
    with pytest.raises(ValueError):
        gate_error_numeric_oracle(0.01, 1.0, samples=5000)


def test_gate_error_estimate_bundle():
    spread = estimate_spread(table_config(n_ions=4), LEVELS)
    bundle = gate_error_estimate(spread, 1000.0, numeric_samples=20_000, seed=1)
    assert bundle.error_closed_form == pytest.approx(
        ERROR_COEFF * (spread.sigma / 1000.0) ** 2, rel=1e-12)
    assert bundle.error_numeric is not None
    payload = bundle.to_dict()
    assert set(payload) == {"rabi_frequency_rad_per_s", "rabi_frequency_hz",
                            "error_closed_form", "error_numeric"}


def test_gate_error_estimate_validation():
    with pytest.raises(ValueError):
        GateErrorEstimate(rabi_frequency=1.0, error_closed_form=1.5)
