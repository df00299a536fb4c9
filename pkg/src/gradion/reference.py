"""Reference design points the tool is validated against.

Six (ion count, axial frequency) cells with the field gradient required for
frequency-space addressing, the gradient-induced coupling at that gradient,
and the average single-qubit gate error at Omega_R = omega_z / 10.  The
`table1` command recomputes every cell and reports relative deviations.
"""

REFERENCE_OMEGA_Z_HZ = (1e5, 1e6)
REFERENCE_ION_COUNTS = (10, 20, 40)

# (n_ions, omega_z / 2 pi in Hz) -> reference values
REFERENCE_TABLE = {
    (10, 1e5): {"gradient_t_per_m": 9.89, "epsilon_c": 0.0075, "gate_error": 3.4e-6},
    (20, 1e5): {"gradient_t_per_m": 22.1, "epsilon_c": 0.012, "gate_error": 5.2e-5},
    (40, 1e5): {"gradient_t_per_m": 54.7, "epsilon_c": 0.021, "gate_error": 1.1e-3},
    (10, 1e6): {"gradient_t_per_m": 459.0, "epsilon_c": 0.011, "gate_error": 1.6e-5},
    (20, 1e6): {"gradient_t_per_m": 1030.0, "epsilon_c": 0.018, "gate_error": 2.4e-4},
    (40, 1e6): {"gradient_t_per_m": 2540.0, "epsilon_c": 0.031, "gate_error": 4.9e-3},
}
