"""Equilibrium structure and axial normal modes of the linear Coulomb crystal.

Internally everything is solved in dimensionless coordinates u = z / z0 with
z0 = (e^2 / (4 pi eps0 m omega_z^2))^(1/3); in these units the potential is

    V = sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j| - sum_i f_i u_i

and a constant per-ion force F (newtons) enters as f = F / (m omega_z^2 z0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import COULOMB_COEFF, TrapConfig

GRADIENT_TOL = 1e-12
MAX_NEWTON_ITER = 200
# Fitted exponent of the minimum-spacing law delta_z = z0 * 2 / N^0.559.
SPACING_EXPONENT = 0.559


class ConvergenceError(RuntimeError):
    """Equilibrium iteration failed to reach the gradient tolerance."""


@dataclass(frozen=True)
class ChainSolution:
    """Converged chain equilibrium with its axial mode decomposition.

    positions are sorted ascending (metres); mode_frequencies ascending
    (rad/s); mode_vectors[:, l] is the orthonormal eigenvector of mode l,
    sign-fixed so the largest-magnitude component is positive.
    """

    positions: np.ndarray
    length_scale_z0: float
    mode_frequencies: np.ndarray
    mode_vectors: np.ndarray

    @property
    def n_ions(self) -> int:
        return len(self.positions)


def length_scale(config: TrapConfig) -> float:
    """Characteristic length z0 = (e^2/(4 pi eps0 m omega_z^2))^(1/3) in metres."""
    return (COULOMB_COEFF / (config.species.mass * config.omega_z**2)) ** (1.0 / 3.0)


def spacing_law(n_ions: int, z0: float) -> float:
    """Fitted minimum ion spacing z0 * 2 / N^0.559 for a chain of N ions."""
    if n_ions < 2:
        raise ValueError("spacing law needs at least two ions")
    return z0 * 2.0 / n_ions**SPACING_EXPONENT


def min_spacing(positions) -> float:
    """Smallest adjacent gap of a sorted position array."""
    positions = np.asarray(positions, dtype=float)
    if positions.size < 2:
        raise ValueError("min_spacing needs at least two ions")
    return float(np.min(np.diff(positions)))


def highest_mode_empirical(n_ions: int) -> float:
    """Empirical highest axial mode frequency in units of omega_z: 2.7 + 0.5 N.

    The fit was established for 5 <= N <= 100; callers outside that range
    get the extrapolated value.
    """
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    return 2.7 + 0.5 * n_ions


def _pair_geometry(u):
    """Pairwise differences, inverse cubes, and safe self-terms for u (..., N)."""
    diff = u[..., :, None] - u[..., None, :]
    n = u.shape[-1]
    eye = np.eye(n, dtype=bool)
    inv3 = np.zeros_like(diff)
    np.divide(1.0, np.abs(diff) ** 3, out=inv3, where=~eye)
    return diff, inv3


def _grad(u, f):
    """Dimensionless potential gradient; u, f broadcast over leading axes."""
    diff, inv3 = _pair_geometry(u)
    coulomb = np.sum(diff * inv3, axis=-1)   # sign(d)/d^2 summed over partners
    return u - f - coulomb


def _hessian(u):
    """Dimensionless Hessian of the potential at u (..., N) -> (..., N, N)."""
    _, inv3 = _pair_geometry(u)
    h = -2.0 * inv3
    idx = np.arange(u.shape[-1])
    h[..., idx, idx] = 1.0 + 2.0 * np.sum(inv3, axis=-1)
    return h


def _initial_guess(n_ions: int) -> np.ndarray:
    """Uniform chain at the fitted minimum spacing, centred on the trap."""
    if n_ions == 1:
        return np.zeros(1)
    d = 2.0 / n_ions**SPACING_EXPONENT
    return (np.arange(n_ions) - 0.5 * (n_ions - 1)) * d


def _newton(u0, f, tol=GRADIENT_TOL, max_iter=MAX_NEWTON_ITER):
    """Damped Newton iteration on the dimensionless gradient (single chain)."""
    u = np.array(u0, dtype=float)
    g = _grad(u, f)
    gnorm = np.max(np.abs(g))
    for _ in range(max_iter):
        if gnorm < tol:
            return u
        step = np.linalg.solve(_hessian(u), -g)
        scale = 1.0
        for _ in range(60):
            trial = u + scale * step
            if np.all(np.diff(trial) > 0.0):
                trial_g = _grad(trial, f)
                trial_norm = np.max(np.abs(trial_g))
                if trial_norm < gnorm:
                    u, g, gnorm = trial, trial_g, trial_norm
                    break
            scale *= 0.5
        else:
            raise ConvergenceError("step damping exhausted without progress")
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (|grad| = {gnorm:.3e})"
    )


def _newton_batch(u0, f_batch, tol=GRADIENT_TOL, max_iter=MAX_NEWTON_ITER):
    """Vectorised Newton for a batch of force vectors sharing one starting chain.

    u0: (N,) warm start; f_batch: (B, N) dimensionless forces.  Intended for
    the tiny state-dependent forces of the fidelity sampler, where plain
    undamped steps converge quadratically; rows that fail fall back to the
    damped scalar path.
    """
    f_batch = np.atleast_2d(np.asarray(f_batch, dtype=float))
    u = np.broadcast_to(np.asarray(u0, dtype=float), f_batch.shape).copy()
    # A uniform force component only translates the chain; apply it up front.
    u += np.mean(f_batch, axis=-1, keepdims=True)
    for _ in range(max_iter):
        g = _grad(u, f_batch)
        active = np.flatnonzero(np.max(np.abs(g), axis=-1) >= tol)
        if active.size == 0:
            return u
        step = np.linalg.solve(_hessian(u[active]), -g[active][..., None])[..., 0]
        trial = u[active] + step
        ordered = np.all(np.diff(trial, axis=-1) > 0.0, axis=-1)
        u[active[ordered]] = trial[ordered]
        for row in active[~ordered]:
            u[row] = _newton(u[row], f_batch[row], tol, max_iter)
    raise ConvergenceError("batched equilibrium iteration did not converge")


def solve_equilibrium(config: TrapConfig, forces=None, initial_guess=None) -> np.ndarray:
    """Equilibrium positions (metres, ascending) for N ions with optional forces.

    forces: per-ion constant axial force in newtons (default all zero).
    initial_guess: positions in metres to warm-start the iteration.
    Raises ConvergenceError if the damped Newton iteration stalls.
    """
    n = config.n_ions
    z0 = length_scale(config)
    if forces is None:
        f = np.zeros(n)
    else:
        f = np.asarray(forces, dtype=float)
        if f.shape != (n,):
            raise ValueError(f"forces must have shape ({n},), got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("forces must be finite")
        f = f / (config.species.mass * config.omega_z**2 * z0)

    if initial_guess is not None:
        u0 = np.asarray(initial_guess, dtype=float) / z0
    else:
        u0 = _initial_guess(n) + np.mean(f)
    return _newton(u0, f) * z0


def normal_modes(config: TrapConfig, positions) -> tuple[np.ndarray, np.ndarray]:
    """Axial mode frequencies (rad/s, ascending) and orthonormal eigenvectors.

    positions must be a converged equilibrium (metres).  Column l of the
    returned matrix is the eigenvector of mode l, sign-fixed so its
    largest-magnitude component is positive.  Raises ValueError on a
    non-positive eigenvalue (stationary point that is not a minimum).
    """
    u = np.asarray(positions, dtype=float) / length_scale(config)
    eigvals, vecs = np.linalg.eigh(_hessian(u))
    if np.any(eigvals <= 0.0):
        raise ValueError("non-positive mode eigenvalue: not a potential minimum")
    if len(eigvals) > 1:
        rel_gaps = np.diff(eigvals) / eigvals[-1]
        if np.any(rel_gaps < 1e-9):
            warnings.warn("nearly degenerate axial modes; eigenvectors orthonormalized",
                          RuntimeWarning, stacklevel=2)
    flip = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])] < 0.0
    vecs = np.where(flip[None, :], -vecs, vecs)
    return config.omega_z * np.sqrt(eigvals), vecs


def solve_chain(config: TrapConfig, forces=None) -> ChainSolution:
    """Convenience wrapper: equilibrium positions plus mode decomposition."""
    positions = solve_equilibrium(config, forces)
    freqs, vecs = normal_modes(config, positions)
    return ChainSolution(
        positions=positions,
        length_scale_z0=length_scale(config),
        mode_frequencies=freqs,
        mode_vectors=vecs,
    )
