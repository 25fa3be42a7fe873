"""Free w-field: explicit pair product, pair-rotation exponential, phase projection."""

from __future__ import annotations

import numpy as np

from .fock import OperatorTerms, StateVector, apply_terms, register_popcounts
from .weights import WeightVector


class AliasingError(ValueError):
    """Too few quadrature points to separate particle-number sectors."""


def pair_creator(m: int, L: int) -> OperatorTerms:
    """``c_m^dagger c~_m^dagger`` on the doubled space of ``L`` sites."""
    return OperatorTerms.from_list([(1.0, ((m, True), (L + m, True)))])


def pair_generator(m: int, L: int) -> OperatorTerms:
    """Anti-Hermitian ``K_m = c_m^dagger c~_m^dagger - c~_m c_m``."""
    return OperatorTerms.from_list([
        (1.0, ((m, True), (L + m, True))),
        (-1.0, ((L + m, False), (m, False))),
    ])


def build_free_wfield(w: WeightVector) -> StateVector:
    """Product over modes of ``sqrt(1-w_m) + sqrt(w_m) c_m^dagger c~_m^dagger`` on the vacuum."""
    L = w.L
    state = StateVector.vacuum(2 * L)
    for m, wm in enumerate(w.ws):
        paired = apply_terms(pair_creator(m, L), state)
        state = StateVector(
            np.sqrt(1.0 - wm) * state.amplitudes + np.sqrt(wm) * paired.amplitudes, 2 * L
        )
    return state


def g_angles(w: WeightVector) -> np.ndarray:
    """Rotation angles with ``cos(theta_m) = sqrt(1 - w_m)``."""
    return np.arccos(np.sqrt(1.0 - w.as_array()))


def apply_pair_rotations(angles, state: StateVector) -> StateVector:
    """Apply ``prod_m exp(theta_m K_m)`` using ``1 + sin(t) K + (1 - cos(t)) K^2``.

    ``K_m^3 = -K_m`` on the doubled Fock space, so the three-term form is exact.
    """
    L = state.n_modes // 2
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (L,):
        raise ValueError(f"expected {L} angles, got shape {angles.shape}")
    for m, theta in enumerate(angles):
        if theta == 0.0:
            continue
        K = pair_generator(m, L)
        k1 = apply_terms(K, state)
        k2 = apply_terms(K, k1)
        state = StateVector(
            state.amplitudes + np.sin(theta) * k1.amplitudes + (1.0 - np.cos(theta)) * k2.amplitudes,
            state.n_modes,
        )
    return state


def apply_G(w: WeightVector, state: StateVector, inverse: bool = False) -> StateVector:
    """``exp(G) state`` (or ``exp(-G) state``) for the weight-dependent pair generator."""
    if state.n_modes != 2 * w.L:
        raise ValueError(f"state has {state.n_modes} modes, expected {2 * w.L}")
    angles = g_angles(w)
    return apply_pair_rotations(-angles if inverse else angles, state)


def phase_rotated(state: StateVector, phi: float, n_physical: int) -> StateVector:
    """Multiply each component by ``exp(i phi N_phys)``."""
    counts = register_popcounts(state.n_modes, 0, n_physical)
    return StateVector(state.amplitudes * np.exp(1j * phi * counts), state.n_modes)


def sector_projection_fourier(
    state: StateVector, n_particles: int, n_physical: int | None = None, quadrature: int | None = None
) -> StateVector:
    """Project onto ``n_particles`` physical fermions by uniform phase quadrature.

    Discretizes ``(1/2pi) int dphi exp(-i N phi) |0_phi>``; exact whenever the
    number of points exceeds the largest possible particle-number difference.
    """
    if n_physical is None:
        n_physical = state.n_modes // 2
    if quadrature is None:
        quadrature = 2 * n_physical + 1
    if quadrature < n_physical + 1:
        raise AliasingError(
            f"{quadrature} quadrature points alias sectors of a {n_physical}-mode register "
            f"(need at least {n_physical + 1})"
        )
    acc = np.zeros(state.dim, dtype=np.complex128)
    for q in range(quadrature):
        phi = 2.0 * np.pi * q / quadrature
        acc += np.exp(-1j * n_particles * phi) * phase_rotated(state, phi, n_physical).amplitudes
    return StateVector(acc / quadrature, state.n_modes)
