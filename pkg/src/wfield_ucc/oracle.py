"""Exact-diagonalization ground truth for particle-number sectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import OperatorTerms, dense_matrix, popcounts
from .weights import WeightVector, index_to_pattern, ordering

MAX_SECTOR_DIM = 1000


class SectorTooLargeError(ValueError):
    pass


def sector_indices(L: int, N: int) -> np.ndarray:
    """Physical basis indices with ``N`` particles, ascending."""
    if not 0 <= N <= L:
        raise ValueError(f"particle number {N} outside 0..{L}")
    return np.flatnonzero(popcounts(L) == N)


def sector_matrix(H: OperatorTerms, L: int, N: int) -> np.ndarray:
    idx = sector_indices(L, N)
    if idx.size > MAX_SECTOR_DIM:
        raise SectorTooLargeError(f"sector L={L}, N={N} has dimension {idx.size} > {MAX_SECTOR_DIM}")
    full = dense_matrix(H, L)
    return full[np.ix_(idx, idx)]


@dataclass(frozen=True)
class SectorSpectrum:
    L: int
    N: int
    energies: np.ndarray
    vectors: np.ndarray  # columns over the full 2**L physical register
    indices: np.ndarray


def exact_sector_spectrum(H: OperatorTerms, L: int, N: int) -> SectorSpectrum:
    """Full spectrum of ``H`` restricted to ``N`` physical particles, ascending."""
    if math.comb(L, N) > MAX_SECTOR_DIM:
        raise SectorTooLargeError(f"C({L},{N}) exceeds {MAX_SECTOR_DIM}")
    block = sector_matrix(H, L, N)
    herm_err = np.abs(block - block.conj().T).max() if block.size else 0.0
    if herm_err > 1e-10:
        raise ValueError(f"sector block is not Hermitian (deviation {herm_err:.2e})")
    evals, evecs = np.linalg.eigh(block)
    idx = sector_indices(L, N)
    full = np.zeros((1 << L, idx.size), dtype=np.complex128)
    full[idx] = evecs
    return SectorSpectrum(L, N, evals, full, idx)


def exact_sector_ensemble_energy(w: WeightVector, H: OperatorTerms, N: int,
                                 reference: WeightVector | None = None,
                                 spectrum: SectorSpectrum | None = None) -> float:
    """``sum_n mu^n E_{j(n)}`` over the ``N``-particle patterns (``D(w)``-normalized).

    The pattern-to-eigenvalue assignment pairs the heaviest pattern of the
    ``reference`` weights (default ``w``) with the lowest eigenvalue; holding
    the reference fixed keeps the result multilinear in ``mu``.
    """
    spec = spectrum if spectrum is not None else exact_sector_spectrum(H, w.L, N)
    ref = ordering(reference if reference is not None else w, sector=N)
    mu = w.mu
    total = 0.0
    for pattern, rank in ref.ranks.items():
        prod = float(np.prod([mu[m] for m, x in enumerate(pattern) if x]))
        total += prod * float(spec.energies[rank - 1])
    return total


def exact_ensemble_energy(w: WeightVector, H: OperatorTerms) -> float:
    """Minimal ensemble energy ``sum_n w_n E_{j(n)}`` over all sectors."""
    D = w.dfactor
    return sum(D * exact_sector_ensemble_energy(w, H, N) for N in range(w.L + 1))


def brute_force_ensemble_energy(w: WeightVector, energies_by_sector: dict) -> float:
    """Same quantity by enumerating all basis patterns with explicit product weights."""
    total = 0.0
    for N, energies in energies_by_sector.items():
        pats = [index_to_pattern(i, w.L) for i in range(1 << w.L)]
        pats = [p for p in pats if sum(p) == N]
        weights = [float(np.prod([w.ws[m] if x else 1.0 - w.ws[m] for m, x in enumerate(p)])) for p in pats]
        total += float(np.dot(sorted(weights, reverse=True), np.sort(energies)))
    return total


class OracleEvaluator:
    """Exact ``E_N(w')`` with the eigenvalue assignment frozen at reference weights."""

    def __init__(self, H: OperatorTerms, L: int, N: int, reference: WeightVector):
        self.N = N
        self.reference = reference
        self.spectrum = exact_sector_spectrum(H, L, N)
        self.H = H

    def __call__(self, w: WeightVector):
        from .spectroscopy import SectorEnergy
        value = exact_sector_ensemble_energy(w, self.H, self.N, self.reference, self.spectrum)
        return SectorEnergy(self.N, value, w)


def free_ensemble_energy(omegas, w: WeightVector) -> float:
    """``sum_n w_n E_n`` for ``h = sum Omega_m n_m`` by enumeration of all patterns."""
    return _free_energy_raw(omegas, w.as_array())


def derivative_extraction_noninteracting(omegas, w: WeightVector, pattern, step: float = 1e-5) -> float:
    """Energy of ``pattern`` as the sum of first derivatives of ``E(w)`` along its occupied modes.

    Derivatives are central differences of the enumerated ensemble energy.
    """
    if len(pattern) != w.L:
        raise ValueError("pattern length does not match the number of modes")
    ws = w.as_array()
    total = 0.0
    for m, occ in enumerate(pattern):
        if not occ:
            continue
        up, down = ws.copy(), ws.copy()
        up[m] += step
        down[m] -= step
        total += (_free_energy_raw(omegas, up) - _free_energy_raw(omegas, down)) / (2 * step)
    return total


def _free_energy_raw(omegas, ws: np.ndarray) -> float:
    # bypasses WeightVector validation so the stencil can straddle 1/2
    L = ws.size
    total = 0.0
    for i in range(1 << L):
        n = index_to_pattern(i, L)
        weight = np.prod([ws[m] if x else 1.0 - ws[m] for m, x in enumerate(n)])
        total += weight * float(np.dot(omegas, n))
    return total
