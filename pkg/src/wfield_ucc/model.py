"""Lattice Hamiltonians: free modes, the periodic spinless Hubbard chain, and its
closed-form two-particle solution on five sites."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import OperatorTerms, Term


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class HubbardSpec:
    L: int
    U: float
    boundary: str = "periodic"

    def __post_init__(self):
        if self.L < 2:
            raise ModelError(f"the chain needs at least 2 sites, got L={self.L}")
        if self.boundary != "periodic":
            raise ModelError(f"unsupported boundary {self.boundary!r}")


def build_hubbard(spec: HubbardSpec) -> OperatorTerms:
    """``-sum_m (c_m^+ c_{m+1} + c_{m+1}^+ c_m - U n_m n_{m+1})`` on sites 0..L-1, periodic."""
    L, U = spec.L, float(spec.U)
    terms = []
    for m in range(L):
        n = (m + 1) % L
        terms.append(Term(-1.0, ((m, True), (n, False))))
        terms.append(Term(-1.0, ((n, True), (m, False))))
        if U != 0.0:
            terms.append(Term(U, ((m, True), (m, False), (n, True), (n, False))))
    return OperatorTerms(tuple(terms))


def build_noninteracting(omegas) -> OperatorTerms:
    """``sum_m Omega_m c_m^+ c_m``."""
    return OperatorTerms(tuple(
        Term(float(om), ((m, True), (m, False))) for m, om in enumerate(omegas) if om != 0.0
    ))


def bloch_energies(L: int) -> np.ndarray:
    """Band energies ``-2 cos(2 pi k / L)`` for ``k = 0..L-1``."""
    if L < 2:
        raise ModelError(f"L must be at least 2, got {L}")
    k = np.arange(L)
    return -2.0 * np.cos(2.0 * np.pi * k / L)


def bloch_mode_order(L: int) -> list[int]:
    """Momenta sorted by band energy, ties broken by momentum index.

    Mode ``j`` of the Bloch-basis Hamiltonian carries momentum ``order[j]``, so
    the heaviest single-mode weights sit on the lowest band energies.
    """
    eps = bloch_energies(L)
    return sorted(range(L), key=lambda k: (round(float(eps[k]), 12), k))


def build_hubbard_bloch(spec: HubbardSpec) -> tuple[OperatorTerms, list[int]]:
    """The Hubbard chain rewritten in Bloch orbitals ``c_k = sum_m e^{2 pi i m k / L} c_m / sqrt(L)``.

    Returns the operator over modes ordered by :func:`bloch_mode_order` together
    with that order.
    """
    L, U = spec.L, float(spec.U)
    order = bloch_mode_order(L)
    mode_of = {k: j for j, k in enumerate(order)}
    eps = bloch_energies(L)
    terms = [Term(float(eps[k]), ((mode_of[k], True), (mode_of[k], False))) for k in range(L)]
    if U != 0.0:
        for k1 in range(L):
            for k2 in range(L):
                for k3 in range(L):
                    k4 = (k1 - k2 + k3) % L
                    coeff = U / L * np.exp(2j * np.pi * (k3 - k4) / L)
                    terms.append(Term(complex(coeff), (
                        (mode_of[k1], True), (mode_of[k2], False),
                        (mode_of[k3], True), (mode_of[k4], False),
                    )))
    return OperatorTerms(tuple(terms)), order


@dataclass(frozen=True)
class BlochConstants:
    eps: tuple[float, ...]
    R: float
    D: float


def bloch_constants(L: int = 5) -> BlochConstants:
    """Band energies and the off-diagonal/diagonal interaction constants of the
    five-site two-particle blocks."""
    if L != 5:
        raise ModelError("closed-form block constants exist only for L = 5")
    c1, c2 = math.cos(2 * math.pi / 5), math.cos(4 * math.pi / 5)
    return BlochConstants(
        eps=tuple(float(e) for e in bloch_energies(5)),
        R=2.0 * (c1 - c2) / 5.0,
        D=2.0 * (2.0 + c1 + 2.0 * c2) / 5.0,
    )


# Momentum pairs coupled by the interaction at L = 5, N = 2.  The first pair of
# each block has momenta one apart and carries the diagonal constant D.
APPC_BLOCKS = (
    ((0, 1), (2, 4)),
    ((3, 4), (0, 2)),
    ((1, 2), (0, 3)),
    ((0, 4), (1, 3)),
    ((2, 3), (1, 4)),
)


def analytic_block_eigs(U: float, pair_energies: tuple[float, float]) -> tuple[float, float]:
    """Eigenvalues of ``diag(e_ab, e_cd) + U [[D, R], [R, 1 - D]]`` in closed form."""
    c = bloch_constants(5)
    e_ab, e_cd = pair_energies
    tau = e_ab + e_cd + U
    delta = (e_ab + c.D * U) * (e_cd + (1.0 - c.D) * U) - c.R ** 2 * U ** 2
    root = math.sqrt(max(tau * tau - 4.0 * delta, 0.0))
    return (tau - root) / 2.0, (tau + root) / 2.0


def analytic_two_particle_spectrum(U: float, L: int = 5, N: int = 2) -> np.ndarray:
    """All ten two-particle energies of the five-site chain, ascending."""
    if (L, N) != (5, 2):
        raise ModelError(f"closed form available for L=5, N=2 only, got L={L}, N={N}")
    eps = bloch_energies(5)
    out = []
    for (a, b), (c, d) in APPC_BLOCKS:
        out.extend(analytic_block_eigs(U, (eps[a] + eps[b], eps[c] + eps[d])))
    return np.sort(np.array(out))
