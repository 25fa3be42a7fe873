"""Occupation-number basis with Jordan-Wigner signed fermionic operators.

Basis states are integers whose bit ``b`` marks mode ``b`` as occupied.  In the
doubled space of ``L`` physical sites the physical modes are ``0..L-1`` and the
tilde modes are ``L..2L-1``; the Jordan-Wigner string of a mode runs over all
lower-indexed modes, which makes physical and tilde operators anticommute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_MODES = 16


class FockError(ValueError):
    """Raised on out-of-range modes, mismatched dimensions or particle counts."""


@lru_cache(maxsize=None)
def popcounts(n_modes: int) -> np.ndarray:
    """Particle number of every basis index over ``n_modes`` modes."""
    idx = np.arange(1 << n_modes, dtype=np.uint64)
    counts = np.bitwise_count(idx).astype(np.int64)
    counts.setflags(write=False)
    return counts


@lru_cache(maxsize=None)
def register_popcounts(n_modes: int, lo: int, hi: int) -> np.ndarray:
    """Particle number restricted to modes ``lo..hi-1`` for every basis index."""
    idx = np.arange(1 << n_modes, dtype=np.uint64)
    mask = np.uint64(((1 << hi) - 1) ^ ((1 << lo) - 1))
    counts = np.bitwise_count(idx & mask).astype(np.int64)
    counts.setflags(write=False)
    return counts


def _check_modes(n_modes: int) -> None:
    if not 0 < n_modes <= MAX_MODES:
        raise FockError(f"number of modes must be in 1..{MAX_MODES}, got {n_modes}")


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the ``2**n_modes`` occupation basis states."""

    amplitudes: np.ndarray
    n_modes: int

    def __post_init__(self):
        _check_modes(self.n_modes)
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_modes,):
            raise FockError(
                f"amplitude array of shape {amps.shape} does not match "
                f"{self.n_modes} modes (dim {1 << self.n_modes})"
            )
        if not np.all(np.isfinite(amps)):
            raise FockError("state amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_modes

    @classmethod
    def basis(cls, index: int, n_modes: int) -> StateVector:
        amps = np.zeros(1 << n_modes, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, n_modes)

    @classmethod
    def vacuum(cls, n_modes: int) -> StateVector:
        return cls.basis(0, n_modes)

    @classmethod
    def zeros(cls, n_modes: int) -> StateVector:
        return cls(np.zeros(1 << n_modes, dtype=np.complex128), n_modes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        nrm = self.norm()
        if nrm == 0.0:
            raise FockError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.n_modes)

    def __add__(self, other: StateVector) -> StateVector:
        _check_same_space(self, other)
        return StateVector(self.amplitudes + other.amplitudes, self.n_modes)

    def __sub__(self, other: StateVector) -> StateVector:
        _check_same_space(self, other)
        return StateVector(self.amplitudes - other.amplitudes, self.n_modes)

    def __mul__(self, scalar: complex) -> StateVector:
        return StateVector(self.amplitudes * scalar, self.n_modes)

    __rmul__ = __mul__


def _check_same_space(a: StateVector, b: StateVector) -> None:
    if a.n_modes != b.n_modes:
        raise FockError(f"dimension mismatch: {a.dim} vs {b.dim}")


Factor = tuple[int, bool]


@dataclass(frozen=True)
class Term:
    """``coefficient * f_1 f_2 ... f_k``; the rightmost factor acts first."""

    coefficient: complex
    factors: tuple[Factor, ...]

    def adjoint(self) -> Term:
        return Term(
            complex(np.conj(self.coefficient)),
            tuple((m, not d) for m, d in reversed(self.factors)),
        )


@dataclass(frozen=True)
class OperatorTerms:
    """Linear combination of products of creation/annihilation operators."""

    terms: tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        normalized = []
        for t in self.terms:
            if not isinstance(t, Term):
                coeff, factors = t
                t = Term(complex(coeff), tuple((int(m), bool(d)) for m, d in factors))
            for m, _ in t.factors:
                if m < 0:
                    raise FockError(f"negative mode index {m}")
            normalized.append(t)
        object.__setattr__(self, "terms", tuple(normalized))

    @classmethod
    def from_list(cls, terms: Iterable[tuple[complex, Sequence[Factor]]]) -> OperatorTerms:
        return cls(tuple(Term(complex(c), tuple((int(m), bool(d)) for m, d in f)) for c, f in terms))

    @classmethod
    def identity(cls) -> OperatorTerms:
        return cls((Term(1.0, ()),))

    def adjoint(self) -> OperatorTerms:
        return OperatorTerms(tuple(t.adjoint() for t in self.terms))

    def __add__(self, other: OperatorTerms) -> OperatorTerms:
        return OperatorTerms(self.terms + other.terms)

    def scaled(self, factor: complex) -> OperatorTerms:
        return OperatorTerms(tuple(Term(t.coefficient * factor, t.factors) for t in self.terms))

    def max_mode(self) -> int:
        """Largest mode index referenced, or -1 for scalar-only operators."""
        return max((m for t in self.terms for m, _ in t.factors), default=-1)

    def __len__(self) -> int:
        return len(self.terms)


def _lower_parity(idx: np.ndarray, mode: int) -> np.ndarray:
    """+1/-1 Jordan-Wigner sign from the occupied modes below ``mode``."""
    below = idx & np.uint64((1 << mode) - 1)
    return 1 - 2 * (np.bitwise_count(below).astype(np.int64) & 1)


def _act(idx: np.ndarray, amp: np.ndarray, factors: Sequence[Factor]):
    """Apply an ordered factor list to (index, amplitude) pairs, rightmost first."""
    for mode, dagger in reversed(factors):
        bit = np.uint64(1 << mode)
        occupied = (idx & bit) != 0
        keep = ~occupied if dagger else occupied
        idx = idx[keep]
        amp = amp[keep] * _lower_parity(idx, mode)
        idx = idx ^ bit
    return idx, amp


def apply_mode_operator(state: StateVector, mode: int, dagger: bool) -> StateVector:
    """Apply ``c_mode^dagger`` (``dagger=True``) or ``c_mode`` to ``state``."""
    if not 0 <= mode < state.n_modes:
        raise FockError(f"mode {mode} out of range for {state.n_modes} modes")
    idx = np.arange(state.dim, dtype=np.uint64)
    idx, amp = _act(idx, state.amplitudes, ((mode, dagger),))
    out = np.zeros(state.dim, dtype=np.complex128)
    out[idx.astype(np.int64)] = amp
    return StateVector(out, state.n_modes)


def apply_terms(op: OperatorTerms, state: StateVector) -> StateVector:
    """Apply a sum of operator products to ``state``."""
    if op.max_mode() >= state.n_modes:
        raise FockError(f"operator references mode {op.max_mode()} beyond {state.n_modes} modes")
    out = np.zeros(state.dim, dtype=np.complex128)
    base = np.arange(state.dim, dtype=np.uint64)
    nonzero = state.amplitudes != 0
    base, amps = base[nonzero], state.amplitudes[nonzero]
    for term in op.terms:
        idx, amp = _act(base, amps, term.factors)
        # each term maps basis states injectively, so no duplicate targets
        out[idx.astype(np.int64)] += term.coefficient * amp
    return StateVector(out, state.n_modes)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_same_space(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(op: OperatorTerms, state: StateVector) -> complex:
    return inner(state, apply_terms(op, state))


def project_physical_number(state: StateVector, n_particles: int, n_physical: int | None = None) -> StateVector:
    """Keep only components with ``n_particles`` in modes ``0..n_physical-1``.

    ``n_physical`` defaults to half the modes (the physical half of a doubled space).
    """
    if n_physical is None:
        n_physical = state.n_modes // 2
    if not 0 <= n_physical <= state.n_modes:
        raise FockError(f"physical register of {n_physical} modes exceeds {state.n_modes}")
    if not 0 <= n_particles <= n_physical:
        raise FockError(f"particle number {n_particles} outside 0..{n_physical}")
    counts = register_popcounts(state.n_modes, 0, n_physical)
    return StateVector(np.where(counts == n_particles, state.amplitudes, 0.0), state.n_modes)


def dense_matrix(op: OperatorTerms, n_modes: int) -> np.ndarray:
    """Dense matrix of ``op``; intended for small test-sized spaces only."""
    _check_modes(n_modes)
    if op.max_mode() >= n_modes:
        raise FockError(f"operator references mode {op.max_mode()} beyond {n_modes} modes")
    dim = 1 << n_modes
    mat = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim, dtype=np.uint64)
    ones = np.ones(dim, dtype=np.complex128)
    for term in op.terms:
        idx, amp = _act(cols, ones, term.factors)
        src = _source_columns(cols, term.factors)
        np.add.at(mat, (idx.astype(np.int64), src), term.coefficient * amp)
    return mat


def _source_columns(cols: np.ndarray, factors: Sequence[Factor]) -> np.ndarray:
    """Basis indices on which a factor product acts non-trivially."""
    keep = np.ones(cols.shape, dtype=bool)
    idx = cols.copy()
    for mode, dagger in reversed(factors):
        bit = np.uint64(1 << mode)
        occupied = (idx & bit) != 0
        keep &= ~occupied if dagger else occupied
        idx = idx ^ bit
    return cols[keep].astype(np.int64)


def term_transitions(factors: Sequence[Factor], n_modes: int):
    """(source, target, sign) arrays of a single factor product over all basis states."""
    cols = np.arange(1 << n_modes, dtype=np.uint64)
    src = _source_columns(cols, factors)
    tgt, sign = _act(cols[src].astype(np.uint64), np.ones(src.size), factors)
    return src, tgt.astype(np.int64), sign.real.astype(np.float64)
