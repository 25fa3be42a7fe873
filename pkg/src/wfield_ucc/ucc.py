"""Factorized, Trotterized UCCSD acting on the physical register of the doubled space.

A Trotter step applies every double-excitation factor in lexicographic order of
``((i, j), (k, l))`` and then every single-excitation factor in lexicographic
order of ``(i, j)``; the first factor listed acts first on the state.  The
parameter vector follows the same order, doubles first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy import sparse

from .fock import (
    FockError,
    OperatorTerms,
    StateVector,
    Term,
    apply_terms,
    register_popcounts,
    term_transitions,
)
from .wfield import build_free_wfield
from .weights import WeightVector

IMAG_TOLERANCE = 1e-10


class NumericalConsistencyError(ArithmeticError):
    """An expectation value that must be real came out with an imaginary part."""


def single_pairs(L: int) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.combinations(range(L), 2))


def double_quads(L: int) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
    """Pairs of disjoint index pairs, one entry per Hermitian-conjugate couple."""
    pairs = single_pairs(L)
    return tuple((a, b) for a, b in itertools.combinations(pairs, 2) if not set(a) & set(b))


@dataclass(frozen=True)
class AnsatzParams:
    L: int
    theta: np.ndarray
    trotter_steps: int = 1
    singles: tuple = field(default=None)
    doubles: tuple = field(default=None)

    def __post_init__(self):
        if self.trotter_steps < 1:
            raise ValueError("at least one Trotter step is required")
        if self.singles is None:
            object.__setattr__(self, "singles", single_pairs(self.L))
        if self.doubles is None:
            object.__setattr__(self, "doubles", double_quads(self.L))
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def uccsd(cls, L: int, trotter_steps: int = 1, theta=None) -> AnsatzParams:
        n = len(double_quads(L)) + len(single_pairs(L))
        return cls(L, np.zeros(n) if theta is None else theta, trotter_steps)

    @property
    def n_params(self) -> int:
        return len(self.doubles) + len(self.singles)

    def with_theta(self, theta) -> AnsatzParams:
        return AnsatzParams(self.L, theta, self.trotter_steps, self.singles, self.doubles)

    def with_steps(self, trotter_steps: int) -> AnsatzParams:
        return AnsatzParams(self.L, self.theta, trotter_steps, self.singles, self.doubles)

    @property
    def double_thetas(self) -> dict:
        return dict(zip(self.doubles, self.theta[: len(self.doubles)]))

    @property
    def single_thetas(self) -> dict:
        return dict(zip(self.singles, self.theta[len(self.doubles):]))

    def factors(self):
        """(kind, indices, theta) for one Trotter step in application order."""
        for q, t in zip(self.doubles, self.theta[: len(self.doubles)]):
            yield "double", q, float(t)
        for p, t in zip(self.singles, self.theta[len(self.doubles):]):
            yield "single", p, float(t)


def single_excitation(i: int, j: int) -> tuple:
    return ((i, True), (j, False))


def double_excitation(i: int, j: int, k: int, l: int) -> tuple:
    return ((i, True), (j, True), (k, False), (l, False))


def excitation_generator(excitation: tuple) -> OperatorTerms:
    """Anti-Hermitian ``A - A^dagger`` for an excitation product ``A``."""
    t = Term(1.0, excitation)
    return OperatorTerms((t, Term(-1.0, t.adjoint().factors)))


def _rotate(theta: float, excitation: tuple, state: StateVector) -> StateVector:
    # tau^3 = -tau for a single excitation operator minus its adjoint
    tau = excitation_generator(excitation)
    t1 = apply_terms(tau, state)
    t2 = apply_terms(tau, t1)
    return StateVector(
        state.amplitudes + np.sin(theta) * t1.amplitudes + (1.0 - np.cos(theta)) * t2.amplitudes,
        state.n_modes,
    )


def _physical_count(state: StateVector, n_physical: int | None) -> int:
    return state.n_modes // 2 if n_physical is None else n_physical


def apply_single_factor(theta: float, i: int, j: int, state: StateVector,
                        n_physical: int | None = None) -> StateVector:
    """``exp(theta (c_i^+ c_j - c_j^+ c_i)) state`` on physical modes."""
    L = _physical_count(state, n_physical)
    if i == j or not (0 <= i < L and 0 <= j < L):
        raise FockError(f"invalid single excitation ({i}, {j}) on {L} physical modes")
    return _rotate(theta, single_excitation(i, j), state)


def apply_double_factor(theta: float, i: int, j: int, k: int, l: int, state: StateVector,
                        n_physical: int | None = None) -> StateVector:
    """``exp(theta (c_i^+ c_j^+ c_k c_l - c_l^+ c_k^+ c_j c_i)) state`` on physical modes."""
    L = _physical_count(state, n_physical)
    if i == j or k == l or (i, j) == (k, l) or (i, j) == (l, k):
        raise FockError(f"invalid double excitation ({i}, {j}, {k}, {l})")
    if not all(0 <= x < L for x in (i, j, k, l)):
        raise FockError(f"double excitation ({i}, {j}, {k}, {l}) outside {L} physical modes")
    return _rotate(theta, double_excitation(i, j, k, l), state)


def apply_ansatz_reference(params: AnsatzParams, state: StateVector) -> StateVector:
    """Factor-by-factor application through the generic operator algebra."""
    for _ in range(params.trotter_steps):
        for kind, idx, t in params.factors():
            if kind == "double":
                (i, j), (k, l) = idx
                state = apply_double_factor(t, i, j, k, l, state, params.L)
            else:
                state = apply_single_factor(t, *idx, state, params.L)
    return state


@dataclass(frozen=True)
class CompiledAnsatz:
    """Precomputed 2x2 rotation blocks of every factor on the physical register."""

    L: int
    offsets: np.ndarray
    src: np.ndarray
    tgt: np.ndarray
    sign: np.ndarray


@lru_cache(maxsize=None)
def compile_ansatz(L: int, singles: tuple, doubles: tuple) -> CompiledAnsatz:
    srcs, tgts, signs, offsets = [], [], [], [0]
    excitations = [double_excitation(i, j, k, l) for (i, j), (k, l) in doubles]
    excitations += [single_excitation(i, j) for i, j in singles]
    for exc in excitations:
        s, t, sg = term_transitions(exc, L)
        srcs.append(s)
        tgts.append(t)
        signs.append(sg)
        offsets.append(offsets[-1] + s.size)
    return CompiledAnsatz(
        L,
        np.array(offsets, dtype=np.int64),
        np.concatenate(srcs).astype(np.int64),
        np.concatenate(tgts).astype(np.int64),
        np.concatenate(signs).astype(np.float64),
    )


@numba.njit(cache=True)
def _rotate_rows(A, theta, offsets, src, tgt, sign, steps):
    ncols = A.shape[1]
    for _ in range(steps):
        for f in range(theta.size):
            th = theta[f]
            if th == 0.0:
                continue
            c = np.cos(th)
            s = np.sin(th)
            for p in range(offsets[f], offsets[f + 1]):
                a = src[p]
                b = tgt[p]
                ss = sign[p] * s
                for col in range(ncols):
                    xa = A[a, col]
                    xb = A[b, col]
                    A[b, col] = c * xb + ss * xa
                    A[a, col] = c * xa - ss * xb


def rotate_physical(params: AnsatzParams, A: np.ndarray) -> None:
    """In place: apply the ansatz to ``A[phys, other]`` along its first axis."""
    comp = compile_ansatz(params.L, params.singles, params.doubles)
    _rotate_rows(A, np.ascontiguousarray(params.theta), comp.offsets, comp.src, comp.tgt,
                 comp.sign, params.trotter_steps)


def _physical_view(state: StateVector, L: int) -> np.ndarray:
    """Amplitudes as ``A[phys, rest]`` (physical bits are the low bits)."""
    rest = state.dim >> L
    return state.amplitudes.reshape(rest, 1 << L).T.copy()


def _from_physical_view(A: np.ndarray, n_modes: int) -> StateVector:
    return StateVector(np.ascontiguousarray(A.T).reshape(-1), n_modes)


def apply_ansatz(params: AnsatzParams, state: StateVector) -> StateVector:
    """``U(theta) state`` where the ansatz acts on the first ``params.L`` modes."""
    if state.n_modes < params.L:
        raise FockError(f"state with {state.n_modes} modes is smaller than the ansatz register")
    A = _physical_view(state, params.L)
    rotate_physical(params, A)
    return _from_physical_view(A, state.n_modes)


def physical_operator(H: OperatorTerms, L: int) -> sparse.csr_matrix:
    """Sparse matrix of a physical-register operator over ``2**L`` states."""
    if H.max_mode() >= L:
        raise FockError(f"operator touches mode {H.max_mode()}, beyond the {L} physical modes")
    rows, cols, vals = [], [], []
    for term in H.terms:
        s, t, sg = term_transitions(term.factors, L)
        rows.append(t)
        cols.append(s)
        vals.append(term.coefficient * sg)
    dim = 1 << L
    if not rows:
        return sparse.csr_matrix((dim, dim), dtype=np.complex128)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return mat.tocsr()


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOLERANCE * max(1.0, abs(value.real)):
        raise NumericalConsistencyError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


@lru_cache(maxsize=64)
def _free_wfield_view(w: WeightVector) -> np.ndarray:
    A = _physical_view(build_free_wfield(w), w.L)
    A.setflags(write=False)
    return A


class AnsatzEnergy:
    """Fast evaluator of the w-field energy ``<psi(theta)|H|psi(theta)>``.

    ``psi(theta) = U(theta) exp(G) |vac>``.  With ``sector`` set, the free
    w-field is first projected onto that physical particle number (the ansatz
    conserves it) and the result is divided by ``D(w)``.
    """

    def __init__(self, w: WeightVector, H: OperatorTerms, template: AnsatzParams,
                 sector: int | None = None):
        if template.L != w.L:
            raise ValueError(f"ansatz on {template.L} modes but {w.L} weights")
        self.w = w
        self.template = template
        self.sector = sector
        self.H = physical_operator(H, w.L)
        A = _free_wfield_view(w)
        if sector is not None:
            counts = register_popcounts(2 * w.L, w.L, 2 * w.L)[:: 1 << w.L]
            A = A[:, counts == sector]
        self.A0 = np.ascontiguousarray(A)
        self.scale = 1.0 / w.dfactor if sector is not None else 1.0
        self.n_evaluations = 0

    def state_matrix(self, theta) -> np.ndarray:
        params = self.template.with_theta(theta)
        A = self.A0.copy()
        rotate_physical(params, A)
        return A

    def __call__(self, theta) -> float:
        A = self.state_matrix(theta)
        self.n_evaluations += 1
        value = np.vdot(A, self.H @ A) * self.scale
        return _real_part(complex(value), "ensemble energy")


def prepare_state(w: WeightVector, params: AnsatzParams) -> StateVector:
    """The optimized doubled-space state ``U(theta) exp(G) |vac>``."""
    A = np.array(_free_wfield_view(w))
    rotate_physical(params, A)
    return _from_physical_view(A, 2 * w.L)


def ensemble_energy(w: WeightVector, params: AnsatzParams, H: OperatorTerms) -> float:
    """``E(w, theta) = <psi|H|psi>`` for the ansatz state built on the free w-field."""
    return AnsatzEnergy(w, H, params)(params.theta)
