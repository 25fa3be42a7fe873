"""Eigenstates, eigenenergies and gaps recovered from an optimized w-field."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .fock import OperatorTerms, StateVector, apply_terms, inner, project_physical_number
from .optim import OptimizerConfig, minimize_ensemble
from .ucc import AnsatzEnergy, AnsatzParams, _real_part, physical_operator
from .weights import DegenerateWeightsError, WeightVector, all_patterns, ordering, pattern_to_index

EMPTY_PROJECTION = 1e-10
NORM_TOLERANCE = 1e-8
DEGENERACY_TOLERANCE = 1e-6


class EmptyProjectionError(ValueError):
    """The tilde projection of the w-field has (numerically) zero norm."""


class OrderingViolationError(ValueError):
    """Two weight vectors give different pattern orderings and must not be combined."""


@dataclass(frozen=True)
class SectorEnergy:
    N: int
    value: float
    weights: WeightVector


def extract_eigenstate(psi: StateVector, pattern: Sequence[int], L: int | None = None) -> StateVector:
    """Physical state ``<tilde n = pattern | psi>``, normalized."""
    L = psi.n_modes // 2 if L is None else L
    if len(pattern) != L:
        raise ValueError(f"pattern of length {len(pattern)} for {L} tilde modes")
    tilde = pattern_to_index(pattern)
    amps = psi.amplitudes.reshape(-1, 1 << L)[tilde]
    # reordering tilde past physical creators only flips a global sign
    norm = float(np.linalg.norm(amps))
    if norm < EMPTY_PROJECTION:
        raise EmptyProjectionError(f"projection onto tilde pattern {tuple(pattern)} has norm {norm:.2e}")
    return StateVector(amps / norm, L)


def state_energy(H: OperatorTerms, phi: StateVector) -> float:
    """Rayleigh quotient of a unit-norm state."""
    norm = phi.norm()
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state_energy needs a normalized state, got norm {norm:.12g}")
    return _real_part(inner(phi, apply_terms(H, phi)), "state energy")


def sector_ensemble_energy(psi: StateVector, w: WeightVector, N: int, H: OperatorTerms) -> SectorEnergy:
    """``<P_N psi| H |P_N psi> / D(w)`` without renormalizing the projection."""
    proj = project_physical_number(psi, N, w.L)
    value = _real_part(inner(proj, apply_terms(H, proj)), "sector energy") / w.dfactor
    return SectorEnergy(N, value, w)


class FixedAngleEvaluator:
    """``E_N(w', theta*)``: the sector energy at new weights with the angles held fixed.

    At fixed angles the sector energy is exactly multilinear in the odds ratios,
    so the finite-difference extraction returns the Rayleigh quotient of the
    projected state for each pattern.
    """

    def __init__(self, H: OperatorTerms, params: AnsatzParams, N: int):
        self.H = H
        self.params = params
        self.N = N

    def __call__(self, w: WeightVector) -> SectorEnergy:
        value = AnsatzEnergy(w, self.H, self.params, sector=self.N)(self.params.theta)
        return SectorEnergy(self.N, value, w)


class ReoptimizingEvaluator:
    """``min_theta E_N(w', theta)`` warm-started from ``params.theta``."""

    def __init__(self, H: OperatorTerms, params: AnsatzParams, N: int,
                 config: OptimizerConfig = OptimizerConfig()):
        self.H = H
        self.params = params
        self.N = N
        self.config = config

    def __call__(self, w: WeightVector) -> SectorEnergy:
        result = minimize_ensemble(w, self.H, self.params, self.config, sector=self.N,
                                   x0=self.params.theta)
        return SectorEnergy(self.N, result.energy, w)


class CachedEvaluator:
    """Memoizes an evaluator on the weight vector; corners are shared across patterns."""

    def __init__(self, evaluator: Callable[[WeightVector], SectorEnergy]):
        self.evaluator = evaluator
        self.cache: dict = {}

    def __call__(self, w: WeightVector) -> SectorEnergy:
        if w not in self.cache:
            self.cache[w] = self.evaluator(w)
        return self.cache[w]


def _check_ordering(w: WeightVector, wprime: WeightVector, N: int | None) -> None:
    try:
        a, b = ordering(w, sector=N), ordering(wprime, sector=N)
    except DegenerateWeightsError as exc:
        raise OrderingViolationError(f"cannot compare weights: {exc}") from exc
    if a.ranks != b.ranks:
        moved = [p for p in a.ranks if a.ranks[p] != b.ranks[p]]
        raise OrderingViolationError(
            f"weights w and w' order the N={N} patterns differently (first moved pattern {moved[0]})"
        )


def extract_eigenenergy(evaluator: Callable[[WeightVector], SectorEnergy], w: WeightVector,
                        wprime: WeightVector, occupied: Sequence[int]) -> float:
    """Energy of the pattern occupying ``occupied`` by nested finite differences.

    ``Delta_i E_N = E_N(w) - E_N(w'_i)`` is applied once per occupied mode and
    the result divided by ``prod (mu_i - mu'_i)``.  The ``2**N`` corners are
    summed in a fixed order.
    """
    occupied = tuple(sorted(occupied))
    N = len(occupied)
    if len(set(occupied)) != N or any(not 0 <= m < w.L for m in occupied):
        raise ValueError(f"invalid occupied modes {occupied} for L={w.L}")
    _check_ordering(w, wprime, N)
    mu, mup = w.mu, wprime.mu
    denom = 1.0
    for m in occupied:
        d = mu[m] - mup[m]
        if abs(d) < 1e-14:
            raise ZeroDivisionError(f"mu and mu' coincide on mode {m}")
        denom *= d
    total = 0.0
    for subset in itertools.product((0, 1), repeat=N):
        switched = [m for m, s in zip(occupied, subset) if s]
        corner = w.replaced(wprime, switched) if switched else w
        total += (-1) ** len(switched) * evaluator(corner).value
    return total / denom


def occupied_modes(pattern: Sequence[int]) -> tuple[int, ...]:
    return tuple(m for m, x in enumerate(pattern) if x)


def sector_energies(evaluator, w: WeightVector, wprime: WeightVector, N: int) -> dict:
    """Finite-difference energy of every ``N``-particle pattern, in lexicographic pattern order."""
    cached = evaluator if isinstance(evaluator, CachedEvaluator) else CachedEvaluator(evaluator)
    return {p: extract_eigenenergy(cached, w, wprime, occupied_modes(p)) for p in all_patterns(w.L, N)}


def ground_pattern(w: WeightVector, N: int) -> tuple[int, ...]:
    """Heaviest ``N``-particle pattern, the one paired with the sector ground state."""
    return ordering(w, sector=N).patterns_by_rank()[0]


def neutral_gap(energies, tol: float = DEGENERACY_TOLERANCE) -> float:
    """Distance from the lowest level to the next level more than ``tol`` above it."""
    levels = np.sort(np.asarray(list(energies), dtype=float))
    if levels.size < 2:
        raise ValueError("a neutral gap needs at least two levels")
    above = levels[levels > levels[0] + tol]
    if above.size == 0:
        raise ValueError("all levels are degenerate within tolerance")
    return float(above[0] - levels[0])


@dataclass(frozen=True)
class Gaps:
    g_plus: float
    g_minus: float
    g: float


def gaps(evaluators: Mapping[int, Callable[[WeightVector], SectorEnergy]], w: WeightVector,
         wprime: WeightVector, N: int) -> Gaps:
    """Electron affinity, ionization energy and fundamental gap around ``N`` particles.

    ``g_+ = E_N - E_{N+1}``, ``g_- = E_{N-1} - E_N`` and ``g = g_- - g_+``, each
    ground energy taken from the heaviest pattern of its sector by finite
    differences.  ``evaluators`` maps a particle number to its evaluator.
    """
    if N >= w.L:
        raise ValueError(f"g_+ undefined at N={N}: there is no {N + 1}-particle sector on {w.L} modes")
    if N <= 0:
        raise ValueError(f"g_- undefined at N={N}: there is no {N - 1}-particle sector")

    def ground(n):
        if n not in evaluators:
            raise KeyError(f"no evaluator for the {n}-particle sector")
        return extract_eigenenergy(evaluators[n], w, wprime, occupied_modes(ground_pattern(w, n)))

    e_minus, e_mid, e_plus = ground(N - 1), ground(N), ground(N + 1)
    g_plus = e_mid - e_plus
    g_minus = e_minus - e_mid
    return Gaps(g_plus, g_minus, g_minus - g_plus)


@dataclass
class LinearityResult:
    max_residual: float
    segments: list = field(default_factory=list)

    @property
    def split(self) -> bool:
        return len(self.segments) > 1


def _ordering_key(w: WeightVector, sector: int | None):
    # patterns are only ever ranked against others with the same particle number
    sectors = range(w.L + 1) if sector is None else (sector,)
    try:
        return tuple(tuple(sorted(ordering(w, N).ranks.items())) for N in sectors)
    except DegenerateWeightsError:
        return None


def linearity_scan(objective: Callable[[WeightVector], float], w: WeightVector, mode: int,
                   grid: Sequence[float], sector: int | None = None,
                   split_on_ordering: bool = True) -> LinearityResult:
    """Max residual of a least-squares line through ``objective`` as ``w_mode`` moves over ``grid``.

    The grid is split wherever the ordering of same-sector patterns changes
    (or ties); each segment of three or more points is fitted on its own.
    Fixed-angle objectives are multilinear for any ordering and may pass
    ``split_on_ordering=False`` to fit the whole grid.
    """
    if len(grid) < 3:
        raise ValueError("linearity scan needs at least three grid points")
    points = []
    for x in grid:
        wx = _with_mode(w, mode, x)
        key = _ordering_key(wx, sector) if split_on_ordering else ()
        points.append((x, float(objective(wx)), key))
    segments, current = [], [points[0]]
    for p in points[1:]:
        if p[2] == current[-1][2] and p[2] is not None:
            current.append(p)
        else:
            segments.append(current)
            current = [p]
    segments.append(current)
    residual = 0.0
    fitted = []
    for seg in segments:
        if len(seg) < 3:
            continue
        xs = np.array([p[0] for p in seg])
        ys = np.array([p[1] for p in seg])
        coef = np.polyfit(xs, ys, 1)
        r = float(np.abs(ys - np.polyval(coef, xs)).max())
        residual = max(residual, r)
        fitted.append((float(xs[0]), float(xs[-1]), r))
    if not fitted:
        raise OrderingViolationError("no segment of three grid points shares one ordering")
    return LinearityResult(residual, fitted)


def _with_mode(w: WeightVector, mode: int, value: float) -> WeightVector:
    if not 0 <= mode < w.L:
        raise ValueError(f"mode {mode} outside 0..{w.L - 1}")
    ws = list(w.ws)
    ws[mode] = value
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return WeightVector(tuple(ws))


@dataclass(frozen=True)
class SpectrumRow:
    experiment_id: str
    L: int
    N: int
    U: float
    pattern: str
    method: str
    energy: float
    oracle: float
    abs_error: float
    converged: bool
    iterations: int
    wallclock_ms: float | None = None
    degenerate: bool = False


@dataclass
class SpectrumTable:
    rows: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def max_error(self) -> float:
        return max((r.abs_error for r in self.rows), default=0.0)


def pattern_label(pattern: Sequence[int]) -> str:
    return "".join(str(int(x)) for x in pattern)


def match_spectrum(extracted: Mapping, exact: Sequence[float], tol: float = DEGENERACY_TOLERANCE):
    """Pair extracted energies with exact levels by rank.

    Returns ``(pattern, energy, exact, degenerate)`` tuples in ascending energy;
    ``degenerate`` marks exact levels within ``tol`` of a neighbour.
    """
    items = sorted(extracted.items(), key=lambda kv: (kv[1], kv[0]))
    exact = np.sort(np.asarray(exact, dtype=float))
    if len(items) != exact.size:
        raise ValueError(f"{len(items)} extracted levels but {exact.size} exact ones")
    gaps_ = np.diff(exact)
    out = []
    for k, (pattern, energy) in enumerate(items):
        near = (k > 0 and gaps_[k - 1] < tol) or (k < exact.size - 1 and gaps_[k] < tol)
        out.append((pattern, float(energy), float(exact[k]), bool(near)))
    return out


def projection_energies(psi: StateVector, H: OperatorTerms, L: int, N: int) -> dict:
    """Rayleigh quotient of the projected eigenstate for every ``N``-particle pattern."""
    Hp = physical_operator(H, L)
    out = {}
    for p in all_patterns(L, N):
        phi = extract_eigenstate(psi, p, L)
        out[p] = _real_part(complex(np.vdot(phi.amplitudes, Hp @ phi.amplitudes)), "state energy")
    return out

