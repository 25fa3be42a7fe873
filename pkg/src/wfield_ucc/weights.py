"""Single-mode weights, many-mode product weights and their ordering."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TIE_TOLERANCE = 1e-12


class WeightError(ValueError):
    pass


class DegenerateWeightsError(WeightError):
    """Two occupation patterns carry the same many-mode weight."""

    def __init__(self, first, second, value):
        self.patterns = (first, second)
        super().__init__(
            f"degenerate many-mode weights: patterns {first} and {second} "
            f"both have weight {value:.15g}"
        )


@dataclass(frozen=True)
class WeightVector:
    """Single-mode weights ``w_{s,m}``, each strictly inside (0, 1)."""

    ws: tuple[float, ...]

    def __post_init__(self):
        ws = tuple(float(x) for x in self.ws)
        if not ws:
            raise WeightError("at least one single-mode weight is required")
        for m, x in enumerate(ws):
            if not 0.0 < x < 1.0:
                raise WeightError(f"single-mode weight w[{m}] = {x} outside (0, 1)")
        if any(x > 0.5 for x in ws):
            warnings.warn(
                "single-mode weight above 1/2: patterns no longer favour empty modes",
                stacklevel=3,
            )
        object.__setattr__(self, "ws", ws)

    @property
    def L(self) -> int:
        return len(self.ws)

    @property
    def mu(self) -> np.ndarray:
        w = np.asarray(self.ws)
        return w / (1.0 - w)

    @property
    def dfactor(self) -> float:
        return dfactor(self)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ws, dtype=float)

    def shifted(self, delta: float, modes: Sequence[int] | None = None) -> WeightVector:
        """Copy with ``delta`` added to the listed modes (all modes by default)."""
        w = self.as_array()
        sel = range(self.L) if modes is None else modes
        for m in sel:
            w[m] += delta
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return WeightVector(tuple(w))

    def replaced(self, other: WeightVector, modes: Sequence[int]) -> WeightVector:
        """Copy taking ``other``'s weight on the listed modes."""
        w = self.as_array()
        for m in modes:
            w[m] = other.ws[m]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return WeightVector(tuple(w))


def paper_default_weights(L: int) -> WeightVector:
    """Weights decreasing from 0.5 in steps of 0.5/L."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return WeightVector(tuple(0.5 - 0.5 * m / L for m in range(L)))


def dfactor(w: WeightVector) -> float:
    return float(np.prod(1.0 - w.as_array()))


def _check_pattern(w: WeightVector, n: Sequence[int]) -> None:
    if len(n) != w.L:
        raise WeightError(f"pattern of length {len(n)} does not match {w.L} modes")
    if any(x not in (0, 1) for x in n):
        raise WeightError(f"pattern {tuple(n)} must contain only 0/1 occupancies")


def many_mode_weight(w: WeightVector, n: Sequence[int]) -> float:
    _check_pattern(w, n)
    ws = w.as_array()
    nn = np.asarray(n)
    return float(np.prod(np.where(nn == 1, ws, 1.0 - ws)))


def all_patterns(L: int, sector: int | None = None) -> list[tuple[int, ...]]:
    """Occupation patterns in lexicographic order, optionally of fixed particle number."""
    pats = list(itertools.product((0, 1), repeat=L))
    if sector is not None:
        pats = [p for p in pats if sum(p) == sector]
    return pats


def pattern_to_index(n: Sequence[int]) -> int:
    """Basis index with bit ``m`` set when mode ``m`` is occupied."""
    return sum(1 << m for m, x in enumerate(n) if x)


def index_to_pattern(index: int, L: int) -> tuple[int, ...]:
    return tuple((index >> m) & 1 for m in range(L))


def many_mode_weights(w: WeightVector) -> np.ndarray:
    """Product weights for all ``2**L`` basis indices (bit m = mode m)."""
    ws = w.as_array()
    idx = np.arange(1 << w.L)
    out = np.ones(idx.size)
    for m, x in enumerate(ws):
        occ = (idx >> m) & 1
        out *= np.where(occ == 1, x, 1.0 - x)
    return out


@dataclass(frozen=True)
class OrderingMap:
    """Collective labels ``j(n)``: 1 for the heaviest pattern, increasing with lighter ones."""

    ranks: dict
    sector: int | None = None

    def patterns_by_rank(self) -> list[tuple[int, ...]]:
        return sorted(self.ranks, key=self.ranks.__getitem__)

    def __getitem__(self, n) -> int:
        return self.ranks[tuple(n)]


def ordering(w: WeightVector, sector: int | None = None, tol: float = TIE_TOLERANCE) -> OrderingMap:
    """Rank patterns by decreasing many-mode weight.

    With ``sector`` given only patterns of that particle number are ranked,
    which is all the energy-extraction formulas compare.
    """
    pats = all_patterns(w.L, sector)
    weights = [many_mode_weight(w, p) for p in pats]
    order = sorted(range(len(pats)), key=lambda i: -weights[i])
    for a, b in zip(order, order[1:]):
        if abs(weights[a] - weights[b]) <= tol:
            raise DegenerateWeightsError(pats[a], pats[b], weights[a])
    return OrderingMap({pats[i]: r + 1 for r, i in enumerate(order)}, sector)


def same_ordering(w: WeightVector, w2: WeightVector, sector: int | None = None) -> bool:
    if w.L != w2.L:
        raise WeightError("weight vectors of different length")
    return ordering(w, sector).ranks == ordering(w2, sector).ranks
