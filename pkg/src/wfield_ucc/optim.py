"""Nelder-Mead simplex minimization and the w-field energy minimizer built on it."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fock import OperatorTerms
from .ucc import AnsatzEnergy, AnsatzParams
from .weights import WeightVector

log = logging.getLogger(__name__)

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


class NonFiniteObjectiveError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    """Simplex settings.

    ``tolerance`` bounds the spread of objective values over the simplex.
    After the first run converges, up to ``restarts`` fresh simplices are
    started around the best point (displaced by a seeded Gaussian of width
    ``restart_jitter``); restarting stops once a run improves by less than
    ``tolerance``.
    """

    tolerance: float = 1e-5
    max_iterations: int = 20000
    initial_step: float = 0.1
    seed: int = 0
    restarts: int = 2
    restart_jitter: float = 1e-3

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


@dataclass
class OptimizationResult:
    theta_star: np.ndarray
    energy: float
    iterations: int
    converged: bool
    evaluations: int = 0
    restarts_used: int = 0
    history: list = field(default_factory=list)


def _evaluate(objective, x) -> float:
    value = float(objective(x))
    if not math.isfinite(value):
        raise NonFiniteObjectiveError(f"objective returned {value} at x = {np.array2string(x, precision=6)}")
    return value


def _simplex_run(objective, x0, step, tolerance, max_iterations, it0, history):
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += step
    fvals = np.array([_evaluate(objective, x) for x in simplex])
    evals = n + 1
    it = 0
    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if not history or fvals[0] < history[-1][1]:
            history.append((it0 + it, float(fvals[0])))
        if fvals[-1] - fvals[0] < tolerance:
            converged = True
            break
        if it >= max_iterations:
            break
        it += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = _evaluate(objective, xr)
        evals += 1
        if fr < fvals[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = _evaluate(objective, xe)
            evals += 1
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fc = _evaluate(objective, xc)
            evals += 1
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid - CONTRACT * (centroid - worst)
            fc = _evaluate(objective, xc)
            evals += 1
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        best = simplex[0]
        for i in range(1, n + 1):
            simplex[i] = best + SHRINK * (simplex[i] - best)
            fvals[i] = _evaluate(objective, simplex[i])
        evals += n
    return simplex[0].copy(), float(fvals[0]), it, evals, converged


def nelder_mead(objective: Callable[[np.ndarray], float], x0, config: OptimizerConfig = OptimizerConfig()
                ) -> OptimizationResult:
    """Minimize ``objective`` from ``x0``; deterministic for a given ``config.seed``."""
    x0 = np.array(x0, dtype=float)
    rng = np.random.default_rng(config.seed)
    history: list = []
    x, f, iters, evals, converged = _simplex_run(
        objective, x0, config.initial_step, config.tolerance, config.max_iterations, 0, history
    )
    restarts = 0
    while converged and restarts < config.restarts and iters < config.max_iterations:
        start = x + rng.normal(0.0, config.restart_jitter, x.size)
        x2, f2, it2, ev2, converged = _simplex_run(
            objective, start, config.initial_step, config.tolerance,
            config.max_iterations - iters, iters, history,
        )
        iters += it2
        evals += ev2
        restarts += 1
        improvement = f - f2
        if f2 < f:
            x, f = x2, f2
        log.debug("restart %d: f=%.10g (improvement %.3g)", restarts, f, improvement)
        if improvement < config.tolerance:
            break
    if history and f < history[-1][1]:
        history.append((iters, f))
    return OptimizationResult(x, f, iters, converged, evals, restarts, history)


def minimize_ensemble(w: WeightVector, H: OperatorTerms, template: AnsatzParams,
                      config: OptimizerConfig = OptimizerConfig(), sector: int | None = None,
                      x0=None) -> OptimizationResult:
    """Minimize the w-field energy over the ansatz angles, from ``x0`` (default zero).

    ``sector=None`` minimizes the full ensemble energy; an integer restricts the
    w-field to that physical particle number and minimizes ``E_N(w)``.
    """
    objective = AnsatzEnergy(w, H, template, sector=sector)
    start = np.zeros(template.n_params) if x0 is None else np.asarray(x0, dtype=float)
    result = nelder_mead(objective, start, config)
    result.energy = objective(result.theta_star)
    return result
