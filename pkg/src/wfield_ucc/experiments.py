"""Experiment drivers behind the command line: spectra, gaps and the validation suite."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .config import ExperimentConfig
from .fock import StateVector, dense_matrix, project_physical_number
from .model import HubbardSpec, build_hubbard, build_hubbard_bloch
from .optim import OptimizationResult, minimize_ensemble
from .oracle import OracleEvaluator, exact_ensemble_energy, exact_sector_spectrum
from .spectroscopy import (
    CachedEvaluator,
    FixedAngleEvaluator,
    ReoptimizingEvaluator,
    SpectrumRow,
    SpectrumTable,
    extract_eigenenergy,
    ground_pattern,
    linearity_scan,
    match_spectrum,
    neutral_gap,
    occupied_modes,
    pattern_label,
    projection_energies,
    sector_energies,
)
from .ucc import (
    AnsatzEnergy,
    AnsatzParams,
    apply_ansatz,
    apply_double_factor,
    apply_single_factor,
    double_excitation,
    excitation_generator,
    prepare_state,
    single_excitation,
)
from .wfield import apply_G, build_free_wfield, sector_projection_fourier
from .weights import WeightVector, ordering

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment_id", "L", "N", "U", "pattern", "method", "energy", "oracle",
               "abs_error", "converged", "iterations", "wallclock_ms")


def build_model(cfg: ExperimentConfig, U: float):
    spec = HubbardSpec(cfg.L, U)
    if cfg.basis == "bloch":
        return build_hubbard_bloch(spec)[0]
    return build_hubbard(spec)


class SectorOptimizer:
    """Optimized angles per particle number for one Hamiltonian, computed on demand.

    With ``objective = "ensemble"`` a single optimization of the full w-field
    energy serves every sector.
    """

    def __init__(self, cfg: ExperimentConfig, H, w: WeightVector):
        self.cfg = cfg
        self.H = H
        self.w = w
        self.template = AnsatzParams.uccsd(cfg.L, cfg.trotter_steps)
        self.results: dict = {}

    def __call__(self, N: int) -> tuple[AnsatzParams, OptimizationResult]:
        key = N if self.cfg.objective == "sector" else None
        if key not in self.results:
            self.results[key] = minimize_ensemble(self.w, self.H, self.template, self.cfg.optimizer, sector=key)
        result = self.results[key]
        return self.template.with_theta(result.theta_star), result

    def evaluator(self, N: int):
        params, _ = self(N)
        if self.cfg.extraction == "reoptimize":
            sector = N if self.cfg.objective == "sector" else None
            if sector is None:
                raise ValueError("re-optimized extraction needs the per-sector objective")
            return CachedEvaluator(ReoptimizingEvaluator(self.H, params, N, self.cfg.optimizer))
        return CachedEvaluator(FixedAngleEvaluator(self.H, params, N))


def _ms(t0: float, cfg: ExperimentConfig) -> float | None:
    return (time.perf_counter() - t0) * 1e3 if cfg.timing else None


def spectrum_rows(cfg: ExperimentConfig, U: float) -> list[SpectrumRow]:
    """Projection-extracted energies of every pattern in the configured sectors at one ``U``."""
    H = build_model(cfg, U)
    w = cfg.weight_vector()
    opt = SectorOptimizer(cfg, H, w)
    rows = []
    for N in cfg.sectors:
        t0 = time.perf_counter()
        params, result = opt(N)
        psi = prepare_state(w, params)
        energies = projection_energies(psi, H, cfg.L, N)
        exact = exact_sector_spectrum(H, cfg.L, N).energies
        elapsed = _ms(t0, cfg)
        for pattern, energy, ref, degenerate in match_spectrum(energies, exact, cfg.degeneracy_tol):
            rows.append(SpectrumRow(
                cfg.experiment_id, cfg.L, N, float(U), pattern_label(pattern), "projection",
                energy, ref, abs(energy - ref), result.converged, result.iterations, elapsed, degenerate,
            ))
    return rows


def _oracle_ground(H, L: int, N: int) -> float:
    return float(exact_sector_spectrum(H, L, N).energies[0])


def gap_rows(cfg: ExperimentConfig, U: float) -> list[SpectrumRow]:
    """Neutral gaps and the g_+/g_-/g triple by finite differences at one ``U``."""
    H = build_model(cfg, U)
    w, wp = cfg.weight_vector(), cfg.perturbed_weights()
    opt = SectorOptimizer(cfg, H, w)
    rows = []

    def row(N, label, value, ref, result, t0, method="finite-difference"):
        err = abs(value - ref) if math.isfinite(value) else math.nan
        conv = result.converged if result is not None else False
        iters = result.iterations if result is not None else 0
        rows.append(SpectrumRow(cfg.experiment_id, cfg.L, N, float(U), label, method,
                                value, ref, err, conv, iters, _ms(t0, cfg)))

    for N in cfg.sectors:
        t0 = time.perf_counter()
        exact = exact_sector_spectrum(H, cfg.L, N).energies
        if exact.size >= 2:
            _, result = opt(N)
            levels = sector_energies(opt.evaluator(N), w, wp, N)
            try:
                ref = neutral_gap(exact, cfg.degeneracy_tol)
            except ValueError:
                ref = math.nan
            try:
                value = neutral_gap(levels.values(), cfg.gap_tol)
            except ValueError:
                value = math.nan
            row(N, "neutral", value, ref, result, t0)
        for label in ("g_plus", "g_minus", "g"):
            t0 = time.perf_counter()
            if not 0 < N < cfg.L:
                row(N, label, math.nan, math.nan, None, t0, method="error")
                log.warning("%s undefined for N=%d on L=%d", label, N, cfg.L)
                continue
            e = {n: extract_eigenenergy(opt.evaluator(n), w, wp, occupied_modes(ground_pattern(w, n)))
                 for n in (N - 1, N, N + 1)}
            x = {n: _oracle_ground(H, cfg.L, n) for n in (N - 1, N, N + 1)}
            value = {"g_plus": e[N] - e[N + 1], "g_minus": e[N - 1] - e[N],
                     "g": e[N + 1] + e[N - 1] - 2 * e[N]}[label]
            ref = {"g_plus": x[N] - x[N + 1], "g_minus": x[N - 1] - x[N],
                   "g": x[N + 1] + x[N - 1] - 2 * x[N]}[label]
            row(N, label, value, ref, opt(N)[1], t0)
    return rows


def _map_over_u(worker, cfg: ExperimentConfig) -> list:
    grid = list(cfg.u_grid)
    if cfg.jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(partial(worker, cfg), grid))
    else:
        chunks = [worker(cfg, U) for U in grid]
    return [r for chunk in chunks for r in chunk]


def run_spectrum(cfg: ExperimentConfig) -> SpectrumTable:
    return SpectrumTable(_map_over_u(spectrum_rows, cfg))


def run_gaps(cfg: ExperimentConfig) -> SpectrumTable:
    return SpectrumTable(_map_over_u(gap_rows, cfg))


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def __post_init__(self):
        # plain Python scalars keep the JSON report serializable
        self.passed = bool(self.passed)
        self.value = float(self.value)
        self.threshold = float(self.threshold)


def _random_state(rng, n_modes: int) -> StateVector:
    v = rng.normal(size=1 << n_modes) + 1j * rng.normal(size=1 << n_modes)
    return StateVector(v / np.linalg.norm(v), n_modes)


def check_unitarity(cfg: ExperimentConfig, rng) -> Check:
    """Norm preservation of G and the ansatz, plus factor identities against expm on four modes."""
    L = cfg.L
    worst = 0.0
    n = AnsatzParams.uccsd(L).n_params
    for _ in range(3):
        state = _random_state(rng, 2 * L)
        params = AnsatzParams.uccsd(L, cfg.trotter_steps, rng.normal(0.0, 0.5, n))
        worst = max(worst, abs(apply_ansatz(params, state).norm() - 1.0))
        w = WeightVector(tuple(rng.uniform(0.05, 0.5, L)))
        worst = max(worst, abs(apply_G(w, state).norm() - 1.0))
    modes = 4
    state = _random_state(rng, modes)
    for exc, apply in (
        (single_excitation(0, 2), lambda t: apply_single_factor(t, 0, 2, state, modes)),
        (double_excitation(0, 1, 2, 3), lambda t: apply_double_factor(t, 0, 1, 2, 3, state, modes)),
    ):
        t = float(rng.normal())
        exact = expm(t * dense_matrix(excitation_generator(exc), modes)) @ state.amplitudes
        worst = max(worst, float(np.abs(exact - apply(t).amplitudes).max()))
    return Check("unitarity", worst < 1e-10, worst, 1e-10, "G, ansatz norms and expm factor oracle")


def check_projection(cfg: ExperimentConfig, rng) -> Check:
    L = min(cfg.L, 5)
    worst = 0.0
    for _ in range(10):
        state = _random_state(rng, 2 * L)
        for N in range(L + 1):
            a = sector_projection_fourier(state, N, L)
            b = project_physical_number(state, N, L)
            worst = max(worst, float(np.abs(a.amplitudes - b.amplitudes).max()))
    w = WeightVector(tuple(rng.uniform(0.05, 0.5, L)))
    worst = max(worst, float(np.abs(build_free_wfield(w).amplitudes
                                    - apply_G(w, StateVector.vacuum(2 * L)).amplitudes).max()))
    return Check("projection_equivalence", worst < 1e-12, worst, 1e-12,
                 "phase quadrature vs direct projection; product vs exponential w-field")


def check_oracle_reconstruction(cfg: ExperimentConfig) -> Check:
    w, wp = cfg.weight_vector(), cfg.perturbed_weights()
    worst = 0.0
    for U in cfg.u_grid:
        H = build_model(cfg, U)
        for N in cfg.sectors:
            spectrum = exact_sector_spectrum(H, cfg.L, N)
            evaluator = OracleEvaluator(H, cfg.L, N, w)
            ranks = ordering(w, sector=N).ranks
            for pattern, energy in sector_energies(evaluator, w, wp, N).items():
                worst = max(worst, abs(energy - spectrum.energies[ranks[pattern] - 1]))
    return Check("oracle_reconstruction", worst < 1e-8, worst, 1e-8,
                 "finite-difference extraction on exact sector energies")


def check_linearity(cfg: ExperimentConfig, rng) -> Check:
    U = next((u for u in cfg.u_grid if u != 0), 1.0)
    H = build_model(cfg, U)
    w = cfg.weight_vector()
    template = AnsatzParams.uccsd(cfg.L, cfg.trotter_steps)
    theta = rng.normal(0.0, 0.3, template.n_params)
    worst = 0.0
    for m in range(cfg.L):
        grid = [w.ws[m] - 0.02, w.ws[m] - 0.01, w.ws[m]]
        res = linearity_scan(lambda wx: AnsatzEnergy(wx, H, template)(theta), w, m, grid,
                            split_on_ordering=False)
        worst = max(worst, res.max_residual)
    return Check("linearity", worst < 1e-9, worst, 1e-9, f"affine in each single-mode weight at fixed angles, U={U}")


def trotter_curve(cfg: ExperimentConfig, U: float, steps=(1, 2, 4)) -> dict:
    """Deviation of the optimized full w-field energy from the exact ensemble energy per step count."""
    H = build_model(cfg, U)
    w = cfg.weight_vector()
    exact = exact_ensemble_energy(w, H)
    out = {}
    for n in steps:
        result = minimize_ensemble(w, H, AnsatzParams.uccsd(cfg.L, n), cfg.optimizer)
        out[n] = result.energy - exact
    return out


def check_trotter(cfg: ExperimentConfig) -> list[Check]:
    checks = []
    for U in cfg.u_grid:
        if U == 0:
            continue
        curve = trotter_curve(cfg, U)
        detail = ", ".join(f"n={n}: {d:.3e}" for n, d in curve.items())
        checks.append(Check(f"trotter_U={U:g}", curve[4] <= curve[1], curve[4] - curve[1], 0.0, detail))
        low = min(curve.values())
        checks.append(Check(f"variational_bound_U={U:g}", low >= -1e-9, low, -1e-9,
                            "optimized minus exact ensemble energy"))
    return checks


def run_validate(cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    checks = [check_unitarity(cfg, rng), check_projection(cfg, rng), check_oracle_reconstruction(cfg),
              check_linearity(cfg, rng)]
    checks += check_trotter(cfg)
    for c in checks:
        log.info("%s: %s (%.3e)", c.name, "pass" if c.passed else "FAIL", c.value)
    return {"config": cfg.to_dict(), "checks": [asdict(c) for c in checks],
            "passed": all(c.passed for c in checks)}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_table(table: SpectrumTable, cfg: ExperimentConfig, kind: str) -> tuple[Path, Path]:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg.experiment_id}_{kind}.csv"
    json_path = out / f"{cfg.experiment_id}_{kind}.json"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in table.rows:
            writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    payload = {"config": cfg.to_dict(), "rows": [_json_row(r) for r in table.rows]}
    write_json(payload, json_path)
    return csv_path, json_path


def _json_row(row: SpectrumRow) -> dict:
    d = asdict(row)
    for k, v in d.items():
        if isinstance(v, np.generic):
            v = d[k] = v.item()
        if isinstance(v, float) and math.isnan(v):
            d[k] = None
    return d


def write_json(payload: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
