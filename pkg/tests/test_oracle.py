import itertools
import math

import numpy as np
import pytest

from wfield_ucc.model import HubbardSpec, analytic_two_particle_spectrum, build_hubbard, build_noninteracting
from wfield_ucc.oracle import (
    OracleEvaluator,
    SectorTooLargeError,
    brute_force_ensemble_energy,
    derivative_extraction_noninteracting,
    exact_ensemble_energy,
    exact_sector_ensemble_energy,
    exact_sector_spectrum,
    free_ensemble_energy,
    sector_indices,
)
from wfield_ucc.spectroscopy import extract_eigenenergy
from wfield_ucc.weights import WeightVector, paper_default_weights


def test_free_spectrum_is_band_sums():
    L = 5
    eps = [-2 * math.cos(2 * math.pi * k / L) for k in range(L)]
    H = build_hubbard(HubbardSpec(L, 0.0))
    for N in range(L + 1):
        expected = sorted(sum(c) for c in itertools.combinations(eps, N))
        assert exact_sector_spectrum(H, L, N).energies == pytest.approx(expected, abs=1e-12)


def test_two_particle_spectrum_matches_closed_form():
    for U in (0.5, 1.0, 2.0, 4.0):
        ed = exact_sector_spectrum(build_hubbard(HubbardSpec(5, U)), 5, 2).energies
        assert np.abs(ed - analytic_two_particle_spectrum(U)).max() < 1e-10


def test_empty_sector():
    spec = exact_sector_spectrum(build_hubbard(HubbardSpec(4, 2.0)), 4, 0)
    assert spec.energies == pytest.approx([0.0])


def test_eigenvectors_live_in_sector():
    H = build_hubbard(HubbardSpec(4, 1.0))
    spec = exact_sector_spectrum(H, 4, 2)
    outside = np.setdiff1d(np.arange(16), sector_indices(4, 2))
    assert np.abs(spec.vectors[outside]).max() == 0.0
    assert np.allclose(spec.vectors.conj().T @ spec.vectors, np.eye(6))


def test_sector_size_guard(monkeypatch):
    import wfield_ucc.oracle as oracle
    monkeypatch.setattr(oracle, "MAX_SECTOR_DIM", 5)
    with pytest.raises(SectorTooLargeError):
        exact_sector_spectrum(build_hubbard(HubbardSpec(4, 1.0)), 4, 2)


def test_invalid_particle_number():
    with pytest.raises(ValueError):
        sector_indices(3, 4)


@pytest.mark.parametrize("U", [0.0, 1.0, 4.0])
def test_ensemble_energy_equals_brute_force(U):
    w = paper_default_weights(5)
    H = build_hubbard(HubbardSpec(5, U))
    energies = {N: exact_sector_spectrum(H, 5, N).energies for N in range(6)}
    assert exact_ensemble_energy(w, H) == pytest.approx(brute_force_ensemble_energy(w, energies), abs=1e-12)


def test_noninteracting_ensemble_is_weighted_sum():
    w = WeightVector((0.45, 0.3, 0.2, 0.1))
    omegas = (-1.5, -0.2, 0.7, 2.0)
    H = build_noninteracting(omegas)
    expected = float(np.dot(w.ws, omegas))
    assert exact_ensemble_energy(w, H) == pytest.approx(expected, abs=1e-12)
    assert free_ensemble_energy(omegas, w) == pytest.approx(expected, abs=1e-12)


def test_equal_weights_give_scaled_trace():
    # all patterns weigh 2**-L when every w_m = 1/2
    L = 4
    H = build_hubbard(HubbardSpec(L, 2.0))
    trace = sum(exact_sector_spectrum(H, L, N).energies.sum() for N in range(L + 1))
    energies = {N: exact_sector_spectrum(H, L, N).energies for N in range(L + 1)}
    w = WeightVector((0.5,) * L)
    assert brute_force_ensemble_energy(w, energies) == pytest.approx(trace / 2 ** L, abs=1e-12)


def test_translation_invariance_of_site_model():
    H = build_hubbard(HubbardSpec(5, 2.0))
    ws = (0.47, 0.41, 0.33, 0.24, 0.12)
    base = exact_ensemble_energy(WeightVector(ws), H)
    for s in range(1, 5):
        shifted = WeightVector(ws[s:] + ws[:s])
        assert exact_ensemble_energy(shifted, H) == pytest.approx(base, abs=1e-12)


def test_ensemble_energy_below_any_reassignment():
    w = paper_default_weights(5)
    H = build_hubbard(HubbardSpec(5, 1.0))
    spec = exact_sector_spectrum(H, 5, 2)
    weights = np.sort([np.prod(w.mu[list(c)]) for c in itertools.combinations(range(5), 2)])[::-1]
    best = exact_sector_ensemble_energy(w, H, 2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert best <= float(np.dot(weights, rng.permutation(spec.energies))) + 1e-12


def test_derivative_extraction_examples():
    assert derivative_extraction_noninteracting((0.8,), WeightVector((0.3,)), (1,)) == pytest.approx(0.8, abs=1e-8)
    assert derivative_extraction_noninteracting((0.8, -2.0), WeightVector((0.3, 0.2)), (0, 0)) == 0.0
    value = derivative_extraction_noninteracting((1.0, 2.0), WeightVector((0.4, 0.3)), (1, 1))
    assert value == pytest.approx(3.0, abs=1e-8)
    with pytest.raises(ValueError):
        derivative_extraction_noninteracting((1.0,), WeightVector((0.4, 0.3)), (1, 1))


def test_derivative_route_agrees_with_finite_differences():
    omegas = (1.0, 2.0)
    w, wp = WeightVector((0.4, 0.3)), WeightVector((0.395, 0.295))
    H = build_noninteracting(omegas)
    ev = OracleEvaluator(H, 2, 2, w)
    assert extract_eigenenergy(ev, w, wp, (0, 1)) == pytest.approx(
        derivative_extraction_noninteracting(omegas, w, (1, 1)), abs=1e-8)


def test_oracle_evaluator_reconstructs_spectrum():
    w = paper_default_weights(5)
    wp = w.shifted(0.005)
    H = build_hubbard(HubbardSpec(5, 2.0))
    for N in (2, 3):
        ev = OracleEvaluator(H, 5, N, w)
        got = sorted(extract_eigenenergy(ev, w, wp, c) for c in itertools.combinations(range(5), N))
        assert np.abs(np.array(got) - ev.spectrum.energies).max() < 1e-8
