import itertools
import math

import numpy as np
import pytest

from wfield_ucc.fock import OperatorTerms, StateVector, apply_terms, dense_matrix, popcounts
from wfield_ucc.model import (
    APPC_BLOCKS,
    HubbardSpec,
    ModelError,
    analytic_block_eigs,
    analytic_two_particle_spectrum,
    bloch_constants,
    bloch_energies,
    bloch_mode_order,
    build_hubbard,
    build_hubbard_bloch,
    build_noninteracting,
)
from wfield_ucc.oracle import exact_sector_spectrum


def sector_eigs(H, L, N):
    idx = np.flatnonzero(popcounts(L) == N)
    return np.linalg.eigvalsh(dense_matrix(H, L)[np.ix_(idx, idx)])


def test_adjacent_pair_diagonal():
    H = dense_matrix(build_hubbard(HubbardSpec(3, 2.0)), 3)
    assert H[0b011, 0b011] == pytest.approx(2.0)


@pytest.mark.parametrize("L", [3, 4, 5])
def test_free_sector_spectra_are_band_sums(L):
    H = build_hubbard(HubbardSpec(L, 0.0))
    eps = [-2 * math.cos(2 * math.pi * k / L) for k in range(L)]
    for N in range(L + 1):
        expected = sorted(sum(c) for c in itertools.combinations(eps, N))
        assert sector_eigs(H, L, N) == pytest.approx(expected, abs=1e-12)


def test_empty_sector_single_zero():
    assert sector_eigs(build_hubbard(HubbardSpec(4, 3.0)), 4, 0) == pytest.approx([0.0])


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_hermitian_and_number_conserving(L):
    H = dense_matrix(build_hubbard(HubbardSpec(L, 1.7)), L)
    assert np.abs(H - H.conj().T).max() < 1e-14
    n = np.diag(popcounts(L).astype(float))
    assert np.abs(H @ n - n @ H).max() < 1e-14


def test_two_site_chain_hopping_counts_twice():
    # both bonds of a periodic two-site ring connect the same pair
    H = dense_matrix(build_hubbard(HubbardSpec(2, 0.0)), 2)
    assert abs(H[0b01, 0b10]) == pytest.approx(2.0)


def test_spec_validation():
    with pytest.raises(ModelError):
        HubbardSpec(1, 1.0)
    with pytest.raises(ModelError):
        HubbardSpec(4, 1.0, boundary="open")


def test_noninteracting_diagonal():
    h = build_noninteracting((1.0, 2.0))
    assert apply_terms(h, StateVector.basis(0b01, 2)).amplitudes[0b01] == 1.0
    assert apply_terms(h, StateVector.basis(0b11, 2)).amplitudes[0b11] == 3.0
    assert len(build_noninteracting((0.0, 0.0))) == 0


def test_bloch_energies():
    assert bloch_energies(5)[0] == pytest.approx(-2.0)
    assert bloch_energies(4)[1] == pytest.approx(0.0, abs=1e-15)
    for L in range(2, 10):
        assert abs(bloch_energies(L).sum()) < 1e-12


def test_bloch_mode_order():
    assert bloch_mode_order(5) == [0, 1, 4, 2, 3]


@pytest.mark.parametrize("U", [0.0, 0.7, 3.0, 8.0])
@pytest.mark.parametrize("L", [3, 4, 5])
def test_bloch_hamiltonian_same_spectrum(L, U):
    site = build_hubbard(HubbardSpec(L, U))
    bloch, _ = build_hubbard_bloch(HubbardSpec(L, U))
    Hb = dense_matrix(bloch, L)
    assert np.abs(Hb - Hb.conj().T).max() < 1e-12
    for N in range(L + 1):
        assert sector_eigs(bloch, L, N) == pytest.approx(sector_eigs(site, L, N), abs=1e-10)


def test_bloch_hamiltonian_real_at_five_sites():
    bloch, _ = build_hubbard_bloch(HubbardSpec(5, 2.0))
    assert np.abs(dense_matrix(bloch, 5).imag).max() < 1e-12


def test_constants_match_quoted_values():
    c = bloch_constants(5)
    assert abs(c.R - 0.4472) < 5e-5
    assert c.R == pytest.approx(1 / math.sqrt(5), abs=1e-15)
    # the quoted 0.2763 truncates (5 - sqrt 5)/10 = 0.27639...
    assert c.D == pytest.approx((5 - math.sqrt(5)) / 10, abs=1e-15)
    assert abs(c.D - 0.2763) < 1e-4
    with pytest.raises(ModelError):
        bloch_constants(6)


def test_block_eigs_decoupled_at_zero():
    eps = bloch_energies(5)
    for (a, b), (c, d) in APPC_BLOCKS:
        pair = (eps[a] + eps[b], eps[c] + eps[d])
        assert analytic_block_eigs(0.0, pair) == pytest.approx((min(pair), max(pair)))


def test_block_ground_value_at_unit_coupling():
    eps = bloch_energies(5)
    low, _ = analytic_block_eigs(1.0, (eps[0] + eps[1], eps[2] + eps[4]))
    ed = exact_sector_spectrum(build_hubbard(HubbardSpec(5, 1.0)), 5, 2).energies
    assert low == pytest.approx(-2.390, abs=5e-4)
    assert low == pytest.approx(ed[0], abs=1e-10)


@pytest.mark.parametrize("U", np.linspace(0, 8, 17))
def test_closed_form_equals_dense_spectrum(U):
    ed = sector_eigs(build_hubbard(HubbardSpec(5, U)), 5, 2)
    assert np.abs(analytic_two_particle_spectrum(U) - ed).max() < 1e-10


def test_closed_form_restricted():
    with pytest.raises(ModelError):
        analytic_two_particle_spectrum(1.0, L=5, N=3)


def test_blocks_cover_all_pairs_by_momentum():
    pairs = [p for block in APPC_BLOCKS for p in block]
    assert sorted(pairs) == sorted(itertools.combinations(range(5), 2))
    for p, q in APPC_BLOCKS:
        assert sum(p) % 5 == sum(q) % 5


def test_scalar_operator_has_no_modes():
    assert OperatorTerms.identity().max_mode() == -1
