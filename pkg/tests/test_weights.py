import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wfield_ucc.weights import (
    DegenerateWeightsError,
    WeightError,
    WeightVector,
    all_patterns,
    dfactor,
    index_to_pattern,
    many_mode_weight,
    many_mode_weights,
    ordering,
    paper_default_weights,
    pattern_to_index,
    same_ordering,
)

PAPER_WS = (0.5, 0.4, 0.3, 0.2, 0.1)

weight_lists = st.lists(st.floats(0.01, 0.49), min_size=1, max_size=8)


def test_many_mode_weight_product():
    assert many_mode_weight(WeightVector((0.5, 0.4)), (1, 0)) == pytest.approx(0.30)


def test_empty_pattern_is_dfactor():
    w = WeightVector((0.3, 0.2, 0.45))
    assert many_mode_weight(w, (0, 0, 0)) == pytest.approx(w.dfactor)


def test_default_ladder_normalized():
    w = WeightVector(PAPER_WS)
    assert abs(sum(many_mode_weight(w, p) for p in all_patterns(5)) - 1.0) < 1e-14


def test_pattern_length_mismatch():
    with pytest.raises(WeightError):
        many_mode_weight(WeightVector((0.3, 0.2)), (1, 0, 1))


def test_dfactor_values():
    assert dfactor(WeightVector(PAPER_WS)) == pytest.approx(0.1512, abs=1e-15)
    assert dfactor(WeightVector((0.5,))) == 0.5
    # the formula tends to 1 as all weights vanish
    assert dfactor(WeightVector((1e-12, 1e-12))) == pytest.approx(1.0)


def test_paper_default_ladder():
    assert paper_default_weights(5).ws == pytest.approx(PAPER_WS)


def test_weight_bounds_and_warning():
    with pytest.raises(WeightError):
        WeightVector((0.0, 0.3))
    with pytest.raises(WeightError):
        WeightVector((1.0,))
    with pytest.warns(UserWarning):
        WeightVector((0.6,))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        WeightVector((0.5,))


def test_ordering_single_mode():
    ranks = ordering(WeightVector((0.4,))).ranks
    assert ranks == {(0,): 1, (1,): 2}


def test_ordering_two_modes():
    w = WeightVector((0.4, 0.3))
    om = ordering(w)
    assert om.patterns_by_rank() == [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert [many_mode_weight(w, p) for p in om.patterns_by_rank()] == pytest.approx([0.42, 0.28, 0.18, 0.12])


def test_ordering_tie_names_patterns():
    with pytest.raises(DegenerateWeightsError) as err:
        ordering(WeightVector((0.5, 0.5)))
    assert (1, 0) in err.value.patterns or (0, 1) in err.value.patterns


def test_default_ladder_ties_only_across_sectors():
    w = paper_default_weights(5)
    with pytest.raises(DegenerateWeightsError):
        ordering(w)
    for N in range(6):
        ordering(w, sector=N)


def test_same_ordering_examples():
    w = WeightVector((0.4, 0.3))
    assert same_ordering(w, w)
    assert same_ordering(w, WeightVector((0.4, 0.35)))
    assert not same_ordering(w, WeightVector((0.3, 0.4)))


def test_same_ordering_by_enumeration():
    # independent check: rank by sorting explicit products
    a, b = WeightVector((0.4, 0.3)), WeightVector((0.4, 0.35))
    def ranks(w):
        prods = {p: np.prod([w.ws[m] if x else 1 - w.ws[m] for m, x in enumerate(p)])
                 for p in itertools.product((0, 1), repeat=2)}
        return sorted(prods, key=lambda p: -prods[p])
    assert ranks(a) == ranks(b)


def test_pattern_index_roundtrip():
    for i in range(32):
        assert pattern_to_index(index_to_pattern(i, 5)) == i


@settings(max_examples=60, deadline=None)
@given(weight_lists)
def test_normalization_identity(ws):
    w = WeightVector(tuple(ws))
    assert abs(many_mode_weights(w).sum() - 1.0) < 1e-14


@settings(max_examples=60, deadline=None)
@given(weight_lists)
def test_weight_over_dfactor_is_mu_monomial(ws):
    w = WeightVector(tuple(ws))
    mu = w.mu
    for i in range(1 << w.L):
        p = index_to_pattern(i, w.L)
        expected = np.prod([mu[m] for m, x in enumerate(p) if x])
        assert many_mode_weight(w, p) / w.dfactor == pytest.approx(expected, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 0.45), min_size=2, max_size=5, unique=True), st.floats(0.2, 3.0))
def test_ordering_invariant_under_common_mu_scale(ws, scale):
    w = WeightVector(tuple(ws))
    mu = w.mu * scale
    if np.any(mu / (1 + mu) >= 1):
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaled = WeightVector(tuple(mu / (1 + mu)))
    for N in range(w.L + 1):
        try:
            base = ordering(w, sector=N)
        except DegenerateWeightsError:
            continue
        assert ordering(scaled, sector=N).ranks == base.ranks


def test_shift_and_replace():
    w = WeightVector((0.3, 0.2))
    assert w.shifted(0.01).ws == pytest.approx((0.31, 0.21))
    assert w.shifted(0.01, [1]).ws == pytest.approx((0.3, 0.21))
    assert w.replaced(WeightVector((0.1, 0.1)), [0]).ws == pytest.approx((0.1, 0.2))
