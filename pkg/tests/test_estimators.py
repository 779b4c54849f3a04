import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diceconf import (
    amsp,
    ane,
    entropy_map,
    hamming_confidence,
    mmmc,
    sdc,
    threshold,
    tla,
    tla_fit_tau,
)

probs = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=24)


def binary_entropy_oracle(p):
    """Scalar formula with explicit zero branches; independent of the library path."""
    out = 0.0
    for t in (p, 1.0 - p):
        if t > 0.0:
            out -= t * math.log2(t)
    return out


class TestEntropyMap:
    def test_half_is_one_bit(self):
        assert entropy_map([0.5]).tolist() == [1.0]

    def test_certainty_is_zero(self):
        u = entropy_map([1.0, 0.0])
        assert u.tolist() == [0.0, 0.0]

    def test_quarter_derived_value(self):
        # frozen from the scalar binary-entropy formula
        assert entropy_map([0.25])[0] == pytest.approx(0.8112781244591328, abs=1e-15)

    @given(probs)
    @settings(max_examples=150)
    def test_matches_scalar_oracle(self, p):
        u = entropy_map(p)
        expected = [binary_entropy_oracle(x) for x in p]
        assert np.allclose(u, expected, atol=1e-12)
        assert np.all(u >= 0.0) and np.all(u <= 1.0)


class TestSdc:
    def test_zero_zero(self):
        assert sdc([0.0, 0.0], [0, 0]) == 0.0

    def test_perfect_confidence_fixed_point(self):
        assert sdc([1.0, 0.0, 1.0], [1, 0, 1]) == 1.0

    def test_worked_example(self):
        assert sdc([0.8, 0.6, 0.1], [1, 1, 0]) == pytest.approx(0.8, abs=1e-15)

    def test_zero_iff_no_foreground_mass(self):
        assert sdc([0.0, 0.9], [1, 0]) == 0.0
        assert sdc([0.3, 0.9], [0, 0]) == 0.0
        assert sdc([1e-300, 0.0], [1, 0]) > 0.0

    def test_one_iff_exact_match(self):
        assert sdc([1.0, 0.0], [1, 0]) == 1.0
        assert sdc([0.999, 0.0], [1, 0]) < 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sdc([0.5], [1, 0])


class TestAmsp:
    def test_examples(self):
        assert amsp([0.5, 0.5]) == 0.5
        assert amsp([1.0, 0.0]) == 1.0
        assert amsp([0.9, 0.2]) == pytest.approx(0.85, abs=1e-15)

    @given(probs)
    def test_range(self, p):
        assert 0.5 <= amsp(p) <= 1.0 + 1e-15


class TestAne:
    def test_examples(self):
        assert ane([0.5]) == -1.0
        assert ane([1.0, 0.0]) == 0.0
        assert ane([0.5, 1.0]) == -0.5

    @given(probs)
    def test_is_negative_mean_entropy(self, p):
        assert ane(p) == pytest.approx(-float(np.mean(entropy_map(p))), abs=1e-15)


class TestMmmc:
    def test_examples(self):
        assert mmmc([0.5, 0.5, 1.0]) == -1.0
        assert mmmc([1.0, 1.0]) == 0.0
        assert mmmc([0.5, 1.0, 1.0]) == 0.0

    @given(probs)
    def test_nonpositive(self, p):
        assert mmmc(p) <= 0.0


class TestTla:
    def test_only_uncertain_pixel_selected(self):
        assert tla([0.5, 1.0], 0.5) == -1.0

    def test_empty_selection_convention(self):
        assert tla([1.0, 1.0], 0.5) == 0.0

    def test_all_selected(self):
        assert tla([0.5, 0.5], 0.0) == -1.0

    @given(probs)
    def test_negative_tau_recovers_ane(self, p):
        assert tla(p, -1.0) == pytest.approx(ane(p), abs=1e-15)


class TestTlaFitTau:
    def test_worked_example(self):
        tau = tla_fit_tau([[0.9, 0.2, 0.3, 0.4]], 0.5)
        # alpha = 1/4; pooled entropies sorted ascending; nearest rank ceil(0.75*4) = 3
        assert tau == pytest.approx(binary_entropy_oracle(0.3), abs=1e-12)

    def test_alpha_one_gives_smallest_pooled_value(self):
        assert tla_fit_tau([[1.0, 1.0]], 0.5) == 0.0

    def test_pooling_duplicates_preserves_quantile(self):
        image = [0.9, 0.2, 0.3, 0.4]
        assert tla_fit_tau([image, image], 0.5) == tla_fit_tau([image], 0.5)

    def test_empty_tuning_set(self):
        with pytest.raises(ValueError):
            tla_fit_tau([], 0.5)

    def test_tau_within_entropy_range(self):
        tau = tla_fit_tau([[0.1, 0.6, 0.95], [0.4, 0.2]], 0.5)
        assert 0.0 <= tau <= 1.0


class TestHammingConfidence:
    def test_examples(self):
        assert hamming_confidence([0.8, 0.3], [1, 0]) == pytest.approx(0.75, abs=1e-15)
        assert hamming_confidence([1.0, 0.0], [1, 0]) == 1.0

    @given(probs)
    @settings(max_examples=150)
    def test_equals_amsp_at_half_threshold(self, p):
        if any(x == 0.5 for x in p):
            return  # boundary pixels flip the identity
        yh = threshold(p, 0.5)
        assert hamming_confidence(p, yh) == amsp(p)  # bitwise identical terms

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming_confidence([0.5], [1, 0])


@given(probs, st.randoms(use_true_random=False))
@settings(max_examples=100)
def test_estimators_permutation_invariant(p, rand):
    order = list(range(len(p)))
    rand.shuffle(order)
    p2 = [p[i] for i in order]
    yh = threshold(p, 0.5)
    yh2 = [yh[i] for i in order]
    assert sdc(p, yh) == pytest.approx(sdc(p2, yh2), abs=1e-15)
    assert amsp(p) == pytest.approx(amsp(p2), abs=1e-15)
    assert ane(p) == pytest.approx(ane(p2), abs=1e-15)
    assert mmmc(p) == pytest.approx(mmmc(p2), abs=1e-15)
    assert hamming_confidence(p, yh) == pytest.approx(hamming_confidence(p2, yh2), abs=1e-15)
