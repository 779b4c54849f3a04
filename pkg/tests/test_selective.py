import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diceconf import (
    RCCurve,
    ScoredPrediction,
    aurc,
    coverage_at_risk,
    oracle_curve,
    random_baseline,
    rc_curve,
)

def make_batch(confidences, losses):
    return [
        ScoredPrediction(id=f"s{i:03d}", confidence=c, loss=l)
        for i, (c, l) in enumerate(zip(confidences, losses))
    ]


class TestRcCurve:
    def test_worked_example(self):
        batch = [
            ScoredPrediction("a", 0.9, 0.2),
            ScoredPrediction("b", 0.5, 0.4),
            ScoredPrediction("c", 0.1, 0.9),
        ]
        curve = rc_curve(batch)
        assert curve.coverages.tolist() == [1 / 3, 2 / 3, 1.0]
        assert curve.risks[0] == 0.2
        assert curve.risks[1] == pytest.approx(0.3, abs=1e-15)
        assert curve.risks[2] == 0.5

    def test_single_item(self):
        curve = rc_curve([ScoredPrediction("a", 0.7, 0.25)])
        assert curve.coverages.tolist() == [1.0]
        assert curve.risks.tolist() == [0.25]

    def test_tie_break_by_id(self):
        batch = [
            ScoredPrediction("b", 0.5, 0.4),
            ScoredPrediction("a", 0.5, 0.2),
            ScoredPrediction("c", 0.5, 0.9),
        ]
        curve = rc_curve(batch)
        # ids sorted ascending: a, b, c
        assert curve.risks[0] == 0.2
        assert curve.risks[1] == pytest.approx(0.3, abs=1e-15)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            rc_curve([])

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            rc_curve([ScoredPrediction("a", 0.5, 0.1), ScoredPrediction("a", 0.2, 0.3)])

    def test_loss_range(self):
        with pytest.raises(ValueError):
            rc_curve([ScoredPrediction("a", 0.5, 1.5)])

    @given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=30))
    @settings(max_examples=150)
    def test_invariant_under_increasing_transform(self, losses):
        rng = np.random.default_rng(len(losses))
        confidences = rng.random(len(losses))
        base = rc_curve(make_batch(confidences, losses))
        transformed = rc_curve(make_batch(np.exp(3.0 * confidences) - 0.5, losses))
        assert np.array_equal(base.risks, transformed.risks)

    @given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=30))
    @settings(max_examples=150)
    def test_final_point_equals_mean_loss_exactly(self, losses):
        rng = np.random.default_rng(len(losses) + 1)
        batch = make_batch(rng.random(len(losses)), losses)
        curve = rc_curve(batch)
        baseline = random_baseline([(b.id, b.loss) for b in batch])
        assert curve.risks[-1] == baseline
        assert baseline == float(
            Fraction(sum(Fraction(l) for l in losses), len(losses))
        )


class TestAurc:
    def test_worked_example(self):
        curve = RCCurve(
            coverages=np.array([1 / 3, 2 / 3, 1.0]),
            risks=np.array([0.2, 0.3, 0.5]),
        )
        assert aurc(curve) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_constant_curve(self):
        curve = RCCurve(coverages=np.array([0.5, 1.0]), risks=np.array([0.7, 0.7]))
        assert aurc(curve) == pytest.approx(0.7, abs=1e-15)

    def test_two_item_oracle(self):
        curve = oracle_curve([("a", 0.0), ("b", 1.0)])
        assert aurc(curve) == 0.25


class TestOracleCurve:
    def test_sorts_ascending(self):
        curve = oracle_curve([("a", 0.9), ("b", 0.2), ("c", 0.4)])
        assert curve.risks[0] == 0.2
        assert curve.risks[1] == pytest.approx(0.3, abs=1e-15)
        assert curve.risks[2] == 0.5

    def test_constant_losses(self):
        curve = oracle_curve([("a", 0.3), ("b", 0.3)])
        assert np.allclose(curve.risks, 0.3)

    def test_empty(self):
        with pytest.raises(ValueError):
            oracle_curve([])

    @given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=30))
    @settings(max_examples=150)
    def test_pointwise_dominance_exact(self, losses):
        rng = np.random.default_rng(len(losses) + 2)
        batch = make_batch(rng.random(len(losses)), losses)
        curve = rc_curve(batch)
        oracle = oracle_curve([(b.id, b.loss) for b in batch])
        assert np.all(oracle.risks <= curve.risks)
        assert aurc(oracle) <= aurc(curve) <= 1.0


class TestRandomBaseline:
    def test_examples(self):
        assert random_baseline([("a", 0.2), ("b", 0.4), ("c", 0.9)]) == 0.5
        assert random_baseline([("a", 0.123)]) == 0.123

    def test_empty(self):
        with pytest.raises(ValueError):
            random_baseline([])


class TestCoverageAtRisk:
    def setup_method(self):
        self.curve = RCCurve(
            coverages=np.array([1 / 3, 2 / 3, 1.0]),
            risks=np.array([0.2, 0.3, 0.5]),
        )

    def test_worked_example(self):
        assert coverage_at_risk(self.curve, 0.3) == 2 / 3

    def test_unreachable_target(self):
        assert coverage_at_risk(self.curve, 0.1) == 0.0

    def test_target_above_full_coverage_risk(self):
        assert coverage_at_risk(self.curve, 0.9) == 1.0

    def test_monotone_in_target(self):
        targets = np.linspace(0.0, 1.0, 50)
        values = [coverage_at_risk(self.curve, t) for t in targets]
        assert all(a <= b for a, b in zip(values, values[1:]))
