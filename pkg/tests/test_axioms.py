"""Behaviour of the risk-measure axiom falsifier.

The documented outcomes: the tail-average aggregator survives every
check; plain expectation is not averse (F6) and its induced deviation is
identically zero (F9); the mean-plus-standard-deviation aggregator is
convex (a seminorm plus a linear functional, so no F1 counterexample can
exist) but is not monotone (F3), which is why it is only a baseline.
"""

import numpy as np
import pytest

from grouprisk import AggregatorSpec, ParameterError, check_axiom

CVAR = AggregatorSpec.cvar(0.7)
SD = AggregatorSpec.sd_penalty(1.0)
ERM = AggregatorSpec.expectation()

ALL_AXIOMS = ("F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "F9")


class TestCheckerContract:
    def test_unknown_axiom(self):
        with pytest.raises(ParameterError):
            check_axiom(CVAR, "F12", 10)

    def test_bad_trials(self):
        with pytest.raises(ParameterError):
            check_axiom(CVAR, "F1", 0)

    def test_seed_reproducibility(self):
        a = check_axiom(SD, "F3", 200, rng_seed=7)
        b = check_axiom(SD, "F3", 200, rng_seed=7)
        assert a.passed == b.passed
        assert a.counterexample == b.counterexample

    def test_report_round_trip(self):
        rep = check_axiom(ERM, "F6", 50, rng_seed=3)
        d = rep.to_dict()
        assert d["axiom"] == "F6"
        assert d["passed"] is False
        assert d["counterexample"]["trial"] >= 0


class TestCvarAxioms:
    @pytest.mark.parametrize("axiom", ALL_AXIOMS)
    def test_all_pass(self, axiom):
        rep = check_axiom(CVAR, axiom, 300, rng_seed=11)
        assert rep.passed, rep.counterexample

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.95])
    def test_other_levels_pass_core(self, alpha):
        spec = AggregatorSpec.cvar(alpha)
        for axiom in ("F1", "F3", "F6", "F9"):
            assert check_axiom(spec, axiom, 200, rng_seed=5).passed


class TestExpectationAxioms:
    def test_not_averse(self):
        rep = check_axiom(ERM, "F6", 300, rng_seed=0)
        assert not rep.passed
        ce = rep.counterexample
        assert ce["lhs"] == pytest.approx(ce["rhs"], abs=1e-9)

    def test_deviation_vanishes_on_nonconstants(self):
        assert not check_axiom(ERM, "F9", 300, rng_seed=0).passed

    @pytest.mark.parametrize("axiom", ["F1", "F2", "F3", "F4", "F5", "F7", "F8"])
    def test_coherence_axioms_pass(self, axiom):
        assert check_axiom(ERM, axiom, 300, rng_seed=1).passed


class TestSdPenaltyAxioms:
    def test_convexity_has_no_counterexample(self):
        """E + lam*sigma is convex: sigma(Z) is the norm of Z - E(Z).

        The search must come back empty, including over sign-flip pairs.
        """
        assert check_axiom(SD, "F1", 1000, rng_seed=0).passed

    def test_monotonicity_fails(self):
        rep = check_axiom(SD, "F3", 1000, rng_seed=0)
        assert not rep.passed
        z = np.array(rep.counterexample["values"])
        z2 = np.array(rep.counterexample["values2"])
        assert np.all(z <= z2 + 1e-12)
        assert rep.counterexample["lhs"] > rep.counterexample["rhs"]

    def test_known_monotonicity_violation(self):
        """Raising the single low coordinate of (0, 3, 3) to 3 lowers the
        aggregate from 2 + sqrt(2) to 3, despite the pointwise increase."""
        from grouprisk import DiscreteRandomVariable, aggregate
        low = DiscreteRandomVariable.uniform([0.0, 3.0, 3.0])
        high = DiscreteRandomVariable.uniform([3.0, 3.0, 3.0])
        assert aggregate(low, SD) == pytest.approx(2.0 + np.sqrt(2.0))
        assert aggregate(high, SD) == pytest.approx(3.0)

    @pytest.mark.parametrize("axiom", ["F2", "F4", "F5", "F6", "F7", "F8", "F9"])
    def test_remaining_axioms_pass(self, axiom):
        assert check_axiom(SD, axiom, 300, rng_seed=2).passed


class TestMaxAndTopK:
    def test_max_is_averse_and_coherent(self):
        spec = AggregatorSpec.max_value()
        for axiom in ALL_AXIOMS:
            assert check_axiom(spec, axiom, 200, rng_seed=4).passed

    def test_top_k_core_axioms(self):
        # aversity is excluded: sampled spaces with exactly k atoms make
        # the top-k mean collapse to the expectation
        spec = AggregatorSpec.top_k(2)
        for axiom in ("F1", "F2", "F3", "F5", "F7", "F8"):
            assert check_axiom(spec, axiom, 200, rng_seed=4).passed
