import math

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from behavcal.core import Bias, Profile, ProfileKind
from behavcal.estimators import (
    EstimateResult,
    EstimationError,
    estimate,
    estimate_anchoring,
    estimate_coverage,
    estimate_disposition,
    estimate_extrapolation,
    estimate_groups,
    estimate_herding,
    estimate_lambda,
    estimate_representativeness,
    estimate_skew_choice,
    logistic_fit,
    read_estimates,
    write_estimates,
)
from behavcal.experiments import Anchor, Interval, Narrative, Portfolio, Position, Scenario, build_scenario_set
from behavcal.respondents import (
    BinaryChoice,
    GroundTruth,
    IntervalAnswer,
    Rating,
    SellChoice,
    Valuation,
)
from behavcal.seeding import derive_rng
from helpers import record, synthetic_records

NOISELESS = GroundTruth(choice_noise=0.0)


def test_logistic_fit_matches_statsmodels():
    rng = derive_rng(0, "t")
    x = rng.uniform(0, 4, 400)
    y = (rng.random(400) < 1 / (1 + np.exp(-(2 * x - 4)))).astype(float)
    beta, cov = logistic_fit(x, y)
    ref = sm.Logit(y, sm.add_constant(x)).fit(disp=0)
    np.testing.assert_allclose(beta, ref.params, rtol=1e-8)
    np.testing.assert_allclose(cov, ref.cov_params(), rtol=1e-6)


# -- loss aversion ----------------------------------------------------------


@pytest.mark.parametrize("lam", [1.0, 2.25, 3.0])
def test_lambda_noiseless_grid(lam):
    gt = NOISELESS.with_params(loss_aversion=lam)
    recs = synthetic_records(gt, build_scenario_set(Bias.LOSS_AVERSION, 21, 0))
    est = estimate_lambda(recs)
    assert abs(est.point - lam) <= (400 - 50) / 20 / 2 / 100 + 1e-12
    assert "separation" in est.flags


def test_lambda_noisy_fit():
    gt = GroundTruth().with_params(loss_aversion=2.25)
    recs = synthetic_records(gt, build_scenario_set(Bias.LOSS_AVERSION, 2000, 0), seed=3)
    est = estimate_lambda(recs)
    assert est.point == pytest.approx(2.25, abs=4 * est.stderr)
    assert not est.flags


def test_lambda_degenerate():
    recs = synthetic_records(NOISELESS.with_params(loss_aversion=0.1), build_scenario_set(Bias.LOSS_AVERSION, 21, 0))
    with pytest.raises(EstimationError):
        estimate_lambda(recs)
    with pytest.raises(EstimationError):
        estimate_lambda(recs[:3])


# -- disposition ------------------------------------------------------------


def _portfolio_records(winners_sold, losers_sold, n=10):
    recs = []
    for i in range(n):
        pf = Portfolio((Position(10, 12, "W"), Position(10, 8, "L")))
        sold = tuple(j for j, flag in ((1, i < winners_sold), (2, i < losers_sold)) if flag)
        recs.append(record(Scenario(f"p{i}", Bias.DISPOSITION, pf), SellChoice(sold)))
    return recs


def test_disposition_hand_ratio():
    assert estimate_disposition(_portfolio_records(8, 5)).point == pytest.approx(1.6)
    assert estimate_disposition(_portfolio_records(5, 5)).point == pytest.approx(1.0)
    inf = estimate_disposition(_portfolio_records(5, 0))
    assert "infinite_dr" in inf.flags and not inf.usable


def test_disposition_needs_opportunities():
    pf = Portfolio((Position(10, 12, "W"),))
    with pytest.raises(EstimationError):
        estimate_disposition([record(Scenario("x", Bias.DISPOSITION, pf), SellChoice((1,)))])


# -- coverage ---------------------------------------------------------------


def _iv(realized):
    return Scenario("i", Bias.OVERCONFIDENCE, Interval((1.0, 2.0), 0.8, 1.5, 0.1, realized))


def test_coverage_trivial():
    assert estimate_coverage([record(_iv(1.0), IntervalAnswer(0, 5))] * 4).point == 1.0
    assert estimate_coverage([record(_iv(1.3), IntervalAnswer(1.2, 1.2))] * 4).point == 0.0
    with pytest.raises(EstimationError):
        estimate_coverage([record(_iv(None), IntervalAnswer(0, 5))])
    assert estimate_coverage([record(_iv(None), IntervalAnswer(0, 5))], realized=[9.0]).point == 0.0


def test_coverage_calibrated_agent():
    recs = synthetic_records(GroundTruth(), build_scenario_set(Bias.OVERCONFIDENCE, 5000, 1))
    est = estimate_coverage(recs)
    assert est.point == pytest.approx(0.80, abs=3 * math.sqrt(0.16 / 5000))
    assert est.extras["miscalibration"] == pytest.approx(0.8 - est.point)


# -- herding / skew ----------------------------------------------------------


def test_herding_trivial_and_binomial():
    sets = build_scenario_set(Bias.HERDING, 400, 2)
    assert estimate_herding(synthetic_records(NOISELESS.with_params(w_herd=1.0), sets)).point == 1.0
    assert estimate_herding(synthetic_records(NOISELESS.with_params(w_herd=0.0), sets)).point == 0.0
    sets = build_scenario_set(Bias.HERDING, 1200, 3)
    est = estimate_herding(synthetic_records(GroundTruth().with_params(w_herd=0.7), sets, seed=1))
    assert est.n == 600
    assert abs(est.point - 0.7) <= 2 * math.sqrt(0.7 * 0.3 / 600) * 1.5


def test_skew_choice():
    sets = build_scenario_set(Bias.PROBABILITY_WEIGHTING, 300, 4)
    always = [record(s, BinaryChoice(s.payload.assets[s.payload.high_skew_index].label)) for s in sets]
    assert estimate_skew_choice(always).point == 1.0
    base = estimate_skew_choice(synthetic_records(GroundTruth(), sets * 5, seed=2)).point
    tilted = estimate_skew_choice(synthetic_records(GroundTruth().with_params(gamma_weight=0.65), sets * 5, seed=2)).point
    assert tilted > base


# -- anchoring ----------------------------------------------------------------


def test_anchoring_trivial():
    sets = build_scenario_set(Bias.ANCHORING, 200, 5)
    assert estimate_anchoring([record(s, Valuation(s.payload.anchor)) for s in sets]).point == pytest.approx(1.0)
    indep = estimate_anchoring(synthetic_records(NOISELESS, sets))
    assert abs(indep.point) < 3 / math.sqrt(200)
    with pytest.raises(EstimationError):
        estimate_anchoring([record(Scenario("a", Bias.ANCHORING, Anchor(1, 2)), Valuation(3))] * 5)


# -- extrapolation -------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.0, 0.6, 1.0])
def test_extrapolation_noiseless(theta):
    sets = build_scenario_set(Bias.EXTRAPOLATION, 100, 6)
    est = estimate_extrapolation(synthetic_records(NOISELESS.with_params(theta=theta), sets))
    assert est.point == pytest.approx(theta, abs=1e-9)


def test_extrapolation_ols_matches_statsmodels():
    sets = build_scenario_set(Bias.EXTRAPOLATION, 300, 7)
    recs = synthetic_records(GroundTruth().with_params(theta=0.6), sets, seed=1)
    est = estimate_extrapolation(recs)
    x = np.array([r.scenario.payload.last_return - r.scenario.payload.mean_return for r in recs])
    y = np.array([r.answer.value - r.scenario.payload.mean_return for r in recs])
    ref = sm.OLS(y, sm.add_constant(x)).fit()
    assert est.point == pytest.approx(ref.params[1], rel=1e-9)
    assert est.stderr == pytest.approx(ref.bse[1], rel=1e-9)


# -- representativeness ---------------------------------------------------------


def _narr(n_score, f_score, rating):
    return record(Scenario("n", Bias.REPRESENTATIVENESS, Narrative(n_score, f_score)), Rating(rating))


def test_representativeness_oracles():
    sets = build_scenario_set(Bias.REPRESENTATIVENESS, 200, 8)
    est = estimate_representativeness(synthetic_records(NOISELESS.with_params(tau_ratio=1.65), sets))
    assert est.point == pytest.approx(1.65, abs=1e-9)
    eq = estimate_representativeness(synthetic_records(NOISELESS, sets))
    assert eq.point == pytest.approx(1.0, abs=1e-9)
    rng = derive_rng(1, "t")
    fund_only = [_narr(n, f, 1 + 2 * f) for n, f in rng.uniform(0, 4, (50, 2))]
    assert estimate_representativeness(fund_only).point == pytest.approx(0.0, abs=1e-9)


def test_representativeness_drops_censored():
    recs = [_narr(4, 4, 10.0)] * 5 + [_narr(n, f, 1 + n + f) for n, f in [(1, 2), (2, 1), (0.5, 3), (3, 0.2), (2, 2.5)]]
    est = estimate_representativeness(recs)
    assert est.extras["censored"] == 5
    assert est.point == pytest.approx(1.0)


# -- grouping, IO ----------------------------------------------------------------


def test_estimate_dispatch():
    sets = build_scenario_set(Bias.HERDING, 20, 1)
    assert estimate("herding", synthetic_records(GroundTruth(), sets)).bias is Bias.HERDING


def test_groups_and_csv_roundtrip(tmp_path):
    recs = []
    for kind, s in ((ProfileKind.RATIONAL, 1.0), (ProfileKind.HERDING_PRONE, 0.5)):
        p = Profile(kind, s)
        from behavcal.respondents import profile_to_groundtruth

        recs += synthetic_records(profile_to_groundtruth(p), build_scenario_set(Bias.HERDING, 50, 1), profile=p)
    recs += synthetic_records(NOISELESS.with_params(loss_aversion=0.1), build_scenario_set(Bias.LOSS_AVERSION, 21, 0))
    recs.append(record(build_scenario_set(Bias.HERDING, 1, 9)[0], None, Profile(ProfileKind.RATIONAL, 1.0)))
    res = estimate_groups(recs)
    assert len(res) == 3
    failed = [r for r in res if "failed" in r.flags]
    assert len(failed) == 1 and failed[0].bias is Bias.LOSS_AVERSION and math.isnan(failed[0].point)
    rational_herd = [r for r in res if r.bias is Bias.HERDING and r.profile == "rational"][0]
    assert rational_herd.extras["parse_failures"] == 1
    path = tmp_path / "e.csv"
    write_estimates(path, res)
    back = read_estimates(path)
    assert len(back) == len(res)
    for a, b in zip(res, back):
        assert a.bias == b.bias and a.flags == b.flags and a.profile == b.profile
        assert (math.isnan(a.point) and math.isnan(b.point)) or a.point == b.point


def test_estimate_result_validation():
    with pytest.raises(ValueError):
        EstimateResult(Bias.HERDING, 0.5, -1.0, 3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_disposition_ratio_property(pw, pl):
    recs = _portfolio_records(round(pw * 100), max(1, round(pl * 100)), n=100)
    est = estimate_disposition(recs)
    assert est.point == pytest.approx(round(pw * 100) / max(1, round(pl * 100)))
