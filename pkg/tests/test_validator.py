import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.multitest import multipletests

from behavcal.core import Bias
from behavcal.estimators import EstimateResult
from behavcal.seeding import derive_rng
from behavcal.validator import (
    DEFAULT_POWER_SPECS,
    REFERENCE_TABLE,
    CV_THRESHOLD,
    Design,
    PowerSpec,
    Tier,
    check_c1_monotonicity,
    check_c2_range,
    check_c3_stability,
    check_c4_coherence,
    classify_tier,
    cohens_d,
    compare_reference_table,
    holm_correct,
    power_mc,
    reports_table,
    reports_to_json,
    shared_lambda_population,
    two_sample_test,
    validate_bias,
)


def _seq(points, se=0.01, bias=Bias.HERDING):
    return [EstimateResult(bias, p, se, 100, strength=s) for p, s in zip(points, (0.0, 0.33, 0.67, 1.0))]


# -- C1 ---------------------------------------------------------------------------


def test_c1_examples():
    inc = check_c1_monotonicity(_seq([0.1, 0.3, 0.5, 0.7]))
    assert inc.passed and not inc.weak and inc.p_value < 0.05
    flat = check_c1_monotonicity(_seq([0.5, 0.5, 0.5, 0.5]))
    assert flat.passed and flat.weak
    dec = check_c1_monotonicity(_seq([0.7, 0.5, 0.3, 0.1]))
    assert not dec.passed and dec.violations == (0, 1, 2)
    assert check_c1_monotonicity(_seq([0.7, 0.5, 0.3, 0.1]), direction=-1).passed
    with pytest.raises(ValueError):
        check_c1_monotonicity(_seq([0.1, 0.2]))


def test_c1_slack_absorbs_noise():
    # a 0.01 dip with se 0.05 is within slack
    r = check_c1_monotonicity(_seq([0.1, 0.3, 0.29, 0.6], se=0.05))
    assert r.passed and not r.weak


def test_c1_trend_size_under_flat_truth():
    rng = derive_rng(0, "t")
    rejections = sum(
        check_c1_monotonicity(_seq(list(0.5 + 0.02 * rng.standard_normal(4)), se=0.02)).p_value < 0.05 for _ in range(2000)
    )
    assert abs(rejections / 2000 - 0.05) < 0.015


# -- C2, C3 ---------------------------------------------------------------------------


def test_c2_examples():
    assert check_c2_range(1.12, 3.00, 2.25)
    assert not check_c2_range(0.06, 0.21, 1.60, delta=0.1)
    assert check_c2_range(0.5, 0.7, 0.7)
    assert check_c2_range(0.5, 0.7, 0.75, delta=0.05)
    with pytest.raises(ValueError):
        check_c2_range(2, 1, 1.5)


def test_c3_examples():
    same = check_c3_stability([2.0] * 6)
    assert same.stable and same.cv == 0.0
    x = np.array([-1.0, 1.0, -1.0, 1.0, 0.0, 0.0])
    noisy = 1.0 + 0.3 * x / x.std(ddof=1)
    r = check_c3_stability(noisy)
    assert r.cv == pytest.approx(0.30) and not r.stable
    z = check_c3_stability([0.0, 0.01, -0.01, 0.0, 0.0])
    assert z.flagged_near_zero and z.stable and math.isnan(z.cv)
    assert CV_THRESHOLD == 0.15
    with pytest.raises(ValueError):
        check_c3_stability([1, 2, 3])


# -- C4 ---------------------------------------------------------------------------------


def test_c4_shared_lambda_population():
    pop = shared_lambda_population(n_agents=120, seed=1)
    res = check_c4_coherence(pop)
    row = res.rows[0]
    assert (row.a, row.b) == ("loss_aversion", "disposition")
    assert row.r > 0 and row.p_value < 0.05 and res.passed


def test_c4_independent_draws():
    rng = derive_rng(2, "t")
    res = check_c4_coherence({Bias.LOSS_AVERSION: rng.normal(size=300), Bias.HERDING: rng.normal(size=300)})
    (row,) = res.rows
    assert row.prediction == "zero_or_negative" and abs(row.r) < 3 / math.sqrt(300)


def test_c4_anchoring_expands_and_errors():
    rng = derive_rng(3, "t")
    data = {b: rng.normal(size=50) for b in (Bias.ANCHORING, Bias.HERDING, Bias.EXTRAPOLATION)}
    rows = check_c4_coherence(data).rows
    assert {(r.a, r.b) for r in rows} >= {("anchoring", "herding"), ("anchoring", "extrapolation")}
    with pytest.raises(ValueError):
        check_c4_coherence({Bias.LOSS_AVERSION: [1.0] * 5, Bias.DISPOSITION: [1.0] * 5})
    with pytest.raises(ValueError):
        check_c4_coherence({Bias.LOSS_AVERSION: rng.normal(size=50)})


# -- tiers --------------------------------------------------------------------------------


def test_tier_examples():
    assert classify_tier(0.61, 0.90, 0.70) is Tier.STRONG
    assert classify_tier(0.12, 0.30, 0.35) is Tier.MODERATE
    assert classify_tier(0.06, 0.21, 1.60) is Tier.WEAK
    assert classify_tier(0.47, 0.30, 0.65) is Tier.DIRECTIONAL
    assert classify_tier(0.50, 0.49, 0.90) is Tier.FAIL


def test_reference_table_flags_two_rows():
    rows = {c.bias: c for c in compare_reference_table()}
    for b in (Bias.LOSS_AVERSION, Bias.HERDING, Bias.EXTRAPOLATION):
        assert rows[b].tier is Tier.STRONG and rows[b].agrees
    assert rows[Bias.PROBABILITY_WEIGHTING].tier is Tier.MODERATE
    assert rows[Bias.DISPOSITION].tier is Tier.WEAK
    assert {b for b, c in rows.items() if not c.agrees} == {Bias.ANCHORING, Bias.REPRESENTATIVENESS}
    assert len(REFERENCE_TABLE) == 8


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.01, 10),
    st.floats(0.01, 10),
    st.floats(0.01, 10),
    st.sampled_from([0.1, 0.5, 3.0, 1000.0]),
)
def test_tier_scale_invariant(base, cal, bench, c):
    assert classify_tier(base * c, cal * c, bench * c) is classify_tier(base, cal, bench)


# -- Holm -----------------------------------------------------------------------------------


def test_holm_examples():
    rej, adj = holm_correct([0.01, 0.03, 0.04])
    assert rej.tolist() == [True, False, False]
    np.testing.assert_allclose(adj, [0.03, 0.06, 0.06])
    assert not holm_correct([1.0, 1.0, 1.0])[0].any()
    assert holm_correct([0.04])[0].tolist() == [True]
    with pytest.raises(ValueError):
        holm_correct([0.1, 1.5])


pvals = st.lists(st.floats(0, 1), min_size=1, max_size=30)


@settings(max_examples=300, deadline=None)
@given(pvals)
def test_holm_matches_statsmodels(p):
    rej, adj = holm_correct(p)
    ref_rej, ref_adj, *_ = multipletests(p, alpha=0.05, method="holm")
    assert rej.tolist() == ref_rej.tolist()
    np.testing.assert_allclose(adj, ref_adj, atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(pvals)
def test_holm_prefix_and_subset(p):
    rej, adj = holm_correct(p)
    order = np.argsort(p, kind="stable")
    flags = rej[order]
    k = int(flags.sum())
    assert flags[:k].all() and not flags[k:].any()
    assert np.all(rej <= (np.asarray(p) <= 0.05))
    assert np.all(np.diff(adj[order]) >= 0)


# -- two-sample ------------------------------------------------------------------------------


def test_two_sample_identical_and_shifted():
    rng = derive_rng(4, "t")
    a = rng.normal(size=500)
    same = two_sample_test(a, a.copy())
    assert same.cohens_d == 0.0 and same.p_value == pytest.approx(1.0)
    b = rng.normal(size=500) + 2.0
    r = two_sample_test(b, a)
    assert abs(r.cohens_d - 2.0) < 4 * math.sqrt(2 / 500 + 4 / 2000)
    assert r.p_value < 1e-50


def test_two_sample_cluster_bootstrap():
    rng = derive_rng(5, "t")
    ka = np.repeat(np.arange(20), 10)
    kb = np.repeat(np.arange(20), 10)
    a = rng.normal(size=20)[ka] + rng.normal(size=200) + 1.0
    b = rng.normal(size=20)[kb] + rng.normal(size=200)
    r = two_sample_test(a, b, ka, kb, seed=1)
    assert r.n_boot >= 2000 and r.p_cluster is not None
    assert r.se_cluster > math.sqrt(2 / 200)  # clustering inflates the naive SE
    again = two_sample_test(a, b, ka, kb, seed=1)
    assert again == r
    with pytest.raises(ValueError):
        two_sample_test([1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        two_sample_test(a, b, ka, None)
    with pytest.raises(ValueError):
        two_sample_test([1.0], [2.0, 3.0])


def test_cohens_d_hand():
    assert cohens_d(np.array([1.0, 3.0]), np.array([0.0, 2.0])) == pytest.approx(1 / math.sqrt(2))


# -- power -------------------------------------------------------------------------------------


def test_power_spec_validation():
    with pytest.raises(ValueError):
        PowerSpec(Design.PROPORTION_VS_NULL, 600, 0.3, 0.7, reps=999)
    with pytest.raises(ValueError):
        PowerSpec(Design.COVERAGE_CLUSTERED, 2000, 0.8, 0.65, clusters=3)
    with pytest.raises(ValueError):
        PowerSpec(Design.DISPOSITION_PAIRED, 600, 1.2, 1.6)


@pytest.mark.parametrize("name", sorted(DEFAULT_POWER_SPECS))
def test_power_defaults_quick(name):
    from dataclasses import replace

    spec = replace(DEFAULT_POWER_SPECS[name], reps=1000)
    assert power_mc(spec, seed=1).power > 0.85


def test_power_deterministic_across_jobs():
    from dataclasses import replace

    spec = replace(DEFAULT_POWER_SPECS["disposition"], reps=1000)
    assert power_mc(spec, seed=2, jobs=1) == power_mc(spec, seed=2, jobs=3)


def test_power_null_size_proportion():
    spec = PowerSpec(Design.PROPORTION_VS_NULL, 600, 0.3, 0.3, reps=10_000)
    # exact test is conservative: size at most alpha
    assert 0.02 <= power_mc(spec, seed=3).power <= 0.05 + 0.0066


# -- report ------------------------------------------------------------------------------------


def test_validate_bias_report():
    ests = _seq([0.3, 0.45, 0.6, 0.8])
    rep = validate_bias(Bias.HERDING, ests, repeats=[0.8, 0.81, 0.79, 0.8, 0.8])
    assert rep.c1_monotone and rep.c2_range_covered and rep.c3_stability and rep.tier is Tier.STRONG
    back = json.loads(reports_to_json([rep]))
    assert back[0]["bias"] == "herding" and back[0]["tier"] == "Strong"
    assert "herding" in reports_table([rep])


def test_validate_bias_decreasing_measure():
    ests = _seq([0.80, 0.74, 0.70, 0.64], bias=Bias.OVERCONFIDENCE)
    rep = validate_bias(Bias.OVERCONFIDENCE, ests)
    assert rep.details["direction"] == -1 and rep.c1_monotone and rep.c2_range_covered
