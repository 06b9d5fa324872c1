import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from behavcal.seeding import derive_rng
from behavcal.synthdata import (
    ASSET_ID_SPACE,
    FEATURE_NAMES,
    AssetIdGenerator,
    BatchManifest,
    EarningsConfig,
    PricePathConfig,
    default_reference,
    discriminate,
    earnings_growth_autocorr,
    generate_asset_id,
    generate_earnings_path,
    generate_price_batch,
    generate_price_path,
    growth_rates,
    ks_statistic,
    read_series_csv,
    select_path,
    series_features,
    write_batch,
)


def test_price_config_defaults():
    c = PricePathConfig()
    assert (c.drift_mean, c.drift_sd, c.vol_lo, c.vol_hi, c.s0_lo, c.s0_hi, c.months, c.candidates, c.ks_alpha) == (
        0.05, 0.10, 0.15, 0.40, 20.0, 200.0, 24, 20, 0.05
    )
    with pytest.raises(ValueError):
        PricePathConfig(vol_lo=0.5, vol_hi=0.4)


def test_zero_vol_degeneracy_exact():
    cfg = PricePathConfig()
    path = generate_price_path(cfg, 1, mu=0.07, sigma=0.0, s0=50.0)
    t = np.arange(cfg.months + 1) / 12.0
    np.testing.assert_allclose(path.prices, 50.0 * np.exp(0.07 * t), rtol=1e-14)


def test_price_path_shape_determinism():
    cfg = PricePathConfig()
    a, b = generate_price_path(cfg, 9), generate_price_path(cfg, 9)
    assert len(a.prices) == 25 and np.all(a.prices > 0)
    assert np.array_equal(a.prices, b.prices)


def test_gbm_log_drift_moment():
    cfg = PricePathConfig()
    mu, sigma, n = 0.05, 0.25, 10_000
    horizon = cfg.months / 12.0
    paths = generate_price_batch(cfg, n, 3, mu=mu, sigma=sigma, s0=100.0)
    ann = np.array([math.log(p.prices[-1] / p.prices[0]) / horizon for p in paths])
    se = sigma / math.sqrt(horizon) / math.sqrt(n)
    assert abs(ann.mean() - (mu - sigma**2 / 2)) < 3 * se


def test_earnings_constant_case():
    cfg = EarningsConfig(shock_sd=0.0, quarters=12)
    e = generate_earnings_path(cfg, 1, growth=0.0)
    assert np.all(e.values == cfg.initial)


def test_earnings_persistence_validation():
    with pytest.raises(ValueError):
        EarningsConfig(persistence=1.0)


def _lag1(x):
    return stats.pearsonr(x[:-1], x[1:])[0]


def test_earnings_zero_persistence_uncorrelated():
    cfg = EarningsConfig(persistence=0.0, quarters=3)
    pairs = []
    for i in range(10_000):
        g = growth_rates(generate_earnings_path(cfg, derive_rng(1, "t", i), growth=0.0).values)
        pairs.append(g[:2])
    pairs = np.array(pairs)
    r = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    assert abs(r) < 3 / math.sqrt(10_000)


def test_earnings_growth_autocorr_matches_ma1():
    cfg = EarningsConfig(quarters=3)
    expected = earnings_growth_autocorr(cfg.persistence)
    assert expected == pytest.approx(0.3 / 1.09)
    pairs = np.array([
        growth_rates(generate_earnings_path(cfg, derive_rng(2, "t", i), growth=0.03).values)[:2] for i in range(20_000)
    ])
    r = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    assert abs(r - expected) < 4 / math.sqrt(20_000)


def test_ks_trivial_cases():
    assert ks_statistic([1, 2, 3], [1, 2, 3]).statistic == 0
    assert ks_statistic([1, 2, 3], [1, 2, 3]).accept
    res = ks_statistic(np.zeros(20), np.ones(20))
    assert res.statistic == 1 and res.reject
    with pytest.raises(ValueError):
        ks_statistic([], [1])


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.lists(st.floats(-100, 100), min_size=1, max_size=40))
def test_ks_matches_scipy(a, b):
    ours = ks_statistic(a, b).statistic
    with np.errstate(divide="ignore"):  # scipy's p-value for one-point samples; only the statistic is compared
        ref = stats.ks_2samp(a, b, method="asymp").statistic
    assert ours == pytest.approx(ref, abs=1e-12)
    assert 0 <= ours <= 1


def test_ks_null_rejection_rate():
    rej = 0
    for i in range(1000):
        rng = derive_rng(11, "ks-null", i)
        rej += ks_statistic(rng.standard_normal(500), rng.standard_normal(500)).reject
    assert abs(rej / 1000 - 0.05) <= 0.015


def test_select_path_first_candidate_mostly():
    cfg = PricePathConfig()
    ref = default_reference(400, seed=0)
    pins = dict(mu=cfg.drift_mean, sigma=0.275)
    first = sum(select_path(cfg, ref, s, **pins).candidate_index == 0 for s in range(100))
    assert first >= 90


def test_select_path_fallback_and_determinism():
    cfg = PricePathConfig(candidates=5)
    sel = select_path(cfg, np.zeros(50), 4)
    assert sel.fallback
    again = select_path(cfg, np.zeros(50), 4)
    assert np.array_equal(sel.path.prices, again.path.prices)
    with pytest.raises(ValueError):
        select_path(cfg, [], 0)


def test_features_fixed_length():
    f = series_features(generate_price_path(PricePathConfig(), 0).prices)
    assert len(f) == len(FEATURE_NAMES) == 15
    assert np.all(np.abs(f[4:9]) <= 1)


def test_discriminator_same_distribution():
    cfg = PricePathConfig()
    a = [p.prices for p in generate_price_batch(cfg, 300, 1)]
    b = [p.prices for p in generate_price_batch(cfg, 300, 2)]
    assert 0.45 <= discriminate(a, b, 0) <= 0.55


def test_discriminator_separable_and_shuffled():
    cfg = PricePathConfig()
    a = [p.prices for p in generate_price_batch(cfg, 200, 1, sigma=0.2)]
    b = [p.prices for p in generate_price_batch(cfg, 200, 2, sigma=0.4)]
    assert discriminate(a, b, 0) > 0.80
    assert abs(discriminate(a, b, 0, shuffle_labels=True) - 0.5) < 0.1
    with pytest.raises(ValueError):
        discriminate(a[:50], b, 0)


def test_asset_ids():
    assert generate_asset_id(3) == generate_asset_id(3)
    gen = AssetIdGenerator(5)
    ids = [gen() for _ in range(10_000)]
    assert all(re.fullmatch(r"Asset [A-Z]\d{3}", i) for i in ids)
    assert len(set(ids)) == len(ids)
    assert ASSET_ID_SPACE == 26_000


def test_write_batch_roundtrip(tmp_path):
    m = write_batch(tmp_path, 7, PricePathConfig(), EarningsConfig(quarters=8), 3, 2)
    assert len(m.files) == 5
    values = read_series_csv(tmp_path / m.files[0])
    assert np.array_equal(values, generate_price_batch(PricePathConfig(), 1, 7)[0].prices)
    back = BatchManifest.from_json((tmp_path / "batch_manifest.json").read_text())
    assert back == m
