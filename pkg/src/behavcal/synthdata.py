"""Synthetic price and earnings series plus realism checks.

Prices follow geometric Brownian motion with per-asset drift and volatility
drawn from priors (per annum, monthly steps). Earnings follow a growth
process with an MA(1) shock. Realism is checked with a two-sample
Kolmogorov-Smirnov statistic and a feature-based discriminator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from behavcal.seeding import as_rng, derive_rng

MONTH = 1.0 / 12.0


@dataclass(frozen=True)
class PricePathConfig:
    drift_mean: float = 0.05
    drift_sd: float = 0.10
    vol_lo: float = 0.15
    vol_hi: float = 0.40
    s0_lo: float = 20.0
    s0_hi: float = 200.0
    months: int = 24
    candidates: int = 20
    ks_alpha: float = 0.05

    def __post_init__(self) -> None:
        if not self.vol_lo < self.vol_hi:
            raise ValueError("vol_lo must be < vol_hi")
        if not 0 < self.s0_lo <= self.s0_hi:
            raise ValueError("need 0 < s0_lo <= s0_hi")
        if self.months < 1 or self.candidates < 1:
            raise ValueError("months and candidates must be >= 1")
        if not 0 < self.ks_alpha < 1:
            raise ValueError("ks_alpha must lie in (0, 1)")


@dataclass(frozen=True)
class EarningsConfig:
    growth_mean: float = 0.03
    growth_sd: float = 0.08
    persistence: float = 0.3
    shock_sd: float = 0.12
    quarters: int = 8
    initial: float = 5.0

    def __post_init__(self) -> None:
        if not abs(self.persistence) < 1:
            raise ValueError("earnings persistence must satisfy |rho| < 1")
        if self.quarters < 1:
            raise ValueError("quarters must be >= 1")
        if self.initial <= 0:
            raise ValueError("initial earnings must be > 0")
        if self.shock_sd < 0 or self.growth_sd < 0:
            raise ValueError("standard deviations must be >= 0")


@dataclass(frozen=True)
class PricePath:
    prices: NDArray[np.float64]
    mu: float
    sigma: float
    s0: float

    @property
    def log_returns(self) -> NDArray[np.float64]:
        return np.diff(np.log(self.prices))

    @property
    def returns(self) -> NDArray[np.float64]:
        return self.prices[1:] / self.prices[:-1] - 1.0


@dataclass(frozen=True)
class EarningsPath:
    values: NDArray[np.float64]
    growth: float
    shocks: NDArray[np.float64]  # eta_0 .. eta_{quarters}; eta_0 is the pre-sample shock

    def next_moments(self, cfg: EarningsConfig) -> tuple[float, float]:
        """Conditional mean and sd of the next (unobserved) quarter."""
        last = float(self.values[-1])
        mean = last * (1.0 + self.growth + cfg.persistence * float(self.shocks[-1]))
        return mean, abs(last) * cfg.shock_sd


def generate_price_path(
    cfg: PricePathConfig,
    seed: int | np.random.Generator,
    *,
    mu: float | None = None,
    sigma: float | None = None,
    s0: float | None = None,
) -> PricePath:
    """Draw one monthly GBM path of ``months + 1`` prices.

    Uses the exact log-normal step
    ``S[t+1] = S[t] * exp((mu - sigma**2/2) dt + sigma sqrt(dt) z)``.
    Any of ``mu``, ``sigma``, ``s0`` may be pinned instead of drawn.
    """
    rng = as_rng(seed, "synthdata.price")
    mu_ = rng.normal(cfg.drift_mean, cfg.drift_sd) if mu is None else float(mu)
    sig = rng.uniform(cfg.vol_lo, cfg.vol_hi) if sigma is None else float(sigma)
    s0_ = rng.uniform(cfg.s0_lo, cfg.s0_hi) if s0 is None else float(s0)
    z = rng.standard_normal(cfg.months)
    steps = (mu_ - 0.5 * sig * sig) * MONTH + sig * math.sqrt(MONTH) * z
    log_path = np.concatenate(([0.0], np.cumsum(steps)))
    return PricePath(s0_ * np.exp(log_path), mu_, sig, s0_)


def generate_price_batch(
    cfg: PricePathConfig, n: int, seed: int, **pins: float
) -> list[PricePath]:
    """``n`` independent paths; path ``i`` uses stream ``(seed, 'synthdata.batch', i)``."""
    return [generate_price_path(cfg, derive_rng(seed, "synthdata.batch", i), **pins) for i in range(n)]


def generate_earnings_path(
    cfg: EarningsConfig,
    seed: int | np.random.Generator,
    *,
    growth: float | None = None,
) -> EarningsPath:
    """Quarterly earnings ``E[t] = E[t-1] (1 + g + rho eta[t-1] + eta[t])``."""
    rng = as_rng(seed, "synthdata.earnings")
    g = rng.normal(cfg.growth_mean, cfg.growth_sd) if growth is None else float(growth)
    eta = rng.normal(0.0, cfg.shock_sd, cfg.quarters + 1) if cfg.shock_sd > 0 else np.zeros(cfg.quarters + 1)
    values = np.empty(cfg.quarters)
    level = cfg.initial
    for t in range(cfg.quarters):
        level = level * (1.0 + g + cfg.persistence * eta[t] + eta[t + 1])
        values[t] = level
    return EarningsPath(values, g, eta)


def growth_rates(values: Sequence[float]) -> NDArray[np.float64]:
    v = np.asarray(values, dtype=float)
    return v[1:] / v[:-1] - 1.0


def earnings_growth_autocorr(persistence: float) -> float:
    """Population lag-1 autocorrelation of growth rates for fixed ``g``.

    Growth is ``g + eta[t] + rho eta[t-1]``, an MA(1), so the value is
    ``rho / (1 + rho**2)``.
    """
    return persistence / (1.0 + persistence * persistence)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    alpha: float

    @property
    def reject(self) -> bool:
        return self.statistic > self.critical

    @property
    def accept(self) -> bool:
        return not self.reject


def ks_critical(n: int, m: int, alpha: float = 0.05) -> float:
    """Asymptotic two-sample critical value ``c(alpha) sqrt((n+m)/(n m))``."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def ks_statistic(sample_a: Sequence[float], sample_b: Sequence[float], alpha: float = 0.05) -> KSResult:
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS test needs two non-empty samples")
    grid = np.concatenate((a, b))
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    return KSResult(d, ks_critical(a.size, b.size, alpha), alpha)


def default_reference(n_paths: int = 400, seed: int = 0, cfg: PricePathConfig | None = None) -> NDArray[np.float64]:
    """Monthly log returns of a GBM batch at the prior centre (mu=0.05, sigma=0.275)."""
    cfg = cfg or PricePathConfig()
    centre = dict(mu=cfg.drift_mean, sigma=0.5 * (cfg.vol_lo + cfg.vol_hi))
    paths = generate_price_batch(cfg, n_paths, seed, **centre)
    return np.concatenate([p.log_returns for p in paths])


@dataclass(frozen=True)
class SelectedPath:
    path: PricePath
    statistic: float
    candidate_index: int
    fallback: bool


def select_path(
    cfg: PricePathConfig,
    reference: Sequence[float],
    seed: int,
    **pins: float,
) -> SelectedPath:
    """First candidate whose log returns pass KS against ``reference``.

    When no candidate passes, the one with the smallest statistic is returned
    with ``fallback=True``.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.size == 0:
        raise ValueError("reference sample is empty")
    best: SelectedPath | None = None
    for i in range(cfg.candidates):
        path = generate_price_path(cfg, derive_rng(seed, "synthdata.select", i), **pins)
        res = ks_statistic(path.log_returns, ref, cfg.ks_alpha)
        if res.accept:
            return SelectedPath(path, res.statistic, i, False)
        if best is None or res.statistic < best.statistic:
            best = SelectedPath(path, res.statistic, i, True)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Features and discriminator
# ---------------------------------------------------------------------------

FEATURE_NAMES: tuple[str, ...] = (
    "mean",
    "sd",
    "skewness",
    "kurtosis",
    "autocorr_1",
    "autocorr_2",
    "autocorr_3",
    "autocorr_4",
    "autocorr_5",
    "rolling_vol_3",
    "rolling_vol_6",
    "rolling_vol_12",
    "max_drawdown",
    "mean_drawdown",
    "drawdown_frequency",
)


def _autocorr(x: NDArray[np.float64], k: int) -> float:
    xc = x - x.mean()
    den = float(xc @ xc)
    if den == 0.0 or k >= x.size:
        return 0.0
    return float(xc[:-k] @ xc[k:]) / den


def _rolling_vol(x: NDArray[np.float64], w: int) -> float:
    if x.size < w:
        return float(x.std(ddof=1)) if x.size > 1 else 0.0
    windows = np.lib.stride_tricks.sliding_window_view(x, w)
    return float(windows.std(axis=1, ddof=1).mean())


def series_features(prices: Sequence[float]) -> NDArray[np.float64]:
    """Fixed 15-dimensional feature vector (see ``FEATURE_NAMES``)."""
    p = np.asarray(prices, dtype=float)
    r = np.diff(np.log(p))
    mu = r.mean()
    sd = r.std(ddof=1)
    z = (r - mu) / sd if sd > 0 else np.zeros_like(r)
    skew = float(np.mean(z**3))
    kurt = float(np.mean(z**4) - 3.0)
    dd = 1.0 - p / np.maximum.accumulate(p)
    feats = [mu, sd, skew, kurt]
    feats += [_autocorr(r, k) for k in range(1, 6)]
    feats += [_rolling_vol(r, w) for w in (3, 6, 12)]
    feats += [float(dd.max()), float(dd.mean()), float(np.mean(dd > 0))]
    return np.asarray(feats, dtype=float)


def discriminate(
    batch_a: Sequence[Sequence[float]],
    batch_b: Sequence[Sequence[float]],
    seed: int,
    *,
    folds: int = 5,
    shuffle_labels: bool = False,
) -> float:
    """Held-out accuracy of a logistic classifier separating the two batches.

    An accuracy near 0.5 means the batches cannot be told apart from their
    features.
    """
    from sklearn.linear_model import LogisticRegression
    from sklearn.model_selection import StratifiedKFold, cross_val_score
    from sklearn.pipeline import make_pipeline
    from sklearn.preprocessing import StandardScaler

    if len(batch_a) < 100 or len(batch_b) < 100:
        raise ValueError("discriminate needs at least 100 paths per batch")
    X = np.vstack([series_features(p) for p in batch_a] + [series_features(p) for p in batch_b])
    y = np.r_[np.zeros(len(batch_a), dtype=int), np.ones(len(batch_b), dtype=int)]
    rng = derive_rng(seed, "synthdata.discriminate")
    if shuffle_labels:
        y = rng.permutation(y)
    model = make_pipeline(StandardScaler(), LogisticRegression(C=1.0, max_iter=2000))
    cv = StratifiedKFold(n_splits=folds, shuffle=True, random_state=int(rng.integers(2**31 - 1)))
    return float(cross_val_score(model, X, y, cv=cv, scoring="accuracy").mean())


# ---------------------------------------------------------------------------
# Asset identifiers
# ---------------------------------------------------------------------------

ASSET_ID_SPACE = 26 * 1000


class AssetIdGenerator:
    """Collision-free ``Asset <letter><3 digits>`` identifiers.

    Identifiers are a seeded permutation of the 26,000-element space, so a
    run never repeats one; drawing more than the space raises.
    """

    def __init__(self, seed: int | np.random.Generator):
        self._order = as_rng(seed, "synthdata.asset_id").permutation(ASSET_ID_SPACE)
        self._next = 0

    def __call__(self) -> str:
        if self._next >= ASSET_ID_SPACE:
            raise RuntimeError("asset identifier space exhausted")
        code = int(self._order[self._next])
        self._next += 1
        return f"Asset {chr(ord('A') + code // 1000)}{code % 1000:03d}"

    def code(self) -> str:
        """Bare ``<letter><digits>`` code without the 'Asset ' prefix."""
        return self()[len("Asset ") :]


def generate_asset_id(seed: int) -> str:
    return AssetIdGenerator(seed)()


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_series_csv(path: str | Path, values: Sequence[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "value"])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def read_series_csv(path: str | Path) -> NDArray[np.float64]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["value"]) for r in rows])


@dataclass
class BatchManifest:
    """Seeds and configs needed to replay a generated batch exactly."""

    root_seed: int
    price_config: PricePathConfig
    earnings_config: EarningsConfig
    n_price_paths: int
    n_earnings_paths: int
    files: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["seed_rule"] = "path i uses SeedSequence(root, spawn_key=(crc32(module), i)) with Philox"
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BatchManifest":
        d = json.loads(text)
        d.pop("seed_rule", None)
        d["price_config"] = PricePathConfig(**d["price_config"])
        d["earnings_config"] = EarningsConfig(**d["earnings_config"])
        return cls(**d)


def write_batch(
    out_dir: str | Path,
    root_seed: int,
    price_cfg: PricePathConfig,
    earn_cfg: EarningsConfig,
    n_price_paths: int,
    n_earnings_paths: int,
) -> BatchManifest:
    out = Path(out_dir)
    (out / "prices").mkdir(parents=True, exist_ok=True)
    (out / "earnings").mkdir(parents=True, exist_ok=True)
    manifest = BatchManifest(root_seed, price_cfg, earn_cfg, n_price_paths, n_earnings_paths)
    for i, path in enumerate(generate_price_batch(price_cfg, n_price_paths, root_seed)):
        name = f"prices/path_{i:05d}.csv"
        write_series_csv(out / name, path.prices)
        manifest.files.append(name)
    for i in range(n_earnings_paths):
        ep = generate_earnings_path(earn_cfg, derive_rng(root_seed, "synthdata.earnings_batch", i))
        name = f"earnings/path_{i:05d}.csv"
        write_series_csv(out / name, ep.values)
        manifest.files.append(name)
    (out / "batch_manifest.json").write_text(manifest.to_json() + "\n", encoding="utf-8")
    return manifest
