"""Agent-based pricing model with rational and extrapolative traders.

Fundamental value is a log random walk. Each period every trader type forms
an expectation of next-period value, demand is mean-variance
``(E - p) / (gamma sigma_v**2)``, and the price clears zero net supply, which
makes it the mass-weighted mean expectation. Rational traders expect the
current fundamental. Extrapolators either chase the fundamental change
(fundamental mode) or a persistent price trend anchored at the last price
(price mode).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from behavcal.abm import kernels
from behavcal.abm.config import ForecastMode, MarketConfig
from behavcal.seeding import derive_rng

MAX_LAG = 24
SHORT_LAGS = (1, 6)
LONG_LAGS = (12, 24)
PEAK_LAGS = (1, 12)
POST_NEWS_LAGS = (1, 3)


# ---------------------------------------------------------------------------
# Trader types and shocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraderTypes:
    thetas: NDArray[np.float64]
    masses: NDArray[np.float64]
    is_rational: NDArray[np.uint8]

    def __len__(self) -> int:
        return len(self.thetas)


def trader_types(cfg: MarketConfig, rng: np.random.Generator | None = None) -> TraderTypes:
    """Rational type first (if any mass), then the extrapolator type(s)."""
    thetas, masses, rational = [], [], []
    if cfg.mass_rational > 0:
        thetas.append(0.0)
        masses.append(cfg.mass_rational)
        rational.append(1)
    if cfg.mass_extrap > 0:
        if cfg.heterogeneous is None:
            thetas.append(cfg.theta_extrap)
            masses.append(cfg.mass_extrap)
            rational.append(0)
        else:
            h = cfg.heterogeneous
            if rng is None:
                raise ValueError("heterogeneous thetas need a generator")
            thetas.extend(rng.uniform(h.theta_lo, h.theta_hi, h.n_agents).tolist())
            masses.extend([cfg.mass_extrap / h.n_agents] * h.n_agents)
            rational.extend([0] * h.n_agents)
    return TraderTypes(np.array(thetas, dtype=float), np.array(masses, dtype=float), np.array(rational, dtype=np.uint8))


def draw_shocks(cfg: MarketConfig, rng: np.random.Generator) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Fundamental innovations (normal plus optional news jumps) and news flags."""
    eps = cfg.sigma_v * rng.standard_normal(cfg.periods)
    flags = np.zeros(cfg.periods, dtype=bool)
    if cfg.news is not None:
        flags = rng.random(cfg.periods) < cfg.news.prob
        nu = math.sqrt(cfg.news.variance_multiplier) * cfg.sigma_v * rng.standard_normal(cfg.periods)
        eps = eps + np.where(flags, nu, 0.0)
    return eps, flags


# ---------------------------------------------------------------------------
# Single step (reference semantics)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketState:
    v: float
    v_prev: float
    p: float
    p_prev: float
    trend: float
    positions: tuple[float, ...]

    @classmethod
    def initial(cls, cfg: MarketConfig, n_types: int) -> "MarketState":
        return cls(cfg.v0, cfg.v0, cfg.v0, cfg.v0, 0.0, (0.0,) * n_types)


def step(
    state: MarketState, cfg: MarketConfig, shock: float, types: TraderTypes
) -> tuple[MarketState, tuple[int, ...]]:
    """Advance one period given the period's fundamental innovation.

    Returns the new state and per-type trade flags (all zero when trading
    costs are off).
    """
    v_prev = state.v
    v = v_prev + float(shock)
    p1, p2 = state.p, state.p_prev
    trend = (p1 - p2) + cfg.trend_memory * state.trend
    price_mode = cfg.forecast_mode is ForecastMode.PRICE
    expect = []
    num = 0.0
    den = 0.0
    for th, m, rat in zip(types.thetas.tolist(), types.masses.tolist(), types.is_rational.tolist()):
        if rat:
            e = v
        elif price_mode:
            e = p1 + th * trend
        else:
            e = v + th * (v - v_prev)
        expect.append(e)
        num += m * e
        den += m
    pstar = num / den
    positions = list(state.positions)
    flags = [0] * len(types)
    if cfg.trading_cost is not None:
        gs2 = cfg.gamma_risk * cfg.sigma_v * cfg.sigma_v
        num = 0.0
        den = 0.0
        for i, (e, m) in enumerate(zip(expect, types.masses.tolist())):
            gap = e - pstar
            dd = gap / gs2 - positions[i]
            if gap * dd > cfg.trading_cost * abs(dd):
                flags[i] = 1
                num += m * e
                den += m
        p = num / den if den > 0.0 else p1
        for i, e in enumerate(expect):
            if flags[i]:
                positions[i] = (e - p) / gs2
    else:
        p = pstar
    return MarketState(v, v_prev, p, p1, trend, tuple(positions)), tuple(flags)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass
class SimulationResult:
    v: NDArray[np.float64]  # log fundamental, periods + 1 entries
    p: NDArray[np.float64]  # log price, periods + 1 entries
    news: NDArray[np.bool_]  # news flag per return
    types: TraderTypes
    trades: NDArray[np.uint8] | None = None  # (periods, n_types) when costs are on
    arithmetic: bool = False

    @property
    def returns(self) -> NDArray[np.float64]:
        if self.arithmetic:
            return np.expm1(np.diff(self.p))
        return np.diff(self.p)

    def trade_frequency(self) -> dict[str, float]:
        """Share of periods in which each trader class trades (mass-weighted within class)."""
        if self.trades is None:
            return {}
        out = {}
        for name, sel in (("rational", self.types.is_rational == 1), ("extrapolative", self.types.is_rational == 0)):
            if sel.any():
                w = self.types.masses[sel] / self.types.masses[sel].sum()
                out[name] = float((self.trades[:, sel] @ w).mean())
        return out


def _run_kernel(cfg: MarketConfig, shocks: NDArray[np.float64], types: TraderTypes, kernel=None):
    kernel = kernel or kernels.simulate_kernel
    n = cfg.periods
    v = np.empty(n + 1)
    p = np.empty(n + 1)
    use_cost = cfg.trading_cost is not None
    trades = np.zeros((n + 1, len(types)), dtype=np.uint8)
    expect = np.zeros(len(types))
    d_prev = np.zeros(len(types))
    mode = kernels.MODE_PRICE if cfg.forecast_mode is ForecastMode.PRICE else kernels.MODE_FUNDAMENTAL
    kernel(
        np.ascontiguousarray(shocks, dtype=float),
        np.ascontiguousarray(types.thetas),
        np.ascontiguousarray(types.masses),
        np.ascontiguousarray(types.is_rational),
        int(mode),
        float(cfg.trend_memory),
        int(use_cost),
        float(cfg.trading_cost or 0.0),
        float(cfg.gamma_risk * cfg.sigma_v * cfg.sigma_v),
        float(cfg.v0),
        v,
        p,
        trades,
        expect,
        d_prev,
    )
    return v, p, (trades[1:] if use_cost else None)


def simulate(cfg: MarketConfig, replication: int = 0, kernel=None) -> SimulationResult:
    """One replication; randomness comes from stream ``(cfg.seed, 'abm', replication)``."""
    rng = derive_rng(cfg.seed, "abm", replication)
    shocks, news = draw_shocks(cfg, rng)
    types = trader_types(cfg, rng)
    v, p, trades = _run_kernel(cfg, shocks, types, kernel)
    return SimulationResult(v, p, news, types, trades, cfg.arithmetic_returns)


# ---------------------------------------------------------------------------
# Momentum statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentumStats:
    autocorr: NDArray[np.float64]  # lags 1..24
    short_momentum: float
    long_reversal: float
    peak_lag: int
    decay_rate: float
    post_news_autocorr: float | None = None

    def as_dict(self) -> dict[str, float]:
        d = {
            "short_momentum": self.short_momentum,
            "long_reversal": self.long_reversal,
            "peak_lag": float(self.peak_lag),
            "decay_rate": self.decay_rate,
        }
        if self.post_news_autocorr is not None:
            d["post_news_autocorr"] = self.post_news_autocorr
        return d


def autocorrelations(x: NDArray[np.float64], max_lag: int = MAX_LAG) -> NDArray[np.float64]:
    """Sample autocorrelations at lags 1..max_lag about the full-sample mean."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise ValueError("series has zero variance")
    return np.array([float(d[:-k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def decay_rate(acf: NDArray[np.float64]) -> float:
    """Twelve times the least-squares slope of -log(acf) over positive lags 1..12."""
    lags = np.arange(1, PEAK_LAGS[1] + 1)
    a = acf[: PEAK_LAGS[1]]
    ok = a > 0
    if ok.sum() < 2:
        return float("nan")
    slope = np.polyfit(lags[ok], -np.log(a[ok]), 1)[0]
    return float(12.0 * slope)


def post_news_autocorr(r: NDArray[np.float64], news: NDArray[np.bool_]) -> float | None:
    idx = np.flatnonzero(news)
    vals = []
    for k in range(POST_NEWS_LAGS[0], POST_NEWS_LAGS[1] + 1):
        i = idx[idx + k < len(r)]
        if len(i) < 3:
            return None
        a, b = r[i], r[i + k]
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            return None
        vals.append(float(np.corrcoef(a, b)[0, 1]))
    return float(np.mean(vals))


def momentum_stats(returns, news_flags=None, max_lag: int = MAX_LAG) -> MomentumStats:
    r = np.asarray(returns, dtype=float)
    if len(r) < 100:
        raise ValueError("need at least 100 returns")
    if not np.all(np.isfinite(r)):
        raise ValueError("returns must be finite")
    acf = autocorrelations(r, max_lag)
    short = float(acf[SHORT_LAGS[0] - 1 : SHORT_LAGS[1]].mean())
    long_ = float(acf[LONG_LAGS[0] - 1 : LONG_LAGS[1]].mean())
    peak = int(np.argmax(acf[PEAK_LAGS[0] - 1 : PEAK_LAGS[1]])) + PEAK_LAGS[0]
    post = None
    if news_flags is not None:
        flags = np.asarray(news_flags, dtype=bool)
        if len(flags) != len(r):
            raise ValueError("one news flag per return")
        post = post_news_autocorr(r, flags)
    return MomentumStats(acf, short, long_, peak, decay_rate(acf), post)


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


@dataclass
class ReplicationSummary:
    config: MarketConfig
    mean: dict[str, float]
    se: dict[str, float]
    acf_mean: NDArray[np.float64]
    acf_se: NDArray[np.float64]
    per_replication: list[MomentumStats] = field(default_factory=list)
    trade_frequency: dict[str, float] = field(default_factory=dict)

    @property
    def replications(self) -> int:
        return len(self.per_replication)


def _one(cfg: MarketConfig, rep: int, kernel=None) -> tuple[MomentumStats, dict[str, float]]:
    res = simulate(cfg, rep, kernel)
    stats_ = momentum_stats(res.returns, res.news if cfg.news is not None else None)
    return stats_, res.trade_frequency()


def run_replications(cfg: MarketConfig, jobs: int = 1, kernel=None) -> ReplicationSummary:
    """Mean and standard error of every statistic across ``cfg.replications`` runs.

    Replication ``i`` draws from stream ``(cfg.seed, 'abm', i)``, so results do
    not depend on ``jobs``.
    """
    if cfg.replications < 2:
        raise ValueError("need at least 2 replications")
    reps = range(cfg.replications)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            out = list(ex.map(lambda i: _one(cfg, i, kernel), reps))
    else:
        out = [_one(cfg, i, kernel) for i in reps]
    stats_list = [s for s, _ in out]
    keys = stats_list[0].as_dict().keys()
    table = {k: np.array([s.as_dict().get(k, np.nan) for s in stats_list]) for k in keys}
    n = len(stats_list)
    mean = {k: float(np.nanmean(v)) for k, v in table.items()}
    se = {k: float(np.nanstd(v, ddof=1) / math.sqrt(np.sum(np.isfinite(v)))) for k, v in table.items()}
    acfs = np.vstack([s.autocorr for s in stats_list])
    trade = {}
    if out[0][1]:
        for k in out[0][1]:
            trade[k] = float(np.mean([t[k] for _, t in out]))
    return ReplicationSummary(cfg, mean, se, acfs.mean(0), acfs.std(0, ddof=1) / math.sqrt(n), stats_list, trade)
