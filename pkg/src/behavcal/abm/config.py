"""Market configuration for the agent-based pricing model."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ForecastMode(str, enum.Enum):
    PRICE = "price"
    FUNDAMENTAL = "fundamental"


@dataclass(frozen=True)
class Heterogeneous:
    """Extrapolator mass split over ``n_agents`` with thetas drawn per replication."""

    theta_lo: float = 0.0
    theta_hi: float = 0.88
    n_agents: int = 100

    def __post_init__(self) -> None:
        if not self.theta_lo <= self.theta_hi or self.n_agents < 1:
            raise ValueError("need theta_lo <= theta_hi and n_agents >= 1")


@dataclass(frozen=True)
class News:
    prob: float = 0.10
    variance_multiplier: float = 2.0  # news shock variance in units of sigma_v**2

    def __post_init__(self) -> None:
        if not 0.0 <= self.prob <= 1.0 or self.variance_multiplier < 0:
            raise ValueError("news prob must lie in [0, 1] and variance multiplier be >= 0")


@dataclass(frozen=True)
class MarketConfig:
    """One market parameterization.

    ``trend_memory`` is the persistence of the price trend extrapolators
    chase in price mode: ``trend[t] = (p[t-1] - p[t-2]) + trend_memory *
    trend[t-1]``. Zero gives a forecast built on the last price change only.
    """

    sigma_v: float = 0.15
    gamma_risk: float = 2.0
    periods: int = 10_000
    replications: int = 100
    theta_extrap: float = 0.60
    mass_rational: float = 0.5
    mass_extrap: float = 0.5
    forecast_mode: ForecastMode = ForecastMode.PRICE
    trend_memory: float = 0.9
    heterogeneous: Heterogeneous | None = None
    trading_cost: float | None = None
    news: News | None = None
    v0: float = math.log(100.0)
    seed: int = 0
    arithmetic_returns: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "forecast_mode", ForecastMode(self.forecast_mode))
        if isinstance(self.heterogeneous, dict):
            object.__setattr__(self, "heterogeneous", Heterogeneous(**self.heterogeneous))
        if isinstance(self.news, dict):
            object.__setattr__(self, "news", News(**self.news))
        if self.sigma_v <= 0 or self.gamma_risk <= 0:
            raise ValueError("sigma_v and gamma_risk must be positive")
        if self.periods < 100:
            raise ValueError("periods must be >= 100")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.mass_rational < 0 or self.mass_extrap < 0:
            raise ValueError("masses must be non-negative")
        if not math.isclose(self.mass_rational + self.mass_extrap, 1.0, abs_tol=1e-12):
            raise ValueError("masses must sum to 1")
        if not 0.0 <= self.trend_memory < 1.0:
            raise ValueError("trend_memory must lie in [0, 1)")
        if self.trading_cost is not None and self.trading_cost < 0:
            raise ValueError("trading_cost must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def baseline(cls, **kw: Any) -> "MarketConfig":
        """All-rational market."""
        return cls(theta_extrap=0.0, mass_rational=1.0, mass_extrap=0.0, **kw)

    def with_(self, **changes: Any) -> "MarketConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["forecast_mode"] = self.forecast_mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MarketConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown market config fields: {sorted(unknown)}")
        return cls(**d)


def load_market_config(path: str | Path) -> MarketConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if "market" in data:
        data = data["market"]
    return MarketConfig.from_dict(data)


def dump_market_config(cfg: MarketConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump({"market": cfg.to_dict()}, fh, sort_keys=True)
