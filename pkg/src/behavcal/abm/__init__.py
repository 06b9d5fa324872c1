"""Agent-based asset-pricing simulator and momentum statistics."""

from behavcal.abm.config import ForecastMode, Heterogeneous, MarketConfig, News, load_market_config
from behavcal.abm.kernels import KERNEL_BACKEND
from behavcal.abm.model import (
    MarketState,
    MomentumStats,
    ReplicationSummary,
    SimulationResult,
    autocorrelations,
    momentum_stats,
    run_replications,
    simulate,
    step,
    trader_types,
)

__all__ = [
    "KERNEL_BACKEND",
    "ForecastMode",
    "Heterogeneous",
    "MarketConfig",
    "MarketState",
    "MomentumStats",
    "News",
    "ReplicationSummary",
    "SimulationResult",
    "autocorrelations",
    "load_market_config",
    "momentum_stats",
    "run_replications",
    "simulate",
    "step",
    "trader_types",
]
