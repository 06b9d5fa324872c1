"""Behavioral parameters, benchmark registry, profiles and the scalar
decision primitives (value function, probability weighting, perceived
precision, extrapolative forecast, anchored valuation).
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable


class Bias(str, enum.Enum):
    LOSS_AVERSION = "loss_aversion"
    DISPOSITION = "disposition"
    OVERCONFIDENCE = "overconfidence"
    HERDING = "herding"
    REPRESENTATIVENESS = "representativeness"
    PROBABILITY_WEIGHTING = "probability_weighting"
    ANCHORING = "anchoring"
    EXTRAPOLATION = "extrapolation"


class ProfileKind(str, enum.Enum):
    RATIONAL = "rational"
    LOSS_AVERSE = "loss_averse"
    OVERCONFIDENT = "overconfident"
    HERDING_PRONE = "herding_prone"
    REPRESENTATIVENESS_BIASED = "representativeness_biased"
    EXTRAPOLATIVE = "extrapolative"


GAMMA_WEIGHT_MIN = 0.3


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class ParameterVector:
    """Full set of behavioral parameters carried by a respondent.

    Defaults are the rational preset; ``gamma_risk`` is only consumed by the
    market simulator's demand function.
    """

    loss_aversion: float = 1.0
    alpha_gain: float = 1.0
    beta_loss: float = 1.0
    gamma_weight: float = 1.0
    kappa: float = 1.0
    theta: float = 0.0
    w_herd: float = 0.0
    a_adjust: float = 1.0
    tau_ratio: float = 1.0
    gamma_risk: float = 2.0

    def __post_init__(self) -> None:
        for f in fields(self):
            _check(math.isfinite(getattr(self, f.name)), f"{f.name} must be finite")
        _check(self.loss_aversion >= 0, "loss_aversion must be >= 0")
        _check(0 < self.alpha_gain <= 1, "alpha_gain must lie in (0, 1]")
        _check(0 < self.beta_loss <= 1, "beta_loss must lie in (0, 1]")
        _check(
            GAMMA_WEIGHT_MIN <= self.gamma_weight <= 1,
            f"gamma_weight must lie in [{GAMMA_WEIGHT_MIN}, 1]",
        )
        _check(self.kappa > 0, "kappa must be > 0")
        _check(0 <= self.w_herd <= 1, "w_herd must lie in [0, 1]")
        _check(0 <= self.a_adjust <= 1, "a_adjust must lie in [0, 1]")
        _check(self.tau_ratio >= 0, "tau_ratio must be >= 0")
        _check(self.gamma_risk > 0, "gamma_risk must be > 0")

    @classmethod
    def rational(cls) -> "ParameterVector":
        return cls()

    def with_(self, **changes: float) -> "ParameterVector":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Decision primitives
# ---------------------------------------------------------------------------


def value(x: float, p: ParameterVector) -> float:
    """Prospect-theory value of a signed outcome ``x``."""
    if x >= 0:
        return x**p.alpha_gain
    return -p.loss_aversion * (-x) ** p.beta_loss


def weight_probability(prob: float, p: ParameterVector) -> float:
    """Inverse-S decision weight of a stated probability."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability out of range: {prob}")
    g = p.gamma_weight
    if prob == 0.0 or prob == 1.0 or g == 1.0:
        return float(prob)
    num = prob**g
    return num / (num + (1.0 - prob) ** g) ** (1.0 / g)


def perceived_sd(true_sd: float, p: ParameterVector) -> float:
    """Subjective volatility when variance is perceived as ``sd**2 / kappa``."""
    if true_sd < 0:
        raise ValueError("true_sd must be >= 0")
    return true_sd / math.sqrt(p.kappa)


def forecast_return(mean_return: float, last_return: float, p: ParameterVector) -> float:
    return mean_return + p.theta * (last_return - mean_return)


def anchored_valuation(anchor: float, true_value: float, p: ParameterVector) -> float:
    return anchor + p.a_adjust * (true_value - anchor)


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Benchmark:
    bias: Bias
    point: float
    lo: float
    hi: float
    unit: str = ""
    source_note: str = ""

    def __post_init__(self) -> None:
        _check(self.lo <= self.point <= self.hi, f"{self.bias.value}: need lo <= point <= hi")


# Human reference values; overconfidence is miscalibration of a stated 80%
# interval, in percentage points.
DEFAULT_BENCHMARKS: dict[Bias, Benchmark] = {
    b.bias: b
    for b in (
        Benchmark(Bias.LOSS_AVERSION, 2.25, 2.00, 2.50, "lambda", "choice experiments, N=300"),
        Benchmark(Bias.DISPOSITION, 1.60, 1.30, 2.00, "ratio", "PGR/PLR field and lab studies"),
        Benchmark(Bias.OVERCONFIDENCE, 15.0, 12.0, 18.0, "pp", "80% intervals cover ~65%"),
        Benchmark(Bias.HERDING, 0.70, 0.65, 0.75, "rate", "cascade experiments, conflict trials"),
        Benchmark(Bias.REPRESENTATIVENESS, 1.65, 1.50, 1.80, "ratio", "narrative/fundamental weight"),
        Benchmark(Bias.PROBABILITY_WEIGHTING, 0.35, 0.30, 0.40, "rate", "high-skew choice, equal EV"),
        Benchmark(Bias.ANCHORING, 0.43, 0.38, 0.52, "corr", "anchor-valuation correlation"),
        Benchmark(Bias.EXTRAPOLATION, 0.60, 0.55, 0.65, "coef", "forecast on past return"),
    )
}

NOMINAL_COVERAGE = 0.80


def coverage_benchmark(b: Benchmark | None = None) -> Benchmark:
    """Express the overconfidence benchmark as interval coverage (0.65 by default)."""
    b = b or DEFAULT_BENCHMARKS[Bias.OVERCONFIDENCE]
    scale = 100.0 if b.unit == "pp" else 1.0
    return Benchmark(
        Bias.OVERCONFIDENCE,
        NOMINAL_COVERAGE - b.point / scale,
        NOMINAL_COVERAGE - b.hi / scale,
        NOMINAL_COVERAGE - b.lo / scale,
        "coverage",
        b.source_note,
    )


def write_benchmarks(path: str | Path, benchmarks: Iterable[Benchmark]) -> None:
    cp = configparser.ConfigParser()
    for b in benchmarks:
        cp[b.bias.value] = {
            "point": repr(b.point),
            "lo": repr(b.lo),
            "hi": repr(b.hi),
            "unit": b.unit,
            "source_note": b.source_note,
        }
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def read_benchmarks(path: str | Path) -> dict[Bias, Benchmark]:
    """Load a benchmark file; biases missing from the file keep their defaults."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    out = dict(DEFAULT_BENCHMARKS)
    for section in cp.sections():
        bias = Bias(section)
        s = cp[section]
        out[bias] = Benchmark(
            bias,
            float(s["point"]),
            float(s["lo"]),
            float(s["hi"]),
            s.get("unit", ""),
            s.get("source_note", ""),
        )
    return out


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    kind: ProfileKind
    strength: float = 1.0
    template_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        _check(0.0 <= self.strength <= 1.0, "strength must lie in [0, 1]")
        if not self.template_id:
            object.__setattr__(self, "template_id", self.kind.value)

    @property
    def is_rational(self) -> bool:
        return self.kind is ProfileKind.RATIONAL or self.strength == 0.0


# The profile whose strength drives each bias in calibration sweeps.
PROFILE_FOR_BIAS: dict[Bias, ProfileKind] = {
    Bias.LOSS_AVERSION: ProfileKind.LOSS_AVERSE,
    Bias.DISPOSITION: ProfileKind.LOSS_AVERSE,
    Bias.ANCHORING: ProfileKind.LOSS_AVERSE,
    Bias.PROBABILITY_WEIGHTING: ProfileKind.LOSS_AVERSE,
    Bias.OVERCONFIDENCE: ProfileKind.OVERCONFIDENT,
    Bias.HERDING: ProfileKind.HERDING_PRONE,
    Bias.REPRESENTATIVENESS: ProfileKind.REPRESENTATIVENESS_BIASED,
    Bias.EXTRAPOLATION: ProfileKind.EXTRAPOLATIVE,
}
