"""Comparison of simulated momentum statistics with published reference values."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from behavcal.abm.config import MarketConfig
from behavcal.abm.model import ReplicationSummary, run_replications

MAGNITUDE_TOLERANCE = 0.05


@dataclass(frozen=True)
class ReferenceRow:
    label: str
    theta: float  # 0 means all-rational
    short_momentum: float
    long_reversal: float
    peak_lag: str = ""
    decay_rate: str = ""


REFERENCE_ROWS = (
    ReferenceRow("baseline", 0.0, 0.02, 0.01),
    ReferenceRow("theta=0.60", 0.60, 0.12, -0.08, "3", "0.24"),
    ReferenceRow("theta=0.88", 0.88, 0.18, -0.12, "2", "0.32"),
)
EMPIRICAL_ROW = ReferenceRow("empirical", float("nan"), 0.14, -0.10, "3-6", "0.28")


@dataclass(frozen=True)
class ComparisonRow:
    reference: ReferenceRow
    mean: dict[str, float]
    se: dict[str, float]
    summary: ReplicationSummary | None = None

    def status(self, key: str) -> str:
        ref = getattr(self.reference, key)
        return "pass" if abs(self.mean[key] - ref) <= MAGNITUDE_TOLERANCE else "deviate"


def config_for(row: ReferenceRow, base: MarketConfig) -> MarketConfig:
    if row.theta == 0.0:
        return base.with_(theta_extrap=0.0, mass_rational=1.0, mass_extrap=0.0)
    return base.with_(theta_extrap=row.theta)


def compare(base: MarketConfig, jobs: int = 1) -> list[ComparisonRow]:
    out = []
    for row in REFERENCE_ROWS:
        s = run_replications(config_for(row, base), jobs=jobs)
        out.append(ComparisonRow(row, s.mean, s.se, s))
    return out


def format_comparison(rows: list[ComparisonRow]) -> str:
    head = f"{'row':<12}{'short':>16}{'ref':>7}{'':>9}{'long':>16}{'ref':>7}{'':>9}{'peak':>7}{'ref':>6}"
    lines = [head]
    for r in rows:
        m, se, ref = r.mean, r.se, r.reference
        lines.append(
            f"{ref.label:<12}"
            f"{m['short_momentum']:>9.3f} ({se['short_momentum']:.3f}){ref.short_momentum:>7.2f}{r.status('short_momentum'):>9}"
            f"{m['long_reversal']:>9.3f} ({se['long_reversal']:.3f}){ref.long_reversal:>7.2f}{r.status('long_reversal'):>9}"
            f"{m['peak_lag']:>7.1f}{ref.peak_lag or 'n/a':>6}"
        )
    e = EMPIRICAL_ROW
    lines.append(f"{e.label:<12}{'':>16}{e.short_momentum:>7.2f}{'':>9}{'':>16}{e.long_reversal:>7.2f}{'':>9}{'':>7}{e.peak_lag:>6}")
    return "\n".join(lines)


def write_comparison_csv(rows: list[ComparisonRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "statistic", "mean", "se", "reference", "status"])
        for r in rows:
            for key in ("short_momentum", "long_reversal"):
                w.writerow([r.reference.label, key, repr(r.mean[key]), repr(r.se[key]), getattr(r.reference, key), r.status(key)])
            w.writerow([r.reference.label, "peak_lag", repr(r.mean["peak_lag"]), repr(r.se["peak_lag"]), r.reference.peak_lag, ""])
            w.writerow([r.reference.label, "decay_rate", repr(r.mean["decay_rate"]), repr(r.se["decay_rate"]), r.reference.decay_rate, ""])


def write_acf_csv(summary: ReplicationSummary, path: str | Path) -> None:
    """Lag against mean autocorrelation with a 95% band."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", "autocorr", "se", "lo95", "hi95"])
        for k, (m, s) in enumerate(zip(summary.acf_mean, summary.acf_se), start=1):
            w.writerow([k, repr(float(m)), repr(float(s)), repr(float(m - 1.96 * s)), repr(float(m + 1.96 * s))])


def ma1_lag1(theta: float) -> float:
    """Lag-1 autocorrelation of r_t = (1 + h) dv_t - h dv_{t-1} with h = theta / 2."""
    h = theta / 2.0
    return -(1.0 + h) * h / ((1.0 + h) ** 2 + h * h)

