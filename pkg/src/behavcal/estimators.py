"""Recover the eight behavioral measures from decision records."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from behavcal.core import NOMINAL_COVERAGE, Bias
from behavcal.experiments import Anchor, Cascade, Forecast, Gamble, Interval, Narrative, Portfolio, SkewChoice
from behavcal.respondents import (
    RATING_MAX,
    RATING_MIN,
    BinaryChoice,
    DecisionRecord,
    ForecastAnswer,
    IntervalAnswer,
    Rating,
    SellChoice,
    Valuation,
)


class EstimationError(ValueError):
    """Records do not meet an estimator's preconditions."""


@dataclass
class EstimateResult:
    bias: Bias
    point: float
    stderr: float
    n: int
    profile: str = ""
    strength: float = float("nan")
    backend: str = ""
    model_id: str = ""
    flags: tuple[str, ...] = ()
    extras: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.bias = Bias(self.bias)
        self.flags = tuple(self.flags)
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0 (use nan when unavailable)")

    @property
    def usable(self) -> bool:
        return math.isfinite(self.point) and "infinite_dr" not in self.flags and "failed" not in self.flags

    def with_keys(self, **keys) -> "EstimateResult":
        for k, v in keys.items():
            setattr(self, k, v)
        return self


def _usable(records: Iterable[DecisionRecord], payload: type, answer: type) -> list[DecisionRecord]:
    return [r for r in records if isinstance(r.scenario.payload, payload) and isinstance(r.answer, answer)]


# ---------------------------------------------------------------------------
# Loss aversion
# ---------------------------------------------------------------------------


def logistic_fit(x: np.ndarray, y: np.ndarray, max_iter: int = 100, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Newton-Raphson logistic regression of ``y`` on ``[1, x]``.

    Returns coefficients and their covariance (inverse Fisher information).
    """
    X = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    for _ in range(max_iter):
        eta = X @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        info = X.T @ (w[:, None] * X)
        step = np.linalg.solve(info, X.T @ (y - mu))
        beta = beta + step
        if np.max(np.abs(step)) < tol * (1.0 + np.max(np.abs(beta))):
            break
    mu = 1.0 / (1.0 + np.exp(-(X @ beta)))
    info = X.T @ ((mu * (1.0 - mu))[:, None] * X)
    return beta, np.linalg.inv(info)


GAMBLE_LOSS = 100.0


def estimate_lambda(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Loss aversion from the 50% acceptance point of gain X against a 100 loss.

    With linear value on both sides the indifference gain is ``100 * lambda``.
    Perfectly separated choices fall back to the midpoint of the bracketing
    grid points.
    """
    recs = _usable(records, Gamble, BinaryChoice)
    if not recs:
        raise EstimationError("no parsed gamble records")
    x = np.array([r.scenario.payload.gain for r in recs], dtype=float)
    y = np.array([r.answer.label == "ACCEPT" for r in recs], dtype=float)
    if len(np.unique(x)) < 5:
        raise EstimationError("need at least 5 distinct gains")
    if y.all():
        raise EstimationError("every gamble accepted: threshold lies below the grid")
    if not y.any():
        raise EstimationError("every gamble rejected: threshold lies above the grid")
    n = len(recs)
    lo_acc = x[y == 1].min()
    hi_rej = x[y == 0].max()
    if hi_rej < lo_acc:
        point = 0.5 * (hi_rej + lo_acc) / GAMBLE_LOSS
        stderr = 0.5 * (lo_acc - hi_rej) / GAMBLE_LOSS / math.sqrt(3.0)  # uniform within the bracket
        return EstimateResult(Bias.LOSS_AVERSION, point, stderr, n, flags=("separation",), extras={"x_star": point * GAMBLE_LOSS})
    scale = GAMBLE_LOSS
    beta, cov = logistic_fit(x / scale, y)
    b0, b1 = beta
    flags = []
    if b1 <= 0:
        flags.append("non_increasing")
    x_star = -b0 / b1 * scale
    grad = np.array([-1.0 / b1, b0 / b1**2]) * scale
    se_x = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    if not (x.min() <= x_star <= x.max()):
        flags.append("extrapolated_threshold")
    return EstimateResult(
        Bias.LOSS_AVERSION,
        x_star / GAMBLE_LOSS,
        se_x / GAMBLE_LOSS,
        n,
        flags=tuple(flags),
        extras={"x_star": x_star, "slope": b1 / scale, "accept_rate": float(y.mean())},
    )


# ---------------------------------------------------------------------------
# Disposition
# ---------------------------------------------------------------------------


def estimate_disposition(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Winner sell rate over loser sell rate, pooled over opportunities."""
    recs = _usable(records, Portfolio, SellChoice)
    nw = nl = sw = sl = 0
    for r in recs:
        sold = set(r.answer.indices)
        for i, pos in enumerate(r.scenario.payload.positions, start=1):
            if pos.is_winner:
                nw += 1
                sw += i in sold
            elif pos.is_loser:
                nl += 1
                sl += i in sold
    if nw == 0 or nl == 0:
        raise EstimationError("need at least one winner and one loser opportunity")
    pw, pl = sw / nw, sl / nl
    extras = {"pgr": pw, "plr": pl, "winner_opportunities": nw, "loser_opportunities": nl}
    if sl == 0:
        return EstimateResult(Bias.DISPOSITION, float("inf"), float("nan"), len(recs), flags=("infinite_dr",), extras=extras)
    dr = pw / pl
    if sw == 0:
        return EstimateResult(Bias.DISPOSITION, 0.0, float("nan"), len(recs), flags=("zero_winner_sales",), extras=extras)
    var_log = (1 - pw) / (nw * pw) + (1 - pl) / (nl * pl)
    return EstimateResult(Bias.DISPOSITION, dr, dr * math.sqrt(var_log), len(recs), extras=extras)


# ---------------------------------------------------------------------------
# Overconfidence
# ---------------------------------------------------------------------------


def estimate_coverage(records: Sequence[DecisionRecord], realized: Sequence[float] | None = None) -> EstimateResult:
    """Share of stated intervals containing the realized outcome.

    Realizations default to the ones stored in each interval scenario.
    """
    recs = _usable(records, Interval, IntervalAnswer)
    if not recs:
        raise EstimationError("no parsed interval records")
    if realized is None:
        realized = [r.scenario.payload.realized for r in recs]
    elif len(realized) != len(recs):
        raise EstimationError("one realization per usable record is required")
    if any(v is None or not math.isfinite(v) for v in realized):
        raise EstimationError("missing realizations")
    hits = np.array([a.answer.lo <= v <= a.answer.hi for a, v in zip(recs, realized)], dtype=float)
    cov = float(hits.mean())
    n = len(hits)
    return EstimateResult(
        Bias.OVERCONFIDENCE,
        cov,
        math.sqrt(cov * (1 - cov) / n),
        n,
        extras={"miscalibration": NOMINAL_COVERAGE - cov},
    )


# ---------------------------------------------------------------------------
# Herding, skew choice
# ---------------------------------------------------------------------------


def _rate(bias: Bias, hits: list[bool]) -> EstimateResult:
    n = len(hits)
    p = sum(hits) / n
    return EstimateResult(bias, p, math.sqrt(p * (1 - p) / n), n)


def estimate_herding(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Crowd-following rate on trials where the private signal opposes the majority."""
    recs = [r for r in _usable(records, Cascade, BinaryChoice) if r.scenario.payload.is_conflict]
    if not recs:
        raise EstimationError("no conflict trials")
    return _rate(Bias.HERDING, [r.answer.label == r.scenario.payload.crowd_majority for r in recs])


def estimate_skew_choice(records: Sequence[DecisionRecord]) -> EstimateResult:
    recs = _usable(records, SkewChoice, BinaryChoice)
    if not recs:
        raise EstimationError("no parsed skew-choice records")
    hits = []
    for r in recs:
        p = r.scenario.payload
        if p.high_skew_index is None:
            raise EstimationError(f"scenario {r.scenario.id} has no designated high-skew option")
        hits.append(r.answer.label == p.assets[p.high_skew_index].label)
    return _rate(Bias.PROBABILITY_WEIGHTING, hits)


# ---------------------------------------------------------------------------
# Anchoring
# ---------------------------------------------------------------------------


def estimate_anchoring(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Pearson anchor-valuation correlation with a Fisher-z standard error."""
    recs = _usable(records, Anchor, Valuation)
    anchors = np.array([r.scenario.payload.anchor for r in recs], dtype=float)
    vals = np.array([r.answer.price for r in recs], dtype=float)
    if len(np.unique(anchors)) < 3:
        raise EstimationError("need at least 3 distinct anchors")
    if not np.all(np.isfinite(vals)):
        raise EstimationError("non-finite valuations")
    if np.ptp(vals) == 0:
        raise EstimationError("valuations have zero variance")
    rho = float(np.corrcoef(anchors, vals)[0, 1])
    n = len(recs)
    se = (1 - rho * rho) / math.sqrt(n - 3) if n > 3 else float("nan")
    extras = {}
    if n > 3 and abs(rho) < 1:
        z = math.atanh(rho)
        h = stats.norm.ppf(0.975) / math.sqrt(n - 3)
        extras = {"ci_lo": math.tanh(z - h), "ci_hi": math.tanh(z + h)}
    return EstimateResult(Bias.ANCHORING, rho, max(se, 0.0), n, extras=extras)


# ---------------------------------------------------------------------------
# Extrapolation, representativeness
# ---------------------------------------------------------------------------


def _ols(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients, their covariance and the residual variance."""
    n, k = X.shape
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    s2 = float(resid @ resid) / (n - k) if n > k else float("nan")
    xtx_inv = np.linalg.inv(X.T @ X)
    return beta, s2 * xtx_inv, s2


def estimate_extrapolation(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Slope of the forecast deviation from the history mean on the last return's deviation."""
    recs = _usable(records, Forecast, ForecastAnswer)
    if len(recs) < 3:
        raise EstimationError("need at least 3 forecast records")
    means = np.array([r.scenario.payload.mean_return for r in recs])
    last = np.array([r.scenario.payload.last_return for r in recs])
    fc = np.array([r.answer.value for r in recs])
    x = last - means
    if np.ptp(x) == 0:
        raise EstimationError("no variation in last-return deviations")
    X = np.column_stack([np.ones_like(x), x])
    beta, cov, _ = _ols(X, fc - means)
    se = math.sqrt(max(cov[1, 1], 0.0)) if np.isfinite(cov[1, 1]) else float("nan")
    corr = float(np.corrcoef(fc, last)[0, 1]) if np.ptp(fc) > 0 else float("nan")
    return EstimateResult(
        Bias.EXTRAPOLATION,
        float(beta[1]),
        se,
        len(recs),
        extras={"intercept": float(beta[0]), "corr_forecast_last": corr},
    )


def estimate_representativeness(records: Sequence[DecisionRecord]) -> EstimateResult:
    """Ratio of narrative to fundamental weights in a two-regressor rating model.

    Ratings pinned at either end of the scale carry no slope information and
    are dropped.
    """
    recs = _usable(records, Narrative, Rating)
    kept = [r for r in recs if RATING_MIN < r.answer.value < RATING_MAX]
    if len(kept) < 4:
        raise EstimationError("need at least 4 uncensored ratings")
    nar = np.array([r.scenario.payload.narrative_score for r in kept])
    fun = np.array([r.scenario.payload.fundamental_score for r in kept])
    y = np.array([r.answer.value for r in kept])
    X = np.column_stack([np.ones_like(nar), nar, fun])
    if np.linalg.matrix_rank(X) < 3 or abs(np.corrcoef(nar, fun)[0, 1]) > 0.99:
        raise EstimationError("narrative and fundamental scores are collinear")
    beta, cov, s2 = _ols(X, y)
    bn, bf = float(beta[1]), float(beta[2])
    flags = []
    se_bf = math.sqrt(cov[2, 2]) if np.isfinite(cov[2, 2]) else 0.0
    if abs(bf) < 1e-12 or (se_bf > 0 and abs(bf) < 2 * se_bf):
        flags.append("unstable_ratio")
    if abs(bf) < 1e-12:
        return EstimateResult(Bias.REPRESENTATIVENESS, float("nan"), float("nan"), len(kept), flags=tuple(flags))
    ratio = bn / bf
    if np.all(np.isfinite(cov)):
        grad = np.array([0.0, 1.0 / bf, -bn / bf**2])
        se = math.sqrt(max(grad @ cov @ grad, 0.0))
    else:
        se = float("nan")
    return EstimateResult(
        Bias.REPRESENTATIVENESS,
        ratio,
        se,
        len(kept),
        flags=tuple(flags),
        extras={"beta_narrative": bn, "beta_fundamental": bf, "censored": len(recs) - len(kept)},
    )


ESTIMATORS: dict[Bias, Callable[[Sequence[DecisionRecord]], EstimateResult]] = {
    Bias.LOSS_AVERSION: estimate_lambda,
    Bias.DISPOSITION: estimate_disposition,
    Bias.OVERCONFIDENCE: estimate_coverage,
    Bias.HERDING: estimate_herding,
    Bias.REPRESENTATIVENESS: estimate_representativeness,
    Bias.PROBABILITY_WEIGHTING: estimate_skew_choice,
    Bias.ANCHORING: estimate_anchoring,
    Bias.EXTRAPOLATION: estimate_extrapolation,
}


def estimate(bias: Bias | str, records: Sequence[DecisionRecord]) -> EstimateResult:
    return ESTIMATORS[Bias(bias)](records)


# ---------------------------------------------------------------------------
# Grouping
# ---------------------------------------------------------------------------

GROUP_KEYS = ("profile", "strength", "backend", "model_id")


def record_keys(r: DecisionRecord) -> tuple[str, float, str, str]:
    return (r.profile.kind.value, float(r.profile.strength), r.backend, r.model_id)


def estimate_groups(
    records: Iterable[DecisionRecord],
    key: Callable[[DecisionRecord], tuple] = record_keys,
) -> list[EstimateResult]:
    """One result per (bias, group); precondition failures become flagged NaN rows."""
    cells: dict[tuple, list[DecisionRecord]] = defaultdict(list)
    for r in records:
        cells[(r.bias.value,) + tuple(key(r))].append(r)
    out = []
    for k in sorted(cells, key=lambda t: tuple(str(v) for v in t)):
        recs = cells[k]
        bias = Bias(k[0])
        try:
            res = ESTIMATORS[bias](recs)
        except EstimationError as e:
            res = EstimateResult(bias, float("nan"), float("nan"), len(recs), flags=("failed",), extras={"error": str(e)})
        if key is record_keys:
            res.with_keys(profile=k[1], strength=k[2], backend=k[3], model_id=k[4])
        else:
            res.extras = {**res.extras, "group": "|".join(str(v) for v in k[1:])}
        res.extras = {**res.extras, "parse_failures": sum(not r.parsed.ok for r in recs)}
        out.append(res)
    return out


# ---------------------------------------------------------------------------
# CSV IO
# ---------------------------------------------------------------------------

CSV_FIELDS = ("bias", "point", "stderr", "n", "profile", "strength", "backend", "model_id", "flags", "extras")


def write_estimates(path: str | Path, results: Iterable[EstimateResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in results:
            w.writerow(
                [
                    r.bias.value,
                    repr(float(r.point)),
                    repr(float(r.stderr)),
                    r.n,
                    r.profile,
                    repr(float(r.strength)),
                    r.backend,
                    r.model_id,
                    ";".join(r.flags),
                    json.dumps(r.extras, sort_keys=True),
                ]
            )


def read_estimates(path: str | Path) -> list[EstimateResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                EstimateResult(
                    Bias(row["bias"]),
                    float(row["point"]),
                    float(row["stderr"]),
                    int(row["n"]),
                    row["profile"],
                    float(row["strength"]),
                    row["backend"],
                    row["model_id"],
                    tuple(f for f in row["flags"].split(";") if f),
                    json.loads(row["extras"]) if row["extras"] else {},
                )
            )
    return out
