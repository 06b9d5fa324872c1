"""Respondent backends: a ground-truth synthetic respondent that realizes the
decision models exactly, and an HTTP chat-completions client for external
language models. Both produce ``DecisionRecord``s through the same parser.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Callable, Union

import httpx
import numpy as np
from scipy import optimize, stats

from behavcal.core import (
    Bias,
    ParameterVector,
    Profile,
    ProfileKind,
    anchored_valuation,
    forecast_return,
    perceived_sd,
    value,
    weight_probability,
)
from behavcal.experiments import (
    SKEW_PROBS,
    Anchor,
    Cascade,
    Forecast,
    Gamble,
    Interval,
    Lottery,
    Narrative,
    Portfolio,
    Scenario,
    SkewChoice,
)
from behavcal.seeding import derive_rng

# ---------------------------------------------------------------------------
# Parsed responses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryChoice:
    label: str  # ACCEPT / REJECT or an option label


@dataclass(frozen=True)
class SellChoice:
    indices: tuple[int, ...]  # 1-based; empty means sell nothing


@dataclass(frozen=True)
class IntervalAnswer:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError("interval needs lo <= hi")


@dataclass(frozen=True)
class Valuation:
    price: float


RATING_MIN, RATING_MAX = 1.0, 10.0


@dataclass(frozen=True)
class Rating:
    value: float

    def __post_init__(self) -> None:
        if not RATING_MIN <= self.value <= RATING_MAX:
            raise ValueError("rating must lie in [1, 10]")


@dataclass(frozen=True)
class ForecastAnswer:
    value: float  # return per period as a fraction


Answer = Union[BinaryChoice, SellChoice, IntervalAnswer, Valuation, Rating, ForecastAnswer]


@dataclass(frozen=True)
class AnswerShape:
    kind: str  # binary, sell, interval, valuation, rating, forecast
    labels: tuple[str, ...] = ()
    n_positions: int = 0


@dataclass(frozen=True)
class ParsedResponse:
    shape: str
    answer: Answer | None
    raw: str
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.answer is not None


def expected_shape(scenario: Scenario) -> AnswerShape:
    p = scenario.payload
    if isinstance(p, Gamble):
        return AnswerShape("binary", ("ACCEPT", "REJECT"))
    if isinstance(p, Cascade):
        return AnswerShape("binary", ("A", "B"))
    if isinstance(p, SkewChoice):
        return AnswerShape("binary", tuple(a.label for a in p.assets))
    if isinstance(p, Portfolio):
        return AnswerShape("sell", n_positions=len(p.positions))
    if isinstance(p, Interval):
        return AnswerShape("interval")
    if isinstance(p, Narrative):
        return AnswerShape("rating")
    if isinstance(p, Anchor):
        return AnswerShape("valuation")
    if isinstance(p, Forecast):
        return AnswerShape("forecast")
    raise TypeError(type(p))


_ANSWER_RE = re.compile(r"^\W*answer\s*:\s*(.*?)\s*$", re.IGNORECASE)
_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_NUM_RE = re.compile(rf"^\$?\s*({_NUM})\s*(%|m)?\.?$", re.IGNORECASE)
_INTERVAL_RE = re.compile(rf"^[\[(]\s*\$?({_NUM})\s*m?\s*[,;]\s*\$?({_NUM})\s*m?\s*[\])]\.?$", re.IGNORECASE)
_SELL_RE = re.compile(r"^sell\s+(none|\d+(?:\s*(?:,|and)\s*\d+)*)\.?$", re.IGNORECASE)


def _number(text: str) -> float | None:
    m = _NUM_RE.match(text.replace(",", "").strip())
    if not m:
        return None
    x = float(m.group(1))
    return x if math.isfinite(x) else None


def _parse_body(body: str, shape: AnswerShape) -> Answer | None:
    body = body.strip().strip("*`\"'").strip()
    if shape.kind == "binary":
        token = body.rstrip(".").strip().upper()
        for label in shape.labels:
            if token == label.upper() or token == f"OPTION {label.upper()}":
                return BinaryChoice(label)
        return None
    if shape.kind == "sell":
        m = _SELL_RE.match(body)
        if not m:
            return None
        if m.group(1).lower() == "none":
            return SellChoice(())
        idx = tuple(sorted({int(t) for t in re.findall(r"\d+", m.group(1))}))
        if shape.n_positions and any(i < 1 or i > shape.n_positions for i in idx):
            return None
        return SellChoice(idx)
    if shape.kind == "interval":
        m = _INTERVAL_RE.match(body)
        if not m:
            return None
        lo, hi = float(m.group(1)), float(m.group(2))
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            return None
        return IntervalAnswer(lo, hi)
    x = _number(body)
    if x is None:
        return None
    if shape.kind == "rating":
        return Rating(x) if RATING_MIN <= x <= RATING_MAX else None
    if shape.kind == "valuation":
        return Valuation(x)
    if shape.kind == "forecast":
        return ForecastAnswer(x / 100.0)
    return None


def parse(raw: str, shape: AnswerShape) -> ParsedResponse:
    """Extract the last ``ANSWER:`` line that fits ``shape``; never raises."""
    if not isinstance(raw, str):
        return ParsedResponse(shape.kind, None, "", "no text")
    saw_line = False
    for line in reversed(raw.splitlines()):
        m = _ANSWER_RE.match(line)
        if not m:
            continue
        saw_line = True
        try:
            ans = _parse_body(m.group(1), shape)
        except (ValueError, OverflowError):
            ans = None
        if ans is not None:
            return ParsedResponse(shape.kind, ans, raw)
    return ParsedResponse(shape.kind, None, raw, "malformed answer line" if saw_line else "no answer line")


def format_answer(ans: Answer) -> str:
    """The canonical answer line for a structured answer."""
    if isinstance(ans, BinaryChoice):
        return f"ANSWER: {ans.label}"
    if isinstance(ans, SellChoice):
        return "ANSWER: SELL " + (",".join(str(i) for i in ans.indices) if ans.indices else "NONE")
    if isinstance(ans, IntervalAnswer):
        return f"ANSWER: [{ans.lo!r}, {ans.hi!r}]"
    if isinstance(ans, Valuation):
        return f"ANSWER: {ans.price!r}"
    if isinstance(ans, Rating):
        return f"ANSWER: {ans.value!r}"
    if isinstance(ans, ForecastAnswer):
        return f"ANSWER: {ans.value * 100.0!r}"
    raise TypeError(type(ans))


def answer_to_dict(ans: Answer | None) -> dict[str, Any] | None:
    if ans is None:
        return None
    d: dict[str, Any] = {"type": type(ans).__name__}
    for k, v in ans.__dict__.items():
        d[k] = list(v) if isinstance(v, tuple) else v
    return d


_ANSWER_TYPES = {c.__name__: c for c in (BinaryChoice, SellChoice, IntervalAnswer, Valuation, Rating, ForecastAnswer)}


def answer_from_dict(d: dict[str, Any] | None) -> Answer | None:
    if d is None:
        return None
    d = dict(d)
    cls = _ANSWER_TYPES[d.pop("type")]
    if cls is SellChoice:
        d["indices"] = tuple(d["indices"])
    return cls(**d)


# ---------------------------------------------------------------------------
# Decision records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionRecord:
    scenario: Scenario
    profile: Profile
    respondent_id: str
    backend: str  # "synthetic" or "llm"
    raw_text: str
    parsed: ParsedResponse
    timestamp: str | None = None  # None for synthetic records keeps reruns byte-identical
    seed_or_request_id: str = ""
    model_id: str = ""

    @property
    def scenario_id(self) -> str:
        return self.scenario.id

    @property
    def bias(self) -> Bias:
        return self.scenario.bias

    @property
    def answer(self) -> Answer | None:
        return self.parsed.answer

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "profile": {"kind": self.profile.kind.value, "strength": self.profile.strength, "template_id": self.profile.template_id},
            "respondent_id": self.respondent_id,
            "backend": self.backend,
            "raw_text": self.raw_text,
            "parsed": {"shape": self.parsed.shape, "answer": answer_to_dict(self.parsed.answer), "error": self.parsed.error},
            "timestamp": self.timestamp,
            "seed_or_request_id": self.seed_or_request_id,
            "model_id": self.model_id,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DecisionRecord":
        p = d["parsed"]
        return cls(
            Scenario.from_dict(d["scenario"]),
            Profile(**d["profile"]),
            d["respondent_id"],
            d["backend"],
            d["raw_text"],
            ParsedResponse(p["shape"], answer_from_dict(p["answer"]), d["raw_text"], p.get("error", "")),
            d.get("timestamp"),
            d.get("seed_or_request_id", ""),
            d.get("model_id", ""),
        )


def write_records(path, records, append: bool = False) -> None:
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records(path) -> list[DecisionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                out.append(DecisionRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError:
                # a torn final line from an interrupted run is dropped
                continue
    return out


# ---------------------------------------------------------------------------
# Ground-truth synthetic respondent
# ---------------------------------------------------------------------------

DEFAULT_CHOICE_NOISE = 0.10
RATING_BASE = 1.0
Z80 = float(stats.norm.ppf(0.90))  # half-width multiplier of a two-sided 80% interval


@dataclass(frozen=True)
class GroundTruth:
    """Parameters of a synthetic respondent.

    ``choice_noise`` is a relative temperature: each task scales it by the
    natural magnitude of that task (loss-side utility for gambles, expected
    value for lotteries, true value for valuations, and so on). Zero gives
    deterministic answers.
    """

    params: ParameterVector = field(default_factory=ParameterVector)
    sell_prob_winner: float = 0.5
    sell_prob_loser: float = 0.5
    choice_noise: float = DEFAULT_CHOICE_NOISE

    def __post_init__(self) -> None:
        for name in ("sell_prob_winner", "sell_prob_loser"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not (self.choice_noise >= 0 and math.isfinite(self.choice_noise)):
            raise ValueError("choice_noise must be finite and >= 0")

    def with_params(self, **changes: float) -> "GroundTruth":
        return replace(self, params=self.params.with_(**changes))


def gamble_utility(gain: float, p: ParameterVector, loss: float = 100.0, prob: float = 0.5) -> float:
    """Weighted prospect value of a two-outcome mixed gamble."""
    return weight_probability(prob, p) * value(gain, p) + weight_probability(1.0 - prob, p) * value(-loss, p)


def lottery_utility(lot: Lottery, p: ParameterVector) -> float:
    return sum(weight_probability(pr, p) * value(x, p) for x, pr in lot.outcomes)


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _softmax(u: np.ndarray, temp: float) -> np.ndarray:
    z = (u - u.max()) / temp
    e = np.exp(z)
    return e / e.sum()


def _decide_gamble(gt: GroundTruth, g: Gamble, rng) -> BinaryChoice:
    p = gt.params
    du = gamble_utility(g.gain, p, g.loss, g.prob)
    temp = gt.choice_noise * abs(weight_probability(1.0 - g.prob, p) * value(-g.loss, p))
    if temp == 0.0:
        accept = du >= 0.0
    else:
        accept = rng.random() < _logistic(du / temp)
    return BinaryChoice("ACCEPT" if accept else "REJECT")


def _sell_prob(gt: GroundTruth, pos) -> float:
    if pos.is_winner:
        return gt.sell_prob_winner
    if pos.is_loser:
        return gt.sell_prob_loser
    return 0.5 * (gt.sell_prob_winner + gt.sell_prob_loser)


def _decide_portfolio(gt: GroundTruth, pf: Portfolio, rng) -> SellChoice:
    probs = np.array([_sell_prob(gt, q) for q in pf.positions])
    if pf.must_sell_one:
        w = probs if probs.sum() > 0 else np.ones_like(probs)
        return SellChoice((int(rng.choice(len(w), p=w / w.sum())) + 1,))
    draws = rng.random(len(probs))
    return SellChoice(tuple(i + 1 for i in range(len(probs)) if draws[i] < probs[i]))


def _decide_interval(gt: GroundTruth, iv: Interval, rng) -> IntervalAnswer:
    hist = np.asarray(iv.history, dtype=float)
    centre = iv.true_mean if iv.true_mean is not None else float(hist.mean())
    sd = iv.true_sd if iv.true_sd is not None else float(hist.std(ddof=1))
    z = float(stats.norm.ppf(0.5 + iv.target_coverage / 2.0))
    half = z * perceived_sd(sd, gt.params)
    return IntervalAnswer(centre - half, centre + half)


def _decide_cascade(gt: GroundTruth, c: Cascade, rng) -> BinaryChoice:
    if c.is_conflict and rng.random() < gt.params.w_herd:
        return BinaryChoice(c.crowd_majority)
    return BinaryChoice(c.private_signal)


def _decide_narrative(gt: GroundTruth, n: Narrative, rng) -> Rating:
    r = RATING_BASE + gt.params.tau_ratio * n.narrative_score + n.fundamental_score
    if gt.choice_noise > 0:
        r += gt.choice_noise * 4.0 * rng.standard_normal()
    return Rating(min(RATING_MAX, max(RATING_MIN, r)))


def _decide_skew(gt: GroundTruth, sc: SkewChoice, rng) -> BinaryChoice:
    u = np.array([lottery_utility(a, gt.params) for a in sc.assets])
    if gt.choice_noise == 0.0:
        return BinaryChoice(sc.assets[int(np.argmax(u))].label)
    scale = max(abs(a.expected_value) for a in sc.assets) or 1.0
    prob = _softmax(u, gt.choice_noise * scale)
    return BinaryChoice(sc.assets[int(rng.choice(len(u), p=prob))].label)


def _decide_anchor(gt: GroundTruth, a: Anchor, rng) -> Valuation:
    v = anchored_valuation(a.anchor, a.true_value, gt.params)
    if gt.choice_noise > 0:
        v += gt.choice_noise * a.true_value * rng.standard_normal()
    return Valuation(v)


def _decide_forecast(gt: GroundTruth, f: Forecast, rng) -> ForecastAnswer:
    hist = np.asarray(f.return_history, dtype=float)
    r = forecast_return(float(hist.mean()), float(hist[-1]), gt.params)
    if gt.choice_noise > 0:
        r += gt.choice_noise * float(hist.std(ddof=1)) * rng.standard_normal()
    return ForecastAnswer(r)


_DECIDERS: dict[type, Callable] = {
    Gamble: _decide_gamble,
    Portfolio: _decide_portfolio,
    Interval: _decide_interval,
    Cascade: _decide_cascade,
    Narrative: _decide_narrative,
    SkewChoice: _decide_skew,
    Anchor: _decide_anchor,
    Forecast: _decide_forecast,
}


def decide(gt: GroundTruth, scenario: Scenario, seed: int | np.random.Generator) -> Answer:
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(int(seed), "respondents.synthetic")
    return _DECIDERS[type(scenario.payload)](gt, scenario.payload, rng)


def respond_synthetic(
    gt: GroundTruth,
    scenario: Scenario,
    seed: int,
    *,
    profile: Profile | None = None,
    respondent_id: str = "synthetic-0",
) -> DecisionRecord:
    """One synthetic decision, routed through the same text grammar as LLM output."""
    ans = decide(gt, scenario, seed)
    raw = format_answer(ans)
    parsed = parse(raw, expected_shape(scenario))
    return DecisionRecord(
        scenario,
        profile or Profile(ProfileKind.RATIONAL, 0.0),
        respondent_id,
        "synthetic",
        raw,
        parsed,
        None,
        str(seed),
        "ground-truth",
    )


# ---------------------------------------------------------------------------
# Profile -> ground truth
# ---------------------------------------------------------------------------

# Strength-1 targets of the measured quantities.
TARGET_LAMBDA = 3.00
TARGET_DR = 0.21
TARGET_COVERAGE = 0.30
TARGET_HERD = 0.90
TARGET_TAU = 1.08
TARGET_SKEW_RATE = 0.30
TARGET_ANCHOR_RHO = 0.67
TARGET_THETA = 0.88

TARGET_SELL_LOSER = 0.50
TARGET_SELL_WINNER = TARGET_DR * TARGET_SELL_LOSER

# kappa giving TARGET_COVERAGE for a nominal 80% interval: z80 / sqrt(k) = Phi^-1((1 + c) / 2)
TARGET_KAPPA = (Z80 / float(stats.norm.ppf(0.5 + TARGET_COVERAGE / 2.0))) ** 2

# Solved by scripts/derive_targets.py under the default choice noise and the
# shipped anchor / lottery scenario distributions.
TARGET_A_ADJUST = 0.6946502084075808
TARGET_GAMMA_WEIGHT = 0.9853665099011375

BIASED_TARGETS: dict[ProfileKind, dict[str, float]] = {
    ProfileKind.LOSS_AVERSE: {
        "loss_aversion": TARGET_LAMBDA,
        "a_adjust": TARGET_A_ADJUST,
        "gamma_weight": TARGET_GAMMA_WEIGHT,
        "sell_prob_winner": TARGET_SELL_WINNER,
        "sell_prob_loser": TARGET_SELL_LOSER,
    },
    ProfileKind.OVERCONFIDENT: {"kappa": TARGET_KAPPA},
    ProfileKind.HERDING_PRONE: {"w_herd": TARGET_HERD},
    ProfileKind.REPRESENTATIVENESS_BIASED: {"tau_ratio": TARGET_TAU},
    ProfileKind.EXTRAPOLATIVE: {"theta": TARGET_THETA},
}


def profile_to_groundtruth(profile: Profile, choice_noise: float = DEFAULT_CHOICE_NOISE) -> GroundTruth:
    """Linear interpolation in strength from the rational preset to the profile's targets."""
    base = GroundTruth(choice_noise=choice_noise)
    targets = BIASED_TARGETS.get(profile.kind, {})
    s = profile.strength
    param_changes, gt_changes = {}, {}
    for name, target in targets.items():
        if hasattr(base, name):
            start = getattr(base, name)
            gt_changes[name] = start + s * (target - start)
        else:
            start = getattr(base.params, name)
            param_changes[name] = start + s * (target - start)
    return replace(base, params=base.params.with_(**param_changes), **gt_changes)


# ---------------------------------------------------------------------------
# Implied population measures
# ---------------------------------------------------------------------------

# Scenario-generator moments the implied measures depend on.
ANCHOR_RANGE = (10.0, 400.0)
TRUE_VALUE_RANGE = (20.0, 200.0)
SKEW_EVS = (1000.0, 2000.0, 5000.0, 10000.0)


def _uniform_moments(lo: float, hi: float) -> tuple[float, float]:
    """Variance and second raw moment of U(lo, hi)."""
    var = (hi - lo) ** 2 / 12.0
    mean = 0.5 * (lo + hi)
    return var, var + mean * mean


def anchor_correlation(a_adjust: float, choice_noise: float = DEFAULT_CHOICE_NOISE) -> float:
    """Population anchor-valuation correlation under the shipped anchor design."""
    var_a, _ = _uniform_moments(*ANCHOR_RANGE)
    var_t, m2_t = _uniform_moments(*TRUE_VALUE_RANGE)
    var_v = (1 - a_adjust) ** 2 * var_a + a_adjust**2 * var_t + choice_noise**2 * m2_t
    if var_v == 0:
        return float("nan")
    return (1 - a_adjust) * var_a / math.sqrt(var_v * var_a)


def skew_choice_rate(params: ParameterVector, choice_noise: float = DEFAULT_CHOICE_NOISE) -> float:
    """Expected high-skew choice rate over the shipped equal-EV lottery menus."""
    rates = []
    for ev in SKEW_EVS:
        lots = [
            Lottery("x", ((ev / p, p),) if p == 1.0 else ((ev / p, p), (0.0, 1.0 - p)), ev)
            for p in SKEW_PROBS
        ]
        u = np.array([lottery_utility(l, params) for l in lots])
        hi = int(np.argmin(SKEW_PROBS))
        if choice_noise == 0.0:
            best = np.flatnonzero(u == u.max())
            rates.append(1.0 / len(best) if hi in best else 0.0)  # ties fall to shuffled order
        else:
            rates.append(float(_softmax(u, choice_noise * ev)[hi]))
    return float(np.mean(rates))


def implied_measure(gt: GroundTruth, bias: Bias | str) -> float:
    """Population value of the quantity each estimator targets."""
    bias = Bias(bias)
    p = gt.params
    if bias is Bias.LOSS_AVERSION:
        return p.loss_aversion
    if bias is Bias.DISPOSITION:
        return gt.sell_prob_winner / gt.sell_prob_loser if gt.sell_prob_loser > 0 else float("inf")
    if bias is Bias.OVERCONFIDENCE:
        return float(2.0 * stats.norm.cdf(Z80 / math.sqrt(p.kappa)) - 1.0)
    if bias is Bias.HERDING:
        return p.w_herd
    if bias is Bias.REPRESENTATIVENESS:
        return p.tau_ratio
    if bias is Bias.PROBABILITY_WEIGHTING:
        return skew_choice_rate(p, gt.choice_noise)
    if bias is Bias.ANCHORING:
        return anchor_correlation(p.a_adjust, gt.choice_noise)
    if bias is Bias.EXTRAPOLATION:
        return p.theta
    raise ValueError(bias)


def solve_a_adjust(rho: float = TARGET_ANCHOR_RHO, choice_noise: float = DEFAULT_CHOICE_NOISE) -> float:
    return float(optimize.brentq(lambda a: anchor_correlation(a, choice_noise) - rho, 0.0, 1.0, xtol=1e-14))


def solve_gamma_weight(rate: float = TARGET_SKEW_RATE, choice_noise: float = DEFAULT_CHOICE_NOISE) -> float:
    f = lambda g: skew_choice_rate(ParameterVector(gamma_weight=g), choice_noise) - rate
    return float(optimize.brentq(f, 0.5, 1.0, xtol=1e-14))


# ---------------------------------------------------------------------------
# External LLM client
# ---------------------------------------------------------------------------


class LLMError(RuntimeError):
    kind = "error"

    def __init__(self, msg: str, retries: int = 0):
        super().__init__(msg)
        self.retries = retries


class LLMTimeout(LLMError):
    kind = "timeout"


class LLMAuthError(LLMError):
    kind = "auth"


class LLMRateLimited(LLMError):
    kind = "rate_limit"


class LLMMalformedResponse(LLMError):
    kind = "malformed"


class LLMServerError(LLMError):
    kind = "server"


@dataclass(frozen=True)
class LLMEndpointConfig:
    base_url: str
    model_id: str
    temperature: float = 0.7
    max_retries: int = 3
    timeout: float = 60.0
    rate_limit: float = 2.0  # requests per second
    max_in_flight: int = 4
    auth_env: str = "BEHAVCAL_API_KEY"
    backoff_base: float = 1.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must lie in [0, 1]")
        if not 0 <= self.max_retries <= 10:
            raise ValueError("max_retries must lie in [0, 10]")
        if self.rate_limit <= 0 or self.timeout <= 0 or self.max_in_flight < 1:
            raise ValueError("rate_limit, timeout and max_in_flight must be positive")

    def auth_token(self) -> str | None:
        return os.environ.get(self.auth_env)


class TokenBucket:
    """Thread-safe token bucket; ``acquire`` blocks until a token is free."""

    def __init__(self, rate: float, capacity: float = 1.0, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


@dataclass(frozen=True)
class LLMResult:
    text: str
    retries: int
    request_id: str


class LLMClient:
    """Plain chat-completions POST with retries, backoff and rate limiting.

    ``transport`` accepts any ``httpx`` transport, which lets tests stub the
    endpoint; ``sleep`` is injectable for the same reason.
    """

    def __init__(self, cfg: LLMEndpointConfig, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.cfg = cfg
        self._sleep = sleep
        self._bucket = TokenBucket(cfg.rate_limit, sleep=sleep)
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        headers = {"Content-Type": "application/json"}
        token = cfg.auth_token()
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._http = httpx.Client(base_url=cfg.base_url, headers=headers, timeout=cfg.timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _once(self, prompt: str, request_id: str) -> str:
        body = {
            "model": self.cfg.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        }
        try:
            resp = self._http.post("/chat/completions", json=body, headers={"X-Request-Id": request_id})
        except httpx.TimeoutException as e:
            raise LLMTimeout(str(e)) from e
        except httpx.TransportError as e:
            raise LLMServerError(str(e)) from e
        if resp.status_code in (401, 403):
            raise LLMAuthError(f"HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise LLMRateLimited("HTTP 429")
        if resp.status_code >= 500:
            raise LLMServerError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise LLMMalformedResponse(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise LLMMalformedResponse(f"unexpected response body: {resp.text[:200]}") from e
        if not isinstance(text, str):
            raise LLMMalformedResponse("completion content is not text")
        return text

    def complete(self, prompt: str, request_id: str | None = None) -> LLMResult:
        request_id = request_id or uuid.uuid4().hex
        retries = 0
        with self._slots:
            while True:
                self._bucket.acquire()
                try:
                    return LLMResult(self._once(prompt, request_id), retries, request_id)
                except (LLMTimeout, LLMRateLimited, LLMServerError) as e:
                    if retries >= self.cfg.max_retries:
                        e.retries = retries
                        raise
                    self._sleep(self.cfg.backoff_base * 2.0**retries)
                    retries += 1
                except LLMError as e:
                    e.retries = retries
                    raise


def respond_llm(cfg: LLMEndpointConfig, prompt: str, client: LLMClient | None = None) -> LLMResult:
    if client is not None:
        return client.complete(prompt)
    with LLMClient(cfg) as c:
        return c.complete(prompt)


def llm_record(
    client: LLMClient,
    profile: Profile,
    scenario: Scenario,
    prompt: str,
    respondent_id: str,
    request_id: str | None = None,
    log: Callable[[dict], None] | None = None,
) -> DecisionRecord:
    """Query the endpoint and build a record; failures become failed-parse records.

    ``log`` receives the request/response pair before any parsing happens.
    """
    stamp = datetime.now(timezone.utc).isoformat()
    try:
        res = client.complete(prompt, request_id)
        raw, rid, err = res.text, res.request_id, ""
    except LLMError as e:
        raw, rid, err = "", request_id or "", f"{e.kind}: {e} (retries={e.retries})"
    if log is not None:
        log({"request_id": rid, "scenario_id": scenario.id, "prompt": prompt, "response": raw, "error": err, "timestamp": stamp})
    parsed = parse(raw, expected_shape(scenario))
    if err:
        parsed = ParsedResponse(parsed.shape, None, raw, err)
    return DecisionRecord(scenario, profile, respondent_id, "llm", raw, parsed, stamp, rid, client.cfg.model_id)
