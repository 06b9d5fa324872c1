"""Scenario sets for the eight bias experiments, prompt rendering, and the
adversarial catalog with machine-checkable pass predicates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Any, Iterable, Sequence, Union

import numpy as np

from behavcal.core import Bias, Profile, ProfileKind
from behavcal.seeding import derive_rng
from behavcal.synthdata import (
    AssetIdGenerator,
    EarningsConfig,
    PricePathConfig,
    generate_earnings_path,
    generate_price_path,
)

SCHEMA_VERSION = 1
GAMBLE_LOSS = 100.0
GAMBLE_PROB = 0.5
GAMBLE_X_MIN = 50.0
GAMBLE_X_MAX = 400.0


# ---------------------------------------------------------------------------
# Payloads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gamble:
    gain: float
    loss: float = GAMBLE_LOSS
    prob: float = GAMBLE_PROB
    kind = "gamble"

    def __post_init__(self) -> None:
        if self.loss != GAMBLE_LOSS or self.prob != GAMBLE_PROB:
            raise ValueError("gamble loss is fixed at 100 and probability at 0.5")


@dataclass(frozen=True)
class Position:
    purchase_price: float
    current_price: float
    label: str = ""

    @property
    def is_winner(self) -> bool:
        return self.current_price > self.purchase_price

    @property
    def is_loser(self) -> bool:
        return self.current_price < self.purchase_price


@dataclass(frozen=True)
class Portfolio:
    positions: tuple[Position, ...]
    must_sell_one: bool = False
    kind = "portfolio"


@dataclass(frozen=True)
class Interval:
    history: tuple[float, ...]
    target_coverage: float = 0.80
    true_mean: float | None = None  # generator's conditional moments; not shown to respondents
    true_sd: float | None = None
    realized: float | None = None
    kind = "interval"


@dataclass(frozen=True)
class Cascade:
    private_signal: str
    signal_accuracy: float
    crowd_history: tuple[str, ...]
    kind = "cascade"

    def __post_init__(self) -> None:
        if not self.crowd_history:
            raise ValueError("crowd history must be non-empty")
        if self.private_signal not in ("A", "B") or any(c not in ("A", "B") for c in self.crowd_history):
            raise ValueError("signals must be 'A' or 'B'")

    @property
    def crowd_majority(self) -> str | None:
        a = self.crowd_history.count("A")
        b = len(self.crowd_history) - a
        if a == b:
            return None
        return "A" if a > b else "B"

    @property
    def is_conflict(self) -> bool:
        maj = self.crowd_majority
        return maj is not None and maj != self.private_signal


@dataclass(frozen=True)
class Narrative:
    narrative_score: float
    fundamental_score: float
    kind = "narrative"


@dataclass(frozen=True)
class Lottery:
    label: str
    outcomes: tuple[tuple[float, float], ...]  # (payoff, probability)
    expected_value: float

    def __post_init__(self) -> None:
        ev = sum(x * p for x, p in self.outcomes)
        if not math.isclose(ev, self.expected_value, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"lottery {self.label}: stated EV {self.expected_value} != {ev}")


@dataclass(frozen=True)
class SkewChoice:
    assets: tuple[Lottery, ...]
    high_skew_index: int | None = None
    kind = "skew_choice"


@dataclass(frozen=True)
class Anchor:
    anchor: float
    true_value: float
    kind = "anchor"


@dataclass(frozen=True)
class Forecast:
    return_history: tuple[float, ...]
    kind = "forecast"

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.return_history))

    @property
    def last_return(self) -> float:
        return float(self.return_history[-1])


Payload = Union[Gamble, Portfolio, Interval, Cascade, Narrative, SkewChoice, Anchor, Forecast]

PAYLOAD_FOR_BIAS: dict[Bias, type] = {
    Bias.LOSS_AVERSION: Gamble,
    Bias.DISPOSITION: Portfolio,
    Bias.OVERCONFIDENCE: Interval,
    Bias.HERDING: Cascade,
    Bias.REPRESENTATIVENESS: Narrative,
    Bias.PROBABILITY_WEIGHTING: SkewChoice,
    Bias.ANCHORING: Anchor,
    Bias.EXTRAPOLATION: Forecast,
}
_PAYLOAD_BY_KIND = {cls.kind: cls for cls in PAYLOAD_FOR_BIAS.values()}


@dataclass(frozen=True)
class Scenario:
    id: str
    bias: Bias
    payload: Payload
    asset: str = ""
    text: str = ""  # optional fixed stimulus text overriding the template body

    def __post_init__(self) -> None:
        object.__setattr__(self, "bias", Bias(self.bias))
        if not isinstance(self.payload, PAYLOAD_FOR_BIAS[self.bias]):
            raise TypeError(f"{self.bias.value} scenarios need a {PAYLOAD_FOR_BIAS[self.bias].__name__} payload")

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "bias": self.bias.value,
            "kind": self.payload.kind,
            "payload": asdict(self.payload),
            "asset": self.asset,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema version {d.get('schema_version')}")
        return cls(d["id"], Bias(d["bias"]), _payload_from_dict(d["kind"], d["payload"]), d.get("asset", ""), d.get("text", ""))


def _payload_from_dict(kind: str, p: dict[str, Any]) -> Payload:
    cls = _PAYLOAD_BY_KIND[kind]
    p = dict(p)
    if cls is Portfolio:
        p["positions"] = tuple(Position(**q) for q in p["positions"])
    elif cls is SkewChoice:
        p["assets"] = tuple(
            Lottery(a["label"], tuple(tuple(o) for o in a["outcomes"]), a["expected_value"]) for a in p["assets"]
        )
    elif cls is Interval:
        p["history"] = tuple(p["history"])
    elif cls is Cascade:
        p["crowd_history"] = tuple(p["crowd_history"])
    elif cls is Forecast:
        p["return_history"] = tuple(p["return_history"])
    return cls(**p)


def write_scenarios(path: str | Path, scenarios: Iterable[Scenario]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scenarios:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")


def read_scenarios(path: str | Path) -> list[Scenario]:
    with open(path, encoding="utf-8") as fh:
        return [Scenario.from_dict(json.loads(line)) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# Scenario-set builders
# ---------------------------------------------------------------------------


def gamble_grid(n: int) -> list[float]:
    """Evenly spaced gains from 50 to 400 (identifies loss aversion in [0.5, 4])."""
    if n == 1:
        return [GAMBLE_X_MIN]
    step = (GAMBLE_X_MAX - GAMBLE_X_MIN) / (n - 1)
    return [round(GAMBLE_X_MIN + i * step, 6) for i in range(n)]


def _r2(x: float) -> float:
    return round(float(x), 2)


def _build_gamble(n, rng, ids):
    return [Gamble(x) for x in gamble_grid(n)], [""] * n


def _build_portfolio(n, rng, ids):
    out, assets = [], []
    for _ in range(n):
        pos = []
        for sign in (1, 1, -1, -1):
            buy = _r2(rng.uniform(20, 200))
            move = rng.uniform(0.05, 0.40)
            now = _r2(buy * math.exp(sign * move))
            pos.append(Position(buy, now, ids.code()))
        order = rng.permutation(len(pos))
        out.append(Portfolio(tuple(pos[i] for i in order)))
        assets.append("")
    return out, assets


def _build_interval(n, rng, ids):
    cfg = EarningsConfig()
    out, assets = [], []
    while len(out) < n:
        ep = generate_earnings_path(cfg, rng)
        if np.any(ep.values <= 0):
            continue
        mean, sd = ep.next_moments(cfg)
        realized = mean + sd * rng.standard_normal()
        out.append(Interval(tuple(_r2(v) for v in ep.values), 0.80, mean, sd, realized))
        assets.append(ids())
    return out, assets


def _build_cascade(n, rng, ids):
    n_conflict = (n + 1) // 2
    conflict = np.zeros(n, dtype=bool)
    conflict[:n_conflict] = True
    conflict = rng.permutation(conflict)
    out = []
    for c in conflict:
        length = int(rng.choice([3, 5, 7, 9]))
        k = int(rng.integers(length // 2 + 1, length + 1))  # strict majority size
        majority = "A" if rng.random() < 0.5 else "B"
        minority = "B" if majority == "A" else "A"
        crowd = [majority] * k + [minority] * (length - k)
        crowd = [crowd[i] for i in rng.permutation(length)]
        signal = minority if c else majority
        acc = float(rng.choice([0.60, 0.67, 0.75]))
        out.append(Cascade(signal, acc, tuple(crowd)))
    return out, [""] * n


def _build_narrative(n, rng, ids):
    out = [Narrative(_r2(rng.uniform(0, 4)), _r2(rng.uniform(0, 4))) for _ in range(n)]
    return out, [ids() for _ in range(n)]


SKEW_PROBS = (1.0, 0.5, 0.25, 0.1)


def _build_skew(n, rng, ids):
    out = []
    for _ in range(n):
        ev = float(rng.choice([1000, 2000, 5000, 10000]))
        order = rng.permutation(len(SKEW_PROBS))
        assets, hi = [], None
        for pos, j in enumerate(order):
            p = SKEW_PROBS[j]
            label = chr(ord("A") + pos)
            outcomes = ((ev / p, p),) if p == 1.0 else ((ev / p, p), (0.0, round(1.0 - p, 10)))
            assets.append(Lottery(label, outcomes, ev))
            if p == min(SKEW_PROBS):
                hi = pos
        out.append(SkewChoice(tuple(assets), hi))
    return out, [""] * n


def _build_anchor(n, rng, ids):
    out = [Anchor(_r2(rng.uniform(10, 400)), _r2(rng.uniform(20, 200))) for _ in range(n)]
    return out, [ids() for _ in range(n)]


def _build_forecast(n, rng, ids):
    cfg = PricePathConfig(months=12)
    out = []
    for _ in range(n):
        path = generate_price_path(cfg, rng)
        out.append(Forecast(tuple(round(float(r), 4) for r in path.returns)))
    return out, [ids() for _ in range(n)]


_BUILDERS = {
    Bias.LOSS_AVERSION: _build_gamble,
    Bias.DISPOSITION: _build_portfolio,
    Bias.OVERCONFIDENCE: _build_interval,
    Bias.HERDING: _build_cascade,
    Bias.REPRESENTATIVENESS: _build_narrative,
    Bias.PROBABILITY_WEIGHTING: _build_skew,
    Bias.ANCHORING: _build_anchor,
    Bias.EXTRAPOLATION: _build_forecast,
}


def build_scenario_set(bias: Bias | str, n: int, seed: int) -> list[Scenario]:
    """``n`` scenarios for one experiment, reproducible from ``(bias, n, seed)``."""
    try:
        bias = Bias(bias)
    except ValueError:
        raise ValueError(f"unknown bias: {bias!r}") from None
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = derive_rng(seed, f"experiments.{bias.value}")
    ids = AssetIdGenerator(derive_rng(seed, f"experiments.{bias.value}.ids"))
    payloads, assets = _BUILDERS[bias](n, rng, ids)
    return [Scenario(f"{bias.value}-{seed}-{i:05d}", bias, p, a) for i, (p, a) in enumerate(zip(payloads, assets))]


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------

INTENSITY_LEVELS = (("mild", 0.33), ("standard", 0.67), ("strong", 1.0))


def intensity(strength: float) -> str | None:
    """Template intensity for a strength; ``None`` means the rational frame."""
    if strength <= 0.0:
        return None
    return min(INTENSITY_LEVELS, key=lambda kv: abs(kv[1] - strength))[0]


def fmt(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def fmt_pct(r: float) -> str:
    return f"{r * 100:+.2f}%"


def _template(sub: str, name: str) -> Template:
    try:
        text = resources.files("behavcal").joinpath("templates", sub, f"{name}.txt").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(f"missing template {sub}/{name}") from None
    return Template(text)


def profile_frame(profile: Profile) -> str:
    level = intensity(profile.strength)
    if profile.kind is ProfileKind.RATIONAL or level is None:
        return _template("profiles", "rational").substitute().rstrip("\n")
    return _template("profiles", f"{profile.template_id}_{level}").substitute().rstrip("\n")


def _scenario_fields(s: Scenario) -> dict[str, str]:
    p = s.payload
    asset = s.asset or "the asset"
    if isinstance(p, Gamble):
        return {"gain": fmt(p.gain), "loss": fmt(p.loss), "prob_pct": fmt(p.prob * 100)}
    if isinstance(p, Portfolio):
        lines = []
        for i, q in enumerate(p.positions, start=1):
            lines.append(f"{i}. Asset {q.label}: bought at ${fmt(q.purchase_price)}, now ${fmt(q.current_price)}")
        rule = "You must sell exactly one position." if p.must_sell_one else "You may sell any number of positions, including none."
        return {"positions": "\n".join(lines), "sell_rule": rule}
    if isinstance(p, Interval):
        return {
            "asset": asset,
            "history": ", ".join(f"${fmt(v)}M" for v in p.history),
            "coverage_pct": fmt(p.target_coverage * 100),
        }
    if isinstance(p, Cascade):
        return {
            "signal": p.private_signal,
            "accuracy_pct": fmt(round(p.signal_accuracy * 100, 6)),
            "crowd": ", ".join(p.crowd_history),
            "n_crowd": str(len(p.crowd_history)),
        }
    if isinstance(p, Narrative):
        return {"asset": asset, "narrative": fmt(p.narrative_score), "fundamental": fmt(p.fundamental_score)}
    if isinstance(p, SkewChoice):
        lines = []
        for a in p.assets:
            parts = [f"{fmt(round(pr * 100, 6))}% chance of ${fmt(x)}" for x, pr in a.outcomes]
            lines.append(f"Option {a.label}: " + ", ".join(parts) + f" (expected value ${fmt(a.expected_value)})")
        return {"options": "\n".join(lines), "labels": ", ".join(a.label for a in p.assets)}
    if isinstance(p, Anchor):
        return {"asset": asset, "anchor": fmt(p.anchor), "true_value": fmt(p.true_value)}
    if isinstance(p, Forecast):
        return {"asset": asset, "returns": ", ".join(fmt_pct(r) for r in p.return_history)}
    raise TypeError(type(p))


def render_prompt(profile: Profile, scenario: Scenario) -> str:
    """Profile frame, scenario body, and the strict one-line answer format."""
    frame = profile_frame(profile)
    fields_ = _scenario_fields(scenario)
    body = _template("scenarios", scenario.payload.kind).substitute(fields_).rstrip("\n")
    if scenario.text:
        # fixed stimulus keeps the template's answer-format lines
        fmt_lines = body.split("\n\n")[-1]
        body = scenario.text.rstrip("\n") + "\n\n" + fmt_lines
    return f"{frame}\n\n{body}\n"


# ---------------------------------------------------------------------------
# Adversarial catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversarialScenario:
    key: str
    base: Scenario
    predicate: dict[str, Any]
    scenario_text: str
    paired_text: str = ""  # second frame for paired predicates

    @property
    def bias(self) -> Bias:
        return self.base.bias

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "base": self.base.to_dict(),
            "predicate": self.predicate,
            "scenario_text": self.scenario_text,
            "paired_text": self.paired_text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AdversarialScenario":
        return cls(d["key"], Scenario.from_dict(d["base"]), d["predicate"], d["scenario_text"], d.get("paired_text", ""))


def render_adversarial(profile: Profile, adv: AdversarialScenario) -> list[str]:
    """One prompt, or two for paired (framing) scenarios."""
    prompts = [render_prompt(profile, adv.base)]
    if adv.paired_text:
        prompts.append(render_prompt(profile, Scenario(adv.base.id + "-alt", adv.bias, adv.base.payload, adv.base.asset, adv.paired_text)))
    return prompts


CATALOG_VERSION = 1


def load_catalog(path: str | Path | None = None) -> list[AdversarialScenario]:
    """Read a catalog file; ``None`` loads the shipped catalog."""
    if path is None:
        text = resources.files("behavcal").joinpath("data", "adversarial_catalog.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if doc.get("version") != CATALOG_VERSION:
        raise ValueError(f"unsupported catalog version {doc.get('version')}")
    return [AdversarialScenario.from_dict(d) for d in doc["scenarios"]]


def adversarial_catalog(extra: Sequence[str | Path] = ()) -> list[AdversarialScenario]:
    """The shipped catalog plus any user catalog files in the same format."""
    out = load_catalog()
    for path in extra:
        out.extend(load_catalog(path))
    return out


@dataclass(frozen=True)
class PassVerdict:
    passed: bool
    parse_failed: bool = False


def _answer_value(resp: Any) -> Any:
    return resp.answer if resp is not None else None


def evaluate_pass(adv: AdversarialScenario, resp: Any) -> PassVerdict:
    """Apply the scenario's predicate to a parsed response.

    Paired predicates take a ``(first, second)`` tuple of responses. Any
    failed parse is a fail with ``parse_failed`` set.
    """
    from behavcal.respondents import (
        BinaryChoice,
        ForecastAnswer,
        IntervalAnswer,
        Rating,
        SellChoice,
        Valuation,
    )

    pred = adv.predicate
    kind = pred["kind"]
    responses = tuple(resp) if kind == "consistent_accept" else (resp,)
    if any(r is None or not r.ok for r in responses):
        return PassVerdict(False, True)
    ans = [r.answer for r in responses]

    def need(t):
        if not all(isinstance(a, t) for a in ans):
            return None
        return ans[0]

    if kind == "sell_equals":
        a = need(SellChoice)
        return PassVerdict(a is not None and a.indices == (pred["index"],))
    if kind == "sell_subset":
        a = need(SellChoice)
        return PassVerdict(a is not None and len(a.indices) > 0 and set(a.indices) <= set(pred["indices"]))
    if kind == "interval_width_ge":
        a = need(IntervalAnswer)
        return PassVerdict(a is not None and (a.hi - a.lo) >= pred["width"])
    if kind == "choice_equals":
        a = need(BinaryChoice)
        return PassVerdict(a is not None and a.label == pred["label"])
    if kind == "choice_not":
        a = need(BinaryChoice)
        return PassVerdict(a is not None and a.label != pred["label"])
    if kind == "rating_le":
        a = need(Rating)
        return PassVerdict(a is not None and a.value <= pred["value"])
    if kind == "valuation_le":
        a = need(Valuation)
        return PassVerdict(a is not None and a.price <= pred["value"])
    if kind == "forecast_lt":
        a = need(ForecastAnswer)
        return PassVerdict(a is not None and a.value < pred["value"])
    if kind == "consistent_accept":
        if len(ans) != 2 or not all(isinstance(a, BinaryChoice) for a in ans):
            return PassVerdict(False)
        return PassVerdict(ans[0].label == ans[1].label)
    raise ValueError(f"unknown predicate kind {kind!r}")


PASS_THRESHOLD = 0.70


@dataclass
class PassRate:
    bias: Bias
    group: str
    passed: int = 0
    total: int = 0
    parse_failures: int = 0

    @property
    def rate(self) -> float:
        return self.passed / self.total if self.total else float("nan")

    @property
    def meets_threshold(self) -> bool:
        return self.total > 0 and self.rate >= PASS_THRESHOLD


def pass_rates(results: Iterable[tuple[Bias, str, PassVerdict]]) -> list[PassRate]:
    """Aggregate verdicts per ``(bias, group)``; parse failures count as fails."""
    table: dict[tuple[Bias, str], PassRate] = {}
    for bias, group, verdict in results:
        row = table.setdefault((Bias(bias), group), PassRate(Bias(bias), group))
        row.total += 1
        row.passed += int(verdict.passed)
        row.parse_failures += int(verdict.parse_failed)
    return [table[k] for k in sorted(table, key=lambda k: (k[0].value, k[1]))]
