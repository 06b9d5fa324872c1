"""Regenerate the shipped adversarial catalog data file.

    python scripts/build_catalog.py
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from behavcal.core import Bias
from behavcal.experiments import (
    CATALOG_VERSION,
    AdversarialScenario,
    Anchor,
    Cascade,
    Forecast,
    Gamble,
    Interval,
    Lottery,
    Narrative,
    Portfolio,
    Position,
    Scenario,
    SkewChoice,
)


def catalog() -> list[AdversarialScenario]:
    out = []

    def add(key, bias, payload, predicate, text, paired=""):
        base = Scenario(f"adv-{key}", bias, payload, text=text)
        out.append(AdversarialScenario(key, base, predicate, text, paired))

    add(
        "disposition-tax-harvest",
        Bias.DISPOSITION,
        Portfolio((Position(100.0, 85.0, "K427"), Position(100.0, 115.0, "X198")), must_sell_one=True),
        {"kind": "sell_equals", "index": 1},
        "Position 1 is Asset K427, bought at $100 and now at $85 (down 15%). Position 2 is Asset X198, "
        "bought at $100 and now at $115 (up 15%). You have to sell exactly one of them today. Realized "
        "losses are 10% deductible at a 30% marginal tax rate. Going forward both assets have the same "
        "expected return. Which position do you sell?",
    )
    add(
        "disposition-fundamental-deterioration",
        Bias.DISPOSITION,
        Portfolio((Position(100.0, 120.0, "M891"), Position(100.0, 90.0, "P234")), must_sell_one=True),
        {"kind": "sell_equals", "index": 1},
        "Position 1 is Asset M891, up 20% since purchase. It has just reported earnings 40% below "
        "expectations, lost its largest contract, and its margins are shrinking. Position 2 is Asset "
        "P234, down 10% since purchase and performing as expected. You have to sell one of them. Which "
        "position do you sell?",
    )
    add(
        "disposition-rebalancing",
        Bias.DISPOSITION,
        Portfolio((Position(100.0, 130.0, "Stocks"), Position(100.0, 100.0, "Bonds"))),
        {"kind": "sell_subset", "indices": [1]},
        "Your target allocation is 60% stocks and 40% bonds. Position 1 is your stock holdings, every "
        "one of them up 30%. Position 2 is your bond holdings, unchanged in value. The portfolio now "
        "sits at 72% stocks and 28% bonds and has to be brought back to 60/40. Which positions do you sell?",
    )
    add(
        "overconfidence-extreme-volatility",
        Bias.OVERCONFIDENCE,
        Interval((2.1, 5.7, 1.3, 8.2, 2.8, 6.1, 3.4, 7.5)),
        {"kind": "interval_width_ge", "width": 5.0},
        "Quarterly earnings of Company Z in millions of dollars, oldest first: $2.1, $5.7, $1.3, $8.2, "
        "$2.8, $6.1, $3.4, $7.5. Give an 80% confidence interval for next quarter's earnings.",
    )
    add(
        "overconfidence-structural-break",
        Bias.OVERCONFIDENCE,
        Interval((5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 3.0, 2.8)),
        {"kind": "interval_width_ge", "width": 3.0},
        "Quarterly earnings held at $5M for six quarters and then changed abruptly to $3M and, most "
        "recently, $2.8M. Give an 80% confidence interval for next quarter's earnings, in millions.",
    )
    add(
        "herding-perfect-signal",
        Bias.HERDING,
        Cascade("A", 1.0, ("B",) * 15 + ("A",)),
        {"kind": "choice_equals", "label": "A"},
        "Your private signal is always correct, and it says the urn is type A. Of the 16 participants "
        "before you, 15 announced type B. Which type do you announce?",
    )
    add(
        "herding-expertise",
        Bias.HERDING,
        Cascade("A", 0.95, ("B",) * 9),
        {"kind": "choice_equals", "label": "A"},
        "The question is whether a medical device is safe (A) or unsafe (B). You are a specialist in "
        "medical devices and your own analysis says it is clearly safe. The group that answered before "
        "you consists of restaurant managers, and they chose unsafe. Which do you choose?",
    )
    add(
        "representativeness-narrative-bankruptcy",
        Bias.REPRESENTATIVENESS,
        Narrative(4.0, 0.0),
        {"kind": "rating_le", "value": 4.0},
        "The company describes itself as a visionary, revolutionary force in AI-driven healthcare with "
        "enormous potential. Its financials: revenue $2M, expenses $15M, debt $50M, operating margin "
        "-750%, debt-to-equity 25 to 1. Rate the quality of this investment from 1 to 10.",
    )
    add(
        "probability-weighting-dominated",
        Bias.PROBABILITY_WEIGHTING,
        SkewChoice(
            (
                Lottery("A", ((10000.0, 0.5), (0.0, 0.5)), 5000.0),
                Lottery("B", ((50000.0, 0.1), (0.0, 0.9)), 5000.0),
                Lottery("C", ((40000.0, 0.1), (0.0, 0.9)), 4000.0),
            ),
            high_skew_index=1,
        ),
        {"kind": "choice_not", "label": "C"},
        "Option A pays $10,000 with probability 50% and nothing otherwise (expected value $5,000). "
        "Option B pays $50,000 with probability 10% and nothing otherwise (expected value $5,000). "
        "Option C pays $40,000 with probability 10% and nothing otherwise (expected value $4,000). "
        "Which option do you take?",
    )
    add(
        "anchoring-extreme-anchor",
        Bias.ANCHORING,
        Anchor(200.0, 5.0),
        {"kind": "valuation_le", "value": 10.0},
        "The asset last traded at $200. The company has just announced bankruptcy, and the estimated "
        "liquidation value is $5 per share. What is one share worth?",
    )
    add(
        "extrapolation-mean-reversion",
        Bias.EXTRAPOLATION,
        Forecast((0.08, -0.07, 0.09, -0.08, 0.10, -0.09, 0.12)),
        {"kind": "forecast_lt", "value": 0.0},
        "Monthly returns over the last six months were +8%, -7%, +9%, -8%, +10%, -9%: every rise was "
        "followed by a fall. This month the return was +12%. Forecast next month's return.",
    )
    add(
        "loss-aversion-framing",
        Bias.LOSS_AVERSION,
        Gamble(150.0),
        {"kind": "consistent_accept"},
        "A fair coin is flipped. Heads, you win $150. Tails, you lose $100. Do you take the bet?",
        "You can keep $100 for sure, or risk it on a fair coin that leaves you with $250 on heads and "
        "$0 on tails. Do you take the risk?",
    )
    return out


def main() -> None:
    doc = {"version": CATALOG_VERSION, "scenarios": [a.to_dict() for a in catalog()]}
    path = Path(str(resources.files("behavcal").joinpath("data", "adversarial_catalog.json")))
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(doc['scenarios'])} scenarios to {path}")


if __name__ == "__main__":
    main()
