"""Freeze the golden prompt files under tests/golden/prompts.

One file per (profile kind, bias): standard-intensity frame plus the first
scenario of ``build_scenario_set(bias, 3, GOLDEN_SEED)``. Rerun only when a
template change is intended, then review the diff.
"""

from __future__ import annotations

from pathlib import Path

from behavcal.core import Bias, Profile, ProfileKind
from behavcal.experiments import build_scenario_set, render_prompt

GOLDEN_SEED = 2024
GOLDEN_STRENGTH = 0.67
OUT = Path(__file__).resolve().parents[1] / "tests" / "golden" / "prompts"


def golden_prompt(kind: ProfileKind, bias: Bias) -> str:
    scenario = build_scenario_set(bias, 3, GOLDEN_SEED)[0]
    return render_prompt(Profile(kind, GOLDEN_STRENGTH), scenario)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for kind in ProfileKind:
        for bias in Bias:
            (OUT / f"{kind.value}__{bias.value}.txt").write_text(golden_prompt(kind, bias), encoding="utf-8")
    print(f"wrote {len(ProfileKind) * len(Bias)} files to {OUT}")


if __name__ == "__main__":
    main()
