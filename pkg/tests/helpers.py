"""Shared constructors for tests."""

from behavcal.core import Profile, ProfileKind
from behavcal.respondents import DecisionRecord, ParsedResponse, expected_shape, format_answer, respond_synthetic


def record(scenario, answer, profile=None):
    raw = format_answer(answer) if answer is not None else "garbage"
    parsed = ParsedResponse(expected_shape(scenario).kind, answer, raw, "" if answer is not None else "no answer line")
    return DecisionRecord(scenario, profile or Profile(ProfileKind.RATIONAL), "t", "synthetic", raw, parsed, model_id="ground-truth")


def synthetic_records(gt, scenarios, seed=0, profile=None):
    return [respond_synthetic(gt, s, seed * 1_000_003 + i, profile=profile) for i, s in enumerate(scenarios)]


# criterion lines printed at the end of the session by conftest
ACCEPTANCE_LINES: list[str] = []


def criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail
