"""Shared test fixtures: a deterministic clock, completion fixtures on disk,
and a standard three-claim article wired to the mock provider."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import settings

from counterpoint.core import Document, Lean, ingest_document
from counterpoint.gateway import Gateway, MockProvider, TemplateId

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

_criterion_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criterion_results.append((str(value), report.passed))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, after the normal output."""
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _criterion_results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")


class FakeClock:
    """Monotonic fake clock; every call advances by ``step`` seconds."""

    def __init__(self, start: float = 1_700_000_000.0, step: float = 1.0) -> None:
        self.now = start
        self.step = step

    def __call__(self) -> float:
        value = self.now
        self.now += self.step
        return value


def write_completion_fixture(
    fixtures_dir: Path, template_id: TemplateId, key: str, text: str, nonce: int = 0
) -> Path:
    suffix = f"__n{nonce}" if nonce else ""
    path = fixtures_dir / f"{template_id.value}__{key}{suffix}.json"
    path.write_text(json.dumps({"text": text}), encoding="utf-8")
    return path


ARTICLE_TITLE = "State budget woes"
ARTICLE_BODY = (
    "Taxes are too high in this state. The legislature refuses to act on the problem.\n"
    "\n"
    "Public transit is underfunded, and riders feel it daily. Officials say the\n"
    "budget is balanced, but the math tells another story. Household costs keep\n"
    "climbing year over year.\n"
)
ARTICLE_CLAIMS = [
    "Taxes are too high in this state.",
    "Public transit is underfunded, and riders feel it daily.",
    "the budget is balanced",
]
ARTICLE_COUNTERS = [
    "Effective tax rates here sit below the national median once deductions "
    "apply. Several neighboring states collect more per capita.",
    "Transit spending rose in each of the last two budgets. Ridership declines "
    "explain much of the service strain.",
    "The balance depends on one-time fund transfers. Auditors flagged the "
    "practice last spring.",
]


@pytest.fixture
def fixtures_dir(tmp_path: Path) -> Path:
    path = tmp_path / "fixtures"
    path.mkdir()
    return path


@pytest.fixture
def article() -> Document:
    return ingest_document(ARTICLE_BODY, ARTICLE_TITLE, lean=Lean.LEFT)


@pytest.fixture
def article_gateway(article: Document, fixtures_dir: Path) -> Gateway:
    """Gateway whose fixtures make the standard article fully annotatable."""
    write_completion_fixture(
        fixtures_dir, TemplateId.CLAIM_EXTRACT, article.doc_id, "\n".join(ARTICLE_CLAIMS)
    )
    numbered = "\n".join(f"{i + 1}. {text}" for i, text in enumerate(ARTICLE_COUNTERS))
    write_completion_fixture(fixtures_dir, TemplateId.COUNTER_GEN, article.doc_id, numbered)
    return Gateway(MockProvider(fixtures_dir=fixtures_dir))


@pytest.fixture
def mock_gateway(fixtures_dir: Path) -> Gateway:
    return Gateway(MockProvider(fixtures_dir=fixtures_dir))
