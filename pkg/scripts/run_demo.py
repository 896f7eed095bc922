#!/usr/bin/env python3
"""Walk one article through the full reading-support pipeline and print what
each stage produced: claim highlights, counter-arguments, background context,
a grounded Q&A exchange, and a short opposite-side debate.

Runs entirely on the mock providers with canned completions written to a
temp fixtures directory, so it needs no network and no keys. The three
claims are written to land one in each matching tier (exact, normalized,
fuzzy). Point --data-dir somewhere to inspect the persisted artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from counterpoint.annotate import annotate
from counterpoint.context import MockSearchProvider, fetch_context, summarize_context
from counterpoint.core import Lean, ingest_document
from counterpoint.debate import Thumbs, give_feedback, open_debate, rebut
from counterpoint.gateway import Gateway, MockProvider, TemplateId
from counterpoint.ragqa import QaConversation, answer, build_index
from counterpoint.storage import ArtifactStore

ARTICLE_TITLE = "The transit levy deserves a no vote"
ARTICLE_BODY = """\
The proposed transit levy is a blank check for an agency that has never kept
a promise. Ridership is still below its old peak, yet the district wants the
largest budget in its history. Service cuts always land on the neighborhoods
with the least political pull. Voters should reject the levy until the agency
publishes a line-item accounting of the last one. Accountability has to come
before new money, not after it.
"""

CLAIMS = [
    # verbatim slice of the body
    "Ridership is still below its old peak",
    # case and line-wrap differences: the normalized tier bridges these
    "service cuts always land on the neighborhoods with the least political pull",
    # one word swapped ("arrive" for "come"): lands in the fuzzy tier
    "Accountability has to arrive before new money, not after it.",
]

COUNTERS = [
    "Pre-pandemic ridership is the wrong yardstick for a system that now serves "
    "different trips. Off-peak and weekend boardings already exceed 2019 levels.",
    "Service hours are allocated by a published formula tied to boardings per "
    "route. The last three rounds of cuts fell hardest on park-and-ride express "
    "lines, not low-income corridors.",
    "The agency posts audited line-item spending for every levy year on its "
    "transparency portal. Withholding funds until a report that already exists "
    "appears would only delay maintenance.",
]

SNIPPETS = [
    {"title": "Transit levy: what it funds", "url": "https://example.org/levy",
     "snippet": "The measure renews a 0.2% sales tax funding bus service hours."},
    {"title": "District budget history", "url": "https://example.org/budget",
     "snippet": "Agency budgets grew 4% annually over the past decade."},
]

CONTEXT_SUMMARY = (
    "The levy renews an existing sales tax that funds day-to-day bus service. "
    "Supporters point to audited spending reports; opponents argue ridership "
    "has not recovered enough to justify the largest budget in agency history."
)

QA_ANSWER = (
    "The author wants the agency to publish a line-item accounting of the "
    "previous levy before voters approve any new funding [0]."
)

DEBATE_REPLIES = [
    "Calling the levy wasteful ignores that its spending is audited annually "
    "and published line by line. The real waste would be letting bus service "
    "lapse and paying more to rebuild it later.",
    "Trust is earned through the transparency portal the agency already runs. "
    "Every levy dollar from the last cycle is accounted for there.",
]

DEBATE_REGEN = (
    "Audited books and a public spending portal are exactly how an agency "
    "earns trust. Opposing the levy punishes riders for a record that is, "
    "on paper, clean."
)


def write_fixture(fixtures: Path, template: TemplateId, key: str, text: str,
                  nonce: int = 0) -> None:
    suffix = f"__n{nonce}" if nonce else ""
    path = fixtures / f"{template.value}__{key}{suffix}.json"
    path.write_text(json.dumps({"text": text}), encoding="utf-8")


def build_fixtures(fixtures: Path, doc_id: str) -> None:
    write_fixture(fixtures, TemplateId.CLAIM_EXTRACT, doc_id, "\n".join(CLAIMS))
    numbered = "\n".join(f"{i + 1}. {text}" for i, text in enumerate(COUNTERS))
    write_fixture(fixtures, TemplateId.COUNTER_GEN, doc_id, numbered)
    write_fixture(fixtures, TemplateId.CONTEXT_SUMMARIZE, doc_id, CONTEXT_SUMMARY)
    write_fixture(fixtures, TemplateId.QA_ANSWER, f"{doc_id}__q0", QA_ANSWER)
    for i, text in enumerate(DEBATE_REPLIES):
        write_fixture(fixtures, TemplateId.DEBATE_REBUT, f"{doc_id}__d{i}", text)
    write_fixture(fixtures, TemplateId.DEBATE_REGENERATE, f"{doc_id}__regen3",
                  DEBATE_REGEN, nonce=1)
    snippet_file = fixtures / MockSearchProvider.fixture_name(ARTICLE_TITLE)
    snippet_file.write_text(json.dumps(SNIPPETS), encoding="utf-8")


def rule(label: str) -> None:
    print(f"\n=== {label} " + "=" * max(0, 60 - len(label)))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=None,
                        help="persist artifacts under this directory")
    args = parser.parse_args()

    doc = ingest_document(ARTICLE_BODY, ARTICLE_TITLE, lean=Lean.RIGHT)
    print(f"doc_id: {doc.doc_id}  ({len(doc.body)} code points)")

    fixtures = Path(tempfile.mkdtemp(prefix="counterpoint-demo-"))
    build_fixtures(fixtures, doc.doc_id)
    gateway = Gateway(MockProvider(fixtures_dir=fixtures))
    search = MockSearchProvider(fixtures)

    rule("claim highlights")
    annotated = annotate(doc, gateway)
    for claim in annotated.claims:
        quoted = doc.body[claim.span.start:claim.span.end].replace("\n", " ")
        print(f"  [{claim.span.start:4d},{claim.span.end:4d}) "
              f"{claim.match_kind.value:<10} {quoted!r}")

    rule("counter-arguments")
    for counter in annotated.counters:
        print(f"  - {counter.summary}")

    rule("background context")
    snippets = fetch_context(doc.title, search)
    summary = summarize_context(doc, snippets, gateway)
    for snippet in summary.snippets:
        print(f"  {snippet.rank}. {snippet.title} ({snippet.url})")
    print(f"  {summary.summary_text}")

    rule("grounded Q&A")
    index, chunks = build_index(doc, gateway)
    conversation = QaConversation(conversation_id="demo", doc_id=doc.doc_id)
    question = "What does the author want before approving new funding?"
    conversation = answer(doc, index, chunks, conversation, question, gateway)
    turn = conversation.turns[-1]
    print(f"  Q: {question}")
    print(f"  A: {turn.text}")
    print(f"  cited chunks: {list(turn.cited_chunks)}")

    rule("debate (opposite side)")
    session = open_debate(doc, "The levy is wasteful and should fail.", gateway)
    session = rebut(session, "The agency has never earned our trust.", doc, gateway)
    session = give_feedback(session, 3, Thumbs.DOWN, doc, gateway)
    for t in session.turns:
        marker = " (regenerated after thumbs down)" if t.regeneration_count else ""
        print(f"  {t.role.value}: {t.text}{marker}")

    if args.data_dir:
        store = ArtifactStore(args.data_dir)
        store.save_document(doc)
        store.save_annotations(annotated)
        store.save_chunks(doc.doc_id, chunks)
        store.save_index(index)
        store.save_status(doc.doc_id, "ready")
        print(f"\nartifacts written under {args.data_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
