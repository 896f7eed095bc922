"""Release gate: one test per shipping criterion, with stated runtime caps.

Each test registers a criterion name; conftest prints one PASS/FAIL line per
criterion in the terminal summary.
"""

from __future__ import annotations

import json
import math
import random
import subprocess
import sys
import textwrap
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from counterpoint.analytics import (
    EventKind,
    EventLog,
    Feature,
    Measure,
    SessionEvent,
    UTestMethod,
    events_from_jsonl,
    events_to_jsonl,
    mann_whitney_u,
    time_per_feature,
)
from counterpoint.annotate import ClaimSpan, annotate, resolve_overlaps
from counterpoint.api import ServiceState
from counterpoint.config import AppConfig, ServiceConfig
from counterpoint.context import MockSearchProvider
from counterpoint.core import Document, Span, ingest_document
from counterpoint.debate import (
    Role,
    SessionClosed,
    Thumbs,
    close_debate,
    give_feedback,
    open_debate,
    rebut,
    replay_events,
)
from counterpoint.gateway import Gateway, MockProvider
from counterpoint.matching import MatchKind, align_claim, split_sentence_spans
from counterpoint.ragqa import VectorIndex, chunk_document, rank_records, read_index
from counterpoint.storage import ArtifactStore, annotations_to_dict

from test_analytics import oracle_exact_p, oracle_u
from test_matching import assert_matches_oracle, oracle_align

REPO_ROOT = Path(__file__).resolve().parents[1]

WORDS = (
    "budget taxes transit housing schools wages policy growth deficit voters "
    "council reform audit zoning traffic parks levy bonds payroll pension"
).split()
ALIEN_WORDS = "quasar nebula photon glacier obsidian tundra falcon cobalt".split()


def _random_sentences(rng: random.Random, long_sentence: bool) -> list[str]:
    sentences = []
    for _ in range(rng.randint(4, 6)):
        words = [rng.choice(WORDS) for _ in range(rng.randint(3, 6))]
        if rng.random() < 0.3:
            i = rng.randrange(len(words))
            words[i] = f'"{words[i]}"'
        sentences.append(" ".join(words).capitalize() + rng.choice(".!?"))
    if long_sentence:
        words = [rng.choice(WORDS) for _ in range(rng.randint(8, 9))]
        sentences.insert(rng.randrange(len(sentences)), " ".join(words).capitalize() + ".")
    return sentences


def _perturb_case(rng: random.Random, text: str) -> str:
    flipped = [c.swapcase() if rng.random() < 0.4 else c for c in text]
    return "".join(flipped)


def _perturb_punctuation(rng: random.Random, text: str) -> str:
    out = text.replace('"', "“", 1).replace('"', "”", 1)
    out = out.rstrip(".!?")
    if rng.random() < 0.5:
        out = out.replace(" ", "  ", 1)
    if rng.random() < 0.5:
        out = out + ","
    return out


def _paraphrase(rng: random.Random, text: str, replacements: int) -> str:
    tokens = text.rstrip(".!?").split()
    for i in rng.sample(range(len(tokens)), min(replacements, len(tokens))):
        tokens[i] = rng.choice(ALIEN_WORDS)
    return " ".join(tokens)


class TestSpanMatching:
    def test_oracle_corpus_and_overlap_freedom(self, record_property):
        record_property("criterion", "span matching: oracle equivalence and non-overlap")
        started = time.monotonic()
        rng = random.Random(20260815)
        seen_outcomes = set()

        for doc_no in range(50):
            probe_fuzzy = doc_no % 5 == 0
            body = " ".join(_random_sentences(rng, long_sentence=probe_fuzzy))
            spans = split_sentence_spans(body)
            sentences = [body[s.start:s.end] for s in spans]
            short = min(sentences, key=lambda s: len(s.split()))
            claims = [
                rng.choice(sentences),
                _perturb_case(rng, short),
                _perturb_punctuation(rng, short),
                _paraphrase(rng, short, replacements=max(2, len(short.split()) // 2)),
            ]
            if probe_fuzzy:
                long = max(sentences, key=lambda s: len(s.split()))
                claims.append(_paraphrase(rng, long, replacements=1))
            for claim in claims:
                if not claim.strip():
                    continue
                expected = oracle_align(body, claim)
                seen_outcomes.add("none" if expected is None else expected[0])
                assert_matches_oracle(body, claim)

        assert {MatchKind.EXACT, MatchKind.NORMALIZED, MatchKind.FUZZY, "none"} <= seen_outcomes

        for _ in range(1_000):
            claims = []
            for i in range(rng.randint(0, 40)):
                start = rng.randrange(0, 480)
                span = Span(start, start + rng.randint(1, 60))
                claims.append(
                    ClaimSpan(
                        claim_id=f"id{i}",
                        claim_text=f"claim {i}",
                        span=span,
                        match_kind=MatchKind.EXACT,
                        match_score=round(rng.random(), 3),
                    )
                )
            retained = resolve_overlaps(claims)
            for left, right in zip(retained, retained[1:]):
                assert left.span.end <= right.span.start

        assert time.monotonic() - started < 10.0


def _one_sided_u(a, b) -> float:
    wins = sum(1.0 for x in a for y in b if x > y)
    ties = sum(1.0 for x in a for y in b if x == y)
    return wins + ties / 2.0


class TestMannWhitney:
    def test_exact_identity_and_approximation(self, record_property):
        record_property("criterion", "mann-whitney: exact path, U identity, normal approximation")
        started = time.monotonic()
        rng = random.Random(314)

        for _ in range(200):
            a = [rng.randint(0, 6) for _ in range(rng.randint(1, 6))]
            b = [rng.randint(0, 6) for _ in range(rng.randint(1, 6))]
            result = mann_whitney_u(a, b)
            assert result.method is UTestMethod.EXACT
            assert abs(result.p_two_sided - oracle_exact_p(a, b)) <= 1e-12

        for _ in range(10_000):
            a = [rng.randint(0, 5) for _ in range(rng.randint(1, 8))]
            b = [rng.randint(0, 5) for _ in range(rng.randint(1, 8))]
            u_a, u_b = _one_sided_u(a, b), _one_sided_u(b, a)
            assert u_a + u_b == len(a) * len(b)
            result = mann_whitney_u(a, b, exact_max_pooled=0)
            assert result.u == min(u_a, u_b) == oracle_u(a, b)

        for seed, spread in ((41, lambda: rng2.random()), (55, lambda: float(rng2.randint(0, 8)))):
            rng2 = random.Random(seed)
            a = [spread() for _ in range(15)]
            b = [spread() + 0.2 for _ in range(15)]
            result = mann_whitney_u(a, b)
            assert result.method is UTestMethod.NORMAL_APPROX

            pooled = np.array(a + b)
            midrank = np.array(
                [1 + (pooled < v).sum() + ((pooled == v).sum() - 1) / 2 for v in pooled]
            )
            perm_rng = np.random.default_rng(987)
            perms = np.argsort(perm_rng.random((100_000, 30)), axis=1)
            u_a = midrank[perms[:, :15]].sum(axis=1) - 15 * 16 / 2
            min_u = np.minimum(u_a, 225 - u_a)
            p_mc = float(np.mean(min_u <= result.u + 1e-9))
            assert abs(result.p_two_sided - p_mc) <= 0.02

        assert time.monotonic() - started < 60.0


def _reference_cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm_a = math.sqrt(float(np.dot(a, a)))
    norm_b = math.sqrt(float(np.dot(b, b)))
    if norm_a == 0.0 or norm_b == 0.0:
        return float("-inf")
    return float(np.dot(a, b)) / (norm_a * norm_b)


class TestRetrieval:
    def test_ranking_matches_brute_force(self, record_property):
        record_property("criterion", "retrieval: brute-force cosine ranking equivalence")
        started = time.monotonic()
        rng = random.Random(77)

        for round_no in range(200):
            n = rng.randint(1, 1_000)
            vectors = []
            for i in range(n):
                if vectors and rng.random() < 0.2:
                    vectors.append(vectors[rng.randrange(len(vectors))])
                elif rng.random() < 0.02:
                    vectors.append(np.zeros(12))
                else:
                    vectors.append(
                        np.array([float(rng.randint(-3, 3)) for _ in range(12)])
                    )
            records = [(i, vec) for i, vec in enumerate(vectors)]
            rng.shuffle(records)
            index = VectorIndex(doc_id=f"doc{round_no}", dimension=12, records=tuple(records))

            if round_no % 40 == 0:
                query = np.zeros(12)
            else:
                query = np.array([float(rng.randint(-3, 3)) for _ in range(12)])
            k = rng.randint(1, 12)

            expected = sorted(
                ((i, _reference_cosine(vec, query)) for i, vec in records),
                key=lambda pair: (-pair[1], pair[0]),
            )[:k]
            assert rank_records(index.records, query, k) == expected

        assert time.monotonic() - started < 30.0


class TestChunking:
    def test_counts_and_coverage(self, record_property):
        record_property("criterion", "chunking: stride counts and exact coverage")
        started = time.monotonic()
        rng = random.Random(5150)

        doc = Document(doc_id="d", title="T", body=" ".join(f"w{i}" for i in range(700)))
        chunks = chunk_document(doc, size=300, overlap=60)
        assert [c.token_count for c in chunks] == [300, 300, 220]

        for _ in range(100):
            total = rng.randint(1, 900)
            size = rng.randint(5, 400)
            overlap = rng.randint(0, size - 1)
            stride = size - overlap
            body = " ".join(f"w{i}" for i in range(total))
            tokens = body.split()
            chunks = chunk_document(Document(doc_id="d", title="T", body=body), size, overlap)

            expected_count = 1 if total <= size else 1 + math.ceil((total - size) / stride)
            assert len(chunks) == expected_count

            for chunk in chunks:
                assert chunk.text == body[chunk.span.start:chunk.span.end]
                t0 = chunk.chunk_index * stride
                assert chunk.text.split() == tokens[t0:t0 + chunk.token_count]

            rebuilt = list(chunks[0].text.split())
            for prev, chunk in zip(chunks, chunks[1:]):
                shared = (prev.chunk_index * stride + prev.token_count) - chunk.chunk_index * stride
                rebuilt.extend(chunk.text.split()[shared:])
            assert rebuilt == tokens

        assert time.monotonic() - started < 5.0


DETERMINISM_CORPUS = [
    ("Transit funding", "The council cut transit funding again this year. Riders "
     "across the city waited longer at every stop. Officials promised an audit "
     "that never arrived. Fares went up twice while service hours shrank."),
    ("Budget politics", "Budgets are moral documents, or so the mayor says! The "
     "new plan spends heavily on enforcement. Libraries and clinics absorb the "
     "cuts. Nobody asked the neighborhoods that use them most?"),
    ("Σχολικός προϋπολογισμός", "Τα σχολεία χρειάζονται περισσότερους πόρους. Οι "
     "τάξεις είναι υπερπλήρεις και οι δάσκαλοι εξαντλημένοι. Η πόλη όμως μειώνει "
     "τη χρηματοδότηση. Οι γονείς διαμαρτύρονται κάθε εβδομάδα."),
    ("Rocket budgets 🚀", "Space agencies 🚀 request more money every cycle. "
     "Critics call the launches 💸 vanity projects. Supporters cite jobs and "
     "research spillovers. Both sides quote the same economists."),
    ("Zoning rewrite", "The zoning rewrite favors “large developers” over "
     "residents. Community review was reduced to a comment form. Density without "
     "infrastructure is congestion, not growth. The vote happens next month."),
    ("Wage floor", "A higher wage floor helps workers immediately. Small shops "
     "warn about payroll shocks. Evidence from neighboring states is mixed at "
     "best. Lawmakers cherry-pick whichever study suits them."),
]


class TestDeterminism:
    def test_annotate_is_byte_identical_across_runs(self, record_property):
        record_property("criterion", "annotation: byte-identical runs, one counter per claim")
        blobs = []
        for _ in range(3):
            gateway = Gateway(MockProvider(seed=11))
            payloads = []
            for title, body in DETERMINISM_CORPUS:
                annotated = annotate(ingest_document(body, title), gateway)
                payload = annotations_to_dict(annotated)
                assert len(payload["counters"]) == len(payload["claims"])
                payloads.append(payload)
            blobs.append(
                json.dumps(payloads, sort_keys=True, ensure_ascii=False).encode("utf-8")
            )
        assert blobs[0] == blobs[1] == blobs[2]


class TestStudyReplication:
    def _analyze(self, capsys, csv_path: Path) -> list[dict]:
        from counterpoint.cli import main

        assert main(["analyze", str(csv_path), "--measure", "claims", "--json"]) == 0
        return json.loads(capsys.readouterr().out)

    def test_shaped_significant_null_not(self, record_property, capsys, tmp_path):
        record_property("criterion", "study pipeline: shaped data significant, null data not")
        script = REPO_ROOT / "scripts" / "make_study_dataset.py"
        shaped, null = tmp_path / "shaped.csv", tmp_path / "null.csv"
        for path, shape in ((shaped, "study"), (null, "null")):
            subprocess.run(
                [sys.executable, str(script), str(path), "--shape", shape, "--seed", "7"],
                check=True, capture_output=True,
            )

        shaped_rows = self._analyze(capsys, shaped)
        assert len(shaped_rows) == 3
        assert all(row["significant"] for row in shaped_rows)

        null_rows = self._analyze(capsys, null)
        assert len(null_rows) == 3
        assert not any(row["significant"] for row in null_rows)


PROFILE_SCHEDULE = [
    (Feature.CLAIMS, 0, 200_000),
    (Feature.COUNTERS, 200_000, 350_000),
    (Feature.QA, 350_000, 470_000),
    (Feature.CONTEXT, 470_000, 530_000),
    (Feature.DEBATE_ME, 530_000, 570_000),
    (Feature.IDLE, 570_000, 600_000),
]


class TestAnalyticsPartition:
    def test_fractions_partition_and_reading_profile(self, record_property, tmp_path):
        record_property("criterion", "analytics: fractions partition to 1, reading profile replays")
        rng = random.Random(60_601)
        active = [f for f in Feature if f is not Feature.IDLE]

        for _ in range(1_000):
            log = EventLog()
            t = rng.randint(0, 1_000)
            for visit in range(rng.randint(1, 8)):
                t += rng.randint(0, 50) if visit else 0
                feature = rng.choice(active + [Feature.IDLE])
                log.record(SessionEvent("s", feature, EventKind.ENTER, t))
                t += rng.randint(1, 100)
                log.record(SessionEvent("s", feature, EventKind.EXIT, t))
            breakdown = time_per_feature(log, "s")
            assert abs(sum(breakdown.fractions.values()) - 1.0) <= 1e-9

        events = []
        for feature, enter, exit_ in PROFILE_SCHEDULE:
            events.append(SessionEvent("profile", feature, EventKind.ENTER, enter))
            events.append(SessionEvent("profile", feature, EventKind.EXIT, exit_))
        path = tmp_path / "profile.jsonl"
        path.write_text(events_to_jsonl(events), encoding="utf-8")

        log = EventLog()
        for event in events_from_jsonl(path.read_text(encoding="utf-8")):
            log.record(event)
        breakdown = time_per_feature(log, "profile")
        assert abs(sum(breakdown.fractions.values()) - 1.0) <= 1e-9
        highlight_share = (
            breakdown.fractions[Feature.CLAIMS] + breakdown.fractions[Feature.COUNTERS]
        )
        assert highlight_share > 0.5


DEBATE_BODY = (
    "Rent control stabilizes neighborhoods and keeps families housed. Landlord "
    "groups insist it dries up construction. Cities that tried it report mixed "
    "outcomes across decades. The housing shortage predates every one of these "
    "policies. Someone always profits from the status quo."
)

OPENERS = [
    "Rent control obviously works.",
    "Rent control destroys housing supply.",
    "Neither side has real evidence.",
]


class TestDebateStateMachine:
    def test_random_operations_hold_invariants(self, record_property):
        record_property("criterion", "debate: alternation, feedback placement, regen limits")
        doc = ingest_document(DEBATE_BODY, "Rent control")
        gateway = Gateway(MockProvider(seed=23))
        rng = random.Random(99)
        ops_done = 0

        while ops_done < 10_000:
            session = open_debate(doc, rng.choice(OPENERS), gateway)
            ops_done += 1
            for _ in range(rng.randint(3, 18)):
                op = rng.choice(("rebut", "rebut", "up", "down", "down", "close"))
                ops_done += 1
                closed = session.status.value == "closed"
                if op == "rebut":
                    if closed:
                        with pytest.raises(SessionClosed):
                            rebut(session, "And another thing.", doc, gateway)
                    else:
                        rebut(session, f"Point {ops_done}.", doc, gateway)
                elif op == "close":
                    close_debate(session)
                elif closed:
                    continue
                else:
                    index = rng.randrange(len(session.turns) + 2)
                    valid = index < len(session.turns) and session.turns[index].role is Role.BOT
                    if not valid:
                        with pytest.raises(Exception) as info:
                            give_feedback(session, index, Thumbs(op), doc, gateway)
                        assert type(info.value).__name__ == "NotABotTurn"
                    elif op == "up":
                        give_feedback(session, index, Thumbs.UP, doc, gateway)
                    else:
                        turn = session.turns[index]
                        before = turn.text
                        if turn.regeneration_count >= session.max_regens:
                            with pytest.raises(Exception) as info:
                                give_feedback(session, index, Thumbs.DOWN, doc, gateway)
                            assert type(info.value).__name__ == "RegenerationLimitExceeded"
                        else:
                            give_feedback(session, index, Thumbs.DOWN, doc, gateway)
                            assert turn.text != before
                            assert before in turn.previous_texts

                for i, turn in enumerate(session.turns):
                    assert turn.role is (Role.USER if i % 2 == 0 else Role.BOT)
                    assert turn.regeneration_count <= session.max_regens
                    if turn.role is Role.USER:
                        assert turn.feedback is None

            assert replay_events(session.events) == session


WORKER_SCRIPT = textwrap.dedent(
    """
    import random
    import sys

    from counterpoint.api import ServiceState
    from counterpoint.config import AppConfig, ServiceConfig
    from counterpoint.context import MockSearchProvider
    from counterpoint.core import ingest_document
    from counterpoint.gateway import Gateway, MockProvider
    from counterpoint.storage import ArtifactStore

    WORDS = (
        "budget taxes transit housing schools wages policy growth deficit "
        "voters council reform audit zoning traffic parks levy bonds"
    ).split()


    def body(i: int) -> str:
        rng = random.Random(1_000 + i)
        sentences = []
        for _ in range(14):
            words = [rng.choice(WORDS) for _ in range(rng.randint(5, 10))]
            sentences.append(" ".join(words).capitalize() + ".")
        return " ".join(sentences)


    def main() -> None:
        data_dir, count = sys.argv[1], int(sys.argv[2])
        config = AppConfig(service=ServiceConfig(data_dir=data_dir, pipeline_mode="manual"))
        state = ServiceState(
            config,
            ArtifactStore(data_dir),
            Gateway(MockProvider(seed=3)),
            MockSearchProvider(None),
        )
        for i in range(count):
            doc = ingest_document(body(i), f"Article {i}")
            state.store.save_document(doc)
            state.store.save_status(doc.doc_id, "pending")
            state.pipeline.schedule(doc.doc_id)
            state.pipeline.run_pending()
            print(f"DONE {i}", flush=True)


    main()
    """
)


class TestPersistence:
    def _scan_integrity(self, data_dir: Path, store: ArtifactStore) -> int:
        """No torn files anywhere; every ready document reloads cleanly."""
        for path in data_dir.rglob("*"):
            assert ".tmp" not in path.name
        for path in data_dir.rglob("*.json"):
            json.loads(path.read_text(encoding="utf-8"))
        for path in data_dir.rglob("index.bin"):
            read_index(path)

        ready = 0
        for doc_id in store.list_documents():
            status = store.load_status(doc_id)["state"]
            assert status in ("missing", "pending", "ready")
            if status == "ready":
                ready += 1
                self._assert_reload_matches(store, doc_id)
        return ready

    def _assert_reload_matches(self, store: ArtifactStore, doc_id: str) -> None:
        doc = store.load_document(doc_id)
        gateway = Gateway(MockProvider(seed=3))
        fresh = annotations_to_dict(annotate(doc, gateway))
        assert annotations_to_dict(store.load_annotations(doc_id)) == fresh

        from counterpoint.ragqa import build_index

        fresh_index, fresh_chunks = build_index(doc, gateway)
        assert store.load_chunks(doc_id) == fresh_chunks
        stored_index = store.load_index(doc_id)
        assert [i for i, _ in stored_index.records] == [i for i, _ in fresh_index.records]
        for (_, stored), (_, built) in zip(stored_index.records, fresh_index.records):
            assert np.allclose(stored, built, rtol=1e-6, atol=1e-7)

    def test_kill_and_restart_leaves_no_torn_state(self, record_property, tmp_path):
        record_property("criterion", "persistence: kill/restart integrity and reload equality")
        worker = tmp_path / "worker.py"
        worker.write_text(WORKER_SCRIPT, encoding="utf-8")

        for run_no, delay in enumerate((0.0, 0.05, 0.12)):
            data_dir = tmp_path / f"run{run_no}"
            proc = subprocess.Popen(
                [sys.executable, str(worker), str(data_dir), "8"],
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
            )
            first = proc.stdout.readline()
            assert first.startswith("DONE"), proc.stderr.read()
            time.sleep(delay)
            proc.kill()
            proc.wait(timeout=10)

            store = ArtifactStore(data_dir)
            assert self._scan_integrity(data_dir, store) >= 1

            config = AppConfig(
                service=ServiceConfig(data_dir=str(data_dir), pipeline_mode="manual")
            )
            state = ServiceState(
                config, ArtifactStore(data_dir), Gateway(MockProvider(seed=3)),
                MockSearchProvider(None),
            )
            state.resume_incomplete()
            state.pipeline.run_pending()
            for doc_id in state.store.list_documents():
                assert state.store.load_status(doc_id)["state"] == "ready"
                self._assert_reload_matches(state.store, doc_id)
