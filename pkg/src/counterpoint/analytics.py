"""Interaction analytics: event log, time-per-feature, Mann-Whitney U.

The event log records Enter/Exit pairs per feature with millisecond
timestamps; at most one feature is open at a time, so per-feature durations
partition the session and fractions always total 1 once Idle absorbs the
gaps.

Condition comparisons use the Mann-Whitney U test on midranks, reported as
U = min(U_a, U_b) with a two-sided p-value. Small pooled samples
(n1 + n2 <= 20) take the exact path: full enumeration of C(n1+n2, n1)
arrangements of the observed pooled values, which honors ties by
construction. Larger samples use the normal approximation with tie-corrected
variance and a 0.5 continuity correction.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .core import Lean, StanceRating


class Feature(Enum):
    ARTICLE = "article"
    CLAIMS = "claims"
    COUNTERS = "counters"
    CONTEXT = "context"
    QA = "qa"
    DEBATE_ME = "debateme"
    HIGHLIGHT = "highlight"
    IDLE = "idle"


class EventKind(Enum):
    ENTER = "enter"
    EXIT = "exit"


class OutOfOrderEvent(ValueError):
    pass


class UnmatchedExit(ValueError):
    pass


class UnmatchedEnter(ValueError):
    """An Enter arrived while another interval was still open."""


class EmptySession(ValueError):
    pass


@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    feature: Feature
    kind: EventKind
    timestamp_ms: int


class EventLog:
    """Per-session, timestamp-ordered event streams with validated nesting."""

    def __init__(self) -> None:
        self._events: dict[str, list[SessionEvent]] = {}
        self._open_feature: dict[str, Feature | None] = {}

    def sessions(self) -> list[str]:
        return list(self._events)

    def events(self, session_id: str) -> list[SessionEvent]:
        return list(self._events.get(session_id, []))

    def record(self, event: SessionEvent) -> "EventLog":
        session = self._events.setdefault(event.session_id, [])
        if session and event.timestamp_ms < session[-1].timestamp_ms:
            raise OutOfOrderEvent(
                f"timestamp {event.timestamp_ms} precedes {session[-1].timestamp_ms}"
            )
        open_feature = self._open_feature.get(event.session_id)
        if event.kind is EventKind.ENTER:
            if open_feature is not None:
                raise UnmatchedEnter(
                    f"{event.feature.value} entered while {open_feature.value} is open"
                )
            self._open_feature[event.session_id] = event.feature
        else:
            if open_feature is not event.feature:
                raise UnmatchedExit(f"exit {event.feature.value} without matching enter")
            self._open_feature[event.session_id] = None
        session.append(event)
        return self


def record_event(log: EventLog, event: SessionEvent) -> EventLog:
    return log.record(event)


@dataclass(frozen=True)
class FeatureTimeBreakdown:
    seconds: dict[Feature, float]
    fractions: dict[Feature, float]
    session_duration_s: float


def time_per_feature(log: EventLog, session_id: str) -> FeatureTimeBreakdown:
    """Sum Exit - Enter per feature; gaps between intervals count as Idle.

    Session duration runs from the first Enter to the last Exit. A trailing
    Enter with no Exit contributes nothing.
    """
    events = log.events(session_id)
    durations_ms: dict[Feature, int] = {feature: 0 for feature in Feature}
    open_since: int | None = None
    open_feature: Feature | None = None
    first_enter: int | None = None
    last_exit: int | None = None
    for event in events:
        if event.kind is EventKind.ENTER:
            open_since = event.timestamp_ms
            open_feature = event.feature
            if first_enter is None:
                first_enter = event.timestamp_ms
        else:
            assert open_feature is event.feature and open_since is not None
            durations_ms[event.feature] += event.timestamp_ms - open_since
            last_exit = event.timestamp_ms
            open_since = None
            open_feature = None
    if first_enter is None or last_exit is None or last_exit <= first_enter:
        raise EmptySession(f"session {session_id!r} has no usable intervals")
    total_ms = last_exit - first_enter
    attributed_ms = sum(durations_ms.values())
    durations_ms[Feature.IDLE] += total_ms - attributed_ms
    seconds = {feature: ms / 1000.0 for feature, ms in durations_ms.items()}
    fractions = {feature: ms / total_ms for feature, ms in durations_ms.items()}
    return FeatureTimeBreakdown(
        seconds=seconds, fractions=fractions, session_duration_s=total_ms / 1000.0
    )


class NonPositiveDuration(ValueError):
    pass


def per_minute_rate(count: int, duration_minutes: float) -> float:
    if count < 0:
        raise ValueError("count must be non-negative")
    if duration_minutes <= 0:
        raise NonPositiveDuration(f"duration must be positive, got {duration_minutes}")
    return count / duration_minutes


# -- event persistence (one JSON record per line) -----------------------------


def events_to_jsonl(events: Iterable[SessionEvent]) -> str:
    lines = [
        json.dumps(
            {
                "session_id": e.session_id,
                "feature": e.feature.value,
                "kind": e.kind.value,
                "timestamp_ms": e.timestamp_ms,
            },
            sort_keys=True,
        )
        for e in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def events_from_jsonl(text: str) -> list[SessionEvent]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        events.append(
            SessionEvent(
                session_id=raw["session_id"],
                feature=Feature(raw["feature"]),
                kind=EventKind(raw["kind"]),
                timestamp_ms=raw["timestamp_ms"],
            )
        )
    return events


# -- Mann-Whitney U ------------------------------------------------------------

EXACT_PATH_MAX_POOLED = 20


class UTestMethod(Enum):
    EXACT = "exact"
    NORMAL_APPROX = "normal_approx"


@dataclass(frozen=True)
class UTestResult:
    u: float
    n1: int
    n2: int
    method: UTestMethod
    z: float
    p_two_sided: float
    tie_correction_applied: bool
    degenerate: bool = False


def midranks(values: Sequence[float]) -> list[float]:
    """Average ranks for ties (1-based): each tie group gets the mean of the
    ordinal ranks it occupies."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j + 2) / 2.0  # mean of 1-based positions i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = average
        i = j + 1
    return ranks


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def mann_whitney_u(
    a: Sequence[float],
    b: Sequence[float],
    exact_max_pooled: int = EXACT_PATH_MAX_POOLED,
) -> UTestResult:
    """Two-sided Mann-Whitney U test with U = min(U_a, U_b).

    Exact path: p = P(min(U_a', U_b') <= observed U) over every arrangement
    of the pooled values into groups of sizes n1 and n2. Approximate path:
    normal with mean n1*n2/2, tie-corrected variance, continuity correction
    0.5. All-identical pooled values are degenerate: p = 1 by convention.
    """
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be non-empty")
    pooled = [float(x) for x in a] + [float(x) for x in b]
    total = n1 + n2
    ranks = midranks(pooled)
    r_a = sum(ranks[:n1])
    u_a = r_a - n1 * (n1 + 1) / 2.0
    u_b = n1 * n2 - u_a
    u = min(u_a, u_b)

    tie_counts = Counter(pooled)
    ties_present = any(count > 1 for count in tie_counts.values())
    degenerate = len(tie_counts) == 1

    if total <= exact_max_pooled:
        count = 0
        n_arrangements = math.comb(total, n1)
        threshold = u + 1e-9
        for combo in itertools.combinations(range(total), n1):
            ra = sum(ranks[i] for i in combo)
            ua = ra - n1 * (n1 + 1) / 2.0
            if min(ua, n1 * n2 - ua) <= threshold:
                count += 1
        return UTestResult(
            u=u,
            n1=n1,
            n2=n2,
            method=UTestMethod.EXACT,
            z=0.0,
            p_two_sided=count / n_arrangements,
            tie_correction_applied=False,
            degenerate=degenerate,
        )

    if degenerate:
        return UTestResult(
            u=u,
            n1=n1,
            n2=n2,
            method=UTestMethod.NORMAL_APPROX,
            z=0.0,
            p_two_sided=1.0,
            tie_correction_applied=True,
            degenerate=True,
        )
    mean = n1 * n2 / 2.0
    tie_term = sum(t**3 - t for t in tie_counts.values())
    variance = n1 * n2 / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if variance <= 0:
        return UTestResult(
            u=u,
            n1=n1,
            n2=n2,
            method=UTestMethod.NORMAL_APPROX,
            z=0.0,
            p_two_sided=1.0,
            tie_correction_applied=ties_present,
            degenerate=True,
        )
    z = (u - mean + 0.5) / math.sqrt(variance)
    p = min(1.0, max(0.0, 2.0 * _normal_cdf(z)))
    return UTestResult(
        u=u,
        n1=n1,
        n2=n2,
        method=UTestMethod.NORMAL_APPROX,
        z=z,
        p_two_sided=p,
        tie_correction_applied=ties_present,
    )


# -- condition records and comparisons ----------------------------------------

ALPHA = 0.05


class Condition(Enum):
    BASELINE = "baseline"
    SYSTEM = "system"


class Measure(Enum):
    CLAIMS = "claims"
    COUNTERS = "counters"
    RATE = "rate"
    STANCE = "stance"


class MissingCondition(ValueError):
    pass


@dataclass(frozen=True)
class ConditionRecord:
    participant_id: str
    condition: Condition
    article_lean: Lean
    n_claims: int
    n_counters: int
    duration_minutes: float
    stance_before: StanceRating
    stance_after: StanceRating

    def __post_init__(self) -> None:
        if self.n_claims < 0 or self.n_counters < 0:
            raise ValueError("claim/counter counts must be non-negative")
        if self.duration_minutes <= 0:
            raise ValueError("duration must be positive")


def measure_value(record: ConditionRecord, measure: Measure) -> float:
    if measure is Measure.CLAIMS:
        return float(record.n_claims)
    if measure is Measure.COUNTERS:
        return float(record.n_counters)
    if measure is Measure.RATE:
        # Combined submission rate: claims plus counters per minute.
        return per_minute_rate(record.n_claims + record.n_counters, record.duration_minutes)
    return float(record.stance_after.value - record.stance_before.value)


@dataclass(frozen=True)
class ConditionComparison:
    lean: Lean
    measure: Measure
    n_baseline: int
    n_system: int
    result: UTestResult
    significant: bool


def compare_conditions(
    records: Sequence[ConditionRecord],
    measure: Measure,
    alpha: float = ALPHA,
) -> list[ConditionComparison]:
    """Per-lean U test of Baseline vs System for the chosen measure."""
    leans = [lean for lean in (Lean.LEFT, Lean.RIGHT, Lean.NEUTRAL, Lean.UNKNOWN)
             if any(r.article_lean is lean for r in records)]
    comparisons = []
    for lean in leans:
        group = [r for r in records if r.article_lean is lean]
        baseline = [measure_value(r, measure) for r in group if r.condition is Condition.BASELINE]
        system = [measure_value(r, measure) for r in group if r.condition is Condition.SYSTEM]
        if not baseline or not system:
            raise MissingCondition(f"lean {lean.value} lacks one of the conditions")
        result = mann_whitney_u(baseline, system)
        comparisons.append(
            ConditionComparison(
                lean=lean,
                measure=measure,
                n_baseline=len(baseline),
                n_system=len(system),
                result=result,
                significant=result.p_two_sided < alpha,
            )
        )
    return comparisons


STUDY_CSV_HEADER = [
    "participant_id",
    "condition",
    "lean",
    "n_claims",
    "n_counters",
    "duration_minutes",
    "stance_before",
    "stance_after",
]


def load_study_records(path: str | Path) -> list[ConditionRecord]:
    """Read study records from a CSV with the documented header."""
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = set(STUDY_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"study CSV missing columns: {sorted(missing)}")
        for row in reader:
            topic = row.get("topic", "article")
            records.append(
                ConditionRecord(
                    participant_id=row["participant_id"],
                    condition=Condition(row["condition"].strip().lower()),
                    article_lean=Lean(row["lean"].strip().lower()),
                    n_claims=int(row["n_claims"]),
                    n_counters=int(row["n_counters"]),
                    duration_minutes=float(row["duration_minutes"]),
                    stance_before=StanceRating(topic, int(row["stance_before"])),
                    stance_after=StanceRating(topic, int(row["stance_after"])),
                )
            )
    return records
