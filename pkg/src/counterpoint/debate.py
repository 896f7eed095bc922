"""Stateful debate agent that argues the side opposite the user.

The bot's side is fixed when the session opens (opposite of the opening
argument) so its stance stays coherent across turns. Thumbs-down feedback on
a bot turn replaces that turn's text in place with a regenerated rebuttal
that must differ from everything previously shown for the turn; the replaced
texts are retained in an audit list. Every operation appends to an
append-only event list, and replaying the events reconstructs the session
exactly, with no provider involved.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

from .core import Document, Role
from .gateway import Gateway, TemplateId

DEFAULT_MAX_REGENS = 3
DEFAULT_HISTORY_TURNS = 8
_REGEN_ATTEMPTS = 3


class Thumbs(Enum):
    UP = "up"
    DOWN = "down"


class SessionStatus(Enum):
    ACTIVE = "active"
    CLOSED = "closed"


class SessionClosed(RuntimeError):
    pass


class NotABotTurn(ValueError):
    pass


class RegenerationLimitExceeded(RuntimeError):
    pass


class RegenerationFailed(RuntimeError):
    """The provider kept repeating itself; the turn is left unchanged."""


@dataclass
class DebateTurn:
    role: Role
    text: str
    timestamp: float
    feedback: Thumbs | None = None
    regeneration_count: int = 0
    previous_texts: tuple[str, ...] = ()


@dataclass
class DebateSession:
    session_id: str
    doc_id: str
    opening_argument: str
    turns: list[DebateTurn] = field(default_factory=list)
    status: SessionStatus = SessionStatus.ACTIVE
    max_regens: int = DEFAULT_MAX_REGENS
    events: list[dict] = field(default_factory=list)

    def bot_turn_indices(self) -> list[int]:
        return [i for i, turn in enumerate(self.turns) if turn.role is Role.BOT]


def _format_history(turns: list[DebateTurn], window: int) -> str:
    recent = turns[-window:] if window else []
    if not recent:
        return "(none)"
    return "\n".join(f"{turn.role.value}: {turn.text}" for turn in recent)


def _bot_reply(
    session: DebateSession,
    doc: Document,
    argument: str,
    gateway: Gateway,
    history_turns: int,
) -> str:
    pair_index = len(session.turns) // 2
    result = gateway.complete_template(
        TemplateId.DEBATE_REBUT,
        {
            "opening": session.opening_argument,
            "title": doc.title,
            "article": doc.body,
            "history": _format_history(session.turns, history_turns),
            "argument": argument,
        },
        fixture_key=f"{doc.doc_id}__d{pair_index}",
    )
    return result.text


def open_debate(
    doc: Document,
    opening_argument: str,
    gateway: Gateway,
    max_regens: int = DEFAULT_MAX_REGENS,
    history_turns: int = DEFAULT_HISTORY_TURNS,
    session_id: str | None = None,
    clock=time.time,
) -> DebateSession:
    """Start a session: the opening argument plus the bot's first rebuttal."""
    if not opening_argument or not opening_argument.strip():
        raise ValueError("opening argument must be non-empty")
    session = DebateSession(
        session_id=session_id or uuid.uuid4().hex[:12],
        doc_id=doc.doc_id,
        opening_argument=opening_argument,
        max_regens=max_regens,
    )
    bot_text = _bot_reply(session, doc, opening_argument, gateway, history_turns)
    now = clock()
    session.turns.append(DebateTurn(role=Role.USER, text=opening_argument, timestamp=now))
    session.turns.append(DebateTurn(role=Role.BOT, text=bot_text, timestamp=now))
    session.events.append(
        {
            "type": "open",
            "session_id": session.session_id,
            "doc_id": doc.doc_id,
            "opening_argument": opening_argument,
            "bot_text": bot_text,
            "max_regens": max_regens,
            "ts": now,
        }
    )
    return session


def rebut(
    session: DebateSession,
    user_message: str,
    doc: Document,
    gateway: Gateway,
    history_turns: int = DEFAULT_HISTORY_TURNS,
    clock=time.time,
) -> DebateSession:
    """Append the user's message and a new bot rebuttal, conditioned on the
    last ``history_turns`` turns only."""
    if session.status is SessionStatus.CLOSED:
        raise SessionClosed(f"session {session.session_id} is closed")
    if not user_message or not user_message.strip():
        raise ValueError("message must be non-empty")
    if not session.turns or session.turns[-1].role is not Role.BOT:
        raise ValueError("it is not the user's turn")
    bot_text = _bot_reply(session, doc, user_message, gateway, history_turns)
    now = clock()
    session.turns.append(DebateTurn(role=Role.USER, text=user_message, timestamp=now))
    session.turns.append(DebateTurn(role=Role.BOT, text=bot_text, timestamp=now))
    session.events.append({"type": "user_turn", "text": user_message, "ts": now})
    session.events.append({"type": "bot_turn", "text": bot_text, "ts": now})
    return session


def give_feedback(
    session: DebateSession,
    turn_index: int,
    thumbs: Thumbs,
    doc: Document,
    gateway: Gateway,
    history_turns: int = DEFAULT_HISTORY_TURNS,
    clock=time.time,
) -> DebateSession:
    """Record thumbs on a bot turn; thumbs down regenerates its text in place.

    The regenerated text must differ from the current text and from every
    audit entry for the turn; an identical completion is retried with a fresh
    nonce. Thumbs up never triggers generation.
    """
    if not 0 <= turn_index < len(session.turns):
        raise NotABotTurn(f"turn {turn_index} does not exist")
    turn = session.turns[turn_index]
    if turn.role is not Role.BOT:
        raise NotABotTurn(f"turn {turn_index} is a user turn")

    if thumbs is Thumbs.UP:
        turn.feedback = Thumbs.UP
        session.events.append({"type": "feedback", "turn_index": turn_index, "thumbs": "up"})
        return session

    if turn.regeneration_count >= session.max_regens:
        raise RegenerationLimitExceeded(
            f"turn {turn_index} already regenerated {turn.regeneration_count} times"
        )
    seen = set(turn.previous_texts) | {turn.text}
    new_text: str | None = None
    for attempt in range(_REGEN_ATTEMPTS):
        result = gateway.complete_template(
            TemplateId.DEBATE_REGENERATE,
            {
                "title": doc.title,
                "history": _format_history(session.turns, history_turns),
                "previous": turn.text,
            },
            fixture_key=f"{doc.doc_id}__regen{turn_index}",
            nonce=turn.regeneration_count * _REGEN_ATTEMPTS + attempt + 1,
        )
        if result.text not in seen:
            new_text = result.text
            break
    if new_text is None:
        raise RegenerationFailed(
            f"provider repeated itself {_REGEN_ATTEMPTS} times for turn {turn_index}"
        )
    now = clock()
    turn.previous_texts = turn.previous_texts + (turn.text,)
    turn.text = new_text
    turn.regeneration_count += 1
    turn.feedback = Thumbs.DOWN
    session.events.append({"type": "feedback", "turn_index": turn_index, "thumbs": "down"})
    session.events.append(
        {"type": "regenerate", "turn_index": turn_index, "new_text": new_text, "ts": now}
    )
    return session


def close_debate(session: DebateSession) -> DebateSession:
    if session.status is SessionStatus.ACTIVE:
        session.status = SessionStatus.CLOSED
        session.events.append({"type": "close"})
    return session


def replay_events(events: list[dict]) -> DebateSession:
    """Rebuild a session from its event records, without any provider calls.

    Replaying the events of a live session yields a session that compares
    equal to it, which is the persistence round-trip contract.
    """
    session: DebateSession | None = None
    for event in events:
        kind = event["type"]
        if kind == "open":
            session = DebateSession(
                session_id=event["session_id"],
                doc_id=event["doc_id"],
                opening_argument=event["opening_argument"],
                max_regens=event.get("max_regens", DEFAULT_MAX_REGENS),
            )
            session.turns.append(
                DebateTurn(role=Role.USER, text=event["opening_argument"], timestamp=event["ts"])
            )
            session.turns.append(
                DebateTurn(role=Role.BOT, text=event["bot_text"], timestamp=event["ts"])
            )
        elif session is None:
            raise ValueError(f"event {kind!r} before open")
        elif kind == "user_turn":
            session.turns.append(
                DebateTurn(role=Role.USER, text=event["text"], timestamp=event["ts"])
            )
        elif kind == "bot_turn":
            session.turns.append(
                DebateTurn(role=Role.BOT, text=event["text"], timestamp=event["ts"])
            )
        elif kind == "feedback":
            turn = session.turns[event["turn_index"]]
            turn.feedback = Thumbs(event["thumbs"])
        elif kind == "regenerate":
            turn = session.turns[event["turn_index"]]
            turn.previous_texts = turn.previous_texts + (turn.text,)
            turn.text = event["new_text"]
            turn.regeneration_count += 1
        elif kind == "close":
            session.status = SessionStatus.CLOSED
        else:
            raise ValueError(f"unknown event type {kind!r}")
    if session is None:
        raise ValueError("no events to replay")
    session.events = list(events)
    return session
