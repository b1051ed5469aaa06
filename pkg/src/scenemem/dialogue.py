"""Canonical dialogue data model and corpus ingestion.

Two input formats are supported:

* ``canonical`` - the engine's own JSON shape::

      {
        "characters": ["Caroline", "Melanie"],          # optional lexicon hint
        "metadata": {...},                              # optional
        "sessions": [
          {"session_id": "s1", "date": "2023-05-08", "location": "Dance studio",
           "turns": [{"speaker": "Caroline", "text": "...",
                      "location": "Dance studio", "time": "13:56"}]}
        ]
      }

  ``location`` and ``time`` are optional at turn level; a session-level
  ``location`` acts as the default for its turns.

* ``locomo`` - a LOCOMO benchmark sample (``conversation`` with
  ``session_N`` / ``session_N_date_time`` keys), mapped onto the same model.

Session dates with day-only resolution are anchored to midnight; every
message in a session inherits the session timestamp unless the turn carries
its own ``time``. Ordering inside a session is the turn order of the file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, time as dtime

from .errors import CorpusParseError

_DATE_FORMATS = (
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d",
    "%d %B %Y",
    "%d %B, %Y",
    "%B %d, %Y",
    "%B %d %Y",
)

# LOCOMO-style "1:56 pm on 8 May, 2023"
_LOCOMO_DATE = re.compile(
    r"^\s*(?P<h>\d{1,2}):(?P<m>\d{2})\s*(?P<ap>am|pm)\s+on\s+(?P<rest>.+)$", re.IGNORECASE
)


def normalize_name(raw: str) -> str:
    """Collapse a character name to its canonical key: trimmed and case-folded.

    Idempotent; raises CorpusParseError on empty/whitespace-only input. No
    alias resolution is attempted beyond this.
    """
    key = raw.strip().casefold()
    if not key:
        raise CorpusParseError("character name is empty after trimming")
    return key


def parse_timestamp(value: str) -> datetime:
    """Parse a session/turn timestamp from the formats the corpora use."""
    text = value.strip()
    m = _LOCOMO_DATE.match(text)
    if m:
        base = parse_timestamp(m.group("rest"))
        hour = int(m.group("h")) % 12
        if m.group("ap").lower() == "pm":
            hour += 12
        return base.replace(hour=hour, minute=int(m.group("m")))
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise CorpusParseError(f"unrecognized timestamp {value!r}")


@dataclass(frozen=True)
class Message:
    """One dialogue turn.

    ``speaker`` is the normalized key; ``speaker_display`` keeps the original
    casing for prompt/text rendering. ``location`` may be empty (unknown).
    """

    id: str
    speaker: str
    speaker_display: str
    timestamp: datetime
    location: str
    text: str
    session_id: str


@dataclass(frozen=True)
class Dialogue:
    """An ordered multi-session dialogue plus corpus-level metadata."""

    messages: tuple[Message, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.messages:
            raise CorpusParseError("dialogue contains no messages")
        ids = [m.id for m in self.messages]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CorpusParseError(f"duplicate message id {dup!r}")

    @property
    def session_ids(self) -> tuple[str, ...]:
        """Distinct session ids in first-appearance order."""
        seen: dict[str, None] = {}
        for m in self.messages:
            seen.setdefault(m.session_id, None)
        return tuple(seen)

    def speakers(self) -> tuple[str, ...]:
        """Normalized speaker keys in first-appearance order."""
        seen: dict[str, None] = {}
        for m in self.messages:
            seen.setdefault(m.speaker, None)
        return tuple(seen)

    def speaker_display_names(self) -> dict[str, str]:
        """Map normalized key -> first-seen display casing."""
        names: dict[str, str] = {}
        for m in self.messages:
            names.setdefault(m.speaker, m.speaker_display)
        return names


def parse_dialogue(source: bytes | str, format: str = "canonical") -> Dialogue:
    """Parse corpus bytes in the declared format into a Dialogue.

    Deterministic: identical bytes produce an identical value. Raises
    CorpusParseError with session/turn context on malformed input.
    """
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusParseError(f"corpus is not valid UTF-8: {exc}") from exc
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"corpus is not valid JSON: line {exc.lineno}: {exc.msg}") from exc

    if format == "canonical":
        return _parse_canonical(doc)
    if format == "locomo":
        return _parse_locomo(doc)
    raise CorpusParseError(f"unknown corpus format {format!r}")


def _parse_canonical(doc: object) -> Dialogue:
    if not isinstance(doc, dict):
        raise CorpusParseError("canonical corpus must be a JSON object")
    sessions = doc.get("sessions")
    if not isinstance(sessions, list) or not sessions:
        raise CorpusParseError("corpus has no 'sessions' list")

    metadata = dict(doc.get("metadata") or {})
    if "characters" in doc:
        metadata.setdefault("characters", list(doc["characters"]))

    messages: list[Message] = []
    previous_session_start: datetime | None = None
    for s_idx, session in enumerate(sessions):
        if not isinstance(session, dict):
            raise CorpusParseError(f"session {s_idx} is not an object")
        session_id = str(session.get("session_id") or f"session_{s_idx + 1}")
        if "date" not in session:
            raise CorpusParseError(f"session {session_id!r} is missing 'date'")
        session_start = parse_timestamp(str(session["date"]))
        if previous_session_start is not None and session_start < previous_session_start:
            raise CorpusParseError(
                f"session {session_id!r} starts before the previous session; "
                "sessions must appear in chronological order"
            )
        previous_session_start = session_start
        default_location = str(session.get("location") or "")
        turns = session.get("turns")
        if not isinstance(turns, list) or not turns:
            raise CorpusParseError(f"session {session_id!r} has no 'turns'")

        previous_ts: datetime | None = None
        for t_idx, turn in enumerate(turns):
            if not isinstance(turn, dict):
                raise CorpusParseError(f"session {session_id!r} turn {t_idx} is not an object")
            raw_speaker = turn.get("speaker")
            if not raw_speaker or not str(raw_speaker).strip():
                raise CorpusParseError(f"session {session_id!r} turn {t_idx} is missing 'speaker'")
            text_value = turn.get("text")
            if text_value is None or not str(text_value).strip():
                raise CorpusParseError(f"session {session_id!r} turn {t_idx} is missing 'text'")

            ts = session_start
            if turn.get("time"):
                try:
                    clock = dtime.fromisoformat(str(turn["time"]))
                except ValueError as exc:
                    raise CorpusParseError(
                        f"session {session_id!r} turn {t_idx} has bad 'time': {turn['time']!r}"
                    ) from exc
                ts = datetime.combine(session_start.date(), clock)
            if previous_ts is not None and ts < previous_ts:
                raise CorpusParseError(
                    f"session {session_id!r} turn {t_idx} moves backwards in time"
                )
            previous_ts = ts

            display = str(raw_speaker).strip()
            messages.append(
                Message(
                    id=f"{session_id}:{t_idx}",
                    speaker=normalize_name(display),
                    speaker_display=display,
                    timestamp=ts,
                    location=str(turn.get("location") or default_location),
                    text=str(text_value),
                    session_id=session_id,
                )
            )
    return Dialogue(messages=tuple(messages), metadata=metadata)


def _parse_locomo(doc: object) -> Dialogue:
    """Map one LOCOMO sample onto the canonical model.

    Accepts a single sample object; for whole benchmark files (a JSON list)
    use load_locomo_file and pick a sample.
    """
    if isinstance(doc, list):
        raise CorpusParseError(
            "locomo corpus is a list of samples; select one (see load_locomo_file)"
        )
    if not isinstance(doc, dict):
        raise CorpusParseError("locomo sample must be a JSON object")
    conv = doc.get("conversation", doc)
    session_keys = [
        k
        for k in conv
        if re.fullmatch(r"session_\d+", k) and isinstance(conv[k], list)
    ]
    if not session_keys:
        raise CorpusParseError("locomo sample has no session_N keys")
    session_keys.sort(key=lambda k: int(k.split("_")[1]))

    sessions = []
    for key in session_keys:
        date_raw = conv.get(f"{key}_date_time")
        if not date_raw:
            raise CorpusParseError(f"locomo session {key!r} is missing its date_time")
        turns = []
        for t_idx, turn in enumerate(conv[key]):
            if "speaker" not in turn:
                raise CorpusParseError(f"locomo session {key!r} turn {t_idx} is missing 'speaker'")
            if "text" not in turn:
                raise CorpusParseError(f"locomo session {key!r} turn {t_idx} is missing 'text'")
            turns.append({"speaker": turn["speaker"], "text": turn["text"]})
        sessions.append({"session_id": key, "date": str(date_raw), "turns": turns})

    metadata: dict = {"source": "locomo"}
    if "sample_id" in doc:
        metadata["sample_id"] = doc["sample_id"]
    characters = [conv[k] for k in ("speaker_a", "speaker_b") if conv.get(k)]
    if characters:
        metadata["characters"] = characters
    return _parse_canonical({"sessions": sessions, "metadata": metadata})


def load_locomo_file(source: bytes | str) -> list[dict]:
    """Return the raw sample objects of a LOCOMO benchmark file."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    doc = json.loads(source)
    if isinstance(doc, dict):
        return [doc]
    if isinstance(doc, list):
        return doc
    raise CorpusParseError("locomo file must be a JSON object or list")


def dialogue_to_canonical(dialogue: Dialogue) -> dict:
    """Serialize to the canonical internal store shape (re-parseable)."""
    return {
        "metadata": dialogue.metadata,
        "messages": [
            {
                "id": m.id,
                "speaker": m.speaker,
                "speaker_display": m.speaker_display,
                "timestamp": m.timestamp.isoformat(),
                "location": m.location,
                "text": m.text,
                "session_id": m.session_id,
            }
            for m in dialogue.messages
        ],
    }


def dialogue_from_canonical(doc: dict) -> Dialogue:
    """Inverse of dialogue_to_canonical."""
    try:
        messages = tuple(
            Message(
                id=m["id"],
                speaker=m["speaker"],
                speaker_display=m["speaker_display"],
                timestamp=datetime.fromisoformat(m["timestamp"]),
                location=m["location"],
                text=m["text"],
                session_id=m["session_id"],
            )
            for m in doc["messages"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusParseError(f"canonical store is malformed: {exc}") from exc
    return Dialogue(messages=messages, metadata=dict(doc.get("metadata") or {}))


def canonical_store_bytes(dialogue: Dialogue) -> bytes:
    """Deterministic byte encoding of the canonical store."""
    doc = dialogue_to_canonical(dialogue)
    return (json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1) + "\n").encode("utf-8")
