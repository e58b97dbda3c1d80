"""Wire-level caption protocol: single-line JSON messages over WebSocket
text frames.

Every message is one JSON object with a "type" tag. Field names are part
of the wire contract: type, room, role, name, word, confidence, seq,
ts_ms, peer_id, members, speaker, server_ts_ms, code, message. Unknown
extra fields are ignored on decode for forward compatibility; unknown
types are not.
"""

import json
import re
from dataclasses import dataclass, field

ROOM_ID_PATTERN = re.compile(r"^[a-zA-Z0-9_-]{1,64}$")
ROLES = ("publisher", "viewer")
MAX_SEQ = 2**64 - 1


class ProtocolError(ValueError):
    """Base class for encode/decode failures."""


class MalformedPayloadError(ProtocolError):
    """Payload is not a JSON object with a string "type"."""


class UnknownTypeError(ProtocolError):
    pass


class MissingFieldError(ProtocolError):
    def __init__(self, msg_type, field_name):
        super().__init__(f"{msg_type}: missing field {field_name!r}")
        self.field = field_name


class InvalidFieldError(ProtocolError):
    def __init__(self, msg_type, field_name, reason):
        super().__init__(f"{msg_type}: field {field_name!r} {reason}")
        self.field = field_name


@dataclass(frozen=True)
class CaptionEvent:
    """One recognized word: the unit relayed through the broadcast server."""

    word: str
    confidence: float
    seq: int
    ts_ms: int


@dataclass(frozen=True)
class Member:
    peer_id: str
    name: str
    role: str


@dataclass(frozen=True)
class Join:
    room: str
    role: str
    name: str


@dataclass(frozen=True)
class Caption:
    event: CaptionEvent


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Welcome:
    room: str
    peer_id: str
    members: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class CaptionBroadcast:
    room: str
    speaker: str          # publisher's peer_id
    name: str
    event: CaptionEvent
    server_ts_ms: int


@dataclass(frozen=True)
class PeerJoined:
    peer_id: str
    name: str
    role: str


@dataclass(frozen=True)
class PeerLeft:
    peer_id: str


@dataclass(frozen=True)
class Error:
    code: str
    message: str


@dataclass(frozen=True)
class Pong:
    pass


CLIENT_TYPES = {"join": Join, "caption": Caption, "ping": Ping}
SERVER_TYPES = {
    "welcome": Welcome,
    "caption_broadcast": CaptionBroadcast,
    "peer_joined": PeerJoined,
    "peer_left": PeerLeft,
    "error": Error,
    "pong": Pong,
}
_TYPE_OF = {cls: name for name, cls in {**CLIENT_TYPES, **SERVER_TYPES}.items()}


def _check_str(tag, name, value, nonempty=True):
    if not isinstance(value, str):
        raise InvalidFieldError(tag, name, f"must be a string, got {type(value).__name__}")
    if nonempty and not value:
        raise InvalidFieldError(tag, name, "must be nonempty")
    return value


def _check_room(tag, value):
    _check_str(tag, "room", value)
    if not ROOM_ID_PATTERN.match(value):
        raise InvalidFieldError(tag, "room", "must match [a-zA-Z0-9_-]{1,64}")
    return value


def _check_role(tag, value):
    _check_str(tag, "role", value)
    if value not in ROLES:
        raise InvalidFieldError(tag, "role", f"must be one of {ROLES}")
    return value


def _check_int(tag, name, value, lo=0, hi=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidFieldError(tag, name, "must be an integer")
    if value < lo or (hi is not None and value > hi):
        raise InvalidFieldError(tag, name, f"out of range [{lo}, {hi}]")
    return value


def _check_confidence(tag, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidFieldError(tag, "confidence", "must be a number")
    value = float(value)
    if not 0.0 <= value <= 1.0 or value != value:
        raise InvalidFieldError(tag, "confidence", "out of range [0, 1]")
    return value


def validate(msg):
    """Raise ProtocolError unless `msg` satisfies every field invariant."""
    tag = _TYPE_OF.get(type(msg))
    if tag is None:
        raise ProtocolError(f"not a protocol message: {type(msg).__name__}")
    if isinstance(msg, Join):
        _check_room(tag, msg.room)
        _check_role(tag, msg.role)
        _check_str(tag, "name", msg.name)
    elif isinstance(msg, Caption):
        _validate_event(tag, msg.event)
    elif isinstance(msg, Welcome):
        _check_room(tag, msg.room)
        _check_str(tag, "peer_id", msg.peer_id)
        for m in msg.members:
            _check_str(tag, "peer_id", m.peer_id)
            _check_str(tag, "name", m.name)
            _check_role(tag, m.role)
    elif isinstance(msg, CaptionBroadcast):
        _check_room(tag, msg.room)
        _check_str(tag, "speaker", msg.speaker)
        _check_str(tag, "name", msg.name)
        _validate_event(tag, msg.event)
        _check_int(tag, "server_ts_ms", msg.server_ts_ms)
    elif isinstance(msg, PeerJoined):
        _check_str(tag, "peer_id", msg.peer_id)
        _check_str(tag, "name", msg.name)
        _check_role(tag, msg.role)
    elif isinstance(msg, PeerLeft):
        _check_str(tag, "peer_id", msg.peer_id)
    elif isinstance(msg, Error):
        _check_str(tag, "code", msg.code)
        _check_str(tag, "message", msg.message, nonempty=False)
    return msg


def _validate_event(tag, event):
    if not isinstance(event, CaptionEvent):
        raise InvalidFieldError(tag, "word", "caption payload missing")
    _check_str(tag, "word", event.word)
    _check_confidence(tag, event.confidence)
    _check_int(tag, "seq", event.seq, lo=0, hi=MAX_SEQ)
    _check_int(tag, "ts_ms", event.ts_ms)


def encode(msg):
    """Message -> single-line JSON text. Validates first."""
    validate(msg)
    tag = _TYPE_OF[type(msg)]
    payload = {"type": tag}
    if isinstance(msg, Join):
        payload.update(room=msg.room, role=msg.role, name=msg.name)
    elif isinstance(msg, Caption):
        payload.update(word=msg.event.word, confidence=msg.event.confidence,
                       seq=msg.event.seq, ts_ms=msg.event.ts_ms)
    elif isinstance(msg, Welcome):
        payload.update(room=msg.room, peer_id=msg.peer_id,
                       members=[{"peer_id": m.peer_id, "name": m.name, "role": m.role}
                                for m in msg.members])
    elif isinstance(msg, CaptionBroadcast):
        payload.update(room=msg.room, speaker=msg.speaker, name=msg.name,
                       word=msg.event.word, confidence=msg.event.confidence,
                       seq=msg.event.seq, ts_ms=msg.event.ts_ms,
                       server_ts_ms=msg.server_ts_ms)
    elif isinstance(msg, PeerJoined):
        payload.update(peer_id=msg.peer_id, name=msg.name, role=msg.role)
    elif isinstance(msg, PeerLeft):
        payload.update(peer_id=msg.peer_id)
    elif isinstance(msg, Error):
        payload.update(code=msg.code, message=msg.message)
    text = json.dumps(payload, separators=(",", ":"), ensure_ascii=False)
    assert "\n" not in text  # json escapes newlines inside strings
    return text


def _require(tag, obj, field_name):
    if field_name not in obj:
        raise MissingFieldError(tag, field_name)
    return obj[field_name]


def decode(payload):
    """JSON text (or bytes) -> validated message."""
    if isinstance(payload, (bytes, bytearray)):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedPayloadError(f"payload is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedPayloadError(f"payload is not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedPayloadError("payload must be a JSON object")
    tag = obj.get("type")
    if not isinstance(tag, str):
        raise MalformedPayloadError('payload needs a string "type" field')
    if tag in ("join",):
        msg = Join(room=_require(tag, obj, "room"), role=_require(tag, obj, "role"),
                   name=_require(tag, obj, "name"))
    elif tag == "caption":
        msg = Caption(event=_decode_event(tag, obj))
    elif tag == "ping":
        msg = Ping()
    elif tag == "welcome":
        raw_members = _require(tag, obj, "members")
        if not isinstance(raw_members, list):
            raise InvalidFieldError(tag, "members", "must be a list")
        members = []
        for m in raw_members:
            if not isinstance(m, dict):
                raise InvalidFieldError(tag, "members", "entries must be objects")
            members.append(Member(peer_id=_require(tag, m, "peer_id"),
                                  name=_require(tag, m, "name"),
                                  role=_require(tag, m, "role")))
        msg = Welcome(room=_require(tag, obj, "room"),
                      peer_id=_require(tag, obj, "peer_id"),
                      members=tuple(members))
    elif tag == "caption_broadcast":
        msg = CaptionBroadcast(room=_require(tag, obj, "room"),
                               speaker=_require(tag, obj, "speaker"),
                               name=_require(tag, obj, "name"),
                               event=_decode_event(tag, obj),
                               server_ts_ms=_require(tag, obj, "server_ts_ms"))
    elif tag == "peer_joined":
        msg = PeerJoined(peer_id=_require(tag, obj, "peer_id"),
                         name=_require(tag, obj, "name"),
                         role=_require(tag, obj, "role"))
    elif tag == "peer_left":
        msg = PeerLeft(peer_id=_require(tag, obj, "peer_id"))
    elif tag == "error":
        msg = Error(code=_require(tag, obj, "code"),
                    message=_require(tag, obj, "message"))
    elif tag == "pong":
        msg = Pong()
    else:
        raise UnknownTypeError(f"unknown message type {tag!r}")
    return validate(msg)


def _decode_event(tag, obj):
    confidence = _require(tag, obj, "confidence")
    if isinstance(confidence, int) and not isinstance(confidence, bool):
        confidence = float(confidence)
    return CaptionEvent(word=_require(tag, obj, "word"), confidence=confidence,
                        seq=_require(tag, obj, "seq"), ts_ms=_require(tag, obj, "ts_ms"))
