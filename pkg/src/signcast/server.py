"""Room-based caption broadcast server.

One asyncio event loop serves every connection. All room state lives in
plain dicts mutated only between awaits, so each room's members observe
one global broadcast order. Slow consumers never stall a handler: every
connection writes through a bounded queue drained by its own sender task,
and overflowing that queue forcibly disconnects the laggard.

Liveness is application-level: clients send protocol Ping messages, any
inbound message refreshes the peer's clock, and a reaper closes
connections silent for longer than the configured timeout.
"""

import asyncio
import itertools
import logging
import time
from dataclasses import dataclass, field

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from . import protocol as proto

log = logging.getLogger("signcast.server")

WS_PATH = "/ws"


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    max_room_members: int = 64
    heartbeat_interval: float = 15.0
    timeout: float = 45.0
    send_queue: int = 256

    def __post_init__(self):
        if not self.timeout > self.heartbeat_interval > 0:
            raise ValueError("need timeout > heartbeat_interval > 0")
        if self.max_room_members < 1:
            raise ValueError("max_room_members must be >= 1")


class _Peer:
    def __init__(self, ws, peer_id, queue_size):
        self.ws = ws
        self.peer_id = peer_id
        self.queue = asyncio.Queue(maxsize=queue_size)
        self.sender = asyncio.create_task(self._drain())
        self.last_active = time.monotonic()
        self.room = None        # Room after a successful join
        self.name = None
        self.role = None

    async def _drain(self):
        try:
            while True:
                text = await self.queue.get()
                await self.ws.send(text)
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    def push(self, msg):
        """Queue an outbound message; overflow force-disconnects this peer."""
        try:
            self.queue.put_nowait(proto.encode(msg))
        except asyncio.QueueFull:
            log.warning("peer %s send queue overflow, disconnecting", self.peer_id)
            asyncio.create_task(self.ws.close(code=1013, reason="send queue overflow"))

    async def shutdown(self):
        self.sender.cancel()
        try:
            await self.sender
        except asyncio.CancelledError:
            pass


@dataclass
class Room:
    room_id: str
    members: dict = field(default_factory=dict)   # peer_id -> _Peer
    last_seq: dict = field(default_factory=dict)  # publisher peer_id -> seq


def _error_code(exc):
    if isinstance(exc, proto.InvalidFieldError):
        return "invalid_room" if exc.field == "room" else "bad_field"
    if isinstance(exc, proto.MissingFieldError):
        return "missing_field"
    if isinstance(exc, proto.UnknownTypeError):
        return "unknown_type"
    return "bad_message"


class BroadcastServer:
    def __init__(self, config=None):
        self.config = config or ServerConfig()
        self.rooms = {}
        self._peers = set()
        self._server = None
        self._reaper = None
        self._peer_ids = itertools.count(1)

    # -- lifecycle ---------------------------------------------------------

    async def start(self):
        """Bind and serve; returns the actual (host, port)."""
        self._server = await serve(
            self._handle_connection,
            self.config.host,
            self.config.port,
            process_request=self._check_path,
            ping_interval=None,  # liveness is handled by the app-level reaper
        )
        self._reaper = asyncio.create_task(self._reap_silent_peers())
        sock = self._server.sockets[0].getsockname()
        log.info("listening on ws://%s:%s%s", sock[0], sock[1], WS_PATH)
        return sock[0], sock[1]

    async def stop(self):
        if self._reaper:
            self._reaper.cancel()
            try:
                await self._reaper
            except asyncio.CancelledError:
                pass
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        for peer in list(self._peers):
            await peer.ws.close()

    @property
    def port(self):
        return self._server.sockets[0].getsockname()[1]

    def _check_path(self, connection, request):
        if request.path != WS_PATH:
            return connection.respond(404, "not found; connect to /ws\n")
        return None

    # -- connection lifecycle ------------------------------------------------

    async def _handle_connection(self, ws):
        peer = _Peer(ws, f"peer-{next(self._peer_ids)}", self.config.send_queue)
        self._peers.add(peer)
        try:
            async for raw in ws:
                peer.last_active = time.monotonic()
                try:
                    msg = proto.decode(raw)
                except proto.ProtocolError as exc:
                    peer.push(proto.Error(code=_error_code(exc), message=str(exc)))
                    continue
                self._dispatch(peer, msg)
        except ConnectionClosed:
            pass
        finally:
            self._disconnect(peer)
            self._peers.discard(peer)
            await peer.shutdown()

    def _dispatch(self, peer, msg):
        if isinstance(msg, proto.Join):
            self._handle_join(peer, msg)
        elif isinstance(msg, proto.Caption):
            self._handle_caption(peer, msg)
        elif isinstance(msg, proto.Ping):
            peer.push(proto.Pong())
        else:
            peer.push(proto.Error(code="unexpected_type",
                                  message=f"clients do not send {type(msg).__name__}"))

    # -- message semantics ---------------------------------------------------

    def _handle_join(self, peer, msg):
        if peer.room is not None:
            peer.push(proto.Error(code="already_joined",
                                  message=f"already in room {peer.room.room_id!r}"))
            return
        room = self.rooms.get(msg.room)
        if room is None:
            room = self.rooms[msg.room] = Room(room_id=msg.room)
        if len(room.members) >= self.config.max_room_members:
            peer.push(proto.Error(code="room_full",
                                  message=f"room {msg.room!r} is full"))
            if not room.members:
                del self.rooms[msg.room]
            return
        existing = [proto.Member(peer_id=m.peer_id, name=m.name, role=m.role)
                    for m in room.members.values()]
        peer.room = room
        peer.name = msg.name
        peer.role = msg.role
        room.members[peer.peer_id] = peer
        peer.push(proto.Welcome(room=room.room_id, peer_id=peer.peer_id,
                                members=tuple(existing)))
        joined = proto.PeerJoined(peer_id=peer.peer_id, name=peer.name, role=peer.role)
        for member in room.members.values():
            if member is not peer:
                member.push(joined)
        log.info("%s (%s) joined room %s as %s",
                 peer.peer_id, peer.name, room.room_id, peer.role)

    def _handle_caption(self, peer, msg):
        if peer.room is None:
            peer.push(proto.Error(code="not_joined", message="join a room first"))
            return
        if peer.role != "publisher":
            peer.push(proto.Error(code="not_publisher",
                                  message="only publishers send captions"))
            return
        room = peer.room
        last = room.last_seq.get(peer.peer_id)
        if last is not None and msg.event.seq <= last:
            peer.push(proto.Error(code="stale_seq",
                                  message=f"seq {msg.event.seq} <= last {last}"))
            return
        room.last_seq[peer.peer_id] = msg.event.seq
        broadcast = proto.CaptionBroadcast(
            room=room.room_id,
            speaker=peer.peer_id,
            name=peer.name,
            event=msg.event,
            server_ts_ms=int(time.time() * 1000),
        )
        for member in room.members.values():
            member.push(broadcast)

    def _disconnect(self, peer):
        """Idempotent removal plus PeerLeft fan-out and empty-room cleanup."""
        room = peer.room
        if room is None:
            return
        peer.room = None
        room.members.pop(peer.peer_id, None)
        room.last_seq.pop(peer.peer_id, None)
        if room.members:
            left = proto.PeerLeft(peer_id=peer.peer_id)
            for member in room.members.values():
                member.push(left)
        else:
            self.rooms.pop(room.room_id, None)
        log.info("%s left room %s", peer.peer_id, room.room_id)

    async def _reap_silent_peers(self):
        period = max(self.config.heartbeat_interval / 2.0, 0.01)
        while True:
            await asyncio.sleep(period)
            cutoff = time.monotonic() - self.config.timeout
            for peer in [p for p in self._peers if p.last_active < cutoff]:
                log.info("closing silent peer %s", peer.peer_id)
                await peer.ws.close(code=1001, reason="heartbeat timeout")


async def run_server(config):
    """Serve until cancelled (the CLI entry point)."""
    server = BroadcastServer(config)
    await server.start()
    try:
        await asyncio.Future()
    finally:
        await server.stop()
