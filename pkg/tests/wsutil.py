"""Shared WebSocket test helpers: ephemeral server + typed client."""

import asyncio
from contextlib import asynccontextmanager

from websockets.asyncio.client import connect

from signcast import protocol as proto
from signcast.server import BroadcastServer, ServerConfig


@asynccontextmanager
async def running_server(**overrides):
    cfg = dict(host="127.0.0.1", port=0)
    cfg.update(overrides)
    server = BroadcastServer(ServerConfig(**cfg))
    await server.start()
    try:
        yield server
    finally:
        await server.stop()


class Client:
    def __init__(self, server):
        self.url = f"ws://127.0.0.1:{server.port}/ws"
        self.ws = None

    async def __aenter__(self):
        self.ws = await connect(self.url)
        return self

    async def __aexit__(self, *exc):
        await self.ws.close()

    async def send(self, msg):
        await self.ws.send(proto.encode(msg))

    async def recv(self, timeout=2.0):
        return proto.decode(await asyncio.wait_for(self.ws.recv(), timeout))

    async def expect(self, msg_type, timeout=2.0):
        msg = await self.recv(timeout)
        assert isinstance(msg, msg_type), f"expected {msg_type.__name__}, got {msg}"
        return msg

    async def join(self, room, role="viewer", name="peer"):
        await self.send(proto.Join(room=room, role=role, name=name))
        return await self.expect(proto.Welcome)

    async def caption(self, word, seq, confidence=0.9, ts_ms=1):
        await self.send(proto.Caption(
            event=proto.CaptionEvent(word=word, confidence=confidence,
                                     seq=seq, ts_ms=ts_ms)))


async def wait_until(predicate, timeout=2.0, interval=0.01):
    deadline = asyncio.get_event_loop().time() + timeout
    while not predicate():
        if asyncio.get_event_loop().time() > deadline:
            raise AssertionError("condition not reached before timeout")
        await asyncio.sleep(interval)
