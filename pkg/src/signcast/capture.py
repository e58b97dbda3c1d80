"""Desktop capture client: sliding-window inference over a frame source,
debounced word emission, publishing over the caption protocol.

Two cooperating tasks share a bounded queue: a paced frame/predict loop
that turns windows into candidate caption events, and a network sender
that assigns sequence numbers as it publishes. Prediction never waits on
the network; if the queue fills, the oldest unsent event is dropped and
logged, and because the sender numbers events at send time the published
seq stream stays gap-free.

Window schedule: every `stride` ingested frames the rolling buffer (the
last 12 frames, temporally stretched when fewer have arrived) becomes one
window; a final window fires at end of source if frames arrived after the
last evaluation. The schedule is deterministic, so identical
(source, model, config) always yields the identical emission transcript.
"""

import asyncio
import logging
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from websockets.asyncio.client import connect
from websockets.exceptions import ConnectionClosed, InvalidHandshake

from . import protocol as proto
from .classifier import Prediction, load_sign_model, predict_clip
from .video import CLIP_LENGTH, load_frames, preprocess, resample_indices

log = logging.getLogger("signcast.capture")


class CaptureError(RuntimeError):
    pass


class ConnectionFailedError(CaptureError):
    """Server unreachable after the configured retries."""


@dataclass
class CaptureConfig:
    source: str
    model_path: str = ""
    server_url: str = "ws://127.0.0.1:8765/ws"
    room: str = "captions"
    name: str = "signer"
    window: int = CLIP_LENGTH       # fixed by the classifier input
    stride: int = 6
    min_confidence: float = 0.6
    repeat_gap: int = 3
    fps: float = 24.0
    transcript_path: str = None
    queue_size: int = 32
    max_retries: int = 3
    retry_delay: float = 0.5

    def __post_init__(self):
        if self.window != CLIP_LENGTH:
            raise ValueError(f"window size is fixed at {CLIP_LENGTH}")
        if not 1 <= self.stride <= self.window:
            raise ValueError("stride must be in [1, window]")
        if not 0 < self.min_confidence < 1:
            raise ValueError("min_confidence must be in (0, 1)")
        if self.repeat_gap < 1:
            raise ValueError("repeat_gap must be >= 1")
        if self.fps < 0:
            raise ValueError("fps must be >= 0 (0 = unpaced)")


@dataclass
class EmissionState:
    last_word: str = None
    windows_since_emission: int = 0
    next_seq: int = 1


def debounce(prediction, state, min_confidence, repeat_gap):
    """Apply the emission policy to one window prediction.

    Emit iff top-1 confidence clears the threshold AND the word differs
    from the last emission or enough windows have passed since it.
    Returns (emit, updated state); the counter advances on every window.
    """
    windows_since = state.windows_since_emission + 1
    word = prediction.word if prediction.word is not None else str(prediction.label)
    confident = prediction.top_k[0][1] >= min_confidence
    fresh = word != state.last_word or windows_since >= repeat_gap
    if confident and fresh:
        return True, replace(state, last_word=word, windows_since_emission=0)
    return False, replace(state, windows_since_emission=windows_since)


@dataclass
class WindowRecord:
    index: int           # 1-based window number
    frame_count: int     # frames in the buffer when evaluated
    word: str
    confidence: float
    emitted: bool = False


@dataclass
class SessionReport:
    emissions: list = field(default_factory=list)   # published CaptionEvents
    windows: list = field(default_factory=list)     # WindowRecords
    frames_ingested: int = 0
    dropped_events: int = 0
    echoes_received: int = 0


def window_tensor(buffer):
    """Rolling buffer (<= 12 preprocessed frames) -> (12, h, w, c) stack."""
    frames = list(buffer)
    if len(frames) == CLIP_LENGTH:
        return np.stack(frames)
    return np.stack([frames[i] for i in resample_indices(len(frames))])


def iter_windows(model, frames, stride):
    """Yield (WindowRecord, Prediction) per the deterministic schedule."""
    cfg = model.config
    buffer = deque(maxlen=CLIP_LENGTH)
    ingested = 0
    last_eval = 0
    index = 0
    for frame in frames:
        buffer.append(preprocess(frame, cfg.height, cfg.width))
        ingested += 1
        if ingested % stride == 0:
            index += 1
            yield _evaluate(model, buffer, index), ingested
            last_eval = ingested
    if ingested > last_eval:
        index += 1
        yield _evaluate(model, buffer, index), ingested


def _evaluate(model, buffer, index):
    pred = predict_clip(model, window_tensor(buffer))
    word = pred.word if pred.word is not None else str(pred.label)
    record = WindowRecord(index=index, frame_count=len(buffer), word=word,
                          confidence=pred.top_k[0][1])
    return record, pred


class _Publisher:
    """Connection manager + sender task with bounded outbound queue."""

    def __init__(self, config, report):
        self.config = config
        self.report = report
        self.queue = asyncio.Queue(maxsize=config.queue_size)
        self.finished = asyncio.Event()
        self.failure = None
        self.ws = None

    def submit(self, word, confidence):
        """Queue a caption for publishing; overflow drops the oldest."""
        item = (word, confidence, int(time.time() * 1000))
        try:
            self.queue.put_nowait(item)
        except asyncio.QueueFull:
            dropped = self.queue.get_nowait()
            self.report.dropped_events += 1
            log.warning("send queue full, dropped unsent %r", dropped[0])
            self.queue.put_nowait(item)

    async def _connect(self):
        delay = self.config.retry_delay
        for attempt in range(1, self.config.max_retries + 1):
            try:
                ws = await connect(self.config.server_url, open_timeout=5)
                await ws.send(proto.encode(proto.Join(
                    room=self.config.room, role="publisher", name=self.config.name)))
                reply = proto.decode(await asyncio.wait_for(ws.recv(), 5))
                if isinstance(reply, proto.Error):
                    await ws.close()
                    raise ConnectionFailedError(f"join rejected: {reply.code}")
                if not isinstance(reply, proto.Welcome):
                    await ws.close()
                    raise ConnectionFailedError(f"expected welcome, got {reply}")
                log.info("joined room %s as %s", reply.room, reply.peer_id)
                return ws
            except (OSError, InvalidHandshake, ConnectionClosed,
                    asyncio.TimeoutError, proto.ProtocolError) as exc:
                log.warning("connect attempt %d/%d failed: %s",
                            attempt, self.config.max_retries, exc)
                if attempt == self.config.max_retries:
                    raise ConnectionFailedError(
                        f"server unreachable after {attempt} attempts: {exc}"
                    ) from exc
                await asyncio.sleep(delay)
                delay *= 2

    async def run(self, state):
        """Drain the queue into the socket, assigning seq at send time."""
        try:
            self.ws = await self._connect()
            try:
                while True:
                    get = asyncio.create_task(self.queue.get())
                    done_wait = asyncio.create_task(self.finished.wait())
                    done, _ = await asyncio.wait(
                        {get, done_wait}, return_when=asyncio.FIRST_COMPLETED)
                    if get in done:
                        done_wait.cancel()
                        word, confidence, ts_ms = get.result()
                        event = proto.CaptionEvent(word=word, confidence=confidence,
                                                   seq=state.next_seq, ts_ms=ts_ms)
                        state.next_seq += 1
                        await self._send_with_retry(proto.Caption(event=event))
                        self.report.emissions.append(event)
                    else:
                        get.cancel()
                        if self.queue.empty():
                            break
                await self._drain_echoes()
            finally:
                await self.ws.close()
        except ConnectionFailedError as exc:
            self.failure = exc

    async def _send_with_retry(self, msg):
        try:
            await self.ws.send(proto.encode(msg))
        except ConnectionClosed:
            log.warning("connection lost mid-session, reconnecting")
            self.ws = await self._connect()
            await self.ws.send(proto.encode(msg))

    async def _drain_echoes(self):
        """Read pending inbound broadcasts (echo confirms delivery)."""
        try:
            while True:
                raw = await asyncio.wait_for(self.ws.recv(), timeout=0.2)
                msg = proto.decode(raw)
                if isinstance(msg, proto.CaptionBroadcast):
                    self.report.echoes_received += 1
                elif isinstance(msg, proto.Error):
                    log.warning("server error: %s %s", msg.code, msg.message)
        except (asyncio.TimeoutError, ConnectionClosed):
            pass


async def run_capture_loop(config, model=None, publish=True):
    """Run the full capture session; returns the SessionReport.

    With publish=False the loop runs offline (no server), which keeps the
    deterministic prediction/debounce core testable in isolation.
    """
    if model is None:
        model = load_sign_model(config.model_path)
    frames = load_frames(config.source)
    report = SessionReport()
    state = EmissionState()
    publisher = _Publisher(config, report) if publish else None
    sender = asyncio.create_task(publisher.run(state)) if publish else None

    pace = 1.0 / config.fps if config.fps > 0 else 0.0
    try:
        for (record, pred), ingested in iter_windows(model, frames, config.stride):
            report.frames_ingested = ingested
            emit, state = debounce(pred, state, config.min_confidence,
                                   config.repeat_gap)
            record.emitted = emit
            report.windows.append(record)
            if emit:
                if publish:
                    publisher.submit(record.word, record.confidence)
                else:
                    report.emissions.append(proto.CaptionEvent(
                        word=record.word, confidence=record.confidence,
                        seq=state.next_seq, ts_ms=int(time.time() * 1000)))
                    state.next_seq += 1
            if sender is not None and sender.done() and publisher.failure:
                raise publisher.failure
            # hand the loop to the sender even when unpaced
            await asyncio.sleep(pace * config.stride if pace else 0)
    finally:
        if publish:
            publisher.finished.set()
            await sender
    if publish and publisher.failure:
        raise publisher.failure
    if config.transcript_path:
        write_transcript(config.transcript_path, report.emissions)
    return report


def write_transcript(path, emissions):
    """One emission per line: seq, word, confidence, ts_ms (tab-separated)."""
    lines = [f"{e.seq}\t{e.word}\t{e.confidence}\t{e.ts_ms}" for e in emissions]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_transcript(path):
    events = []
    for line in Path(path).read_text().splitlines():
        seq, word, confidence, ts_ms = line.split("\t")
        events.append(proto.CaptionEvent(word=word, confidence=float(confidence),
                                         seq=int(seq), ts_ms=int(ts_ms)))
    return events
