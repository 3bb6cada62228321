"""TCP byte-stream transport speaking the shared wire format.

Each participant (the n parties and the OT mediator) listens on its own
address and keeps one connection per peer: a participant dials every
peer with a smaller id and accepts from every larger one, announcing its
id in a 2-byte hello.  Reader threads decode frames into the same kind
of selective inbox the in-memory backend uses, so the two backends are
drop-in replacements for each other.
"""

import socket
import struct
import threading
import time
from collections import deque

from .errors import (
    AddressError,
    ChannelClosed,
    ParameterError,
    PayloadTooLarge,
    ProtocolDesync,
    ReceiveTimeout,
    TransportError,
)
from .metrics import PhaseMetrics
from .wire import (
    BROADCAST,
    MAX_PAYLOAD,
    MEDIATOR,
    Envelope,
    Phase,
    decode_envelope_body,
    encode_envelope,
)


def _read_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    while count:
        chunk = sock.recv(count)
        if not chunk:
            raise ConnectionError("peer closed the connection")
        chunks.append(chunk)
        count -= len(chunk)
    return b"".join(chunks)


class StreamEndpoint:
    """One participant's socket-mesh handle; same surface as the
    in-memory endpoint."""

    def __init__(self, party_id: int, metrics: PhaseMetrics | None = None):
        self.party_id = party_id
        self.metrics = metrics if metrics is not None else PhaseMetrics()
        self._conns: dict[int, socket.socket] = {}
        self._send_locks: dict[int, threading.Lock] = {}
        self._inbox: deque[Envelope] = deque()
        self._cv = threading.Condition()
        self._closed = False
        self._readers: list[threading.Thread] = []

    @property
    def peers(self) -> list[int]:
        return sorted(pid for pid in self._conns if pid != MEDIATOR)

    def _attach(self, peer: int, sock: socket.socket) -> None:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._conns[peer] = sock
        self._send_locks[peer] = threading.Lock()

    def _start_readers(self) -> None:
        for peer, sock in self._conns.items():
            thread = threading.Thread(
                target=self._read_loop,
                args=(sock,),
                name=f"reader-{self.party_id}-{peer}",
                daemon=True,
            )
            thread.start()
            self._readers.append(thread)

    def _read_loop(self, sock: socket.socket) -> None:
        try:
            while True:
                (length,) = struct.unpack(">I", _read_exact(sock, 4))
                if length > MAX_PAYLOAD + 16:
                    raise PayloadTooLarge(f"incoming frame of {length} bytes")
                env = decode_envelope_body(_read_exact(sock, length))
                with self._cv:
                    self._inbox.append(env)
                    self._cv.notify_all()
        except (ConnectionError, OSError):
            self.close()
        except TransportError:
            self.close()

    def _write(self, peer: int, frame: bytes) -> None:
        if peer not in self._conns:
            raise AddressError(f"unknown destination: {peer}")
        try:
            with self._send_locks[peer]:
                self._conns[peer].sendall(frame)
        except OSError as exc:
            self.close()
            raise ChannelClosed(f"connection to {peer} failed: {exc}") from exc

    def send(self, env: Envelope) -> None:
        if env.sender != self.party_id:
            raise ParameterError(
                f"endpoint {self.party_id} cannot send as {env.sender}"
            )
        if env.to == BROADCAST:
            raise AddressError("point-to-point send addressed to broadcast")
        if env.to == self.party_id:
            raise AddressError("cannot send to self")
        if self._closed:
            raise ChannelClosed("endpoint closed")
        self._write(env.to, encode_envelope(env))
        if env.phase != Phase.OT_CONTROL:
            self.metrics.tick_message(self.party_id, env.phase)

    def broadcast(self, env: Envelope) -> None:
        if env.sender != self.party_id:
            raise ParameterError(
                f"endpoint {self.party_id} cannot send as {env.sender}"
            )
        if env.to != BROADCAST:
            raise AddressError("broadcast envelope must be addressed to BROADCAST")
        if self._closed:
            raise ChannelClosed("endpoint closed")
        frame = encode_envelope(env)
        for peer in self.peers:
            if peer != self.party_id:
                self._write(peer, frame)
        if env.phase != Phase.OT_CONTROL:
            self.metrics.tick_broadcast(self.party_id, env.phase)

    def receive(
        self,
        phase: Phase,
        from_: int | None = None,
        round_: int | None = None,
        timeout: float | None = None,
    ) -> Envelope:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cv:
            while True:
                if self._closed:
                    raise ChannelClosed("endpoint closed")
                for env in self._inbox:
                    if env.phase == phase and (from_ is None or env.sender == from_):
                        if round_ is not None and env.round != round_:
                            raise ProtocolDesync(
                                f"party {self.party_id} expected round {round_} "
                                f"from {env.sender}, got {env.round}"
                            )
                        self._inbox.remove(env)
                        if env.phase != Phase.OT_CONTROL:
                            self.metrics.tick_message(self.party_id, env.phase)
                        return env
                if deadline is not None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise ReceiveTimeout(
                            f"party {self.party_id} timed out waiting for {phase.name}"
                        )
                    self._cv.wait(remaining)
                else:
                    self._cv.wait()

    def finish(self) -> None:
        pass

    def close(self) -> None:
        with self._cv:
            if self._closed:
                return
            self._closed = True
            self._cv.notify_all()
        for sock in self._conns.values():
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                sock.close()
            except OSError:
                pass


def open_mesh(
    party_id: int,
    addresses: dict[int, tuple[str, int]],
    *,
    metrics: PhaseMetrics | None = None,
    listener: socket.socket | None = None,
    connect_timeout: float = 30.0,
) -> StreamEndpoint:
    """Join the full mesh as `party_id`; blocks until every link is up.

    `addresses` maps participant id (parties plus MEDIATOR) to
    (host, port).  A pre-bound `listener` may be passed when the caller
    picked an ephemeral port; it is consumed (closed once setup ends).
    Dials retry until `connect_timeout` so participants may start in any
    order.
    """
    if party_id not in addresses:
        raise ParameterError(f"party {party_id} missing from the address map")
    endpoint = StreamEndpoint(party_id, metrics)
    lower = [pid for pid in addresses if pid < party_id]
    higher = [pid for pid in addresses if pid > party_id]

    own_listener = listener
    if own_listener is None and higher:
        own_listener = socket.create_server(
            addresses[party_id], backlog=len(addresses)
        )
    try:
        deadline = time.monotonic() + connect_timeout
        for peer in sorted(lower):
            while True:
                try:
                    sock = socket.create_connection(addresses[peer], timeout=5.0)
                    break
                except OSError:
                    if time.monotonic() > deadline:
                        raise ChannelClosed(
                            f"could not reach {peer} at {addresses[peer]}"
                        ) from None
                    time.sleep(0.05)
            sock.sendall(struct.pack(">H", party_id))
            endpoint._attach(peer, sock)
        for _ in higher:
            own_listener.settimeout(max(deadline - time.monotonic(), 0.1))
            sock, _ = own_listener.accept()
            (peer,) = struct.unpack(">H", _read_exact(sock, 2))
            if peer not in addresses:
                raise AddressError(f"hello from unknown participant {peer}")
            endpoint._attach(peer, sock)
    except Exception:
        endpoint.close()
        if own_listener is not None:
            own_listener.close()
        raise
    if own_listener is not None:
        own_listener.close()
    endpoint._start_readers()
    return endpoint
