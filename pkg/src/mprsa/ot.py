"""1-out-of-m oblivious transfer realized by an ideal mediator.

The mediator is a separate participant on the shared transport: the
sender hands it the full message vector, the receiver hands it a choice
index, and it returns exactly the chosen message.  Privacy holds by
isolation - nothing derived from the choice ever reaches the sender and
no unchosen message ever reaches the receiver - rather than by
cryptographic hardness, which keeps protocol logic and accounting
testable on their own.  The three-call surface (init, send, choose) is
narrow enough to swap in a computational instantiation later.

Mediator traffic is tagged OT_CONTROL and excluded from the phase
communication counters.  Each session instead contributes exactly one
communication per endpoint (the load and the choose) in the phase it was
opened for, plus one initialization tick per endpoint.
"""

import struct
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    ArityError,
    ChannelClosed,
    MalformedMessage,
    OtStateError,
    ParameterError,
    ProtocolDesync,
    RoleError,
)
from .wire import (
    MEDIATOR,
    Envelope,
    Phase,
    decode_natural,
    decode_naturals,
    encode_natural,
    encode_naturals,
)

_LOAD = 1
_CHOOSE = 2
_RESULT = 3
_FAULT = 4

_MAX_PARTY = (1 << 12) - 1
_COUNTER_BITS = 36


class OtState(Enum):
    INITIALIZED = "initialized"
    LOADED = "loaded"
    DELIVERED = "delivered"


def _pack_session_id(sender: int, receiver: int, phase: Phase, counter: int) -> int:
    return (
        (sender << (12 + 4 + _COUNTER_BITS))
        | (receiver << (4 + _COUNTER_BITS))
        | (int(phase) << _COUNTER_BITS)
        | counter
    )


class OtContext:
    """Per-party OT bookkeeping bound to one transport endpoint.

    Session ids are counters namespaced by (sender, receiver, phase);
    both endpoints of a session derive the same id independently because
    they open sessions in the same protocol order.
    """

    def __init__(self, endpoint):
        self.endpoint = endpoint
        self.party = endpoint.party_id
        self._session_counters: dict[tuple[int, int, Phase], int] = {}
        self._product_counters: dict[tuple[int, int, Phase], int] = {}

    def _next_session(self, sender: int, receiver: int, phase: Phase) -> int:
        key = (sender, receiver, phase)
        counter = self._session_counters.get(key, 0)
        if counter >= 1 << _COUNTER_BITS:
            raise ParameterError("session counter exhausted")
        self._session_counters[key] = counter + 1
        return counter

    def next_product_tag(self, a_holder: int, b_holder: int, phase: Phase) -> int:
        """Round-tag namespace for one bitwise product.

        The low 14 bits of a session's round tag carry the bit index, the
        rest this per-(pair, phase) product counter, so concurrent and
        successive products never collide within the 32-bit round field.
        """
        key = (a_holder, b_holder, phase)
        counter = self._product_counters.get(key, 0)
        if counter >= 1 << 18:
            raise ParameterError("product counter exhausted")
        self._product_counters[key] = counter + 1
        return counter << 14


@dataclass(slots=True)
class OtSession:
    """One endpoint's view of a single transfer."""

    id: int
    arity: int
    sender: int
    receiver: int
    phase: Phase
    round: int
    ctx: OtContext = field(repr=False)
    state: OtState = OtState.INITIALIZED


def ot_init(
    ctx: OtContext,
    sender: int,
    receiver: int,
    arity: int,
    phase: Phase,
    round_: int = 0,
) -> OtSession:
    """Open a fresh session; ticks the calling party's init counter.

    Both endpoints call this with identical arguments, so one logical
    initialization ticks each party's counter exactly once.
    """
    if sender == receiver:
        raise ParameterError("sender and receiver must differ")
    if arity < 2:
        raise ParameterError(f"arity must be >= 2, got {arity}")
    if not (1 <= sender <= _MAX_PARTY and 1 <= receiver <= _MAX_PARTY):
        raise ParameterError("party ids must fit the session-id namespace")
    if ctx.party not in (sender, receiver):
        raise RoleError(f"party {ctx.party} is neither endpoint of this session")
    counter = ctx._next_session(sender, receiver, phase)
    ctx.endpoint.metrics.tick_ot_init(ctx.party, phase)
    return OtSession(
        id=_pack_session_id(sender, receiver, phase, counter),
        arity=arity,
        sender=sender,
        receiver=receiver,
        phase=phase,
        round=round_,
        ctx=ctx,
    )


def ot_send(session: OtSession, messages: list[int]) -> None:
    """Load the sender's message vector into the mediator."""
    ctx = session.ctx
    if ctx.party != session.sender:
        raise RoleError(f"party {ctx.party} is not the sender of this session")
    if session.state is not OtState.INITIALIZED:
        raise OtStateError(f"cannot load messages in state {session.state.value}")
    if len(messages) != session.arity:
        raise ArityError(f"expected {session.arity} messages, got {len(messages)}")
    payload = (
        struct.pack(">BQH", _LOAD, session.id, session.arity)
        + encode_naturals(messages)
    )
    ctx.endpoint.send(
        Envelope(ctx.party, MEDIATOR, Phase.OT_CONTROL, session.round, payload)
    )
    session.state = OtState.LOADED
    ctx.endpoint.metrics.tick_message(ctx.party, session.phase)


def ot_choose(session: OtSession, choice: int) -> int:
    """Retrieve message number `choice` (1-based); one-shot per session."""
    ctx = session.ctx
    if ctx.party != session.receiver:
        raise RoleError(f"party {ctx.party} is not the receiver of this session")
    if session.state is OtState.DELIVERED:
        raise OtStateError("session already delivered")
    if not 1 <= choice <= session.arity:
        raise ParameterError(f"choice {choice} outside [1, {session.arity}]")
    payload = struct.pack(">BQI", _CHOOSE, session.id, choice)
    ctx.endpoint.send(
        Envelope(ctx.party, MEDIATOR, Phase.OT_CONTROL, session.round, payload)
    )
    ctx.endpoint.metrics.tick_message(ctx.party, session.phase)
    reply = ctx.endpoint.receive(Phase.OT_CONTROL, from_=MEDIATOR, round_=session.round)
    kind, sid = struct.unpack_from(">BQ", reply.payload)
    if sid != session.id:
        raise ProtocolDesync(
            f"mediator answered session {sid:#x}, expected {session.id:#x}"
        )
    if kind == _FAULT:
        raise ProtocolDesync("mediator rejected the session; peers are out of step")
    if kind != _RESULT:
        raise MalformedMessage(f"unexpected mediator reply kind {kind}")
    value, _ = decode_natural(reply.payload, struct.calcsize(">BQ"))
    session.state = OtState.DELIVERED
    return value


def run_mediator(endpoint) -> None:
    """Serve OT sessions until the transport closes.

    Loads and chooses rendezvous here; whichever arrives first waits for
    the other.  A load and a choose that carry the same session id but
    different round tags mean the endpoints disagree about the protocol
    position, and the receiver gets a fault instead of a value.
    """
    loaded: dict[int, tuple[int, int, list[int]]] = {}
    pending: dict[int, tuple[int, int, int]] = {}
    while True:
        try:
            env = endpoint.receive(Phase.OT_CONTROL)
        except ChannelClosed:
            return
        kind = env.payload[0]
        if kind == _LOAD:
            _, sid, arity = struct.unpack_from(">BQH", env.payload)
            if sid in loaded:
                raise MalformedMessage(f"duplicate load for session {sid:#x}")
            messages, _ = decode_naturals(
                env.payload, arity, struct.calcsize(">BQH")
            )
            if sid in pending:
                receiver, choice, choose_round = pending.pop(sid)
                _answer(endpoint, sid, env.round, choose_round, arity, messages,
                        receiver, choice)
            else:
                loaded[sid] = (env.round, arity, messages)
        elif kind == _CHOOSE:
            _, sid, choice = struct.unpack_from(">BQI", env.payload)
            if sid in pending:
                raise MalformedMessage(f"duplicate choose for session {sid:#x}")
            if sid in loaded:
                load_round, arity, messages = loaded.pop(sid)
                _answer(endpoint, sid, load_round, env.round, arity, messages,
                        env.sender, choice)
            else:
                pending[sid] = (env.sender, choice, env.round)
        else:
            raise MalformedMessage(f"unexpected mediator request kind {kind}")


def _answer(endpoint, sid, load_round, choose_round, arity, messages, receiver, choice):
    if load_round != choose_round or not 1 <= choice <= arity:
        payload = struct.pack(">BQ", _FAULT, sid)
    else:
        payload = struct.pack(">BQ", _RESULT, sid) + encode_natural(
            messages[choice - 1]
        )
    endpoint.send(
        Envelope(MEDIATOR, receiver, Phase.OT_CONTROL, choose_round, payload)
    )
