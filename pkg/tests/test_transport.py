import threading
import time

import pytest

from mprsa import (
    AddressError,
    ChannelClosed,
    DeadlockError,
    Envelope,
    InMemoryNetwork,
    ParameterError,
    Phase,
    ProtocolDesync,
    ReceiveTimeout,
)
from mprsa.wire import BROADCAST, MEDIATOR


def simple_env(sender, to, payload=b"", phase=Phase.TRIAL_DIV, round_=0):
    return Envelope(sender, to, phase, round_, payload)


class TestPointToPoint:
    def test_send_receive_byte_identical(self):
        net = InMemoryNetwork(2)
        net.endpoint(1).send(simple_env(1, 2, b"\x00\x01\xff payload"))
        env = net.endpoint(2).receive(Phase.TRIAL_DIV)
        assert env.payload == b"\x00\x01\xff payload"
        assert env.sender == 1 and env.to == 2

    def test_fifo_per_pair(self):
        net = InMemoryNetwork(2)
        a = net.endpoint(1)
        for i in range(10):
            a.send(simple_env(1, 2, bytes([i]), round_=i))
        b = net.endpoint(2)
        got = [b.receive(Phase.TRIAL_DIV).payload[0] for _ in range(10)]
        assert got == list(range(10))

    def test_counter_delta_one_per_side(self):
        net = InMemoryNetwork(2)
        net.endpoint(1).send(simple_env(1, 2, b"x"))
        assert net.metrics.snapshot(1)[Phase.TRIAL_DIV].messages == 1
        # the destination is ticked at delivery, not at send
        assert net.metrics.snapshot(2)[Phase.TRIAL_DIV].messages == 0
        net.endpoint(2).receive(Phase.TRIAL_DIV)
        assert net.metrics.snapshot(2)[Phase.TRIAL_DIV].messages == 1

    def test_out_of_phase_message_retained(self):
        net = InMemoryNetwork(2)
        a, b = net.endpoint(1), net.endpoint(2)
        a.send(simple_env(1, 2, b"mul", phase=Phase.DIST_MUL))
        a.send(simple_env(1, 2, b"trial", phase=Phase.TRIAL_DIV))
        assert b.receive(Phase.TRIAL_DIV).payload == b"trial"
        assert b.receive(Phase.DIST_MUL).payload == b"mul"

    def test_selective_by_sender(self):
        net = InMemoryNetwork(4)
        net.endpoint(2).send(simple_env(2, 1, b"from2"))
        net.endpoint(3).send(simple_env(3, 1, b"from3"))
        ep = net.endpoint(1)
        assert ep.receive(Phase.TRIAL_DIV, from_=3).payload == b"from3"
        assert ep.receive(Phase.TRIAL_DIV, from_=2).payload == b"from2"

    def test_unknown_destination(self):
        net = InMemoryNetwork(2)
        with pytest.raises(AddressError):
            net.endpoint(1).send(simple_env(1, 9))

    def test_self_send_rejected(self):
        net = InMemoryNetwork(2)
        with pytest.raises(AddressError):
            net.endpoint(1).send(simple_env(1, 1))

    def test_spoofed_sender_rejected(self):
        net = InMemoryNetwork(2)
        with pytest.raises(ParameterError):
            net.endpoint(1).send(simple_env(2, 1))

    def test_round_mismatch_is_desync(self):
        net = InMemoryNetwork(2)
        net.endpoint(1).send(simple_env(1, 2, round_=5))
        with pytest.raises(ProtocolDesync):
            net.endpoint(2).receive(Phase.TRIAL_DIV, from_=1, round_=6)


class TestBroadcast:
    def test_all_peers_receive(self):
        net = InMemoryNetwork(4)
        net.endpoint(2).broadcast(simple_env(2, BROADCAST, b"hello"))
        for peer in (1, 3, 4):
            assert net.endpoint(peer).receive(Phase.TRIAL_DIV).payload == b"hello"

    def test_sender_counter_delta_is_one(self):
        net = InMemoryNetwork(4)
        net.endpoint(2).broadcast(simple_env(2, BROADCAST, b"x"))
        counts = net.metrics.snapshot(2)[Phase.TRIAL_DIV]
        assert counts.messages == 1
        assert counts.broadcasts == 1

    def test_no_self_delivery(self):
        net = InMemoryNetwork(2)
        net.endpoint(1).broadcast(simple_env(1, BROADCAST, b"x"))
        with pytest.raises(ReceiveTimeout):
            net.endpoint(1).receive(Phase.TRIAL_DIV, timeout=0.05)

    def test_mediator_not_a_broadcast_target(self):
        net = InMemoryNetwork(2)
        net.endpoint(1).broadcast(simple_env(1, BROADCAST, b"x"))
        net.endpoint(2).receive(Phase.TRIAL_DIV)
        with pytest.raises(ReceiveTimeout):
            net.endpoint(MEDIATOR).receive(Phase.TRIAL_DIV, timeout=0.05)

    def test_wrong_address_rejected(self):
        net = InMemoryNetwork(2)
        with pytest.raises(AddressError):
            net.endpoint(1).broadcast(simple_env(1, 2))
        with pytest.raises(AddressError):
            net.endpoint(1).send(simple_env(1, BROADCAST))


class TestBlockingAndClose:
    def test_receive_blocks_until_send(self):
        net = InMemoryNetwork(2)
        got = []

        def waiter():
            got.append(net.endpoint(2).receive(Phase.TRIAL_DIV).payload)

        thread = threading.Thread(target=waiter, daemon=True)
        thread.start()
        time.sleep(0.05)
        assert not got
        net.endpoint(1).send(simple_env(1, 2, b"late"))
        thread.join(5)
        assert got == [b"late"]

    def test_close_unblocks_with_channel_closed(self):
        net = InMemoryNetwork(2)
        errors = []

        def waiter():
            try:
                net.endpoint(2).receive(Phase.TRIAL_DIV)
            except ChannelClosed as exc:
                errors.append(exc)

        thread = threading.Thread(target=waiter, daemon=True)
        thread.start()
        time.sleep(0.05)
        net.close()
        thread.join(5)
        assert len(errors) == 1

    def test_randomized_interleavings_no_loss_no_corruption(self):
        net = InMemoryNetwork(8)
        senders = [1, 2, 3, 4, 5, 6, 7]
        per_sender = 100

        def pump(sender):
            for i in range(per_sender):
                net.endpoint(sender).send(
                    simple_env(sender, 8, bytes([sender, i % 256]), round_=i)
                )

        threads = [threading.Thread(target=pump, args=(s,), daemon=True) for s in senders]
        for t in threads:
            t.start()
        inbox = net.endpoint(8)
        seen = {s: [] for s in senders}
        for _ in range(per_sender * len(senders)):
            env = inbox.receive(Phase.TRIAL_DIV)
            seen[env.sender].append(env)
        for t in threads:
            t.join(5)
        for sender in senders:
            rounds = [env.round for env in seen[sender]]
            assert rounds == list(range(per_sender))  # per-pair FIFO, no loss
            assert all(env.payload == bytes([sender, env.round % 256]) for env in seen[sender])


class TestLockstep:
    def test_two_runs_have_identical_transcripts(self):
        def run_once():
            net = InMemoryNetwork(2, lockstep=True, record_transcripts=True)

            def party1(ep):
                ep.send(simple_env(1, 2, b"ping"))
                return ep.receive(Phase.TRIAL_DIV, from_=2).payload

            def party2(ep):
                env = ep.receive(Phase.TRIAL_DIV, from_=1)
                ep.send(simple_env(2, 1, b"pong-" + env.payload))
                return env.payload

            from mprsa import run_parties

            results = run_parties(net, {1: party1, 2: party2}, timeout=30)
            return results, {p: net.transcript(p) for p in (1, 2)}

        (res_a, tr_a), (res_b, tr_b) = run_once(), run_once()
        assert res_a == res_b == {1: b"pong-ping", 2: b"ping"}
        assert tr_a == tr_b

    def test_deadlock_detected(self):
        from mprsa import run_parties

        net = InMemoryNetwork(2, lockstep=True)

        def stuck(ep):
            ep.receive(Phase.TRIAL_DIV)

        with pytest.raises(DeadlockError):
            run_parties(net, {1: stuck, 2: stuck}, timeout=30)

    def test_timeout_rejected_in_lockstep(self):
        net = InMemoryNetwork(2, lockstep=True)
        with pytest.raises(ParameterError):
            net.endpoint(1).receive(Phase.TRIAL_DIV, timeout=1.0)
