import random

import pytest

from mprsa import Envelope, MalformedMessage, ParameterError, PayloadTooLarge, Phase
from mprsa.wire import (
    MAX_PAYLOAD,
    decode_envelope,
    decode_natural,
    decode_naturals,
    encode_envelope,
    encode_natural,
    encode_naturals,
)


class TestNaturalEncoding:
    def test_frozen_bytes(self):
        assert encode_natural(0) == bytes.fromhex("00000000")
        assert encode_natural(255) == bytes.fromhex("00000001ff")
        assert encode_natural(256) == bytes.fromhex("000000020100")

    def test_roundtrip(self):
        rng = random.Random(1)
        for _ in range(200):
            value = rng.randrange(0, 1 << rng.randrange(1, 300))
            decoded, offset = decode_natural(encode_natural(value))
            assert decoded == value
            assert offset == len(encode_natural(value))

    def test_sequence_roundtrip(self):
        values = [0, 1, 2**64, 3, 2**200 - 1]
        buf = encode_naturals(values)
        decoded, offset = decode_naturals(buf, len(values))
        assert decoded == values
        assert offset == len(buf)

    def test_negative_rejected(self):
        with pytest.raises(ParameterError):
            encode_natural(-1)

    def test_truncated(self):
        with pytest.raises(MalformedMessage):
            decode_natural(b"\x00\x00\x00\x05ab")


class TestEnvelopeFraming:
    def test_frozen_frame(self):
        env = Envelope(sender=1, to=2, phase=Phase.TRIAL_DIV, round=7, payload=b"\x2a")
        assert encode_envelope(env) == bytes.fromhex("0000000a 01 0001 0002 00000007 2a".replace(" ", ""))

    def test_roundtrip(self):
        rng = random.Random(2)
        for _ in range(100):
            env = Envelope(
                sender=rng.randrange(1, 1 << 16),
                to=rng.randrange(0, 1 << 16),
                phase=Phase(rng.randrange(1, 6)),
                round=rng.randrange(0, 1 << 32),
                payload=rng.randbytes(rng.randrange(0, 64)),
            )
            assert decode_envelope(encode_envelope(env)) == env

    def test_payload_cap(self):
        env = Envelope(1, 2, Phase.DIST_MUL, 0, b"x" * (MAX_PAYLOAD + 1))
        with pytest.raises(PayloadTooLarge):
            encode_envelope(env)

    def test_bad_phase_tag(self):
        frame = bytearray(encode_envelope(Envelope(1, 2, Phase.TRIAL_DIV, 0, b"")))
        frame[4] = 99
        with pytest.raises(MalformedMessage):
            decode_envelope(bytes(frame))

    def test_length_mismatch(self):
        frame = encode_envelope(Envelope(1, 2, Phase.TRIAL_DIV, 0, b"abc"))
        with pytest.raises(MalformedMessage):
            decode_envelope(frame[:-1])
