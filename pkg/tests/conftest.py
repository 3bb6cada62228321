"""Shared helpers: thread harness wrappers around the in-memory network."""

import random

import pytest

from mprsa import InMemoryNetwork, run_parties


def run_on_fresh_network(parties, fns, *, timeout=120.0, lockstep=False,
                         record_transcripts=False):
    """Spin up a network + mediator, run one callable per party, return
    ({party: result}, network)."""
    network = InMemoryNetwork(
        parties, lockstep=lockstep, record_transcripts=record_transcripts
    )
    results = run_parties(network, fns, timeout=timeout)
    return results, network


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


class ScriptedRandom:
    """Returns scripted randrange values first, then falls back to a
    seeded stream; used to rig specific share draws."""

    def __init__(self, scripted, seed=0):
        self._scripted = list(scripted)
        self._fallback = random.Random(seed)

    def randrange(self, *args, **kwargs):
        if self._scripted:
            return self._scripted.pop(0)
        return self._fallback.randrange(*args, **kwargs)

    def __getattr__(self, name):
        return getattr(self._fallback, name)
