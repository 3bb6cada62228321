"""Fast trial division of the hidden candidate sums by small primes.

The n-party path is a tree reduction: in each of t = log2(n) turns half
the active parties send their residue accumulators to partners picked by
a shared hash, so after t turns one party holds sum(p_i) mod beta and
broadcasts the verdict.  Residues travel in the clear between paired
parties - an accepted trade-off, since pairings are reshuffled by the
hash for every prime and every turn.

The original two-party variant hides even the residue behind a
1-out-of-beta transfer; it is kept as a subroutine and as a test oracle
for the n = 2 case.
"""

from dataclasses import dataclass
from random import Random

from .errors import ParameterError
from .hashing import hash_to_range
from .ot import OtContext, ot_choose, ot_init, ot_send
from .shares import ProtocolConfig
from .wire import BROADCAST, Envelope, Phase, decode_natural, encode_natural

# Round-tag layout within the trial-division phase: one stride per
# (prime, candidate) test; slot 0 carries the verdict broadcast, slots
# 1..t the per-turn residue messages.
TEST_ROUND_STRIDE = 8

_ASSIGN_SCAN_CAP = 1 << 16


@dataclass(frozen=True, slots=True)
class PairingPlan:
    """Who sends to whom in one turn of one prime's reduction tree."""

    turn: int
    survivors: tuple[int, ...]
    mapping: dict[int, int]  # non-survivor -> survivor

    def sender_to(self, survivor: int) -> int:
        for sender, target in self.mapping.items():
            if target == survivor:
                return sender
        raise ParameterError(f"{survivor} receives nothing in turn {self.turn}")


def _pairing_digest_input(
    config: ProtocolConfig, beta: int, turn: int, j: int, attempt: int | None
) -> bytes:
    data = str(beta).encode() + config.seed + b"|" + str(turn).encode() + b"|" + str(j).encode()
    if attempt is not None:
        data += b"|" + str(attempt).encode()
    return data


def build_pairing(
    config: ProtocolConfig,
    beta: int,
    turn: int,
    prior_survivors,
    *,
    attempt: int | None = None,
) -> PairingPlan:
    """Deterministically pair off the non-surviving half against the
    surviving half; identical at every party with no communication.

    Survivors are the canonically smallest half of the prior survivor
    set.  Each non-survivor in order takes the first not-yet-assigned
    slot produced by hashing (beta, seed, turn, j) for j = 0, 1, ...;
    scanning a shared pseudo-random sequence and skipping taken slots
    always ends in a bijection.
    """
    prior = sorted(prior_survivors)
    if turn < 1 or turn > config.tree_depth:
        raise ParameterError(f"turn {turn} outside [1, {config.tree_depth}]")
    if len(prior) != 1 << (config.tree_depth - turn + 1):
        raise ParameterError(
            f"turn {turn} expects {1 << (config.tree_depth - turn + 1)} prior "
            f"survivors, got {len(prior)}"
        )
    half = len(prior) // 2
    survivors = tuple(prior[:half])
    mapping: dict[int, int] = {}
    assigned: set[int] = set()
    for dropped in prior[half:]:
        j = 0
        while True:
            slot = hash_to_range(
                config.hash_name,
                _pairing_digest_input(config, beta, turn, j, attempt),
                half,
            )
            if slot not in assigned:
                break
            j += 1
            if j > _ASSIGN_SCAN_CAP:
                raise ParameterError("hash sequence failed to cover the survivor set")
        assigned.add(slot)
        mapping[dropped] = survivors[slot - 1]
    return PairingPlan(turn=turn, survivors=survivors, mapping=mapping)


def reduction_schedule(
    config: ProtocolConfig, beta: int, *, attempt: int | None = None
) -> list[PairingPlan]:
    """All t pairing plans for one prime, applied turn by turn."""
    plans = []
    alive = tuple(range(1, config.parties + 1))
    for turn in range(1, config.tree_depth + 1):
        plan = build_pairing(config, beta, turn, alive, attempt=attempt)
        plans.append(plan)
        alive = plan.survivors
    return plans


def fold_residues(plans: list[PairingPlan], residues: dict[int, int], beta: int) -> int:
    """Pure twin of the networked reduction: apply every turn's merges and
    return the final party's accumulator."""
    values = {party: residue % beta for party, residue in residues.items()}
    for plan in plans:
        for dropped, target in plan.mapping.items():
            values[target] = (values[target] + values[dropped]) % beta
    (final,) = plans[-1].survivors if plans else (min(values),)
    return values[final]


def tree_divisibility_test(
    config: ProtocolConfig,
    beta: int,
    my_share_residue: int,
    endpoint,
    *,
    test_seq: int = 0,
    attempt: int | None = None,
) -> bool:
    """Run one prime's reduction; True means the candidate survives
    (the hidden sum is not divisible by beta).

    Every party calls this with its own share residue and an agreed
    test_seq so concurrent tests keep distinct round tags.
    """
    me = endpoint.party_id
    base = test_seq * TEST_ROUND_STRIDE
    value = my_share_residue % beta
    plans = reduction_schedule(config, beta, attempt=attempt)
    final = plans[-1].survivors[0]
    eliminated = False
    for plan in plans:
        if me in plan.mapping:
            endpoint.send(
                Envelope(
                    me,
                    plan.mapping[me],
                    Phase.TRIAL_DIV,
                    base + plan.turn,
                    encode_natural(value),
                )
            )
            eliminated = True
            break
        env = endpoint.receive(
            Phase.TRIAL_DIV, from_=plan.sender_to(me), round_=base + plan.turn
        )
        incoming, _ = decode_natural(env.payload)
        value = (value + incoming) % beta
    if not eliminated:
        survives = value != 0
        endpoint.broadcast(
            Envelope(
                me,
                BROADCAST,
                Phase.TRIAL_DIV,
                base,
                b"\x01" if survives else b"\x00",
            )
        )
        return survives
    env = endpoint.receive(Phase.TRIAL_DIV, from_=final, round_=base)
    return env.payload == b"\x01"


def beta_test_sender(
    beta: int,
    share: int,
    bits: int,
    ot: OtContext,
    endpoint,
    peer: int,
    rng: Random,
    *,
    test_seq: int = 0,
) -> bool:
    """Vector-offering side of the two-party divisibility check."""
    base = test_seq * TEST_ROUND_STRIDE
    me = endpoint.party_id
    session = ot_init(ot, me, peer, beta, Phase.TRIAL_DIV, round_=base)
    pads = [rng.randrange(1 << bits) for _ in range(beta)]
    ot_send(session, pads)
    endpoint.send(
        Envelope(
            me, peer, Phase.TRIAL_DIV, base + 1, encode_natural(pads[share % beta])
        )
    )
    env = endpoint.receive(Phase.TRIAL_DIV, from_=peer, round_=base + 2)
    return env.payload == b"\x01"


def beta_test_receiver(
    beta: int,
    share: int,
    ot: OtContext,
    endpoint,
    peer: int,
    *,
    test_seq: int = 0,
) -> bool:
    """Choosing side; it compares the pads and announces the verdict.

    The verdict is wrong only when two independently drawn pads collide,
    i.e. with probability below beta * 2**-bits, and only toward
    rejection.
    """
    base = test_seq * TEST_ROUND_STRIDE
    me = endpoint.party_id
    session = ot_init(ot, peer, me, beta, Phase.TRIAL_DIV, round_=base)
    mine = ot_choose(session, (-share) % beta + 1)
    env = endpoint.receive(Phase.TRIAL_DIV, from_=peer, round_=base + 1)
    theirs, _ = decode_natural(env.payload)
    survives = mine != theirs
    endpoint.send(
        Envelope(
            me,
            peer,
            Phase.TRIAL_DIV,
            base + 2,
            b"\x01" if survives else b"\x00",
        )
    )
    return survives


def two_party_beta_test(
    beta: int,
    p1: int,
    p2: int,
    network,
    *,
    bits: int = 64,
    rng: Random | None = None,
    test_seq: int = 0,
) -> bool:
    """Run both roles of the two-party check over `network` (whose OT
    mediator must be serving); True means beta does not divide p1 + p2.

    This is the harness form used for n = 2 compatibility checks and as
    an oracle; inside the protocol each role runs in its own party.
    """
    import threading

    rng = rng if rng is not None else Random(0)
    ep1, ep2 = network.endpoint(1), network.endpoint(2)
    results: dict[int, bool] = {}
    errors: list[BaseException] = []

    def responder():
        try:
            results[2] = beta_test_receiver(
                beta, p2, OtContext(ep2), ep2, 1, test_seq=test_seq
            )
        except BaseException as exc:  # noqa: BLE001 - harness surfaces everything
            errors.append(exc)
            network.close()

    worker = threading.Thread(target=responder, daemon=True)
    worker.start()
    try:
        results[1] = beta_test_sender(
            beta, p1, bits, OtContext(ep1), ep1, 2, rng, test_seq=test_seq
        )
    except BaseException:
        network.close()
        worker.join(timeout=10)
        raise
    worker.join(timeout=60)
    if errors:
        raise errors[0]
    if results[1] != results[2]:
        raise ParameterError("two-party verdicts diverged")
    return results[1]
