"""The decay broadcast family: single phase, long-phase, and delayed
fast-decay, plus an exact oracle for per-phase success probabilities.

A phase is ceil(log2 n) rounds; in round i (1-based) every sender transmits
with probability 2^-i.  A long-phase stacks ``long_phase_factor`` phases with
a frozen sender set, which upgrades the constant per-phase delivery guarantee
to a high-probability one.  Fast-decay is the forwarding variant: a newly
informed node starts transmitting on a pluggable probability schedule exactly
``delta`` rounds after its first reception, which keeps the wavefront timing
under control (a node at hop distance d is never informed before round
(d-1)*delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graphs import Graph
from .rng import Stream, purpose_id

_P_PHASE = purpose_id("decay/phase")
_P_FAST = purpose_id("decay/fast")


class Meter:
    """Protocol round accounting, also the RNG round-base source."""

    __slots__ = ("rounds",)

    def __init__(self):
        self.rounds = 0

    def add(self, rounds: int) -> int:
        base = self.rounds
        self.rounds += int(rounds)
        return base


@dataclass
class DecayConfig:
    long_phase_factor: int = 24
    alpha: int = 12


def phase_len(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2))))


def delay_for(n: int, diameter: int) -> int:
    """Default delay parameter: ceil(log2(n/D)), at least 1."""
    if diameter <= 0:
        return phase_len(n)
    return max(1, math.ceil(math.log2(n / diameter)))


def phase_probs(length: int) -> np.ndarray:
    return 2.0 ** -(np.arange(length, dtype=np.float64) + 1.0)


class ProbabilitySchedule:
    """Transmit probability as a function of rounds since a node went live.

    Implemented as a finite cycle: prob(offset) = cycle[offset % len(cycle)].
    The default is repeated basic decay, 2^-1 .. 2^-ceil(log2 n); any other
    sequence (e.g. an optimal broadcast sequence) can be dropped in as a
    longer cycle.
    """

    def __init__(self, cycle):
        self.cycle = np.asarray(cycle, dtype=np.float64)
        if self.cycle.size == 0 or (self.cycle <= 0).any() or (self.cycle > 1).any():
            raise ValueError("schedule probabilities must lie in (0, 1]")

    def prob(self, offset: int) -> float:
        return float(self.cycle[offset % len(self.cycle)])

    @classmethod
    def basic_decay(cls, n: int) -> "ProbabilitySchedule":
        return cls(phase_probs(phase_len(n)))


def _sender_arrays(graph: Graph, senders: dict):
    payload = np.full(graph.n, -1, np.int32)
    messages = []
    for node, msg in senders.items():
        payload[node] = len(messages)
        messages.append(msg)
    return payload, messages


def decay_phase(
    graph: Graph,
    senders: dict,
    stream: Stream,
    meter: Meter | None = None,
    rounds: int | None = None,
):
    """One decay phase; returns {node: (message, absolute_round)} of first
    receptions by any node that was listening when it received."""
    if not senders:
        raise ValueError("sender set must be nonempty")
    length = rounds if rounds is not None else phase_len(graph.n)
    base = meter.add(length) if meter is not None else 0
    payload, messages = _sender_arrays(graph, senders)
    listen = np.ones(graph.n, np.uint8)
    first_payload, first_round, _ = K.decay_fixed(
        graph.indptr,
        graph.indices,
        stream.key,
        _P_PHASE,
        payload,
        phase_probs(length),
        listen,
        base,
        *graph.split,
    )
    return {
        int(i): (messages[first_payload[i]], int(first_round[i]))
        for i in np.nonzero(first_payload >= 0)[0]
    }


def long_phase(
    graph: Graph,
    senders: dict,
    stream: Stream,
    config: DecayConfig | None = None,
    meter: Meter | None = None,
):
    """long_phase_factor stacked phases by the original sender set only.

    Newly informed nodes record their first reception but never forward
    until the long-phase is over (they are simply not senders here).
    """
    config = config or DecayConfig()
    if not senders:
        raise ValueError("sender set must be nonempty")
    length = phase_len(graph.n)
    total = config.long_phase_factor * length
    base = meter.add(total) if meter is not None else 0
    payload, messages = _sender_arrays(graph, senders)
    listen = np.ones(graph.n, np.uint8)
    probs = np.tile(phase_probs(length), config.long_phase_factor)
    first_payload, first_round, _ = K.decay_fixed(
        graph.indptr,
        graph.indices,
        stream.key,
        _P_PHASE,
        payload,
        probs,
        listen,
        base,
        *graph.split,
    )
    return {
        int(i): (messages[first_payload[i]], int(first_round[i]))
        for i in np.nonzero(first_payload >= 0)[0]
    }


def fast_decay_budget(n: int, distance: int, delta: int, alpha: int) -> int:
    return alpha * (distance * delta + phase_len(n) ** 2)


def fast_decay_broadcast(
    graph: Graph,
    sources: dict,
    delta: int,
    schedule: ProbabilitySchedule | None = None,
    total_rounds: int | None = None,
    stream: Stream | None = None,
    config: DecayConfig | None = None,
    meter: Meter | None = None,
):
    """Forwarding broadcast; returns ({node: (first_round, message)}, rounds).

    Sources transmit per the schedule from round 0; every other node starts
    forwarding exactly ``delta`` rounds after its first reception.  The
    returned dict covers informed non-source nodes; the round tally is the
    full budget even when simulation stops early because the informed set
    can no longer grow.
    """
    config = config or DecayConfig()
    if not sources:
        raise ValueError("source set must be nonempty")
    if delta < delay_for(graph.n, graph.diameter):
        raise ValueError(f"delta={delta} below ceil(log2(n/D))")
    schedule = schedule or ProbabilitySchedule.basic_decay(graph.n)
    budget = fast_decay_budget(graph.n, graph.diameter, delta, config.alpha)
    if total_rounds is None:
        total_rounds = budget
    elif total_rounds < budget:
        raise ValueError(f"round budget {total_rounds} below alpha*(D*delta + log^2 n) = {budget}")
    base = meter.add(total_rounds) if meter is not None else 0
    payload, messages = _sender_arrays(graph, sources)
    start = np.full(graph.n, 2**31 - 1, np.int32)
    start[payload >= 0] = 0
    informed = np.full(graph.n, -1, np.int32)
    recruiter = np.full(graph.n, -1, np.int32)
    join = (payload < 0).astype(np.uint8)
    K.fast_decay(
        graph.indptr,
        graph.indices,
        stream.key,
        _P_FAST,
        payload,
        start,
        informed,
        recruiter,
        schedule.cycle,
        delta,
        total_rounds,
        base,
        join,
        None,
        None,
        None,
        *graph.split,
        None,
        64,
    )
    result = {
        int(i): (int(informed[i]), messages[payload[i]])
        for i in np.nonzero(informed >= 0)[0]
    }
    return result, total_rounds


def phase_success_oracle(m: int, length: int) -> float:
    """Exact probability that a listener with m sending neighbors receives
    during one phase: 1 - prod_i (1 - m 2^-i (1-2^-i)^(m-1))."""
    if m <= 0:
        return 0.0
    miss = 1.0
    for i in range(1, length + 1):
        p = 2.0**-i
        miss *= 1.0 - m * p * (1.0 - p) ** (m - 1)
    return 1.0 - miss
