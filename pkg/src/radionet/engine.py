"""Synchronous-round simulation engine for the two collision models.

A round is a pure function of the full action vector: every reception is
computed simultaneously, so node ordering never matters.  In the packet model
(no collision detection) a listener receives iff exactly one neighbor
transmits; two or more transmissions are indistinguishable from silence.  In
the beep model a listener only learns whether at least one neighbor beeped.
Transmitting/beeping nodes never perceive anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from . import _kernels as K
from .graphs import Graph
from .rng import Stream, purpose_id


class Model(str, Enum):
    NOCD = "nocd"
    BEEP = "beep"


@dataclass(frozen=True)
class Transmit:
    packet: str  # bit string, e.g. "10110"

    def __post_init__(self):
        if self.packet.strip("01") != "":
            raise ValueError(f"packet must be a bit string, got {self.packet!r}")


@dataclass(frozen=True)
class Received:
    packet: str


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


LISTEN = _Sentinel("LISTEN")
BEEP = _Sentinel("BEEP")
NOTHING = _Sentinel("NOTHING")
QUIET = _Sentinel("QUIET")
HEARD_BEEP = _Sentinel("HEARD_BEEP")


class ConfigurationError(ValueError):
    """Action vector does not match the graph or model constraints."""


def max_packet_bits(n: int, factor: int = 8) -> int:
    """Packet size budget: factor * ceil(log2 n) bits (at least factor)."""
    return factor * max(1, math.ceil(math.log2(max(n, 2))))


def step(graph: Graph, model: Model, actions: Sequence[Any], packet_bits: int | None = None):
    """One synchronous round; returns one reception per node."""
    n = graph.n
    if len(actions) != n:
        raise ConfigurationError(f"got {len(actions)} actions for {n} nodes")
    if model == Model.NOCD:
        transmit = np.zeros(n, np.uint8)
        packets: list[str | None] = [None] * n
        for i, act in enumerate(actions):
            if isinstance(act, Transmit):
                if packet_bits is not None and len(act.packet) > packet_bits:
                    raise ConfigurationError(
                        f"packet of {len(act.packet)} bits exceeds bound {packet_bits}"
                    )
                transmit[i] = 1
                packets[i] = act.packet
            elif act is not LISTEN:
                raise ConfigurationError(f"invalid NOCD action at node {i}: {act!r}")
        sender = K.nocd_round(graph.indptr, graph.indices, transmit, *graph.split)
        return [Received(packets[s]) if s >= 0 else NOTHING for s in sender]
    beep = np.zeros(n, np.uint8)
    for i, act in enumerate(actions):
        if act is BEEP:
            beep[i] = 1
        elif act is not LISTEN:
            raise ConfigurationError(f"invalid beep-model action at node {i}: {act!r}")
    heard = K.beep_round(graph.indptr, graph.indices, beep)
    return [HEARD_BEEP if h else QUIET for h in heard]


@dataclass
class Trace:
    """Full record of a protocol run."""

    rounds: int
    timed_out: bool
    actions: list  # per round: list of actions
    receptions: list  # per round: list of receptions
    outputs: list = field(default_factory=list)


_P_PROTO = purpose_id("protocol-coin")


class _Coin:
    """Per-(node, round) randomness handle passed to protocol callbacks."""

    __slots__ = ("_stream", "_node", "_round")

    def __init__(self, stream, node, rnd):
        self._stream = stream
        self._node = node
        self._round = rnd

    def uniform(self, purpose: str = "") -> float:
        tag = _P_PROTO if not purpose else purpose_id("protocol-coin/" + purpose)
        return self._stream.uniform(tag, self._round, self._node)


def run_protocol(
    graph: Graph,
    model: Model,
    protocol,
    stream: Stream,
    round_limit: int,
    packet_bits: int | None = None,
) -> Trace:
    """Drive a per-node state machine until every node finishes or the limit.

    ``protocol`` provides initial_state(node, n), action(node, state, rnd,
    coin), receive(node, state, reception, rnd, coin) -> state,
    finished(state) and output(state).  Deterministic for a fixed stream.
    """
    n = graph.n
    states = [protocol.initial_state(i, n) for i in range(n)]
    all_actions, all_receptions = [], []
    rnd = 0
    timed_out = True
    while rnd < round_limit:
        if all(protocol.finished(s) for s in states):
            timed_out = False
            break
        acts = [
            protocol.action(i, states[i], rnd, _Coin(stream, i, rnd)) if not protocol.finished(states[i]) else LISTEN
            for i in range(n)
        ]
        recs = step(graph, model, acts, packet_bits)
        states = [
            protocol.receive(i, states[i], recs[i], rnd, _Coin(stream, i, rnd))
            if not protocol.finished(states[i])
            else states[i]
            for i in range(n)
        ]
        all_actions.append(acts)
        all_receptions.append(recs)
        rnd += 1
    else:
        timed_out = not all(protocol.finished(s) for s in states)
    return Trace(
        rounds=len(all_actions),
        timed_out=timed_out,
        actions=all_actions,
        receptions=all_receptions,
        outputs=[protocol.output(s) for s in states],
    )
