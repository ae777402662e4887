"""Cluster communication actions and the sparsified candidate overlay.

Three primitives run on top of a refined clustering:

* cluster_cast Up: each candidate floods its message through the internal
  nodes of its own cluster (boundary and unclustered nodes never transmit);
* cluster_cast Down: internal nodes race messages toward their candidate,
  which keeps the first one it hears;
* intercommunicate: clusters activate unanimously at random, and messages
  hop over the gap (at most 3) between internal nodes of nearby clusters
  through boundary/unclustered relays.

On top of these the overlay is built: every candidate adopts the first
foreign cluster it hears about as its parent, clusters learn which clusters
chose them, and repeated "tell me something new" turns give each candidate
up to five known children.  The modified elimination rule then removes every
candidate that has degree under five and saw a lexicographically greater
(degree, ID) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cluster import Clustering, Status
from .config import Constants
from .decay import Meter, ProbabilitySchedule, delay_for, phase_len
from .graphs import Graph
from .rng import Stream, purpose_id

_P_CAST = purpose_id("overlay/cast")
_P_IC_TX = purpose_id("overlay/intercom-tx")
_P_IC_COIN = purpose_id("overlay/intercom-coin")

_NEVER = np.int32(2**31 - 1)

UP = "up"
DOWN = "down"


def cast_budget(n: int, radius: int, diameter: int, alpha: int) -> int:
    delta = delay_for(n, diameter)
    return alpha * (max(radius, 1) * delta + phase_len(n) ** 2)


def cluster_cast(
    clustering: Clustering,
    direction: str,
    messages: dict,
    radius: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
):
    """Run one Up or Down action for all clusters simultaneously.

    Up: ``messages`` maps cluster ordinal -> message; returns (per_node dict
    of delivered message for internal nodes, rounds).  Down: ``messages``
    maps internal node -> message; returns ({cluster ordinal: first message
    received by its candidate}, rounds).  Only internal nodes ever transmit.
    """
    g = clustering.graph
    n = g.n
    total = cast_budget(n, radius, g.diameter, constants.alpha)
    base = meter.add(total)
    if not messages:
        return {}, total
    delta = delay_for(n, g.diameter)
    schedule = ProbabilitySchedule.basic_decay(n).cycle
    internal = clustering.internal_mask()
    cand_mask = np.zeros(n, bool)
    cand_mask[clustering.candidates] = True

    payload = np.full(n, -1, np.int32)
    table = []
    payload_cluster = []
    if direction == UP:
        for ordinal, msg in messages.items():
            node = clustering.candidates[ordinal]
            payload[node] = len(table)
            table.append(msg)
            payload_cluster.append(ordinal)
        join = internal & (payload < 0)
        forward = internal
    elif direction == DOWN:
        for node, msg in messages.items():
            if not internal[node]:
                raise ValueError(f"down-cast sender {node} is not internal")
            payload[node] = len(table)
            table.append(msg)
            payload_cluster.append(int(clustering.cluster[node]))
        join = internal & (payload < 0)
        forward = internal & ~cand_mask
    else:
        raise ValueError(f"unknown direction {direction!r}")

    payload_cluster = np.asarray(payload_cluster, np.int32)
    accept = np.where(internal, clustering.cluster, -1).astype(np.int32)
    start = np.where(payload >= 0, 0, _NEVER).astype(np.int32)
    informed = np.full(n, -1, np.int32)
    recruiter = np.full(n, -1, np.int32)
    K.fast_decay(
        g.indptr, g.indices, stream.key, _P_CAST,
        payload, start, informed, recruiter,
        schedule, delta, total, base,
        join.astype(np.uint8), accept, payload_cluster,
        forward.astype(np.uint8),
        *g.split, None, 64,
    )
    if direction == UP:
        got = np.nonzero((informed >= 0) | ((payload >= 0) & cand_mask))[0]
        return {int(v): table[payload[v]] for v in got if payload[v] >= 0}, total
    result = {}
    for ordinal, node in enumerate(clustering.candidates):
        if payload[node] >= 0 and (informed[node] >= 0 or node in messages):
            result[ordinal] = table[payload[node]]
    return result, total


def intercommunicate(
    clustering: Clustering,
    messages: dict,
    constants: Constants,
    stream: Stream,
    meter: Meter,
):
    """Deliver each cluster's message to internal nodes of clusters within
    distance 3; returns ({internal node: [foreign messages]}, rounds)."""
    g = clustering.graph
    n = g.n
    length = phase_len(n)
    epochs = max(1, round(constants.intercom_epoch_factor * length * length))
    total = epochs * 3 * length
    base = meter.add(total)
    if not messages:
        return {}, total
    table = []
    payload_cluster = []
    cluster_msg = np.full(clustering.k, -1, np.int32)
    for ordinal, msg in messages.items():
        cluster_msg[ordinal] = len(table)
        table.append(msg)
        payload_cluster.append(ordinal)
    internal = clustering.internal_mask()
    relay = clustering.boundary_mask() | (clustering.status == Status.UNCLUSTERED)
    collected, counts = K.intercom(
        g.indptr, g.indices, stream.key, _P_IC_COIN, _P_IC_TX,
        epochs, length, base, 1.0 / length,
        cluster_msg, clustering.cluster,
        internal.astype(np.uint8), relay.astype(np.uint8),
        np.asarray(payload_cluster, np.int32), max(1, clustering.k),
        *g.split, None,
    )
    out = {}
    for v in np.nonzero(counts > 0)[0]:
        out[int(v)] = [table[p] for p in collected[v, : counts[v]]]
    return out, total


@dataclass
class Overlay:
    """Sparsified candidate overlay: one incoming (parent) edge per
    candidate, plus up to five known children each."""

    candidates: list[int]  # ordinal -> candidate node
    ids: list[int]  # ordinal -> random identifier
    parent: list[int | None]
    known_children: list[list[int]]
    child_complete: list[bool]
    children: list[set[int]] = field(default_factory=list)  # derived ground truth

    def __post_init__(self):
        if not self.children:
            self.children = [set() for _ in self.candidates]
            for j, p in enumerate(self.parent):
                if p is not None:
                    self.children[p].add(j)

    @property
    def k(self) -> int:
        return len(self.candidates)

    def degree(self, j: int) -> int:
        return len(self.children[j]) + (1 if self.parent[j] is not None else 0)

    def flattened_degree(self, j: int) -> int:
        known = len(self.known_children[j]) + (1 if self.parent[j] is not None else 0)
        return min(known, 5)

    def pair(self, j: int) -> tuple[int, int]:
        return (self.flattened_degree(j), self.ids[j])


def eliminate(neighbors: list, pairs: list) -> set[int]:
    """Reference elimination rule on an explicit graph: a node survives iff
    no neighbor carries a lexicographically greater (degree, ID) pair."""
    survivors = set()
    for v, nbrs in enumerate(neighbors):
        if all(pairs[w] <= pairs[v] for w in nbrs):
            survivors.add(v)
    return survivors


def modified_elimination(overlay: Overlay) -> set[int]:
    """Elimination on the sparsified overlay with flattened degrees.

    A candidate with (flattened) degree at least five always survives; any
    other candidate is eliminated iff its parent or one of its known
    children carries a greater (degree, ID) pair.
    """
    survivors = set()
    for j in range(overlay.k):
        mine = overlay.pair(j)
        if mine[0] >= 5:
            survivors.add(j)
            continue
        partners = list(overlay.known_children[j])
        if overlay.parent[j] is not None:
            partners.append(overlay.parent[j])
        if all(overlay.pair(w) <= mine for w in partners):
            survivors.add(j)
    return survivors


def _deliver_turns(
    clustering: Clustering,
    relevant_of_node,
    turns: int,
    radius: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
):
    """Repeated "tell me something new" Down/Up turns.

    ``relevant_of_node(v)`` lists (sort_key, item) pairs an internal node v
    could report for its cluster.  Each turn runs a Down where every node
    reports its first not-yet-acknowledged item, then an Up spreading the
    updated acknowledgement set.  Returns {cluster ordinal: [items in
    arrival order]}.
    """
    acked: dict[int, list] = {j: [] for j in range(clustering.k)}
    known_acks: dict[int, tuple] = {}
    internal_nodes = np.nonzero(clustering.internal_mask())[0]
    for _ in range(turns):
        down_msgs = {}
        for v in internal_nodes:
            j = int(clustering.cluster[v])
            ack = known_acks.get(int(v), ())
            items = [it for it in relevant_of_node(int(v)) if it not in ack]
            if items:
                down_msgs[int(v)] = ("report", j, items[0])
        got, _ = cluster_cast(clustering, DOWN, down_msgs, radius, constants, stream, meter)
        for j, (_, _, item) in got.items():
            if item not in acked[j]:
                acked[j].append(item)
        up_msgs = {j: ("ack", j, tuple(acked[j])) for j in range(clustering.k)}
        delivered, _ = cluster_cast(clustering, UP, up_msgs, radius, constants, stream, meter)
        for v, (_, _, ack) in delivered.items():
            known_acks[v] = ack
    return acked


def build_overlay(
    clustering: Clustering,
    ids: list[int],
    radius: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
) -> Overlay:
    """Construct the sparsified overlay over a refined clustering.

    Internal nodes already know their cluster (the growth messages carry
    it), so the initial ID uplink is informational only and skipped; the
    remaining steps are simulated: intercommunicate cluster identities, race
    one foreign identity down to each candidate (the parent), announce
    parents upward and across, then run five child-discovery turns.
    """
    k = clustering.k
    # intercommunicate cluster identities; each internal node ends up with
    # the identities of clusters whose internals are within distance 3
    idents = {j: ("ident", j) for j in range(k)}
    heard, _ = intercommunicate(clustering, idents, constants, stream, meter)

    # race the first-heard foreign identity down to the candidate
    down_msgs = {}
    for v, msgs in heard.items():
        down_msgs[v] = ("adj", msgs[0][1])
    got, _ = cluster_cast(clustering, DOWN, down_msgs, radius, constants, stream, meter)
    parent: list[int | None] = [None] * k
    for j, (_, p) in got.items():
        parent[j] = int(p)

    # announce parents to own internals, then across cluster borders
    up_msgs = {j: ("parent", j, parent[j]) for j in range(k) if parent[j] is not None}
    cluster_cast(clustering, UP, up_msgs, radius, constants, stream, meter)
    announce = {j: ("parent", j, parent[j]) for j in range(k) if parent[j] is not None}
    heard_parents, _ = intercommunicate(clustering, announce, constants, stream, meter)

    # per internal node: children claims for its own cluster
    claims: dict[int, list[int]] = {}
    for v, msgs in heard_parents.items():
        mine = int(clustering.cluster[v])
        kids = sorted(child for (_, child, par) in msgs if par == mine)
        if kids:
            claims[int(v)] = kids

    def relevant(v: int):
        return claims.get(v, [])

    acked = _deliver_turns(
        clustering, relevant, constants.child_turns, radius, constants, stream, meter
    )
    known_children = [list(acked[j])[:5] for j in range(k)]
    # a candidate that saw a turn yield nothing new knows its child list is
    # complete; with five turns that is exactly the under-five case
    child_complete = [len(known_children[j]) < constants.child_turns for j in range(k)]
    return Overlay(
        candidates=list(clustering.candidates),
        ids=list(ids),
        parent=parent,
        known_children=known_children,
        child_complete=child_complete,
    )


def exchange_pairs(
    clustering: Clustering,
    overlay: Overlay,
    radius: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
) -> dict[int, list[tuple[int, int]]]:
    """Radio delivery of (degree, ID) pairs to each candidate from its
    parent and known children; returns {ordinal: received pairs}."""
    pair_msgs = {j: ("pair", j, overlay.pair(j)) for j in range(overlay.k)}
    cluster_cast(clustering, UP, pair_msgs, radius, constants, stream, meter)
    heard, _ = intercommunicate(clustering, pair_msgs, constants, stream, meter)

    relevant_sets = []
    for j in range(overlay.k):
        rel = set(overlay.known_children[j])
        if overlay.parent[j] is not None:
            rel.add(overlay.parent[j])
        relevant_sets.append(rel)

    per_node: dict[int, list] = {}
    for v, msgs in heard.items():
        mine = int(clustering.cluster[v])
        items = [(j, pair) for (_, j, pair) in msgs if j in relevant_sets[mine]]
        if items:
            per_node[v] = sorted(items)

    def relevant(v: int):
        return per_node.get(v, [])

    acked = _deliver_turns(
        clustering, relevant, constants.pair_turns, radius, constants, stream, meter
    )
    return {j: [pair for (_, pair) in acked[j]] for j in range(overlay.k)}
