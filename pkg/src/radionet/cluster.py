"""Cluster growth around candidates in the packet model.

Two stages: a fast stage that grows clusters in epochs of delayed-decay
broadcast followed by trimming (so that every clustered node stays connected
to its candidate through internal nodes of the same cluster), and a slow
refinement stage that grows clusters one hop per epoch until facing
boundaries deactivate, driving the inter-cluster gap down to a small
constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import _kernels as K
from .config import Constants
from .decay import Meter, ProbabilitySchedule, delay_for, phase_len
from .graphs import Graph, bfs_distances
from .rng import Stream, purpose_id

_P_GROW = purpose_id("cluster/grow")
_P_PARTS_TX = purpose_id("cluster/parts-tx")
_P_PARTS_COIN = purpose_id("cluster/parts-coin")
_P_SETTLE = purpose_id("cluster/settle")

_NEVER = np.int32(2**31 - 1)


class Status(IntEnum):
    UNCLUSTERED = 0
    UNDECIDED = 1
    INTERNAL = 2
    BOUNDARY_ACTIVE = 3
    BOUNDARY_INACTIVE = 4


@dataclass
class Clustering:
    """Per-node cluster state; cluster ids are ordinals into ``candidates``."""

    graph: Graph
    candidates: list[int]  # cluster ordinal -> candidate node
    status: np.ndarray  # int8 Status
    cluster: np.ndarray  # int32 ordinal or -1
    recruiter: np.ndarray  # int32 node or -1

    @property
    def k(self) -> int:
        return len(self.candidates)

    def internal_mask(self) -> np.ndarray:
        return self.status == Status.INTERNAL

    def clustered_mask(self) -> np.ndarray:
        return self.status != Status.UNCLUSTERED

    def boundary_mask(self) -> np.ndarray:
        return (self.status == Status.BOUNDARY_ACTIVE) | (self.status == Status.BOUNDARY_INACTIVE)

    def members(self, ordinal: int) -> np.ndarray:
        return np.nonzero(self.cluster == ordinal)[0]


def cluster_integrity_ok(clustering: Clustering) -> bool:
    """Every clustered node reaches its candidate via internal same-cluster
    nodes (boundary nodes via one internal neighbor)."""
    g = clustering.graph
    internal = clustering.internal_mask()
    for j, cand in enumerate(clustering.candidates):
        mine = clustering.cluster == j
        allowed = mine & internal
        # BFS from the candidate restricted to internal nodes of the cluster
        seen = np.zeros(g.n, bool)
        seen[cand] = True
        frontier = [cand]
        while frontier:
            nxt = []
            for v in frontier:
                for w in g.neighbors(v):
                    if allowed[w] and not seen[w]:
                        seen[w] = True
                        nxt.append(int(w))
            frontier = nxt
        for v in np.nonzero(mine)[0]:
            if internal[v]:
                if not seen[v]:
                    return False
            else:
                if not any(seen[w] and mine[w] and internal[w] for w in g.neighbors(v)):
                    return False
    return True


def connectivity_gap(clustering: Clustering) -> int:
    """Max over clusters of the distance from its internal nodes to the
    nearest other cluster's internal nodes (0 when fewer than two clusters)."""
    g = clustering.graph
    internal = clustering.internal_mask()
    live = [j for j in range(clustering.k) if ((clustering.cluster == j) & internal).any()]
    if len(live) < 2:
        return 0
    gap = 0
    for j in live:
        sources = np.nonzero((clustering.cluster == j) & internal)[0]
        dist = bfs_distances(g, sources)
        foreign = internal & (clustering.cluster != j) & (clustering.cluster >= 0)
        best = int(dist[foreign].min())
        gap = max(gap, best)
    return gap


def _unclustered_frontier_alive(g: Graph, status: np.ndarray) -> bool:
    unclustered = np.nonzero(status == Status.UNCLUSTERED)[0]
    for v in unclustered:
        nb = g.neighbors(v)
        if (status[nb] != Status.UNCLUSTERED).any():
            return True
    return False


def fast_cluster(
    graph: Graph,
    candidate_nodes: list[int],
    radius_budget: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
) -> Clustering:
    """Epochs of grow-then-trim until the cumulative growth budget covers
    radius_budget (with a small adaptive slack while growth is possible).

    Each epoch: (1) delayed-decay growth from candidates and the undecided
    ring for 4*alpha*log^2 n rounds, (2) mark undecided nodes that neighbor
    foreign or unclustered nodes (part-structured decay with unanimous
    per-cluster coins), (3) replay of the growth transmissions propagating
    mark bits down the recruitment order, (4) unmarked undecided become
    internal, then one long-phase turns first-hearing outsiders into
    boundary nodes and strips the rest back to unclustered.
    """
    n = graph.n
    if not candidate_nodes:
        raise ValueError("need at least one candidate")
    length = phase_len(n)
    l2 = length * length
    delta = delay_for(n, graph.diameter)
    step1_rounds = 4 * constants.alpha * l2
    need = constants.alpha * (radius_budget * delta + l2)
    base_epochs = max(1, math.ceil(need / step1_rounds))
    max_epochs = constants.cluster_epoch_slack * base_epochs + 2

    k = len(candidate_nodes)
    status = np.full(n, Status.UNCLUSTERED, np.int8)
    cluster = np.full(n, -1, np.int32)
    recruiter = np.full(n, -1, np.int32)
    cands = np.asarray(candidate_nodes, np.int32)
    status[cands] = Status.INTERNAL
    cluster[cands] = np.arange(k, dtype=np.int32)
    cand_mask = np.zeros(n, bool)
    cand_mask[cands] = True

    schedule = ProbabilitySchedule.basic_decay(n).cycle
    # payload ids 0..k-1 are cluster ids; payload k declares "unclustered"
    payload_cluster = np.concatenate([np.arange(k, dtype=np.int32), [-1]]).astype(np.int32)
    parts = constants.parts_factor * length

    for epoch in range(max_epochs):
        if epoch >= base_epochs and not _unclustered_frontier_alive(graph, status):
            break
        boundary = status == Status.BOUNDARY_ACTIVE
        status[boundary] = Status.UNDECIDED

        # Step 1: grow with delayed decay; only candidates and undecided
        # nodes seed transmissions, newly recruited nodes forward.
        participant = cand_mask | (status == Status.UNDECIDED)
        payload = np.where(participant, cluster, -1).astype(np.int32)
        start = np.where(participant, 0, _NEVER).astype(np.int32)
        informed = np.full(n, -1, np.int32)
        rec_step = np.full(n, -1, np.int32)
        join = (status == Status.UNCLUSTERED).astype(np.uint8)
        accept = np.full(n, -2, np.int32)
        base = meter.add(step1_rounds)
        K.fast_decay(
            graph.indptr, graph.indices, stream.key, _P_GROW,
            payload, start, informed, rec_step,
            schedule, delta, step1_rounds, base,
            join, accept, payload_cluster, None,
            *graph.split, None, 64,
        )
        joiners = np.nonzero(informed >= 0)[0]
        status[joiners] = Status.UNDECIDED
        cluster[joiners] = payload[joiners]
        recruiter[joiners] = rec_step[joiners]

        # Step 2: part-structured marking.  Unclustered nodes declare
        # themselves continuously; epoch participants send their cluster ID
        # in parts where their cluster's shared coin comes up active.
        undecided = status == Status.UNDECIDED
        sender_payload = np.where(cand_mask | undecided, cluster, -1).astype(np.int32)
        sender_payload[status == Status.UNCLUSTERED] = k  # unclustered declaration
        sender_cluster = np.where(cand_mask | undecided, cluster, -1).astype(np.int32)
        base = meter.add(parts * length)
        recv_uncl, recv_foreign = K.decay_parts(
            graph.indptr, graph.indices, stream.key, _P_PARTS_COIN, _P_PARTS_TX,
            parts, length, base,
            sender_payload, sender_cluster, payload_cluster, cluster, k,
            *graph.split, None,
        )
        marked = undecided & ((recv_uncl > 0) | (recv_foreign > 0))

        # Step 3: replay of Step 1 with a mark bit piggy-backed; the outcome
        # is fully determined by the recorded recruitment order, so the
        # marks are propagated directly (the rounds still count).
        meter.add(step1_rounds)
        order = joiners[np.argsort(informed[joiners], kind="stable")]
        for v in order:
            r = recruiter[v]
            if r >= 0 and marked[r]:
                marked[v] = True

        # Step 4: unmarked undecided become internal; one long-phase from
        # the internal nodes recruits boundary nodes among the rest.
        undecided = status == Status.UNDECIDED
        status[undecided & ~marked] = Status.INTERNAL
        internal = status == Status.INTERNAL
        sender_payload = np.where(internal, cluster, -1).astype(np.int32)
        listen = (~internal).astype(np.uint8)
        total = constants.long_phase_factor * length
        probs = np.tile(2.0 ** -(np.arange(length) + 1.0), constants.long_phase_factor)
        base = meter.add(total)
        first_payload, _, _ = K.decay_fixed(
            graph.indptr, graph.indices, stream.key, _P_SETTLE,
            sender_payload, probs, listen, base, *graph.split, None, True,
        )
        got = np.nonzero((first_payload >= 0) & ~internal)[0]
        status[got] = Status.BOUNDARY_ACTIVE
        cluster[got] = first_payload[got]
        leftover = status == Status.UNDECIDED
        status[leftover] = Status.UNCLUSTERED
        cluster[leftover] = -1
        recruiter[leftover] = -1

    return Clustering(graph, list(candidate_nodes), status, cluster, recruiter)


def cluster_refine(
    clustering: Clustering,
    epochs: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
) -> Clustering:
    """Grow clusters one hop per epoch (long-phase by internal and active
    boundary nodes), then redetermine boundaries: a clustered node that
    hears a foreign cluster becomes an inactive boundary, one that hears an
    unclustered declaration becomes an active boundary, anyone else becomes
    internal.  Previously internal nodes stay internal.  Stops early at a
    fixed point."""
    g = clustering.graph
    n = g.n
    k = clustering.k
    status, cluster = clustering.status, clustering.cluster
    length = phase_len(n)
    parts = constants.parts_factor * length
    payload_cluster = np.concatenate([np.arange(k, dtype=np.int32), [-1]]).astype(np.int32)
    total_grow = constants.long_phase_factor * length
    probs = np.tile(2.0 ** -(np.arange(length) + 1.0), constants.long_phase_factor)

    for _ in range(max(0, epochs)):
        grower = (status == Status.INTERNAL) | (status == Status.BOUNDARY_ACTIVE)
        sender_payload = np.where(grower, cluster, -1).astype(np.int32)
        listen = (status == Status.UNCLUSTERED).astype(np.uint8)
        base = meter.add(total_grow)
        first_payload, _, _ = K.decay_fixed(
            g.indptr, g.indices, stream.key, _P_GROW,
            sender_payload, probs, listen, base, *g.split, None, True,
        )
        joiners = np.nonzero(first_payload >= 0)[0]
        status[joiners] = Status.UNDECIDED
        cluster[joiners] = first_payload[joiners]
        clustering.recruiter[joiners] = -1

        clustered = status != Status.UNCLUSTERED
        sender_payload = np.where(clustered, cluster, -1).astype(np.int32)
        sender_payload[status == Status.UNCLUSTERED] = k
        sender_cluster = np.where(clustered, cluster, -1).astype(np.int32)
        base = meter.add(parts * length)
        recv_uncl, recv_foreign = K.decay_parts(
            g.indptr, g.indices, stream.key, _P_PARTS_COIN, _P_PARTS_TX,
            parts, length, base,
            sender_payload, sender_cluster, payload_cluster, cluster, k,
            *g.split, None,
        )
        old = status.copy()
        redet = clustered & (status != Status.INTERNAL)
        status[redet & (recv_foreign > 0)] = Status.BOUNDARY_INACTIVE
        status[redet & (recv_foreign == 0) & (recv_uncl > 0)] = Status.BOUNDARY_ACTIVE
        status[redet & (recv_foreign == 0) & (recv_uncl == 0)] = Status.INTERNAL

        changed = bool((old != status).any()) or joiners.size > 0
        if not changed and not _unclustered_frontier_alive(g, status):
            break
    return clustering


def default_refine_epochs(n: int, diameter: int) -> int:
    return math.ceil(phase_len(n) ** 2 / delay_for(n, diameter))
