"""Leader election without collision detection.

Each debate grows radius-limited clusters around the surviving candidates,
refines them to a constant connectivity gap, builds the sparsified overlay
(one parent edge plus up to five known children per candidate), exchanges
flattened (degree, ID) pairs over the overlay, and applies the modified
elimination rule.  The harness stops debating once a single candidate
remains (bounded by the cap derived from the per-debate elimination
guarantee), and the survivor floods its identifier network-wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cluster import Clustering, cluster_refine, default_refine_epochs, fast_cluster
from .config import Constants, candidate_probability, debate_cap, debate_radius
from .decay import Meter, fast_decay_broadcast, phase_len
from .graphs import Graph
from .overlay import Overlay, build_overlay, exchange_pairs
from .rng import Stream, purpose_id

_P_SAMPLE = purpose_id("election/sample")
_P_IDS = purpose_id("election/ids")


def sample_candidates(n: int, stream: Stream, rate: float = 10.0) -> list[int]:
    """Each node is a candidate independently with probability
    min(1, rate*log2(n)/n)."""
    p = candidate_probability(n, rate)
    draws = stream.uniforms(_P_SAMPLE, 0, n)
    return [int(v) for v in np.nonzero(draws < p)[0]]


def candidate_ids(n: int, nodes: list[int], stream: Stream, constants: Constants) -> list[int]:
    bits = constants.id_bits(n)
    return [stream.bits(_P_IDS, 0, v, bits) for v in nodes]


@dataclass
class DebateOutcome:
    entering: list[int]
    surviving: list[int]
    radius: int
    overlay: Overlay | None = None


@dataclass
class ElectionResult:
    candidates: list[int]
    survivors: list[int]
    debates: list[DebateOutcome] = field(default_factory=list)
    outputs: list = field(default_factory=list)  # per-node leader ID or None
    rounds: int = 0
    failure: str | None = None

    @property
    def agreed(self) -> bool:
        return (
            not self.failure
            and len(self.outputs) > 0
            and all(o is not None and o == self.outputs[0] for o in self.outputs)
        )


def run_debate_nocd(
    graph: Graph,
    candidate_nodes: list[int],
    ids: list[int],
    index: int,
    constants: Constants,
    stream: Stream,
    meter: Meter,
) -> DebateOutcome:
    """One debate at the radius of its index; returns survivors (a nonempty
    subset: the holder of the maximum exchanged pair is never eliminated)."""
    n = graph.n
    radius = debate_radius(n, graph.diameter, index)
    clustering = fast_cluster(graph, candidate_nodes, radius, constants, stream, meter)
    clustering = cluster_refine(
        clustering, default_refine_epochs(n, graph.diameter), constants, stream, meter
    )
    overlay = build_overlay(clustering, ids, radius, constants, stream, meter)
    received = exchange_pairs(clustering, overlay, radius, constants, stream, meter)
    surviving = []
    for j in range(overlay.k):
        mine = overlay.pair(j)
        if mine[0] >= 5 or all(pair <= mine for pair in received.get(j, [])):
            surviving.append(j)
    assert surviving, "the maximum exchanged pair cannot be eliminated"
    return DebateOutcome(
        entering=list(candidate_nodes),
        surviving=[candidate_nodes[j] for j in surviving],
        radius=radius,
        overlay=overlay,
    )


def elect_leader_nocd(graph: Graph, constants: Constants, stream: Stream) -> ElectionResult:
    """Full election: sample, debate until one candidate remains (capped),
    then flood the winner's ID; per-node outputs are the received IDs."""
    n = graph.n
    meter = Meter()
    candidates = sample_candidates(n, stream, constants.candidate_rate)
    if not candidates:
        return ElectionResult(candidates=[], survivors=[], failure="no-candidates")
    ids = candidate_ids(n, candidates, stream, constants)
    id_of = dict(zip(candidates, ids))

    survivors = list(candidates)
    result = ElectionResult(candidates=candidates, survivors=survivors)
    cap = debate_cap(n, constants.nocd_elim_fraction)
    for i in range(1, cap + 1):
        if len(survivors) <= 1:
            break
        outcome = run_debate_nocd(
            graph, survivors, [id_of[v] for v in survivors], i, constants, stream, meter
        )
        survivors = outcome.surviving
        outcome.overlay = None  # drop per-debate payloads, keep the counts
        result.debates.append(outcome)
    result.survivors = survivors

    # winner announcement: every remaining candidate floods its ID; with a
    # single survivor all nodes whp output the same identifier
    sources = {v: id_of[v] for v in survivors}
    if n == 1:
        result.outputs = [id_of[candidates[0]]]
        result.rounds = meter.rounds
        return result
    received, _ = fast_decay_broadcast(
        graph,
        sources,
        delta=1 if graph.diameter == 0 else max(1, math.ceil(math.log2(n / graph.diameter))),
        stream=stream,
        config=constants.decay(),
        meter=meter,
    )
    outputs = []
    for v in range(n):
        if v in sources:
            outputs.append(sources[v])
        elif v in received:
            outputs.append(received[v][1])
        else:
            outputs.append(None)
    result.outputs = outputs
    result.rounds = meter.rounds
    return result
