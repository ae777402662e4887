"""Leader election in the beep model.

Everything rides on pipelined beep waves synchronized by the distance
numbering: an activation wave gives every node its hop distance to the
nearest candidate; outward (uplink) waves then deliver to each node the OR
of the messages of its nearest candidates, and inward (downlink) waves
deliver to each candidate the OR of its cluster's boundary messages.
Superimposed codes make those ORs decodable: an exact-set code of strength 1
turns the uplink into clustering (a node with two nearest candidates sees a
superimposition and stays unclustered), approximate counting codes turn the
downlinked OR into a degree estimate, and a bitwise max-detection exchange
finds whether any nearby cluster carries a larger (degree, ID) string.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .codes import (
    ApproxCodeParams,
    SICode,
    approx_decode_exponent,
    approx_sample,
    si_decode,
    si_generate,
)
from .config import Constants, debate_cap, debate_radius
from .decay import Meter, phase_len
from .graphs import Graph, bfs_distances
from .nocd import DebateOutcome, ElectionResult, candidate_ids, sample_candidates
from .rng import Stream

FULL = "full"
FAST = "fast"


def numbering(graph: Graph, candidates: list[int], horizon: int | None = None, meter: Meter | None = None) -> np.ndarray:
    """Activation-wave distances: dist(u) = hops to the nearest candidate,
    -1 beyond the horizon.  The wave moves one hop per round, so this equals
    BFS distance exactly and costs ``horizon`` rounds."""
    if not candidates:
        raise ValueError("need at least one candidate")
    if horizon is None:
        horizon = graph.diameter
    if meter is not None:
        meter.add(horizon)
    dist = bfs_distances(graph, candidates)
    dist[dist > horizon] = -1
    return dist


def uplink_rounds(horizon: int, length: int) -> int:
    return horizon + 3 * length - 3 if length else 0


def beep_uplink(
    graph: Graph,
    dist: np.ndarray,
    messages: dict[int, np.ndarray],
    length: int,
    horizon: int,
    meter: Meter | None = None,
    participate: np.ndarray | None = None,
) -> np.ndarray:
    """Pipelined outward waves; returns the n x length recorded bit matrix.

    ``messages`` maps source node -> bit row.  Every node at a recorded
    distance relays; waves of different sources clash at equidistant nodes,
    which therefore record the OR of their nearest sources' messages.
    Sources record their own message.
    """
    n = graph.n
    if meter is not None:
        meter.add(uplink_rounds(horizon, length))
    src_row = np.full(n, -1, np.int32)
    bits = np.zeros((max(len(messages), 1), length), np.uint8)
    for row, (node, msg) in enumerate(messages.items()):
        src_row[node] = row
        bits[row] = msg
    part = (participate if participate is not None else np.ones(n, bool)).astype(np.uint8)
    out = K.beep_pipeline_up(graph.indptr, graph.indices, dist, horizon, src_row, bits, length, part)
    for node, msg in messages.items():
        out[node] = msg
    return out


def beep_downlink(
    graph: Graph,
    dist: np.ndarray,
    messages: dict[int, np.ndarray],
    length: int,
    horizon: int,
    participate: np.ndarray,
    meter: Meter | None = None,
) -> np.ndarray:
    """Pipelined inward waves (reversed schedule); a node at distance 0
    records the OR of all participating sources' rows in its region.

    Only ``participate`` nodes relay: restricting the pipeline to clustered
    nodes keeps each cluster's OR exact (equidistant foreign nodes never
    listen to each other's slots, and unclustered bridges are excluded).
    """
    n = graph.n
    if meter is not None:
        meter.add(uplink_rounds(horizon, length))
    src_row = np.full(n, -1, np.int32)
    bits = np.zeros((max(len(messages), 1), length), np.uint8)
    for row, (node, msg) in enumerate(messages.items()):
        src_row[node] = row
        bits[row] = msg
    return K.beep_pipeline_down(
        graph.indptr, graph.indices, dist, horizon, src_row, bits, length, participate.astype(np.uint8)
    )


@dataclass
class BeepClustering:
    """Clustering induced by decoding the uplinked strength-1 code."""

    graph: Graph
    candidates: list[int]  # ordinal -> candidate node
    dist: np.ndarray
    cluster: np.ndarray  # int32 ordinal or -1 (unclustered / unreached)
    clustered: np.ndarray  # bool
    boundary: np.ndarray  # bool, only meaningful for clustered nodes
    words: np.ndarray | None = None  # received uplink words (diagnostics)

    @property
    def k(self) -> int:
        return len(self.candidates)


def beep_cluster(
    graph: Graph,
    dist: np.ndarray,
    candidates: list[int],
    si1: SICode,
    meter: Meter | None = None,
) -> BeepClustering:
    """Uplink the candidates' strength-1 codewords and decode per node:
    a unique nearest candidate clusters the node, a superimposition leaves
    it unclustered.  A two-round-per-bit probe then sets the boundary flag
    on every clustered node that heard a complementary beep."""
    n = graph.n
    horizon = int(dist.max()) if (dist >= 0).any() else 0
    length = si1.length
    messages = {node: si1.word(node) for node in candidates}
    words = beep_uplink(graph, dist, messages, length, horizon, meter)
    part = dist >= 0
    cluster = np.full(n, -1, np.int32)
    clustered = np.zeros(n, bool)
    ordinal_of = {node: j for j, node in enumerate(candidates)}
    cand_rows = si1.words[np.asarray(candidates)]
    overlap = (cand_rows.astype(np.int16) @ (1 - words[part].astype(np.int16)).T) == 0
    part_idx = np.nonzero(part)[0]
    counts = overlap.sum(axis=0)
    for col, v in enumerate(part_idx):
        if counts[col] == 1:
            j = int(np.nonzero(overlap[:, col])[0][0])
            if np.array_equal(cand_rows[j], words[v]):
                cluster[v] = j
                clustered[v] = True
    for node in candidates:
        cluster[node] = ordinal_of[node]
        clustered[node] = True
    if meter is not None:
        meter.add(2 * length)
    heard = K.beep_bitpairs(
        graph.indptr, graph.indices, 0, part.astype(np.uint8), words, length, np.zeros(n, np.uint8)
    )
    boundary = clustered & (heard > 0)
    return BeepClustering(graph, list(candidates), dist, cluster, clustered, boundary, words)


def beep_intercommunicate(
    graph: Graph,
    boundary: np.ndarray,
    bits: np.ndarray,
    length: int,
    meter: Meter | None = None,
) -> np.ndarray:
    """Two rounds per bit: boundaries beep their 1-bits twice, everyone else
    relays round-1 beeps in round 2; each boundary's output row is the OR of
    its own row and those of boundary nodes within two hops."""
    if meter is not None:
        meter.add(2 * length)
    relay = (~boundary.astype(bool)).astype(np.uint8)
    return K.beep_bitpairs(graph.indptr, graph.indices, 1, boundary.astype(np.uint8), bits, length, relay)


def max_detect_intercommunicate(
    graph: Graph,
    boundary: np.ndarray,
    bits: np.ndarray,
    length: int,
    meter: Meter | None = None,
) -> np.ndarray:
    """MSB-first bitwise comparison: an unmarked boundary listening on a
    0-bit that hears a beep becomes marked and relays from then on; a
    boundary ends up marked only if some boundary within two hops carries a
    numerically larger row."""
    if meter is not None:
        meter.add(2 * length)
    relay = (~boundary.astype(bool)).astype(np.uint8)
    return K.beep_bitpairs(graph.indptr, graph.indices, 2, boundary.astype(np.uint8), bits, length, relay)


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], np.uint8)


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _round64(x: int) -> int:
    return ((x + 63) // 64) * 64


def protocol_count_params(n: int, constants: Constants) -> ApproxCodeParams:
    block_len = _round64(constants.beep_block_len_factor * phase_len(n))
    return ApproxCodeParams(
        universe=max(n, 2),
        max_count=constants.beep_count_k,
        delta=constants.beep_count_delta,
        block_len=block_len,
    )


def run_debate_beep(
    graph: Graph,
    candidate_nodes: list[int],
    ids: list[int],
    index: int,
    variant: str,
    constants: Constants,
    stream: Stream,
    meter: Meter,
    si1: SICode,
) -> DebateOutcome:
    """One radius-limited beep debate.

    Fast variant: degree estimated by decoding the downlinked OR of
    approximate-counting codewords (duplicates are harmless under OR), then
    dominance detected by max-detection on fixed-width (estimate exponent,
    ID) strings and a single-bit downlink of the marks.  Full variant:
    exact neighbor sets via a strength-(log n + slack) exact-set code, then
    a full (degree, ID) pair exchange the same way.  At least one candidate
    always survives.
    """
    n = graph.n
    radius = debate_radius(n, graph.diameter, index)
    dist = numbering(graph, candidate_nodes, horizon=radius, meter=meter)
    bc = beep_cluster(graph, dist, candidate_nodes, si1, meter)
    horizon = int(dist.max()) if (dist >= 0).any() else 0
    k = len(candidate_nodes)
    id_bits = constants.id_bits(n)

    if variant == FAST:
        params = protocol_count_params(n, constants)
        code_stream = stream.derive(f"beep-count/{index}")
        codewords = [approx_sample(params, code_stream, j) for j in range(k)]
        length = params.length
        messages = {candidate_nodes[j]: codewords[j] for j in range(k)}
        words = beep_uplink(graph, dist, messages, length, horizon, meter)
        inter = beep_intercommunicate(graph, bc.boundary, words, length, meter)
        boundary_rows = {int(v): inter[v] for v in np.nonzero(bc.boundary)[0]}
        down = beep_downlink(graph, dist, boundary_rows, length, horizon, bc.clustered, meter)
        exponents = []
        for j, node in enumerate(candidate_nodes):
            word = down[node] | codewords[j]
            exponents.append(approx_decode_exponent(params, word))
        exp_width = max(1, math.ceil(math.log2(params.block_count + 2)))
        pair_words = {
            candidate_nodes[j]: np.concatenate(
                [_int_to_bits(exponents[j] + 1, exp_width), _int_to_bits(ids[j], id_bits)]
            )
            for j in range(k)
        }
        pw_len = exp_width + id_bits
        words3 = beep_uplink(graph, dist, pair_words, pw_len, horizon, meter)
        marked = max_detect_intercommunicate(graph, bc.boundary, words3, pw_len, meter)
        flag_rows = {
            int(v): np.array([marked[v]], np.uint8) for v in np.nonzero(bc.boundary)[0]
        }
        down1 = beep_downlink(graph, dist, flag_rows, 1, horizon, bc.clustered, meter)
        surviving = []
        for j, node in enumerate(candidate_nodes):
            own_mark = marked[node] if bc.boundary[node] else 0
            if down1[node, 0] == 0 and not own_mark:
                surviving.append(node)
    elif variant == FULL:
        strength = phase_len(n) + constants.beep_si_full_slack
        exchange_stream = stream.derive(f"beep-full/{index}")
        code1 = si_generate(max(n, strength + 1), strength, exchange_stream.derive("ids"))
        length = code1.length
        messages = {node: code1.word(node) for node in candidate_nodes}
        words = beep_uplink(graph, dist, messages, length, horizon, meter)
        inter = beep_intercommunicate(graph, bc.boundary, words, length, meter)
        boundary_rows = {int(v): inter[v] for v in np.nonzero(bc.boundary)[0]}
        down = beep_downlink(graph, dist, boundary_rows, length, horizon, bc.clustered, meter)
        degrees = []
        for j, node in enumerate(candidate_nodes):
            decoded = si_decode(code1, np.minimum(down[node] | code1.word(node), 1))
            if decoded is None or not isinstance(decoded, frozenset):
                degrees.append(strength + 1)
            else:
                degrees.append(len(decoded - {node}))
        # second exchange: codewords indexed by (candidate, degree)
        deg_cap = strength + 1
        universe2 = n * (deg_cap + 1)
        code2 = si_generate(universe2, strength, exchange_stream.derive("pairs"))
        row_of = {
            candidate_nodes[j]: candidate_nodes[j] * (deg_cap + 1) + min(degrees[j], deg_cap)
            for j in range(k)
        }
        messages2 = {node: code2.word(row) for node, row in row_of.items()}
        words2 = beep_uplink(graph, dist, messages2, code2.length, horizon, meter)
        inter2 = beep_intercommunicate(graph, bc.boundary, words2, code2.length, meter)
        boundary_rows2 = {int(v): inter2[v] for v in np.nonzero(bc.boundary)[0]}
        down2 = beep_downlink(graph, dist, boundary_rows2, code2.length, horizon, bc.clustered, meter)
        id_of = dict(zip(candidate_nodes, ids))
        surviving = []
        for j, node in enumerate(candidate_nodes):
            word = np.minimum(down2[node] | messages2[node], 1)
            decoded = si_decode(code2, word)
            mine = (degrees[j], id_of[node])
            if not isinstance(decoded, frozenset):
                surviving.append(node)  # undecodable: do not self-eliminate
                continue
            pairs = []
            for row in decoded:
                cand, deg = divmod(int(row), deg_cap + 1)
                if cand != node and cand in id_of:
                    pairs.append((deg, id_of[cand]))
            if all(p <= mine for p in pairs):
                surviving.append(node)
    else:
        raise ValueError(f"unknown debate variant {variant!r}")

    assert surviving, "the maximum comparison string cannot be eliminated"
    return DebateOutcome(entering=list(candidate_nodes), surviving=surviving, radius=radius)


def broadcast_id_beep(
    graph: Graph,
    sources: dict[int, int],
    id_bits: int,
    meter: Meter,
) -> list:
    """Network-wide pipelined broadcast of the winners' IDs; with a single
    source every node decodes that exact identifier."""
    n = graph.n
    dist = numbering(graph, list(sources), horizon=graph.diameter, meter=meter)
    messages = {node: _int_to_bits(ident, id_bits) for node, ident in sources.items()}
    words = beep_uplink(graph, dist, messages, id_bits, graph.diameter, meter)
    outputs = []
    for v in range(n):
        if dist[v] < 0:
            outputs.append(None)
        else:
            outputs.append(_bits_to_int(words[v]))
    return outputs


def elect_leader_beep(
    graph: Graph,
    constants: Constants,
    stream: Stream,
    variant: str = FAST,
) -> ElectionResult:
    """Full beep-model election; mirrors the packet-model driver."""
    n = graph.n
    meter = Meter()
    candidates = sample_candidates(n, stream, constants.candidate_rate)
    if not candidates:
        return ElectionResult(candidates=[], survivors=[], failure="no-candidates")
    ids = candidate_ids(n, candidates, stream, constants)
    id_of = dict(zip(candidates, ids))
    if n == 1:
        res = ElectionResult(candidates=candidates, survivors=candidates)
        res.outputs = [ids[0]]
        return res

    si1 = si_generate(n, 1, stream.derive("beep-si1")) if n >= 2 else None
    survivors = list(candidates)
    result = ElectionResult(candidates=candidates, survivors=survivors)
    cap = debate_cap(n, constants.beep_elim_fraction)
    for i in range(1, cap + 1):
        if len(survivors) <= 1:
            break
        outcome = run_debate_beep(
            graph, survivors, [id_of[v] for v in survivors], i, variant, constants, stream, meter, si1
        )
        survivors = outcome.surviving
        result.debates.append(outcome)
    result.survivors = survivors

    sources = {v: id_of[v] for v in survivors}
    result.outputs = broadcast_id_beep(graph, sources, constants.id_bits(n), meter)
    result.rounds = meter.rounds
    return result
