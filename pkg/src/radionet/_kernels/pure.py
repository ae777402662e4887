"""Pure NumPy reference backend for the simulation kernels.

Semantics here are authoritative: the compiled backend must reproduce these
outputs bit for bit (see tests/test_kernels.py).  All randomness is
counter-based SplitMix64 keyed by (key, purpose, index, node), so results do
not depend on evaluation order.
"""

from __future__ import annotations

import numpy as np

U64 = np.uint64
_PHI = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_PR_IDX = U64(0xD1342543DE82EF95)
_PR_NODE = U64(0x2545F4914F6CDD1D)
_INV53 = 2.0**-53
_NEVER = np.int32(2**31 - 1)


def _mix(z):
    z = z + _PHI
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


_MASK = (1 << 64) - 1


def _pymix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _round_base(key: int, purpose: int, index: int):
    inner = _pymix((int(purpose) ^ (int(index) * 0xD1342543DE82EF95)) & _MASK)
    return U64(_pymix(int(key) ^ inner))


def keyed_uniforms(key: int, purpose: int, index: int, n: int) -> np.ndarray:
    base = _round_base(key, purpose, index)
    x = _mix(base ^ np.arange(n, dtype=U64) * _PR_NODE)
    return (x >> U64(11)).astype(np.float64) * _INV53


def keyed_u64(key: int, purpose: int, index: int, n: int) -> np.ndarray:
    base = _round_base(key, purpose, index)
    return _mix(base ^ np.arange(n, dtype=U64) * _PR_NODE)


def bernoulli_words(key: int, purpose: int, index: int, n_bits: int, p16: int) -> np.ndarray:
    """Packed Bernoulli(p16/65536) bits, 64 per uint64 word, little-endian.

    Bit-plane construction: plane t supplies bit t of a 16-bit uniform per
    lane; lanes are resolved MSB-first against the bits of p16, so on average
    only ~2 planes decide each lane and whole planes are skipped once every
    lane is decided.  Plane t draws keyed_u64(key, purpose, index*16 + t, .).
    """
    n_words = (n_bits + 63) // 64
    out = np.zeros(n_words, U64)
    undec = np.full(n_words, ~U64(0), U64)
    for t in range(16):
        b = (p16 >> (15 - t)) & 1
        if not undec.any():
            break
        plane = keyed_u64(key, purpose, index * 16 + t, n_words)
        if b:
            out |= undec & ~plane
            undec &= plane
        else:
            undec &= ~plane
    if n_bits % 64:
        out[-1] &= (U64(1) << U64(n_bits % 64)) - U64(1)
    return out


def bernoulli_bits(key: int, purpose: int, index: int, n_bits: int, p16: int) -> np.ndarray:
    """n_bits Bernoulli(p16/65536) bits as a uint8 array (unpacked)."""
    words = bernoulli_words(key, purpose, index, n_bits, p16)
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:n_bits].copy()


def _neighbor_blocks(indptr, indices, nodes):
    if len(nodes) == 0:
        return np.empty(0, np.int32), np.empty(0, np.int32)
    parts = [indices[indptr[v] : indptr[v + 1]] for v in nodes]
    deg = np.array([p.shape[0] for p in parts], dtype=np.int64)
    nbrs = np.concatenate(parts) if parts else np.empty(0, np.int32)
    src = np.repeat(np.asarray(nodes, dtype=np.int32), deg)
    return nbrs, src


def _deliver(indptr, indices, n, tx, split_node, split_off):
    """Unique-transmitter reception: recv[i] = sender index or -1.

    Transmitting nodes never receive.  ``split_node`` (if >= 0) applies the
    merged-copy rule: its adjacency is split at ``split_off`` into two groups,
    each group delivers independently, and two same-round deliveries collide.
    """
    recv = np.full(n, -1, np.int32)
    if tx.size == 0:
        return recv
    txmask = np.zeros(n, bool)
    txmask[tx] = True
    nbrs, src = _neighbor_blocks(indptr, indices, tx)
    cnt = np.bincount(nbrs, minlength=n)
    ssum = np.bincount(nbrs, weights=src.astype(np.float64) + 1.0, minlength=n)
    one = (cnt == 1) & ~txmask
    recv[one] = ssum[one].astype(np.int64) - 1
    if split_node >= 0 and not txmask[split_node]:
        v = split_node
        s, e = int(indptr[v]), int(indptr[v + 1])
        side_a = indices[s : s + split_off]
        side_b = indices[s + split_off : e]
        ta = side_a[txmask[side_a]]
        tb = side_b[txmask[side_b]]
        da = int(ta[0]) if ta.size == 1 else -1
        db = int(tb[0]) if tb.size == 1 else -1
        if da >= 0 and db >= 0:
            recv[v] = -1
        else:
            recv[v] = max(da, db)
    return recv


def _apply_aux(aux, recv):
    if aux is None:
        return
    got = np.nonzero(recv >= 0)[0]
    aux[got] |= aux[recv[got]]


def nocd_round(indptr, indices, transmit, split_node=-1, split_off=0):
    n = transmit.shape[0]
    tx = np.nonzero(transmit)[0].astype(np.int32)
    return _deliver(indptr, indices, n, tx, split_node, split_off)


def beep_round(indptr, indices, beep):
    n = beep.shape[0]
    heard = np.zeros(n, np.uint8)
    tx = np.nonzero(beep)[0].astype(np.int32)
    if tx.size == 0:
        return heard
    nbrs, _ = _neighbor_blocks(indptr, indices, tx)
    heard[nbrs] = 1
    heard[tx] = 0
    return heard


def decay_fixed(
    indptr,
    indices,
    key,
    purpose,
    sender_payload,
    probs,
    listen_mask,
    round_base,
    split_node=-1,
    split_off=0,
    aux=None,
    stop_early=False,
):
    """Frozen-sender decay rounds; listeners record their first reception.

    Round r transmit probability is probs[r] for every sender.  Returns
    (first_payload, first_round, rounds_simulated); first_round is absolute
    (round_base + r).
    """
    n = sender_payload.shape[0]
    first_payload = np.full(n, -1, np.int32)
    first_round = np.full(n, -1, np.int32)
    senders = np.nonzero(sender_payload >= 0)[0].astype(np.int32)
    if senders.size == 0:
        return first_payload, first_round, 0
    pending = None
    if stop_early:
        nbrs, _ = _neighbor_blocks(indptr, indices, senders)
        pending = np.zeros(n, bool)
        pending[nbrs] = True
        pending &= listen_mask > 0
        if not pending.any():
            return first_payload, first_round, 0
    rounds = len(probs)
    for r in range(rounds):
        u = keyed_uniforms(key, purpose, round_base + r, n)
        tx = senders[u[senders] < probs[r]]
        if tx.size == 0:
            continue
        recv = _deliver(indptr, indices, n, tx, split_node, split_off)
        _apply_aux(aux, recv)
        new = np.nonzero((recv >= 0) & (listen_mask > 0) & (first_payload < 0))[0]
        first_payload[new] = sender_payload[recv[new]]
        first_round[new] = round_base + r
        if stop_early:
            pending[new] = False
            if not pending.any():
                return first_payload, first_round, r + 1
    return first_payload, first_round, rounds


def fast_decay(
    indptr,
    indices,
    key,
    purpose,
    payload,
    start_round,
    informed_round,
    recruiter,
    probs_cycle,
    delta,
    total_rounds,
    round_base,
    join_mask,
    accept_cluster=None,
    payload_cluster=None,
    forward_mask=None,
    split_node=-1,
    split_off=0,
    aux=None,
    check_interval=0,
):
    """Forwarding decay broadcast with per-hop delay ``delta``.

    A node holding a payload transmits from round ``start_round`` onward with
    probability probs_cycle[(r - start_round) % len].  A joining node adopts
    the first accepted payload; it starts forwarding ``delta`` rounds after
    its first reception iff forward_mask allows.  payload/start_round/
    informed_round/recruiter are updated in place (local round numbers).
    Returns the number of rounds simulated (early exit once no joinable node
    neighbors an informed one, checked every ``check_interval`` rounds).
    """
    n = payload.shape[0]
    cyc = len(probs_cycle)
    joinable = (join_mask > 0) & (payload < 0)
    for r in range(total_rounds):
        if check_interval and r % check_interval == 0:
            inf = np.nonzero(payload >= 0)[0].astype(np.int32)
            nbrs, _ = _neighbor_blocks(indptr, indices, inf)
            alive = joinable[nbrs].any() if nbrs.size else False
            if not alive:
                return r
        active = np.nonzero((payload >= 0) & (start_round <= r))[0].astype(np.int32)
        if active.size == 0:
            continue
        u = keyed_uniforms(key, purpose, round_base + r, n)
        off = (r - start_round[active]) % cyc
        tx = active[u[active] < probs_cycle[off]]
        if tx.size == 0:
            continue
        recv = _deliver(indptr, indices, n, tx, split_node, split_off)
        _apply_aux(aux, recv)
        idx = np.nonzero((recv >= 0) & joinable)[0]
        if idx.size and payload_cluster is not None:
            p = payload[recv[idx]]
            ok = (accept_cluster[idx] == -2) | (payload_cluster[p] == accept_cluster[idx])
            idx = idx[ok]
        if idx.size:
            payload[idx] = payload[recv[idx]]
            informed_round[idx] = r
            recruiter[idx] = recv[idx]
            if forward_mask is None:
                start_round[idx] = r + delta
            else:
                start_round[idx] = np.where(forward_mask[idx] > 0, r + delta, _NEVER)
            joinable[idx] = False
    return total_rounds


def decay_parts(
    indptr,
    indices,
    key,
    purpose_coin,
    purpose_tx,
    n_parts,
    phase_len,
    round_base,
    sender_payload,
    sender_cluster,
    payload_cluster,
    node_cluster,
    n_clusters,
    split_node=-1,
    split_off=0,
    aux=None,
):
    """Part-structured decay used for marking/boundary determination.

    Senders with sender_cluster == -1 transmit in every part (the unclustered
    declarations); cluster members transmit only in parts where their cluster
    unanimously activates (shared coin, probability 1/2).  Each part is one
    basic decay phase.  Returns per-node flags (received an unclustered
    declaration, received a foreign cluster ID).
    """
    n = sender_payload.shape[0]
    recv_uncl = np.zeros(n, np.uint8)
    recv_foreign = np.zeros(n, np.uint8)
    senders = np.nonzero(sender_payload >= 0)[0].astype(np.int32)
    if senders.size == 0:
        return recv_uncl, recv_foreign
    probs = 2.0 ** -(np.arange(phase_len) + 1)
    scl = sender_cluster[senders]
    for p in range(n_parts):
        coin = keyed_uniforms(key, purpose_coin, round_base + p, max(n_clusters, 1)) < 0.5
        member_on = (scl >= 0) & coin[np.maximum(scl, 0)]
        act = senders[(scl < 0) | member_on]
        for i in range(phase_len):
            r = p * phase_len + i
            u = keyed_uniforms(key, purpose_tx, round_base + r, n)
            tx = act[u[act] < probs[i]]
            if tx.size == 0:
                continue
            recv = _deliver(indptr, indices, n, tx, split_node, split_off)
            _apply_aux(aux, recv)
            got = np.nonzero(recv >= 0)[0]
            if got.size == 0:
                continue
            pc = payload_cluster[sender_payload[recv[got]]]
            recv_uncl[got[pc == -1]] = 1
            foreign = got[(pc >= 0) & (pc != node_cluster[got])]
            recv_foreign[foreign] = 1
    return recv_uncl, recv_foreign


def intercom(
    indptr,
    indices,
    key,
    purpose_coin,
    purpose_tx,
    epochs,
    phase_len,
    round_base,
    activate_p,
    cluster_msg,
    node_cluster,
    internal_mask,
    relay_mask,
    payload_cluster,
    cap,
    split_node=-1,
    split_off=0,
    aux=None,
):
    """Epoch-structured intercommunication between nearby clusters.

    Per epoch each cluster unanimously activates with probability activate_p;
    internal nodes of active clusters transmit their cluster message for
    3 phases of basic decay, and relay-capable receivers forward the first
    message they pick up during the following phases of the same epoch.
    Internal nodes record every foreign payload they receive (deduplicated,
    up to ``cap``).
    """
    n = node_cluster.shape[0]
    n_clusters = cluster_msg.shape[0]
    collected = np.full((n, cap), -1, np.int32)
    counts = np.zeros(n, np.int32)
    probs = 2.0 ** -(np.arange(phase_len) + 1)
    has_msg = (internal_mask > 0) & (node_cluster >= 0)
    has_msg &= np.where(node_cluster >= 0, cluster_msg[np.maximum(node_cluster, 0)], -1) >= 0
    base_payload = np.where(has_msg, cluster_msg[np.maximum(node_cluster, 0)], -1).astype(np.int32)
    for e in range(epochs):
        coin = keyed_uniforms(key, purpose_coin, round_base + e, max(n_clusters, 1)) < activate_p
        cluster_on = np.zeros(n, bool)
        cm = node_cluster >= 0
        cluster_on[cm] = coin[node_cluster[cm]]
        holder = has_msg & cluster_on
        relay_payload = np.full(n, -1, np.int32)
        relay_phase = np.full(n, 127, np.int8)
        for ph in range(3):
            can_relay = (relay_payload >= 0) & (relay_phase < ph)
            tx_payload = np.where(holder, base_payload, np.where(can_relay, relay_payload, -1))
            senders = np.nonzero(tx_payload >= 0)[0].astype(np.int32)
            for i in range(phase_len):
                r = (e * 3 + ph) * phase_len + i
                u = keyed_uniforms(key, purpose_tx, round_base + r, n)
                tx = senders[u[senders] < probs[i]]
                if tx.size == 0:
                    continue
                recv = _deliver(indptr, indices, n, tx, split_node, split_off)
                _apply_aux(aux, recv)
                got = np.nonzero(recv >= 0)[0]
                for j in got:
                    q = int(tx_payload[recv[j]])
                    if internal_mask[j] and payload_cluster[q] != node_cluster[j]:
                        seen = collected[j, : counts[j]]
                        if q not in seen and counts[j] < cap:
                            collected[j, counts[j]] = q
                            counts[j] += 1
                    if relay_mask[j] and relay_payload[j] < 0:
                        relay_payload[j] = q
                        relay_phase[j] = ph
    return collected, counts


def beep_pipeline_up(indptr, indices, dist, horizon, src_row, bits, length, participate):
    """Outward pipelined beep waves (3-round spacing per bit).

    Sources at distance layer 0 stream their bit rows; every participating
    node relays per the (t - dist) mod 3 schedule and records the received
    string.  Returns the per-node recorded bits (n x length).
    """
    n = dist.shape[0]
    out = np.zeros((n, length), np.uint8)
    active = np.zeros(n, np.uint8)
    part = (participate > 0) & (dist >= 0)
    src = part & (src_row >= 0)
    srcidx = np.nonzero(src)[0]
    w = np.where(part, dist, 0)
    for t in range(horizon + 3 * length - 2):
        b = t // 3
        if b < length:
            active[srcidx] = bits[src_row[srcidx], b]
        else:
            active[srcidx] = 0
        ph = np.mod(t - w, 3)
        beep = np.zeros(n, np.uint8)
        sel = part & (ph == 0) & (active > 0)
        beep[sel] = 1
        heard = beep_round(indptr, indices, beep)
        rec = part & (ph == 2)
        idx = (t - w + 1) // 3
        ok = rec & (idx >= 0) & (idx < length)
        out[ok, idx[ok]] = heard[ok]
        active[rec] = heard[rec]
    return out


def beep_pipeline_down(indptr, indices, dist, horizon, src_row, bits, length, participate):
    """Inward pipelined beep waves; reverse of beep_pipeline_up.

    Sources merge their own bit into the relayed wave (bitwise OR), so a node
    at distance 0 records the OR of all source strings in its component.
    """
    n = dist.shape[0]
    out = np.zeros((n, length), np.uint8)
    active = np.zeros(n, np.uint8)
    part = (participate > 0) & (dist >= 0)
    src = part & (src_row >= 0)
    w0 = np.where(part, dist, 0)
    for t in range(horizon + 3 * length - 3, -1, -1):
        w = t - w0
        sel = src & (w >= 0) & (w <= 3 * (length - 1)) & (w % 3 == 0)
        si = np.nonzero(sel)[0]
        active[si] |= bits[src_row[si], w[si] // 3]
        ph = np.mod(w, 3)
        beep = np.zeros(n, np.uint8)
        bsel = part & (ph == 0) & (active > 0)
        beep[bsel] = 1
        heard = beep_round(indptr, indices, beep)
        ph1 = part & (ph == 1)
        active[ph1] = heard[ph1]
        idx = (w - 1) // 3
        ok = ph1 & (idx >= 0) & (idx < length)
        out[ok, idx[ok]] = heard[ok]
    return out


def beep_bitpairs(indptr, indices, mode, src_mask, bits, length, relay_mask):
    """Two-rounds-per-bit beep exchanges.

    mode 0 (boundary probe): bit 1 -> beep,listen; bit 0 -> listen,beep;
        returns heard-while-listening flags.
    mode 1 (intercommunication): bit 1 -> beep,beep; bit 0 -> listen,listen;
        relays repeat round-1 beeps in round 2; returns OR-merged bit rows.
    mode 2 (max detection): like mode 1 but a listening source that hears a
        beep becomes marked and relays from the next bit on; returns marks.
    """
    n = src_mask.shape[0]
    src = src_mask > 0
    relay = relay_mask > 0
    if mode == 0:
        flag = np.zeros(n, np.uint8)
        for t in range(length):
            for half in (0, 1):
                want = 1 if half == 0 else 0
                beep = np.zeros(n, np.uint8)
                beep[src & (bits[:, t] == want)] = 1
                heard = beep_round(indptr, indices, beep)
                flag |= heard
        return flag
    if mode == 1:
        out = bits.copy()
        for t in range(length):
            one = src & (bits[:, t] == 1)
            beep1 = np.zeros(n, np.uint8)
            beep1[one] = 1
            heard1 = beep_round(indptr, indices, beep1)
            beep2 = beep1.copy()
            beep2[relay & (heard1 > 0)] = 1
            heard2 = beep_round(indptr, indices, beep2)
            got = src & (bits[:, t] == 0) & ((heard1 > 0) | (heard2 > 0))
            out[got, t] = 1
        return out
    marked = np.zeros(n, np.uint8)
    for t in range(length):
        live = src & (marked == 0)
        one = live & (bits[:, t] == 1)
        beep1 = np.zeros(n, np.uint8)
        beep1[one] = 1
        heard1 = beep_round(indptr, indices, beep1)
        relays_now = relay | (src & (marked > 0))
        beep2 = beep1.copy()
        beep2[relays_now & (heard1 > 0)] = 1
        heard2 = beep_round(indptr, indices, beep2)
        newly = live & (bits[:, t] == 0) & ((heard1 > 0) | (heard2 > 0))
        marked[newly] = 1
    return marked
