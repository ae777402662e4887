"""Tunable protocol constants.

Every Theta(.) from the protocol descriptions gets an explicit constant here,
overridable from the CLI via --const KEY=VALUE.  Defaults are sized for the
desk-scale acceptance suite (n <= 512).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .codes import DEFAULT_BLOCK_CONST
from .decay import DecayConfig


@dataclass
class Constants:
    # decay family
    alpha: int = 12                # fast-decay budget constant
    long_phase_factor: int = 24    # phases per long-phase

    # candidate sampling and identifiers
    candidate_rate: float = 10.0   # candidate probability = rate*log2(n)/n
    id_bits_factor: int = 4        # ID length = factor*ceil(log2 n) bits
    packet_bits_factor: int = 8    # packet budget = factor*ceil(log2 n) bits

    # clustering (no collision detection)
    parts_factor: int = 6          # marking/boundary parts = factor*ceil(log2 n)
    cluster_epoch_slack: int = 2   # adaptive epoch cap multiplier for Fast-Cluster
    intercom_epoch_factor: float = 1.0  # intercom epochs = factor*ceil(log2 n)^2
    child_turns: int = 5           # tell-me-something-new turns for children
    pair_turns: int = 6            # delivery turns for (degree, ID) pairs

    # debates
    nocd_elim_fraction: float = 1.0 / 20.0  # per-debate guarantee used for the cap
    beep_elim_fraction: float = 1.0 / 10.0

    # beep protocol codes
    beep_count_k: int = 16              # count cap of the in-protocol counting code
    beep_count_delta: float = 0.1
    beep_block_len_factor: int = 16     # block_len = factor*ceil(log2 n), rounded up to 64
    beep_si_full_slack: int = 4         # full-exchange code strength = ceil(log2 n)+slack

    # standalone approximate-counting codes
    code_block_const: int = DEFAULT_BLOCK_CONST

    # harness
    round_limit_mult: float = 50.0

    def decay(self) -> DecayConfig:
        return DecayConfig(long_phase_factor=self.long_phase_factor, alpha=self.alpha)

    def id_bits(self, n: int) -> int:
        return self.id_bits_factor * max(1, math.ceil(math.log2(max(n, 2))))

    def with_overrides(self, overrides: dict) -> "Constants":
        known = {f.name: f.type for f in fields(self)}
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, val in overrides.items():
            if key not in known:
                raise KeyError(f"unknown constant {key!r}")
            values[key] = type(values[key])(val)
        return Constants(**values)


def candidate_probability(n: int, rate: float = 10.0) -> float:
    """min(1, rate*log2(n)/n), clamped so a single node is always a candidate."""
    return min(1.0, rate * math.log2(max(n, 2)) / n)


def debate_radius(n: int, diameter: int, index: int) -> int:
    """Growth radius of debate ``index`` (1-based): min(D, 4n*1.05^i/log2 n)."""
    raw = 4.0 * n * 1.05**index / math.log2(max(n, 2))
    return max(1, min(diameter, int(raw))) if diameter > 0 else 0


def debate_cap(n: int, elim_fraction: float) -> int:
    """Debates needed to whittle 20*log2(n) candidates at the per-debate
    elimination guarantee; protocols stop early once one candidate is left."""
    start = 20.0 * math.log2(max(n, 2))
    return max(1, math.ceil(math.log(start) / -math.log(1.0 - elim_fraction)))
