"""Superimposed codes over bitwise-OR channels.

Two families:

* exact-set codes of strength k: every OR of at most k codewords is unique,
  and distinguishable from every OR of more than k codewords;
* approximate counting codes: a codeword distribution whose OR reveals the
  number of constituent codewords up to a (1+delta) factor.

Codewords are NumPy uint8 arrays with one entry per bit.  All logs are base 2
and lengths round up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .rng import Stream, purpose_id


class _MoreThanK:
    def __repr__(self):
        return "MORE_THAN_K"


#: Returned by :func:`si_decode` when the word is not an OR of <= k codewords.
MORE_THAN_K = _MoreThanK()

_P_SI = purpose_id("si-code-bits")
_P_APPROX = purpose_id("approx-code-bits")

# Verified-generation budget: exhaustive cover checks are only run at small
# universe/strength; larger codes ship unverified with the probabilistic
# guarantee of the random construction.
_VERIFY_MAX_N = 64
_VERIFY_MAX_K = 2


def _log2_ceil(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2))))


def si_length(universe: int, strength: int) -> int:
    """Code length 4*(k+1)^2 * ceil(log2 N)."""
    return 4 * (strength + 1) ** 2 * _log2_ceil(universe)


@dataclass
class SICode:
    universe: int
    strength: int
    length: int
    words: np.ndarray  # uint8, shape (universe, length)
    verified: bool

    def word(self, i: int) -> np.ndarray:
        return self.words[i]


def _cover_ok(words: np.ndarray, k: int) -> bool:
    """Check: every codeword has a 1 where the OR of any k others is 0."""
    w = words.astype(bool)
    n = w.shape[0]
    if k == 1:
        ones = w.astype(np.int16)
        m = ones @ (1 - ones).T  # m[i, j] = #positions with w[i]=1, w[j]=0
        np.fill_diagonal(m, 1)
        return bool((m > 0).all())
    for a in range(n):
        for b in range(a + 1, n):
            union = w[a] | w[b]
            uncovered = (w & ~union).any(axis=1)
            uncovered[a] = uncovered[b] = True
            if not uncovered.all():
                return False
    return True


def si_generate(universe: int, strength: int, stream: Stream, max_attempts: int = 64) -> SICode:
    """Random code with per-bit one-probability 1/(k+1).

    Small codes (N <= 64, k <= 2) are exhaustively verified and regenerated
    on failure (each attempt succeeds with probability >= 1/2); larger codes
    are returned unverified.
    """
    if universe < 2:
        raise ValueError("universe must be at least 2")
    if strength < 1:
        raise ValueError("strength must be at least 1")
    if strength >= universe:
        raise ValueError("strength must be smaller than the universe")
    length = si_length(universe, strength)
    p16 = int(round(65536.0 / (strength + 1)))
    verify = universe <= _VERIFY_MAX_N and strength <= _VERIFY_MAX_K
    for attempt in range(max_attempts):
        rows = [
            K.bernoulli_bits(stream.key, _P_SI, attempt * universe + i, length, p16)
            for i in range(universe)
        ]
        words = np.stack(rows)
        if not verify:
            return SICode(universe, strength, length, words, verified=False)
        if len({row.tobytes() for row in rows}) == universe and _cover_ok(words, strength):
            return SICode(universe, strength, length, words, verified=True)
    raise RuntimeError(f"no verified SI({strength}) code for N={universe} after {max_attempts} attempts")


def superimpose(words, length: int | None = None) -> np.ndarray:
    """Bitwise OR of codewords; the empty superimposition is all zeros."""
    words = list(words)
    if not words:
        if length is None:
            raise ValueError("length is required for an empty superimposition")
        return np.zeros(length, np.uint8)
    out = np.array(words[0], dtype=np.uint8, copy=True)
    for w in words[1:]:
        if len(w) != len(out):
            raise ValueError("codeword length mismatch")
        np.bitwise_or(out, w, out=out)
    if length is not None and len(out) != length:
        raise ValueError("codeword length mismatch")
    return out


def si_decode(code: SICode, word: np.ndarray):
    """Exact-set decoding: the ids whose OR equals the word, or MORE_THAN_K.

    Computes S = {i : support(c_i) subseteq support(word)}; answers S iff
    |S| <= k and the OR over S reproduces the word exactly.  Exact on
    verified codes; correct with the construction probability otherwise.
    """
    if len(word) != code.length:
        raise ValueError("word length does not match the code")
    w = word.astype(bool)
    contained = ~((code.words.astype(bool) & ~w).any(axis=1))
    ids = np.nonzero(contained)[0]
    if len(ids) > code.strength:
        return MORE_THAN_K
    if not np.array_equal(superimpose(code.words[ids], length=code.length) > 0, w):
        return MORE_THAN_K
    return frozenset(int(i) for i in ids)


def save_sicode(code: SICode, path) -> None:
    """Dump format: header "N k l", then one hex row per codeword."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{code.universe} {code.strength} {code.length}\n")
        for row in code.words:
            fh.write(np.packbits(row).tobytes().hex() + "\n")


def load_sicode(path) -> SICode:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        universe, strength, length = (int(x) for x in header)
        words = np.zeros((universe, length), np.uint8)
        for i in range(universe):
            raw = bytes.fromhex(fh.readline().strip())
            words[i] = np.unpackbits(np.frombuffer(raw, np.uint8))[:length]
    code = SICode(universe, strength, length, words, verified=False)
    if universe <= _VERIFY_MAX_N and strength <= _VERIFY_MAX_K:
        code.verified = _cover_ok(words, strength)
    return code


# Default Theta-constant for block_len.  Sized so that the worst aligned
# count in 1..32 at delta=0.1 (j=16, whose boundary block has a ones-majority
# margin of only 0.003) still decodes within the 1.1 factor in >= 97% of
# trials: the flip probability of a block with margin m over L bits is about
# Phi(-2*m*sqrt(L)), so L >= (2.0/(2*0.003))^2 ~ 1.1e5, i.e. a constant of
# ~190 at N=64.  48 is measurably too small there (~15% failures).
DEFAULT_BLOCK_CONST = 192


@dataclass
class ApproxCodeParams:
    """Parameters of a (1+delta)-approximate k-counting code.

    Codewords have block_count blocks of block_len bits; bit of block i is
    one with probability p_i = 1 - 2^(-1/(1+delta)^i).  block_len defaults to
    ceil(block_const * ceil(log2 N) / delta^2).
    """

    universe: int
    max_count: int
    delta: float
    block_const: int = DEFAULT_BLOCK_CONST
    block_len: int = 0
    block_count: int = field(init=False)

    def __post_init__(self):
        if self.universe < 2 or self.max_count < 1 or self.delta <= 0:
            raise ValueError("invalid approximate-code parameters")
        self.block_count = max(1, math.ceil(math.log(self.max_count) / math.log(1.0 + self.delta) - 1e-12))
        if self.block_len <= 0:
            self.block_len = math.ceil(self.block_const * _log2_ceil(self.universe) / self.delta**2)
        for i in range(self.block_count):
            if not 0.0 < self.p(i) < 1.0:
                raise ValueError(f"degenerate block probability p_{i}")

    @property
    def length(self) -> int:
        return self.block_count * self.block_len

    def p(self, i: int) -> float:
        return 1.0 - 2.0 ** (-1.0 / (1.0 + self.delta) ** i)


def approx_sample(params: ApproxCodeParams, stream: Stream, sample_index: int = 0) -> np.ndarray:
    """One codeword from the distribution (bit probabilities quantized to 1/65536)."""
    out = np.empty(params.length, np.uint8)
    for i in range(params.block_count):
        p16 = int(round(params.p(i) * 65536.0))
        out[i * params.block_len : (i + 1) * params.block_len] = K.bernoulli_bits(
            stream.key, _P_APPROX, sample_index * params.block_count + i, params.block_len, p16
        )
    return out


def approx_decode_exponent(params: ApproxCodeParams, word: np.ndarray) -> int:
    """Largest block index with strictly more ones than zeros; -1 if none."""
    if len(word) != params.length:
        raise ValueError("word length does not match the parameters")
    half = params.block_len / 2.0
    best = -1
    for i in range(params.block_count):
        ones = int(np.count_nonzero(word[i * params.block_len : (i + 1) * params.block_len]))
        if ones > half:
            best = i
    return best


def approx_decode(params: ApproxCodeParams, word: np.ndarray) -> float:
    """Count estimate (1+delta)^{i*}; 1 for a nonzero word with no majority
    block, 0 for the all-zero word."""
    exp = approx_decode_exponent(params, word)
    if exp >= 0:
        return (1.0 + params.delta) ** exp
    return 1.0 if word.any() else 0.0


# -- packed fast path ------------------------------------------------------
# Same bit draws and the same decoder as the uint8 API, on 64-bit words.
# Used where codeword volume matters (Monte-Carlo over long codes); requires
# word-aligned blocks.


def _require_aligned(params: ApproxCodeParams):
    if params.block_len % 64:
        raise ValueError("packed path needs block_len divisible by 64")


def approx_sample_packed(params: ApproxCodeParams, stream: Stream, sample_index: int = 0) -> np.ndarray:
    _require_aligned(params)
    wpb = params.block_len // 64
    out = np.empty(params.block_count * wpb, np.uint64)
    for i in range(params.block_count):
        p16 = int(round(params.p(i) * 65536.0))
        out[i * wpb : (i + 1) * wpb] = K.bernoulli_words(
            stream.key, _P_APPROX, sample_index * params.block_count + i, params.block_len, p16
        )
    return out


def approx_unpack(params: ApproxCodeParams, words: np.ndarray) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[: params.length].copy()


def approx_decode_exponent_packed(params: ApproxCodeParams, words: np.ndarray) -> int:
    _require_aligned(params)
    wpb = params.block_len // 64
    half = params.block_len / 2.0
    counts = np.bitwise_count(words).reshape(params.block_count, wpb).sum(axis=1)
    majority = np.nonzero(counts > half)[0]
    return int(majority[-1]) if majority.size else -1


def approx_decode_packed(params: ApproxCodeParams, words: np.ndarray) -> float:
    exp = approx_decode_exponent_packed(params, words)
    if exp >= 0:
        return (1.0 + params.delta) ** exp
    return 1.0 if words.any() else 0.0
