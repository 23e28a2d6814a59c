"""Two-party additive and boolean secret sharing over Z_{2^ell}.

Share values are uint64 numpy arrays (scalars are length-1 arrays), so every
operation here is batched by construction: independent multiplications that
belong to the same protocol round travel in one message.

Conventions used throughout the package:

* party 0 adds public constants ("pub" terms), party 1 contributes zero;
* a reveal barrier is one call to `Channel.exchange`, and everything a
  party sends in that barrier is packed into a single frame;
* ring payloads are bit-packed to exactly `ell` bits per element, boolean
  payloads to 1 bit per element, so the transcript's bit counters are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prf import PrfSeed, prf_u64
from .ring import RingConfig
from .transport import MT_BITS, MT_OPEN


U64_NEG1 = np.uint64(0xFFFFFFFFFFFFFFFF)


class MaterialError(RuntimeError):
    """Missing, mismatched or re-used dealer material."""


class WireMismatchError(ValueError):
    pass


def _as_u64(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.uint64)
    return arr.reshape(1) if arr.ndim == 0 else arr


@dataclass
class ArithShare:
    party: int
    val: np.ndarray  # uint64, reduced mod 2^ell
    wire: str | None = None

    def __post_init__(self) -> None:
        self.val = _as_u64(self.val)


@dataclass
class BoolShare:
    party: int
    bits: np.ndarray  # uint8 in {0, 1}
    wire: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.bits, dtype=np.uint8)
        self.bits = arr.reshape(1) if arr.ndim == 0 else arr


@dataclass
class BeaverTriple:
    party: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    used: bool = field(default=False, compare=False)

    def consume(self) -> "BeaverTriple":
        if self.used:
            raise MaterialError("beaver triple already consumed")
        self.used = True
        return self


@dataclass
class DaBit:
    """Random bit shared both boolean-ly and arithmetically."""

    party: int
    bit_b: np.ndarray   # uint8 xor-shares
    bit_a: np.ndarray   # uint64 additive shares
    used: bool = field(default=False, compare=False)

    def consume(self) -> "DaBit":
        if self.used:
            raise MaterialError("daBit already consumed")
        self.used = True
        return self


def pub(party: int, value) -> np.ndarray:
    """Public constant as a share: party 0 carries it, party 1 carries zero."""
    v = _as_u64(value)
    return v if party == 0 else np.zeros_like(v)


# --------------------------------------------------------------------- shares
def share(secret, seed: PrfSeed, cfg: RingConfig) -> tuple[ArithShare, ArithShare]:
    """Split `secret` with PRF-derived first share.

    When both parties hold `seed`, the share of the non-owner needs no
    communication: it regenerates share_0 locally while the owner keeps
    secret - share_0.
    """
    secret = cfg.reduce_arr(_as_u64(secret))
    count = secret.size
    s0 = prf_u64(seed.key, seed.take((count + 1) // 2), count, cfg.ell).reshape(secret.shape)
    s1 = cfg.reduce_arr(secret - s0)
    return ArithShare(0, s0), ArithShare(1, s1)


def reconstruct(s0: ArithShare, s1: ArithShare, cfg: RingConfig) -> np.ndarray:
    if {s0.party, s1.party} != {0, 1}:
        raise WireMismatchError("need one share from each party")
    if s0.wire != s1.wire:
        raise WireMismatchError(f"wire ids differ: {s0.wire!r} vs {s1.wire!r}")
    return cfg.reduce_arr(s0.val + s1.val)


def reconstruct_bits(b0: BoolShare, b1: BoolShare) -> np.ndarray:
    if {b0.party, b1.party} != {0, 1}:
        raise WireMismatchError("need one share from each party")
    if b0.wire != b1.wire:
        raise WireMismatchError(f"wire ids differ: {b0.wire!r} vs {b1.wire!r}")
    return b0.bits ^ b1.bits


# -------------------------------------------------------------- wire packing
def pack_ring(arr: np.ndarray, ell: int) -> bytes:
    """Bit-pack ring elements to exactly ell bits each."""
    arr = _as_u64(arr)
    if ell == 64:
        return arr.astype("<u8").tobytes()
    shifts = np.arange(ell, dtype=np.uint64)
    bits = ((arr[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits, bitorder="little").tobytes()


def unpack_ring(buf: bytes, count: int, ell: int) -> np.ndarray:
    if ell == 64:
        return np.frombuffer(buf, dtype="<u8", count=count).copy()
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
    bits = bits[: count * ell].reshape(count, ell).astype(np.uint64)
    shifts = np.arange(ell, dtype=np.uint64)
    return (bits << shifts).sum(axis=1, dtype=np.uint64)


def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(buf: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")[:count].copy()


class RingRound:
    """Collects ring-element segments for one reveal barrier."""

    def __init__(self, cfg: RingConfig, mtype: int = MT_OPEN):
        self.cfg = cfg
        self.mtype = mtype
        self._segs: list[np.ndarray] = []

    def add(self, arr: np.ndarray) -> int:
        self._segs.append(_as_u64(arr))
        return len(self._segs) - 1

    def exchange(self, ch) -> list[np.ndarray]:
        """Send every segment in one frame; return the reconstructed opens."""
        mine = np.concatenate(self._segs) if self._segs else np.zeros(0, dtype=np.uint64)
        payload = pack_ring(mine, self.cfg.ell)
        peer_buf = ch.exchange(self.mtype, payload, nbits=mine.size * self.cfg.ell)
        peer = unpack_ring(peer_buf, mine.size, self.cfg.ell)
        opened = self.cfg.reduce_arr(mine + peer)
        out, at = [], 0
        for seg in self._segs:
            out.append(opened[at : at + seg.size])
            at += seg.size
        return out


# ------------------------------------------------------------ multiplication
def beaver_mul_many(
    pairs: list[tuple[ArithShare, ArithShare, BeaverTriple]],
    ch,
    cfg: RingConfig,
) -> list[ArithShare]:
    """Any number of independent products in exactly one round."""
    party = pairs[0][0].party
    rnd = RingRound(cfg, MT_OPEN)
    metas = []
    for x, y, t in pairs:
        t.consume()
        rnd.add(x.val - t.a)
        rnd.add(y.val - t.b)
        metas.append(t)
    opened = rnd.exchange(ch)
    out = []
    for i, t in enumerate(metas):
        d, e = opened[2 * i], opened[2 * i + 1]
        z = pub(party, d * e) + d * t.b + e * t.a + t.c
        out.append(ArithShare(party, cfg.reduce_arr(z)))
    return out


def beaver_mul(x: ArithShare, y: ArithShare, t: BeaverTriple, ch, cfg: RingConfig) -> ArithShare:
    """One secure product; masked differences (x-a, y-b) cross in one round."""
    return beaver_mul_many([(x, y, t)], ch, cfg)[0]


def dot_product_shares(
    xs: ArithShare,
    ys: ArithShare,
    triple: BeaverTriple,
    ch,
    cfg: RingConfig,
) -> ArithShare:
    """Shares of <xs, ys> in a single opening round.

    The result carries 2*frac fractional bits; rescaling is the caller's
    truncation gate.  The triple is a vector pair (a, b) with c = <a, b>.
    """
    if xs.val.shape != ys.val.shape:
        raise WireMismatchError("dot product needs equal lengths")
    triple.consume()
    rnd = RingRound(cfg, MT_OPEN)
    rnd.add(xs.val - triple.a)
    rnd.add(ys.val - triple.b)
    d, e = rnd.exchange(ch)
    party = xs.party
    z = (
        pub(party, (d * e).sum(dtype=np.uint64))
        + (d * triple.b).sum(dtype=np.uint64)
        + (e * triple.a).sum(dtype=np.uint64)
        + triple.c
    )
    return ArithShare(party, cfg.reduce_arr(z))


# ------------------------------------------------------------------ conversion
def b2a(v: BoolShare, aux: DaBit, ch, cfg: RingConfig) -> ArithShare:
    """Boolean -> arithmetic shares of the same bit via a daBit.

    One round; the only traffic is the masked bit e = v xor t.
    """
    aux.consume()
    e_mine = v.bits ^ aux.bit_b
    peer = ch.exchange(MT_BITS, pack_bits(e_mine), nbits=int(e_mine.size))
    e = e_mine ^ unpack_bits(peer, e_mine.size)
    sign = np.where(e.astype(bool), U64_NEG1, np.uint64(1))
    val = pub(v.party, e.astype(np.uint64)) + sign * aux.bit_a
    return ArithShare(v.party, cfg.reduce_arr(val))
