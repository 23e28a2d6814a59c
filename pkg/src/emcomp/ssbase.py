"""Secret-sharing comparison baseline: bit-decomposition sign test.

The masked value x_hat = x + r is opened (ell bits), then the sign of
x = x_hat - r comes out of a binary subtraction done as x_hat + NOT(r) + 1
over xor-shared bits of r.  Only the carry into the top bit is needed, so
the generate/propagate pairs reduce through a balanced combine tree
(the single-output slice of a Sklansky prefix adder):

    (g, p) o (g', p') = (g xor (p and g'), p and p')      [hi o lo]

Leaf pairs are local because the x_hat bits are public; the carry-in folds
into position 0.  Cost per gate: ell bits for the opening plus two AND
openings (2 bits each) for each of the ell-2 combine nodes - about 5*ell
bits - across 1 + ceil(log2(ell-1)) rounds.  That logarithmic round count
is exactly what the single-round FSS gate removes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ring import RingConfig
from .sharing import (
    ArithShare,
    BoolShare,
    MaterialError,
    RingRound,
    pack_bits,
    unpack_bits,
)
from .transport import MT_BITS, MT_MASKED


@dataclass
class EdaBits:
    """Random r shared arithmetically together with xor shares of its bits."""

    gate_id: str
    party: int
    ell: int
    r_share: np.ndarray      # (m,) additive share
    bit_shares: np.ndarray   # (m, ell) xor shares of r's bits, lsb first
    used: bool = field(default=False, compare=False)

    @property
    def size(self) -> int:
        return int(self.r_share.size)


@dataclass
class BoolTriplePool:
    """Flat pool of bit triples (a, b, c = a & b), consumed in order."""

    gate_id: str
    party: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cursor: int = field(default=0, compare=False)

    def take(self, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.cursor + count > self.a.size:
            raise MaterialError(
                f"boolean triple pool {self.gate_id!r} exhausted "
                f"({self.cursor + count} > {self.a.size})"
            )
        sl = slice(self.cursor, self.cursor + count)
        self.cursor += count
        return self.a[sl], self.b[sl], self.c[sl]

    @property
    def remaining(self) -> int:
        return int(self.a.size - self.cursor)


def and_bits(party: int, x: np.ndarray, y: np.ndarray, pool: BoolTriplePool, ch
             ) -> np.ndarray:
    """Batched AND of xor-shared bit vectors; one 2-bit-per-AND round."""
    a, b, c = pool.take(x.size)
    d_mine = x ^ a
    e_mine = y ^ b
    payload = pack_bits(np.concatenate([d_mine, e_mine]))
    peer = ch.exchange(MT_BITS, payload, nbits=2 * int(x.size))
    both = unpack_bits(peer, 2 * x.size)
    d = d_mine ^ both[: x.size]
    e = e_mine ^ both[x.size :]
    z = (d & b) ^ (e & a) ^ c
    if party == 0:
        z = z ^ (d & e)
    return z


def _carry_tree(party: int, g: np.ndarray, p: np.ndarray, pool: BoolTriplePool, ch
                ) -> np.ndarray:
    """Reduce (m, L) generate/propagate columns to the final carry (m,)."""
    while g.shape[1] > 1:
        L = g.shape[1]
        pairs = L // 2
        g_lo, p_lo = g[:, 0 : 2 * pairs : 2], p[:, 0 : 2 * pairs : 2]
        g_hi, p_hi = g[:, 1 : 2 * pairs : 2], p[:, 1 : 2 * pairs : 2]
        # both ANDs of every pair share one round
        x = np.concatenate([p_hi.ravel(), p_hi.ravel()])
        y = np.concatenate([g_lo.ravel(), p_lo.ravel()])
        z = and_bits(party, x, y, pool, ch)
        half = pairs * g.shape[0]
        new_g = g_hi ^ z[:half].reshape(g_hi.shape)
        new_p = z[half:].reshape(p_hi.shape)
        if L % 2:
            new_g = np.concatenate([new_g, g[:, -1:]], axis=1)
            new_p = np.concatenate([new_p, p[:, -1:]], axis=1)
        g, p = new_g, new_p
    return g[:, 0]


def carry_msb(party: int, xhat: np.ndarray, aux: EdaBits, pool: BoolTriplePool,
              ch, cfg: RingConfig) -> np.ndarray:
    """Xor shares of the top bit of x_hat - r via the combine tree."""
    ell = cfg.ell
    shifts = np.arange(ell, dtype=np.uint64)
    a_bits = ((xhat[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)  # public
    nb = aux.bit_shares ^ (1 if party == 0 else 0)  # NOT r, shared
    g = a_bits & nb
    p = (a_bits if party == 0 else 0) ^ nb
    # carry-in of the +1 folds into position 0: g0' = g0 xor p0
    g0 = g[:, 0] ^ p[:, 0]
    g = np.concatenate([g0[:, None], g[:, 1 : ell - 1]], axis=1)
    p = np.concatenate([np.zeros_like(g0)[:, None], p[:, 1 : ell - 1]], axis=1)
    carry = _carry_tree(party, g, p, pool, ch)
    msb = nb[:, ell - 1] ^ carry
    if party == 0:
        msb = msb ^ a_bits[:, ell - 1]
    return msb


def ss_drelu(x: ArithShare, aux: EdaBits, pool: BoolTriplePool, ch, cfg: RingConfig
             ) -> BoolShare:
    """Boolean shares of 1{x >= 0} from the adder circuit."""
    if aux.used:
        raise MaterialError(f"edabits {aux.gate_id!r} already consumed")
    aux.used = True
    rnd = RingRound(cfg, MT_MASKED)
    rnd.add(x.val + aux.r_share)
    (xhat,) = rnd.exchange(ch)
    msb = carry_msb(x.party, xhat, aux, pool, ch, cfg)
    v = msb ^ (1 if x.party == 0 else 0)  # drelu = NOT msb
    return BoolShare(x.party, v)


def ss_drelu_offsets(party: int, xhat: np.ndarray, offsets: np.ndarray,
                     aux: EdaBits, pool: BoolTriplePool, ch, cfg: RingConfig
                     ) -> list[BoolShare]:
    """Sign tests of x - offset_k for every public offset, one revealed wire.

    The k circuits run in lockstep so the AND rounds stay at tree depth.
    """
    if aux.used:
        raise MaterialError(f"edabits {aux.gate_id!r} already consumed")
    aux.used = True
    m = xhat.size
    k = offsets.size
    pts = cfg.reduce_arr(xhat[None, :] - offsets[:, None]).reshape(-1)
    aux_rep = EdaBits(
        aux.gate_id, aux.party, aux.ell,
        np.tile(aux.r_share, k), np.tile(aux.bit_shares, (k, 1)),
    )
    msb = carry_msb(party, pts, aux_rep, pool, ch, cfg).reshape(k, m)
    flip = 1 if party == 0 else 0
    return [BoolShare(party, msb[i] ^ flip) for i in range(k)]


def make_edabits(gate_id: str, m: int, cfg: RingConfig, rng) -> tuple[EdaBits, EdaBits]:
    ell = cfg.ell
    r = rng.u64(m, ell)
    shifts = np.arange(ell, dtype=np.uint64)
    bits = ((r[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    r0 = rng.u64(m, ell)
    b0 = rng.bits((m, ell))
    return (
        EdaBits(gate_id, 0, ell, r0, b0),
        EdaBits(gate_id, 1, ell, cfg.reduce_arr(r - r0), bits ^ b0),
    )


def make_bool_triples(gate_id: str, count: int, rng) -> tuple[BoolTriplePool, BoolTriplePool]:
    a = rng.bits(count)
    b = rng.bits(count)
    c = a & b
    a0 = rng.bits(count)
    b0 = rng.bits(count)
    c0 = rng.bits(count)
    return (
        BoolTriplePool(gate_id, 0, a0, b0, c0),
        BoolTriplePool(gate_id, 1, a ^ a0, b ^ b0, c ^ c0),
    )


def ss_drelu_ands(ell: int) -> int:
    """AND count of one sign test (used for provisioning and cost asserts)."""
    return 2 * (ell - 2)
