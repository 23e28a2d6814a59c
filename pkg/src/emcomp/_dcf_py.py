"""Pure-Python kernel for the two-party comparison function.

Key generation and evaluation of keys (k0, k1) satisfying, for every x in
[0, 2^in_bits):

    Eval(0, k0, x) + Eval(1, k1, x)  =  beta * 1{x < alpha}   (mod 2^out_bits)

The construction walks a binary tree of 128-bit seeds, one level per input
bit (most significant first).  Each node expands through the fixed-key AES
PRG into two child seeds, two control bits and two group words; a per-level
correction word steers the two parties' walks so they stay identical off
the path to alpha and accumulate beta across it.

Everything here is batched: N independent keys are generated or evaluated
level-by-level, so each level costs a handful of bulk AES-ECB calls instead
of N small ones.  Group arithmetic runs in uint64 and is reduced modulo
2^out_bits only where values are stored or returned, which is exact because
addition and subtraction commute with the reduction.

Byte layout of a packed key (little-endian, levels in order):

    root seed                16
    per level i:  s_cw       16
                  v_cw        8
                  t_cw_left   1
                  t_cw_right  1
    final_cw                  8
"""

from __future__ import annotations

import numpy as np

from .prf import mmo_batch

LEVEL_BYTES = 26
HEADER_BYTES = 16
FINAL_BYTES = 8


def key_size(in_bits: int) -> int:
    return HEADER_BYTES + LEVEL_BYTES * in_bits + FINAL_BYTES


def _out_mask(out_bits: int) -> np.uint64:
    return np.uint64(MASK64 if out_bits == 64 else (1 << out_bits) - 1)


MASK64 = 0xFFFFFFFFFFFFFFFF


def _expand(seeds: np.ndarray):
    """PRG step: (N,16) seeds -> (sL, tL, vL, sR, tR, vR).

    The t bit of each child is its seed's lowest bit, cleared afterwards;
    the group words come from a third PRG block.
    """
    c0 = mmo_batch(0, seeds)
    c1 = mmo_batch(1, seeds)
    c2 = mmo_batch(2, seeds)
    t_l = c0[:, 0] & 1
    t_r = c1[:, 0] & 1
    c0[:, 0] &= 0xFE
    c1[:, 0] &= 0xFE
    v_l = c2[:, :8].copy().view("<u8").ravel()
    v_r = c2[:, 8:].copy().view("<u8").ravel()
    return c0, t_l, v_l, c1, t_r, v_r


def _convert(seeds: np.ndarray) -> np.ndarray:
    """Final seed-to-group map (independent PRG key)."""
    c3 = mmo_batch(3, seeds)
    return c3[:, :8].copy().view("<u8").ravel()


def _pm(cond: np.ndarray, val: np.ndarray) -> np.ndarray:
    """val where cond is 0, -val where cond is 1 (mod 2^64)."""
    return np.where(cond.astype(bool), np.uint64(0) - val, val)


def gen_batch(
    alphas: np.ndarray,
    betas: np.ndarray,
    in_bits: int,
    out_bits: int,
    root0: np.ndarray,
    root1: np.ndarray,
):
    """Generate N key pairs.  root0/root1 are (N, 16) uint8 seed blocks."""
    alphas = np.asarray(alphas, dtype=np.uint64)
    betas = np.asarray(betas, dtype=np.uint64) & _out_mask(out_bits)
    n = alphas.shape[0]
    size = key_size(in_bits)
    k0 = np.zeros((n, size), dtype=np.uint8)
    k1 = np.zeros((n, size), dtype=np.uint8)
    k0[:, :16] = root0
    k1[:, :16] = root1

    s0 = np.ascontiguousarray(root0, dtype=np.uint8).copy()
    s1 = np.ascontiguousarray(root1, dtype=np.uint8).copy()
    t0 = np.zeros(n, dtype=np.uint8)
    t1 = np.ones(n, dtype=np.uint8)
    v_alpha = np.zeros(n, dtype=np.uint64)
    omask = _out_mask(out_bits)

    for lvl in range(in_bits):
        a_bit = ((alphas >> np.uint64(in_bits - 1 - lvl)) & np.uint64(1)).astype(np.uint8)
        keep_right = a_bit.astype(bool)

        sL0, tL0, vL0, sR0, tR0, vR0 = _expand(s0)
        sL1, tL1, vL1, sR1, tR1, vR1 = _expand(s1)

        # keep follows the alpha bit; lose is the opposite subtree
        s0_lose = np.where(keep_right[:, None], sL0, sR0)
        s1_lose = np.where(keep_right[:, None], sL1, sR1)
        v0_lose = np.where(keep_right, vL0, vR0)
        v1_lose = np.where(keep_right, vL1, vR1)
        s0_keep = np.where(keep_right[:, None], sR0, sL0)
        s1_keep = np.where(keep_right[:, None], sR1, sL1)
        v0_keep = np.where(keep_right, vR0, vL0)
        v1_keep = np.where(keep_right, vR1, vL1)
        t0_keep = np.where(keep_right, tR0, tL0)
        t1_keep = np.where(keep_right, tR1, tL1)

        s_cw = s0_lose ^ s1_lose
        v_cw = _pm(t1, v1_lose - v0_lose - v_alpha)
        # when the lose side is the left child, beta joins the correction
        v_cw = v_cw + np.where(keep_right, _pm(t1, betas), np.uint64(0))
        v_alpha = v_alpha - v1_keep + v0_keep + _pm(t1, v_cw)

        t_cw_l = tL0 ^ tL1 ^ a_bit ^ 1
        t_cw_r = tR0 ^ tR1 ^ a_bit
        t_cw_keep = np.where(keep_right, t_cw_r, t_cw_l)

        off = HEADER_BYTES + LEVEL_BYTES * lvl
        for k in (k0, k1):
            k[:, off : off + 16] = s_cw
            k[:, off + 16 : off + 24] = (v_cw & omask)[:, None].view(np.uint8)
            k[:, off + 24] = t_cw_l
            k[:, off + 25] = t_cw_r

        on0 = (t0 == 1)[:, None]
        on1 = (t1 == 1)[:, None]
        s0 = np.where(on0, s0_keep ^ s_cw, s0_keep)
        s1 = np.where(on1, s1_keep ^ s_cw, s1_keep)
        t0 = t0_keep ^ (t0 & t_cw_keep)
        t1 = t1_keep ^ (t1 & t_cw_keep)

    final = _pm(t1, _convert(s1) - _convert(s0) - v_alpha) & omask
    foff = HEADER_BYTES + LEVEL_BYTES * in_bits
    for k in (k0, k1):
        k[:, foff : foff + 8] = final[:, None].view(np.uint8)
    return k0, k1


def eval_batch(
    party: int,
    keys: np.ndarray,
    xs: np.ndarray,
    in_bits: int,
    out_bits: int,
) -> np.ndarray:
    """Evaluate N packed keys at N points; returns this party's output share."""
    keys = np.ascontiguousarray(keys, dtype=np.uint8)
    xs = np.asarray(xs, dtype=np.uint64)
    n = keys.shape[0]
    if keys.shape != (n, key_size(in_bits)):
        raise ValueError("key array shape does not match in_bits")

    seeds = keys[:, :16].copy()
    t = np.full(n, party, dtype=np.uint8)
    acc = np.zeros(n, dtype=np.uint64)
    negate = party == 1

    for lvl in range(in_bits):
        off = HEADER_BYTES + LEVEL_BYTES * lvl
        s_cw = keys[:, off : off + 16]
        v_cw = keys[:, off + 16 : off + 24].copy().view("<u8").ravel()
        t_cw_l = keys[:, off + 24]
        t_cw_r = keys[:, off + 25]

        sL, tL, vL, sR, tR, vR = _expand(seeds)
        x_bit = ((xs >> np.uint64(in_bits - 1 - lvl)) & np.uint64(1)).astype(bool)

        # group contribution uses the raw expansion plus the correction
        # gated by the control bit held while entering this level
        v_here = np.where(x_bit, vR, vL) + np.where(t == 1, v_cw, np.uint64(0))
        acc = acc - v_here if negate else acc + v_here

        on = (t == 1)[:, None]
        sL = np.where(on, sL ^ s_cw, sL)
        sR = np.where(on, sR ^ s_cw, sR)
        tL = tL ^ (t & t_cw_l)
        tR = tR ^ (t & t_cw_r)

        seeds = np.where(x_bit[:, None], sR, sL)
        t = np.where(x_bit, tR, tL)

    foff = HEADER_BYTES + LEVEL_BYTES * in_bits
    final = keys[:, foff : foff + 8].copy().view("<u8").ravel()
    tail = _convert(seeds) + np.where(t == 1, final, np.uint64(0))
    acc = acc - tail if negate else acc + tail
    return acc & _out_mask(out_bits)
