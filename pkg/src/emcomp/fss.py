"""Function-secret-sharing gates in the masked-wire preprocessing model.

Gates follow one shape: the dealer fixed a uniform input mask r offline and
handed each party a share of r plus key material; online, the parties
reveal the masked wire x_hat = x + r (one round, ell bits each) and finish
locally by evaluating comparison-function keys at points derived from
x_hat.

The sign test uses a single (ell-1)-bit comparison key.  Writing
x_hat = m || x_low and r = rm || r_low, membership of x in [0, 2^(ell-1))
reduces to

    drelu(x) = C  xor  m  xor  rm  xor  1,      C = 1{x_low < r_low},

so the dealer bakes (1 - 2u) with u = rm xor 1 into the key payload and
shares the constant u; the gate output is then both an additive share of
the bit over the full ring and, through its low bit, an xor share.  The
boolean side is masked with a dealer output bit before it leaves the gate.

Truncation is the faithful variant: shift to offset-binary, split the mask
at the shift boundary, and correct the two possible borrows with two
comparison keys.  The result is exactly floor(x / 2^k) on the signed
reading, so a rounding truncation is just a pre-added half ulp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .prf import Drbg
from .ring import RingConfig
from .sharing import U64_NEG1, ArithShare, BoolShare, MaterialError, RingRound, pub
from .transport import MT_MASKED


@dataclass
class DcfKey:
    """One party's comparison-function key: Eval0(x) + Eval1(x) = beta * 1{x < alpha}."""

    party: int
    in_bits: int
    out_bits: int
    data: np.ndarray  # packed correction words, level order, little-endian

    @property
    def nbytes(self) -> int:
        return int(self.data.size)


def dcf_gen(alpha: int, beta: int, in_bits: int, out_bits: int,
            rng: Drbg | None = None) -> tuple[DcfKey, DcfKey]:
    """Dealer-side key generation for a single point function."""
    rng = rng or Drbg.from_seed(np.random.SeedSequence().entropy or 0)
    k0, k1 = kernels.gen_batch(
        np.array([alpha], dtype=np.uint64),
        np.array([beta], dtype=np.uint64),
        in_bits, out_bits, rng.seeds(1), rng.seeds(1),
    )
    return (
        DcfKey(0, in_bits, out_bits, k0[0]),
        DcfKey(1, in_bits, out_bits, k1[0]),
    )


def dcf_eval(party: int, key: DcfKey, x: int) -> int:
    """Local, deterministic evaluation; no communication."""
    if party != key.party:
        raise ValueError("key belongs to the other party")
    out = kernels.eval_batch(
        party, key.data.reshape(1, -1), np.array([x], dtype=np.uint64),
        key.in_bits, key.out_bits,
    )
    return int(out[0])


def consume_bundle(bundle) -> None:
    if bundle.used:
        raise MaterialError(f"gate bundle {bundle.gate_id!r} already consumed")
    bundle.used = True


_consume = consume_bundle


@dataclass
class MaskedValue:
    """Publicly revealed masked wire; both parties hold the same hat value."""

    wire_id: str
    hat: np.ndarray


@dataclass
class DreluBundle:
    """Per-gate-batch material for the sign gate (vector of m gates)."""

    gate_id: str
    party: int
    ell: int
    r_share: np.ndarray       # (m,) additive share of the input mask
    keys: np.ndarray          # (m, S) packed (ell-1)-bit keys, ring payload
    gamma_share: np.ndarray   # (m,) additive share of u = 1 xor msb(r)
    vmask_share: np.ndarray   # (m,) xor share of the boolean output mask
    used: bool = field(default=False, compare=False)

    @property
    def size(self) -> int:
        return int(self.r_share.size)


def drelu_eval_public(party: int, bundle: DreluBundle, xhat: np.ndarray,
                      cfg: RingConfig, threads: int = 1) -> tuple[ArithShare, BoolShare]:
    """Finish the sign gate on an already-revealed x_hat (local work only).

    Returns additive shares of v = 1{x >= 0} over the ring and xor shares
    of the masked bit v xor vmask.
    """
    low_mask = np.uint64((1 << (cfg.ell - 1)) - 1)
    low = xhat & low_mask
    msb = (xhat >> np.uint64(cfg.ell - 1)).astype(np.uint64)
    c = kernels.eval_batch(party, bundle.keys, low, cfg.ell - 1, cfg.ell, threads=threads)
    cprime = bundle.gamma_share + c
    sign = np.where(msb == 1, U64_NEG1, np.uint64(1))
    v_arith = cfg.reduce_arr(pub(party, msb) + sign * cprime)
    v_bits = (v_arith & np.uint64(1)).astype(np.uint8)
    return (
        ArithShare(party, v_arith),
        BoolShare(party, v_bits ^ bundle.vmask_share),
    )


def drelu_eval_offsets(party: int, bundle: DreluBundle, xhat: np.ndarray,
                       offsets: np.ndarray, cfg: RingConfig,
                       threads: int = 1) -> list[ArithShare]:
    """Evaluate each gate at several public offsets of one revealed wire.

    Used where a batch of thresholds is tested against the same masked
    value: v_k = 1{x - offset_k >= 0} costs no extra communication.
    """
    m = bundle.size
    k = offsets.size
    pts = cfg.reduce_arr(xhat[None, :] - offsets[:, None])  # (k, m)
    keys_rep = np.broadcast_to(bundle.keys, (k,) + bundle.keys.shape).reshape(
        k * m, bundle.keys.shape[1]
    )
    flat = np.ascontiguousarray(keys_rep)
    gamma = np.tile(bundle.gamma_share, k)
    low_mask = np.uint64((1 << (cfg.ell - 1)) - 1)
    low = pts.reshape(-1) & low_mask
    msb = (pts.reshape(-1) >> np.uint64(cfg.ell - 1)).astype(np.uint64)
    c = kernels.eval_batch(party, flat, low, cfg.ell - 1, cfg.ell, threads=threads)
    sign = np.where(msb == 1, U64_NEG1, np.uint64(1))
    v = cfg.reduce_arr(pub(party, msb) + sign * (gamma + c)).reshape(k, m)
    return [ArithShare(party, v[i]) for i in range(k)]


def drelu_gate(x: ArithShare, bundle: DreluBundle, ch, cfg: RingConfig,
               threads: int = 1) -> BoolShare:
    """Sign gate: boolean shares of 1{x >= 0}, masked with the dealer bit.

    Exactly one communication round: revealing x_hat = x + r, ell bits per
    party.  Everything after the reveal is local key evaluation.
    """
    _consume(bundle)
    rnd = RingRound(cfg, MT_MASKED)
    rnd.add(x.val + bundle.r_share)
    (xhat,) = rnd.exchange(ch)
    _, vbool = drelu_eval_public(x.party, bundle, xhat, cfg, threads)
    return vbool


@dataclass
class TruncBundle:
    """Material for one batch of faithful right shifts by `shift` bits."""

    gate_id: str
    party: int
    ell: int
    shift: int
    r_share: np.ndarray    # (m,) share of the input mask
    rh_share: np.ndarray   # (m,) share of floor(r / 2^shift)
    wrap_keys: np.ndarray  # (m, S) keys: alpha = r, beta = 2^(ell-shift), ell-bit domain
    low_keys: np.ndarray   # (m, S') keys: alpha = r mod 2^shift, beta = -1, shift-bit domain
    used: bool = field(default=False, compare=False)

    @property
    def size(self) -> int:
        return int(self.r_share.size)


def trunc_finish(party: int, bundle: TruncBundle, xhat: np.ndarray,
                 cfg: RingConfig, threads: int = 1) -> ArithShare:
    """Assemble floor(signed(x) / 2^shift) shares from a revealed x_hat."""
    k = bundle.shift
    half = np.uint64(1) << np.uint64(cfg.ell - 1)
    xt = cfg.reduce_arr(xhat + half)  # offset binary
    xt_low = xt & ((np.uint64(1) << np.uint64(k)) - np.uint64(1))
    xt_high = xt >> np.uint64(k)
    wrap = kernels.eval_batch(party, bundle.wrap_keys, xt, cfg.ell, cfg.ell, threads=threads)
    borrow = kernels.eval_batch(party, bundle.low_keys, xt_low, k, cfg.ell, threads=threads)
    out = (
        pub(party, xt_high - (np.uint64(1) << np.uint64(cfg.ell - 1 - k)))
        - bundle.rh_share
        + wrap
        + borrow
    )
    return ArithShare(party, cfg.reduce_arr(out))


def truncate_many(items: list[tuple[ArithShare, "TruncBundle"]], ch, cfg: RingConfig,
                  rounding: bool = True, threads: int = 1) -> list[ArithShare]:
    """Batch of truncations sharing one reveal round.

    With `rounding` the result is round-to-nearest (half ulp added before
    the shift); otherwise plain floor.
    """
    rnd = RingRound(cfg, MT_MASKED)
    for x, bundle in items:
        _consume(bundle)
        v = x.val + bundle.r_share
        if rounding and bundle.shift > 0:
            v = v + pub(x.party, np.uint64(1) << np.uint64(bundle.shift - 1))
        rnd.add(v)
    hats = rnd.exchange(ch)
    return [
        trunc_finish(x.party, bundle, hat, cfg, threads)
        for (x, bundle), hat in zip(items, hats)
    ]


def truncate(x: ArithShare, bundle: TruncBundle, ch, cfg: RingConfig,
             rounding: bool = False, threads: int = 1) -> ArithShare:
    """Rescale a product: shares of x / 2^shift within one ulp, one round."""
    return truncate_many([(x, bundle)], ch, cfg, rounding=rounding, threads=threads)[0]


# dealer-side constructors -------------------------------------------------
def make_drelu_bundle(gate_id: str, m: int, cfg: RingConfig, rng: Drbg
                      ) -> tuple[DreluBundle, DreluBundle]:
    ell = cfg.ell
    r = rng.u64(m, ell)
    r_low = r & np.uint64((1 << (ell - 1)) - 1)
    u = (np.uint64(1) ^ (r >> np.uint64(ell - 1))).astype(np.uint64)
    beta = cfg.reduce_arr(np.uint64(1) - np.uint64(2) * u)
    k0, k1 = kernels.gen_batch(r_low, beta, ell - 1, ell, rng.seeds(m), rng.seeds(m))
    r0 = rng.u64(m, ell)
    g0 = rng.u64(m, ell)
    vm = rng.bits(m)
    vm0 = rng.bits(m)
    return (
        DreluBundle(gate_id, 0, ell, r0, k0, g0, vm0),
        DreluBundle(gate_id, 1, ell, cfg.reduce_arr(r - r0), k1,
                    cfg.reduce_arr(u - g0), vm ^ vm0),
    )


def make_trunc_bundle(gate_id: str, m: int, shift: int, cfg: RingConfig, rng: Drbg
                      ) -> tuple[TruncBundle, TruncBundle]:
    if not 0 < shift < cfg.ell:
        raise ValueError("shift must be inside the ring width")
    ell = cfg.ell
    r = rng.u64(m, ell)
    r_low = r & ((np.uint64(1) << np.uint64(shift)) - np.uint64(1))
    r_high = r >> np.uint64(shift)
    beta_wrap = np.full(m, 1 << (ell - shift), dtype=np.uint64)
    beta_borrow = np.full(m, (1 << ell) - 1 if ell < 64 else 0xFFFFFFFFFFFFFFFF,
                          dtype=np.uint64)
    wk0, wk1 = kernels.gen_batch(r, beta_wrap, ell, ell, rng.seeds(m), rng.seeds(m))
    lk0, lk1 = kernels.gen_batch(r_low, beta_borrow, shift, ell, rng.seeds(m), rng.seeds(m))
    r0 = rng.u64(m, ell)
    rh0 = rng.u64(m, ell)
    return (
        TruncBundle(gate_id, 0, ell, shift, r0, rh0, wk0, lk0),
        TruncBundle(gate_id, 1, ell, shift, cfg.reduce_arr(r - r0),
                    cfg.reduce_arr(r_high - rh0), wk1, lk1),
    )
