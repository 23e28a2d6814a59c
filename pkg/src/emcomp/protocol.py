"""End-to-end secure embedding comparison between a client and a server.

Three phases over one session:

* basic - for every database entry i, compute shares of the cosine
  numerator y_i = <P_c, P_i> and denominator z_i = |P_c| * |P_i|, divide,
  subtract the public threshold and run the sign gate.  Nothing about
  y, z, the quotient, or the comparison bits is revealed; every message is
  either a uniformly masked opening or a masked wire.
* indices - unmask the comparison bits and reveal them to the client only.
* bit - aggregate the bits to a count a, test a > 0 (as a-1 >= 0), and
  reveal that single bit to the client only, hiding the match count.

The comparison backend is pluggable: "fss" uses the single-round gates,
"ss" swaps every sign test for the logarithmic-round adder circuit (and
converts its boolean outputs with daBits where arithmetic is needed).
All other components - sharing, products, truncation - are identical, so
benchmark differences isolate the comparison protocol.

Norms are computed locally by each input's owner in plaintext and shared
with PRF-derived shares (zero online bytes; both parties hold the seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import division, fss, ssbase
from .dealer import PartyMaterial, provision
from .prf import PrfSeed, prf_u64
from .ring import RingConfig
from .sharing import (
    ArithShare,
    BoolShare,
    RingRound,
    b2a,
    pack_bits,
    pub,
    unpack_bits,
)
from .transport import (
    MT_HANDSHAKE,
    MT_MASKED,
    MT_OPEN,
    MT_OUTPUT,
    Transcript,
    channel_pair,
    run_pair,
)


class ProtocolAbort(RuntimeError):
    """Handshake or session-state mismatch between the parties."""


@dataclass(frozen=True)
class Embedding:
    """Real-valued feature vector with an opaque label."""

    values: np.ndarray
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("embedding needs at least 2 dimensions")
        if not np.linalg.norm(self.values) > 0:
            raise ValueError("embedding must have positive norm")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass
class EmbeddingDb:
    embeddings: list[Embedding]

    def __post_init__(self) -> None:
        if not self.embeddings:
            raise ValueError("database must hold at least one embedding")
        dims = {e.n for e in self.embeddings}
        if len(dims) != 1:
            raise ValueError("database dimensions are not uniform")

    @property
    def m(self) -> int:
        return len(self.embeddings)

    @property
    def n(self) -> int:
        return self.embeddings[0].n

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([e.values for e in self.embeddings])

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.embeddings]


def default_guard_band(cfg: RingConfig) -> float:
    """Comparisons closer to the threshold than this may flip on
    fixed-point error: truncation plus division residual."""
    return 2.0 ** (-cfg.frac + 2) + 2 * 2.0 ** (1 - cfg.frac)


@dataclass(frozen=True)
class ProtocolConfig:
    threshold: float = 0.35
    mode: str = "indices"            # "indices" | "bit"
    ring: RingConfig = field(default_factory=RingConfig)
    guard_band: float | None = None
    variant: str = "fss"             # "fss" | "ss"
    compare: str = "division"        # "division" | "crossmul"
    threads: int = 1

    def __post_init__(self) -> None:
        if not -1.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (-1, 1)")
        if self.mode not in ("indices", "bit"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.variant not in ("fss", "ss"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.compare not in ("division", "crossmul"):
            raise ValueError(f"unknown compare path {self.compare!r}")
        gb = self.guard_band
        if gb is not None and gb < 4 * 2.0 ** (-self.ring.frac):
            raise ValueError("guard band below 4 ulp cannot absorb truncation error")

    @property
    def effective_guard(self) -> float:
        return self.guard_band if self.guard_band is not None else default_guard_band(self.ring)


def cosine_oracle(query: np.ndarray, db_matrix: np.ndarray) -> np.ndarray:
    """Plaintext reference: cos(P_c, P_i) for every i."""
    qn = np.linalg.norm(query)
    dn = np.linalg.norm(db_matrix, axis=1)
    return (db_matrix @ query) / (qn * dn)


@dataclass
class Outcome:
    mode: str
    indices: np.ndarray | None = None   # m bits, client only
    bit: bool | None = None             # single bit, client only
    session_id: int = 0


def _handshake(ch, mat: PartyMaterial, pcfg: ProtocolConfig) -> None:
    meta = mat.meta
    if (meta.variant, meta.mode, meta.compare) != (pcfg.variant, pcfg.mode, pcfg.compare):
        raise ProtocolAbort("dealer material does not match the session config")
    if meta.cfg != pcfg.ring:
        raise ProtocolAbort("dealer material was provisioned for a different ring")
    mine = np.array(
        [meta.cfg.ell, meta.cfg.frac, meta.m, meta.n,
         ("indices", "bit").index(pcfg.mode), ("fss", "ss").index(pcfg.variant),
         ("division", "crossmul").index(pcfg.compare), meta.session_id],
        dtype=np.uint64,
    )
    peer = np.frombuffer(
        ch.exchange(MT_HANDSHAKE, mine.tobytes(), nbits=mine.size * 64), dtype="<u8"
    )
    if not np.array_equal(mine, peer):
        raise ProtocolAbort(
            f"handshake mismatch: ours {mine.tolist()}, peer {peer.tolist()}"
        )


def _input_shares(party: int, mat: PartyMaterial, cfg: RingConfig,
                  query: Embedding | None, db: EmbeddingDb | None):
    """Both inputs become shares with zero communication: the owner keeps
    secret minus the PRF share that the other party derives locally."""
    m, n = mat.meta.m, mat.meta.n
    seed_c = PrfSeed(mat.take("input:client"))
    seed_s = PrfSeed(mat.take("input:server"))
    c_blind = prf_u64(seed_c.key, seed_c.take((n + 2) // 2), n + 1, cfg.ell)
    s_blind = prf_u64(seed_s.key, seed_s.take((m * n + m + 1) // 2), m * n + m, cfg.ell)

    if party == 0:
        if query is None or query.n != n:
            raise ProtocolAbort("client query missing or of wrong dimension")
        enc = np.concatenate([cfg.encode_arr(query.values),
                              cfg.encode_arr(np.array([query.norm()]))])
        mine_c = cfg.reduce_arr(enc - c_blind)
        mine_s = s_blind
    else:
        if db is None or db.m != m or db.n != n:
            raise ProtocolAbort("server database missing or of wrong shape")
        enc = np.concatenate([
            cfg.encode_arr(db.matrix.reshape(-1)),
            cfg.encode_arr(np.linalg.norm(db.matrix, axis=1)),
        ])
        mine_c = c_blind
        mine_s = cfg.reduce_arr(enc - s_blind)

    xq = ArithShare(party, mine_c[:n])
    xn = ArithShare(party, mine_c[n:])
    pm = ArithShare(party, mine_s[: m * n].reshape(m, n))
    pn = ArithShare(party, mine_s[m * n :])
    return xq, xn, pm, pn


def _dots_and_norm_products(party, ch, cfg, mat, xq, xn, pm, pn):
    """One opening round covers all m dot products and all m norm products."""
    dot = mat.take("dot").consume()
    zt = mat.take("znorm").consume()
    rnd = RingRound(cfg, MT_OPEN)
    rnd.add(xq.val - dot.a)                 # (n,)
    rnd.add((pm.val - dot.B).reshape(-1))   # (m*n,)
    rnd.add(xn.val - zt.a)                  # (1,)
    rnd.add(pn.val - zt.b)                  # (m,)
    d, e_flat, dz, ez = rnd.exchange(ch)
    E = e_flat.reshape(pm.val.shape)
    y2 = (
        pub(party, (E * d[None, :]).sum(axis=1, dtype=np.uint64))
        + (dot.B * d[None, :]).sum(axis=1, dtype=np.uint64)
        + (E * dot.a[None, :]).sum(axis=1, dtype=np.uint64)
        + dot.c
    )
    z2 = pub(party, dz * ez) + dz * zt.b + ez * zt.a + zt.c
    return ArithShare(party, cfg.reduce_arr(y2)), ArithShare(party, cfg.reduce_arr(z2))


def _compare_ge_factory(party, ch, cfg, mat, variant, threads):
    """z >= boundary tests for the division normaliser; variant-specific."""

    def fss_compare(z: ArithShare, bounds: np.ndarray) -> list[ArithShare]:
        bundle = mat.take("div:norm")
        fss.consume_bundle(bundle)
        rnd = RingRound(cfg, MT_MASKED)
        rnd.add(z.val + bundle.r_share)
        (zhat,) = rnd.exchange(ch)
        return fss.drelu_eval_offsets(party, bundle, zhat, bounds, cfg, threads)

    def ss_compare(z: ArithShare, bounds: np.ndarray) -> list[ArithShare]:
        aux = mat.take("div:norm")
        pool = mat.take("div:norm:pool")
        rnd = RingRound(cfg, MT_MASKED)
        rnd.add(z.val + aux.r_share)
        (zhat,) = rnd.exchange(ch)
        bools = ssbase.ss_drelu_offsets(party, zhat, bounds, aux, pool, ch, cfg)
        merged = BoolShare(party, np.concatenate([b.bits for b in bools]))
        arith = b2a(merged, mat.take("div:norm:dabits"), ch, cfg)
        mm = z.val.size
        return [
            ArithShare(party, arith.val[i * mm : (i + 1) * mm])
            for i in range(len(bools))
        ]

    return fss_compare if variant == "fss" else ss_compare


def _fss_sign(party, ch, cfg, mat, name, t: ArithShare, threads):
    """Masked reveal + local key evaluation; returns (arith, plain bool) shares."""
    bundle = mat.take(name)
    fss.consume_bundle(bundle)
    rnd = RingRound(cfg, MT_MASKED)
    rnd.add(t.val + bundle.r_share)
    (that,) = rnd.exchange(ch)
    v_arith, v_masked = fss.drelu_eval_public(party, bundle, that, cfg, threads)
    return v_arith, v_masked.bits ^ bundle.vmask_share


def _run_party(party: int, ch, mat: PartyMaterial, pcfg: ProtocolConfig,
               query: Embedding | None = None, db: EmbeddingDb | None = None) -> Outcome:
    cfg = pcfg.ring
    threads = pcfg.threads
    m = mat.meta.m
    F = division.div_frac(cfg)

    ch.set_phase("basic")
    _handshake(ch, mat, pcfg)
    if pcfg.compare == "division":
        # the divisor z = |P_c| * |P_i| must land inside the normaliser's
        # octave range; each owner validates its own norm locally
        lo, hi = 2.0 ** (division.Z_MIN_EXP / 2), 2.0 ** (division.Z_MAX_EXP / 2)
        if party == 0:
            norms = [query.norm()] if query is not None else []
        else:
            norms = np.linalg.norm(db.matrix, axis=1) if db is not None else []
        for nv in np.atleast_1d(norms):
            if not lo <= nv < hi:
                raise ValueError(
                    f"embedding norm {nv:.4g} outside [{lo:.4g}, {hi:.4g}); "
                    "rescale inputs or use the crossmul compare path"
                )
    xq, xn, pm, pn = _input_shares(party, mat, cfg, query, db)
    y2, z2 = _dots_and_norm_products(party, ch, cfg, mat, xq, xn, pm, pn)
    y, z = fss.truncate_many(
        [(y2, mat.take("trunc_y")), (z2, mat.take("trunc_z"))],
        ch, cfg, rounding=True, threads=threads,
    )

    compare_ge = _compare_ge_factory(party, ch, cfg, mat, pcfg.variant, threads)

    if pcfg.compare == "division":
        if pcfg.variant == "fss":
            # the division gate consumes masked wires: mask, reveal, hand over
            r_y, r_z = mat.take("div:mask_y"), mat.take("div:mask_z")
            rnd = RingRound(cfg, MT_MASKED)
            rnd.add(y.val + r_y.r_share)
            rnd.add(z.val + r_z.r_share)
            yhat_v, zhat_v = rnd.exchange(ch)
            c = division.div_gate(
                fss.MaskedValue("y", yhat_v), fss.MaskedValue("z", zhat_v),
                r_y, r_z, mat, ch, cfg, compare_ge, party, threads,
            )
        else:
            c = division.goldschmidt_divide(y, z, mat, ch, cfg, compare_ge,
                                            threads=threads)
        th_enc = np.uint64(cfg.reduce(round(pcfg.threshold * (1 << F))))
        t = ArithShare(party, cfg.reduce_arr(c.val - pub(party, th_enc)))
    else:
        # cross-multiplied form: y - th*z >= 0, valid because z > 0
        th_enc = np.uint64(cfg.reduce(round(pcfg.threshold * (1 << cfg.frac))))
        thz2 = ArithShare(party, cfg.reduce_arr(z.val * th_enc))
        (thz,) = fss.truncate_many([(thz2, mat.take("cmp:thz"))], ch, cfg,
                                   rounding=True, threads=threads)
        t = ArithShare(party, cfg.reduce_arr(y.val - thz.val))

    if pcfg.variant == "fss":
        v_arith, v_plain_bits = _fss_sign(party, ch, cfg, mat, "cmp", t, threads)
    else:
        vb = ssbase.ss_drelu(t, mat.take("cmp"), mat.take("cmp:pool"), ch, cfg)
        v_arith, v_plain_bits = None, vb.bits

    outcome = Outcome(pcfg.mode, session_id=mat.meta.session_id)

    if pcfg.mode == "indices":
        ch.set_phase("indices")
        # one-way reveal: the server ships its share, only the client learns v
        if party == 1:
            ch.send(MT_OUTPUT, pack_bits(v_plain_bits), nbits=m)
        else:
            _, payload = ch.recv()
            outcome.indices = v_plain_bits ^ unpack_bits(payload, m)
    else:
        ch.set_phase("bit")
        if pcfg.variant == "fss":
            a = v_arith.val.sum(dtype=np.uint64)
        else:
            v_conv = b2a(BoolShare(party, v_plain_bits), mat.take("bit:v"), ch, cfg)
            a = v_conv.val.sum(dtype=np.uint64)
        t_pos = ArithShare(party, cfg.reduce_arr(
            np.array([a], dtype=np.uint64) - pub(party, np.uint64(1))
        ))
        if pcfg.variant == "fss":
            _, b_bits = _fss_sign(party, ch, cfg, mat, "pos", t_pos, threads)
        else:
            bb = ssbase.ss_drelu(t_pos, mat.take("pos"), mat.take("pos:pool"), ch, cfg)
            b_bits = bb.bits
        if party == 1:
            ch.send(MT_OUTPUT, pack_bits(b_bits), nbits=1)
        else:
            _, payload = ch.recv()
            outcome.bit = bool((b_bits ^ unpack_bits(payload, 1))[0])

    mat.assert_exhausted()
    return outcome


def run_client(ch, mat: PartyMaterial, pcfg: ProtocolConfig, query: Embedding) -> Outcome:
    return _run_party(0, ch, mat, pcfg, query=query)


def run_server(ch, mat: PartyMaterial, pcfg: ProtocolConfig, db: EmbeddingDb) -> Outcome:
    return _run_party(1, ch, mat, pcfg, db=db)


def run_simulated(query: Embedding, db: EmbeddingDb, pcfg: ProtocolConfig, seed: int,
                  capture: bool = False,
                  materials: tuple[PartyMaterial, PartyMaterial] | None = None
                  ) -> tuple[Outcome, Transcript]:
    """Dealer + both parties in-process over the simulated transport."""
    if materials is None:
        mat0, mat1 = provision(pcfg.variant, pcfg.mode, pcfg.compare,
                               db.m, db.n, pcfg.ring, seed)
    else:
        mat0, mat1 = materials
    ch0, ch1 = channel_pair(capture=capture)
    out0, _ = run_pair(
        lambda: run_client(ch0, mat0, pcfg, query),
        lambda: run_server(ch1, mat1, pcfg, db),
        channels=(ch0, ch1),
    )
    return out0, ch0.transcript
