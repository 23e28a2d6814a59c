"""Offline dealer: correlated randomness for one protocol session.

Provisioning is a pure function of (protocol config, m, n, seed).  The
material plan is the single source of truth shared with the online runtime:
items are generated, serialised and consumed in plan order, so a session
that completes has used every bundle exactly once (asserted in tests), and
re-provisioning with the same seed is byte-identical.

Dealer file format (little-endian), one file per party:

    magic   "EMC1"
    u16     version (1)
    u8      party, u8 ell, u8 frac, u8 variant (0=fss 1=ss)
    u8      mode (0=indices 1=bit), u8 compare (0=division 1=crossmul)
    u64     session id
    u32     m, u32 n
    u32     counts: beaver triples, daBits, comparison keys (drelu+trunc),
            edabits, boolean triples
    raw items in plan order; shapes are implied by the header fields.

Each file contains only that party's shares.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import division, fss, ssbase
from .prf import Drbg
from .ring import RingConfig
from .sharing import BeaverTriple, DaBit, MaterialError

MAGIC = b"EMC1"
VERSION = 1

VARIANTS = ("fss", "ss")
MODES = ("indices", "bit")
COMPARES = ("division", "crossmul")


@dataclass
class MaskShare:
    """Additive share of a wire mask (the hat interface of a gate)."""

    gate_id: str
    party: int
    r_share: np.ndarray
    used: bool = field(default=False, compare=False)

    def consume(self) -> np.ndarray:
        if self.used:
            raise MaterialError(f"mask {self.gate_id!r} already consumed")
        self.used = True
        return self.r_share


@dataclass
class DotTriple:
    """Matrix Beaver triple for the batched dot products x . P_i."""

    gate_id: str
    party: int
    a: np.ndarray   # (n,)
    B: np.ndarray   # (m, n)
    c: np.ndarray   # (m,) shares of B @ a
    used: bool = field(default=False, compare=False)

    def consume(self) -> "DotTriple":
        if self.used:
            raise MaterialError(f"dot triple {self.gate_id!r} already consumed")
        self.used = True
        return self


@dataclass
class SessionMeta:
    session_id: int
    party: int
    variant: str
    mode: str
    compare: str
    m: int
    n: int
    cfg: RingConfig


class PartyMaterial:
    """One party's bundle store with consume-once semantics."""

    def __init__(self, meta: SessionMeta, items: dict[str, object]):
        self.meta = meta
        self._items = items
        self._taken: set[str] = set()

    def take(self, name: str):
        if name in self._taken:
            raise MaterialError(f"material {name!r} already consumed")
        if name not in self._items:
            raise MaterialError(f"insufficient dealer material: missing {name!r}")
        self._taken.add(name)
        return self._items[name]

    def names(self) -> list[str]:
        return list(self._items.keys())

    def assert_exhausted(self) -> None:
        """Every provisioned bundle was consumed, with zero remainder."""
        left = [n for n in self._items if n not in self._taken]
        if left:
            raise MaterialError(f"unused dealer material: {left}")
        for name in self._taken:
            item = self._items[name]
            if isinstance(item, ssbase.BoolTriplePool) and item.remaining:
                raise MaterialError(f"{name}: {item.remaining} boolean triples left over")


# ------------------------------------------------------------------ the plan
def material_plan(variant: str, mode: str, compare: str, m: int, n: int,
                  cfg: RingConfig) -> list[tuple[str, str, dict]]:
    """Ordered item list for one session; shared by dealer and runtime."""
    f = cfg.frac
    F = division.div_frac(cfg)
    nb = len(division.octave_boundaries(cfg))
    ands = ssbase.ss_drelu_ands(cfg.ell)
    plan: list[tuple[str, str, dict]] = [
        ("seed", "input:client", {}),
        ("seed", "input:server", {}),
        ("dottriple", "dot", {"m": m, "n": n}),
        ("triple", "znorm", {"m": m, "scalar_a": True}),
        ("trunc", "trunc_y", {"m": m, "shift": f}),
        ("trunc", "trunc_z", {"m": m, "shift": f}),
    ]
    if compare == "division":
        if variant == "fss":
            plan += [
                ("mask", "div:mask_y", {"m": m}),
                ("mask", "div:mask_z", {"m": m}),
                ("drelu", "div:norm", {"m": m}),
            ]
        else:
            plan += [
                ("edabits", "div:norm", {"m": m}),
                ("boolpool", "div:norm:pool", {"count": nb * ands * m}),
                ("dabits", "div:norm:dabits", {"m": nb * m}),
            ]
        for name in division.mul_names():
            plan.append(("triple", f"div:{name}", {"m": m}))
            plan.append(("trunc", f"div:{name}:t", {"m": m, "shift": F}))
    else:
        plan.append(("trunc", "cmp:thz", {"m": m, "shift": f}))
    if variant == "fss":
        plan.append(("drelu", "cmp", {"m": m}))
    else:
        plan += [
            ("edabits", "cmp", {"m": m}),
            ("boolpool", "cmp:pool", {"count": ands * m}),
        ]
    if mode == "bit":
        if variant == "fss":
            plan.append(("drelu", "pos", {"m": 1}))
        else:
            plan += [
                ("dabits", "bit:v", {"m": m}),
                ("edabits", "pos", {"m": 1}),
                ("boolpool", "pos:pool", {"count": ands}),
            ]
    return plan


def _gen_item(kind: str, name: str, params: dict, cfg: RingConfig, rng: Drbg):
    """Returns (item_for_party0, item_for_party1)."""
    r = rng.child(f"{kind}:{name}")
    if kind == "seed":
        key = r.raw(16)
        return key, key
    if kind == "dottriple":
        m, n = params["m"], params["n"]
        a = r.u64(n, cfg.ell)
        B = r.u64((m, n), cfg.ell)
        c = cfg.reduce_arr((B * a[None, :]).sum(axis=1, dtype=np.uint64))
        a0, B0, c0 = r.u64(n, cfg.ell), r.u64((m, n), cfg.ell), r.u64(m, cfg.ell)
        return (
            DotTriple(name, 0, a0, B0, c0),
            DotTriple(name, 1, cfg.reduce_arr(a - a0), cfg.reduce_arr(B - B0),
                      cfg.reduce_arr(c - c0)),
        )
    if kind == "triple":
        m = params["m"]
        na = 1 if params.get("scalar_a") else m
        a = r.u64(na, cfg.ell)
        b = r.u64(m, cfg.ell)
        c = cfg.reduce_arr(a * b)
        a0, b0, c0 = r.u64(na, cfg.ell), r.u64(m, cfg.ell), r.u64(m, cfg.ell)
        return (
            BeaverTriple(0, a0, b0, c0),
            BeaverTriple(1, cfg.reduce_arr(a - a0), cfg.reduce_arr(b - b0),
                         cfg.reduce_arr(c - c0)),
        )
    if kind == "trunc":
        return fss.make_trunc_bundle(name, params["m"], params["shift"], cfg, r)
    if kind == "drelu":
        return fss.make_drelu_bundle(name, params["m"], cfg, r)
    if kind == "mask":
        m = params["m"]
        rm = r.u64(m, cfg.ell)
        r0 = r.u64(m, cfg.ell)
        return MaskShare(name, 0, r0), MaskShare(name, 1, cfg.reduce_arr(rm - r0))
    if kind == "dabits":
        m = params["m"]
        t = r.bits(m)
        tb0 = r.bits(m)
        ta0 = r.u64(m, cfg.ell)
        return (
            DaBit(0, tb0, ta0),
            DaBit(1, t ^ tb0, cfg.reduce_arr(t.astype(np.uint64) - ta0)),
        )
    if kind == "edabits":
        return ssbase.make_edabits(name, params["m"], cfg, r)
    if kind == "boolpool":
        return ssbase.make_bool_triples(name, params["count"], r)
    raise ValueError(f"unknown material kind {kind!r}")


def provision(variant: str, mode: str, compare: str, m: int, n: int,
              cfg: RingConfig, seed: int) -> tuple[PartyMaterial, PartyMaterial]:
    """Generate both parties' material for one session."""
    if m < 1:
        raise ValueError("database must hold at least one embedding (m >= 1)")
    if n < 2:
        raise ValueError("embeddings need dimension n >= 2")
    if variant not in VARIANTS or mode not in MODES or compare not in COMPARES:
        raise ValueError("bad variant/mode/compare")
    rng = Drbg.from_seed(seed).child(f"session:{variant}:{mode}:{compare}:{m}:{n}")
    session_id = int(rng.child("id").u64(1)[0])
    items0: dict[str, object] = {}
    items1: dict[str, object] = {}
    for kind, name, params in material_plan(variant, mode, compare, m, n, cfg):
        i0, i1 = _gen_item(kind, name, params, cfg, rng)
        items0[name], items1[name] = i0, i1
    meta0 = SessionMeta(session_id, 0, variant, mode, compare, m, n, cfg)
    meta1 = SessionMeta(session_id, 1, variant, mode, compare, m, n, cfg)
    return PartyMaterial(meta0, items0), PartyMaterial(meta1, items1)


# -------------------------------------------------------------- serialisation
def _counts(plan, cfg) -> tuple[int, int, int, int, int]:
    triples = dabits = keys = edabits = boolt = 0
    for kind, _, params in plan:
        if kind in ("triple",):
            triples += params["m"]
        elif kind == "dottriple":
            triples += params["m"]
        elif kind == "dabits":
            dabits += params["m"]
        elif kind == "drelu":
            keys += params["m"]
        elif kind == "trunc":
            keys += 2 * params["m"]
        elif kind == "edabits":
            edabits += params["m"]
        elif kind == "boolpool":
            boolt += params["count"]
    return triples, dabits, keys, edabits, boolt


def _write_arr(out: list[bytes], arr: np.ndarray) -> None:
    out.append(np.ascontiguousarray(arr).tobytes())


def serialize_material(mat: PartyMaterial) -> bytes:
    meta = mat.meta
    plan = material_plan(meta.variant, meta.mode, meta.compare, meta.m, meta.n, meta.cfg)
    counts = _counts(plan, meta.cfg)
    head = MAGIC + struct.pack(
        "<HBBBBBBQII5I",
        VERSION, meta.party, meta.cfg.ell, meta.cfg.frac,
        VARIANTS.index(meta.variant), MODES.index(meta.mode),
        COMPARES.index(meta.compare), meta.session_id, meta.m, meta.n, *counts,
    )
    out = [head]
    for kind, name, params in plan:
        item = mat._items[name]
        if kind == "seed":
            out.append(item)
        elif kind == "dottriple":
            for arr in (item.a, item.B, item.c):
                _write_arr(out, arr)
        elif kind == "triple":
            for arr in (item.a, item.b, item.c):
                _write_arr(out, arr)
        elif kind == "trunc":
            for arr in (item.r_share, item.rh_share, item.wrap_keys, item.low_keys):
                _write_arr(out, arr)
        elif kind == "drelu":
            for arr in (item.r_share, item.keys, item.gamma_share, item.vmask_share):
                _write_arr(out, arr)
        elif kind == "mask":
            _write_arr(out, item.r_share)
        elif kind == "dabits":
            _write_arr(out, item.bit_b)
            _write_arr(out, item.bit_a)
        elif kind == "edabits":
            _write_arr(out, item.r_share)
            _write_arr(out, item.bit_shares)
        elif kind == "boolpool":
            for arr in (item.a, item.b, item.c):
                _write_arr(out, arr)
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes, at: int):
        self.buf = buf
        self.at = at

    def arr(self, shape, dtype) -> np.ndarray:
        want = int(np.prod(shape)) * np.dtype(dtype).itemsize
        out = np.frombuffer(self.buf, dtype=dtype, count=int(np.prod(shape)),
                            offset=self.at).reshape(shape).copy()
        self.at += want
        return out

    def raw(self, nbytes: int) -> bytes:
        out = self.buf[self.at : self.at + nbytes]
        self.at += nbytes
        return out


def deserialize_material(buf: bytes) -> PartyMaterial:
    if buf[:4] != MAGIC:
        raise ValueError("not a dealer file (bad magic)")
    fields = struct.unpack("<HBBBBBBQII5I", buf[4 : 4 + struct.calcsize("<HBBBBBBQII5I")])
    version, party, ell, frac, var_i, mode_i, cmp_i, session_id, m, n = fields[:10]
    if version != VERSION:
        raise ValueError(f"unsupported dealer file version {version}")
    cfg = RingConfig(ell=ell, frac=frac)
    meta = SessionMeta(session_id, party, VARIANTS[var_i], MODES[mode_i],
                       COMPARES[cmp_i], m, n, cfg)
    rd = _Reader(buf, 4 + struct.calcsize("<HBBBBBBQII5I"))
    F = division.div_frac(cfg)
    items: dict[str, object] = {}
    for kind, name, params in material_plan(meta.variant, meta.mode, meta.compare, m, n, cfg):
        if kind == "seed":
            items[name] = rd.raw(16)
        elif kind == "dottriple":
            items[name] = DotTriple(
                name, party, rd.arr(params["n"], "<u8"),
                rd.arr((params["m"], params["n"]), "<u8"), rd.arr(params["m"], "<u8"),
            )
        elif kind == "triple":
            na = 1 if params.get("scalar_a") else params["m"]
            items[name] = BeaverTriple(
                party, rd.arr(na, "<u8"), rd.arr(params["m"], "<u8"),
                rd.arr(params["m"], "<u8"),
            )
        elif kind == "trunc":
            mm, shift = params["m"], params["shift"]
            from .kernels import key_size

            items[name] = fss.TruncBundle(
                name, party, ell, shift,
                rd.arr(mm, "<u8"), rd.arr(mm, "<u8"),
                rd.arr((mm, key_size(ell)), np.uint8),
                rd.arr((mm, key_size(shift)), np.uint8),
            )
        elif kind == "drelu":
            mm = params["m"]
            from .kernels import key_size

            items[name] = fss.DreluBundle(
                name, party, ell, rd.arr(mm, "<u8"),
                rd.arr((mm, key_size(ell - 1)), np.uint8),
                rd.arr(mm, "<u8"), rd.arr(mm, np.uint8),
            )
        elif kind == "mask":
            items[name] = MaskShare(name, party, rd.arr(params["m"], "<u8"))
        elif kind == "dabits":
            mm = params["m"]
            items[name] = DaBit(party, rd.arr(mm, np.uint8), rd.arr(mm, "<u8"))
        elif kind == "edabits":
            mm = params["m"]
            items[name] = ssbase.EdaBits(
                name, party, ell, rd.arr(mm, "<u8"), rd.arr((mm, ell), np.uint8)
            )
        elif kind == "boolpool":
            cnt = params["count"]
            items[name] = ssbase.BoolTriplePool(
                name, party, rd.arr(cnt, np.uint8), rd.arr(cnt, np.uint8),
                rd.arr(cnt, np.uint8),
            )
    return PartyMaterial(meta, items)


def write_dealer_files(mat0: PartyMaterial, mat1: PartyMaterial, path0: str, path1: str) -> None:
    with open(path0, "wb") as fh:
        fh.write(serialize_material(mat0))
    with open(path1, "wb") as fh:
        fh.write(serialize_material(mat1))


def read_dealer_file(path: str) -> PartyMaterial:
    with open(path, "rb") as fh:
        return deserialize_material(fh.read())
