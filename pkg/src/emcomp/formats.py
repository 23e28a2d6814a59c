"""File formats: embedding stores, session configs, transcript exports.

Embeddings travel either as CSV (one row per embedding: id, v_1, ..., v_n)
or as a binary pack:

    magic "EMB1" | u32 n | u32 m | m*n float32, little-endian, row-major

The binary form has no id column; ids are the row index.
Session configs are JSON objects with keys
{threshold, mode, ell, frac, net_profile, seed} (plus optional variant,
compare, guard_band, threads).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .protocol import Embedding, EmbeddingDb, ProtocolConfig
from .ring import RingConfig
from .transport import PROFILES, NetProfile

EMB_MAGIC = b"EMB1"


class ConfigError(ValueError):
    pass


def save_embeddings_csv(db: EmbeddingDb, path: str) -> None:
    with open(path, "w") as fh:
        for emb in db.embeddings:
            fh.write(",".join([emb.id or ""] + [repr(float(v)) for v in emb.values]) + "\n")


def load_embeddings_csv(path: str) -> EmbeddingDb:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append(Embedding(np.array([float(x) for x in parts[1:]]), parts[0]))
    return EmbeddingDb(rows)


def save_embeddings_binary(db: EmbeddingDb, path: str) -> None:
    mat = db.matrix.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC + struct.pack("<II", db.n, db.m) + mat.tobytes())


def load_embeddings_binary(path: str) -> EmbeddingDb:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != EMB_MAGIC:
        raise ConfigError(f"{path}: not an embedding pack (bad magic)")
    n, m = struct.unpack("<II", buf[4:12])
    mat = np.frombuffer(buf, dtype="<f4", count=m * n, offset=12).reshape(m, n)
    return EmbeddingDb([Embedding(mat[i].astype(np.float64), str(i)) for i in range(m)])


def load_embeddings(path: str) -> EmbeddingDb:
    if path.endswith(".csv"):
        return load_embeddings_csv(path)
    return load_embeddings_binary(path)


def load_profile(name_or_path: str) -> NetProfile:
    if name_or_path in PROFILES:
        return PROFILES[name_or_path]
    try:
        return NetProfile.from_json(name_or_path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load network profile {name_or_path!r}: {exc}") from exc


def load_session_config(path: str) -> tuple[ProtocolConfig, NetProfile, int]:
    with open(path) as fh:
        d = json.load(fh)
    try:
        ring = RingConfig(ell=int(d.get("ell", 64)), frac=int(d.get("frac", 16)))
        pcfg = ProtocolConfig(
            threshold=float(d["threshold"]),
            mode=d.get("mode", "indices"),
            ring=ring,
            guard_band=d.get("guard_band"),
            variant=d.get("variant", "fss"),
            compare=d.get("compare", "division"),
            threads=int(d.get("threads", 1)),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad session config {path}: {exc}") from exc
    profile = load_profile(d.get("net_profile", "lan"))
    return pcfg, profile, int(d.get("seed", 0))


def save_session_config(path: str, pcfg: ProtocolConfig, profile: str, seed: int) -> None:
    with open(path, "w") as fh:
        json.dump(
            {
                "threshold": pcfg.threshold,
                "mode": pcfg.mode,
                "ell": pcfg.ring.ell,
                "frac": pcfg.ring.frac,
                "net_profile": profile,
                "seed": seed,
                "variant": pcfg.variant,
                "compare": pcfg.compare,
            },
            fh,
            indent=1,
        )


def random_db(m: int, n: int, seed: int, scale_lo: float = 0.5,
              scale_hi: float = 1.5) -> EmbeddingDb:
    """Synthetic workload: random directions with mildly varied norms, so
    the division normaliser sees several octaves."""
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(m, n))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    mat *= rng.uniform(scale_lo, scale_hi, size=(m, 1))
    return EmbeddingDb([Embedding(mat[i], str(i)) for i in range(m)])
