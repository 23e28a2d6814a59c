"""Semi-honest client attack on the broken comparison scheme.

The prior scheme reveals every dot product d_i = <P_c, P_i> to the client.
A client that issues n linearly independent queries Q (rows P_c^j) can then
solve Q @ P_i = (d^1_i .. d^n_i) for each stored embedding P_i - plain
linear algebra, no cryptography.  This module reproduces that recovery and
doubles as the security regression check: the same scan run against the
fixed protocol's transcripts finds no value that is (affinely) related to
any dot product, and the information budget of what IS revealed (m bits
per query, or one) cannot carry the n*ell bits of an embedding.

The solver is partial-pivoting Gaussian elimination over float64 with a
1-norm condition estimate; numpy's solver appears only in tests, as the
independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import RingConfig

COND_LIMIT = 1e8


class RankDeficiencyError(ValueError):
    """Query matrix is singular or too ill-conditioned to invert."""


@dataclass
class QueryRecord:
    """One broken-protocol interaction: the query and what it leaked."""

    query: np.ndarray    # (n,) the client's embedding for this round
    revealed: np.ndarray  # (m,) dot products handed back by the scheme


def gaussian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b by Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise RankDeficiencyError(f"need a square system, got {a.shape}")
    if b.shape[0] != n:
        raise ValueError("right-hand side height mismatch")
    single = b.ndim == 1
    if single:
        b = b[:, None]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < 1e-300:
            raise RankDeficiencyError("pivot vanished: singular query matrix")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col:] -= factors[:, None] * a[col, col:]
        b[col + 1 :] -= factors[:, None] * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x[:, 0] if single else x


def cond_1norm(a: np.ndarray) -> float:
    """||A||_1 * ||A^-1||_1; infinity when the inverse does not exist."""
    a = np.asarray(a, dtype=np.float64)
    try:
        inv = gaussian_solve(a, np.eye(a.shape[0]))
    except RankDeficiencyError:
        return float("inf")
    norm = lambda mat: float(np.abs(mat).sum(axis=0).max())
    return norm(a) * norm(inv)


def simulate_broken_protocol(query: np.ndarray, db_matrix: np.ndarray,
                             precision: str = "real",
                             cfg: RingConfig | None = None) -> np.ndarray:
    """Dot products the broken scheme reveals to the client.

    "real" leaks float dot products; "ring" leaks what the fixed-point
    pipeline would expose: the exact integer product of the encoded
    operands, carrying 2*frac fractional bits.
    """
    query = np.asarray(query, dtype=np.float64)
    db_matrix = np.asarray(db_matrix, dtype=np.float64)
    if db_matrix.shape[1] != query.shape[0]:
        raise ValueError("query dimension does not match the database")
    if precision == "real":
        return db_matrix @ query
    if precision != "ring":
        raise ValueError(f"unknown precision {precision!r}")
    cfg = cfg or RingConfig()
    qi = cfg.signed_arr(cfg.encode_arr(query)).astype(np.int64)
    di = cfg.signed_arr(cfg.encode_arr(db_matrix.reshape(-1))).astype(np.int64)
    di = di.reshape(db_matrix.shape)
    dots = di @ qi  # exact: |sum| < n * 2^(2 frac) stays far below 2^63
    return dots.astype(np.float64) / float(1 << (2 * cfg.frac))


def quantize(x: np.ndarray, cfg: RingConfig) -> np.ndarray:
    """The value a query actually takes once encoded: what the ring-valued
    broken scheme computes with, hence what the solver should use."""
    return cfg.decode_arr(cfg.encode_arr(np.asarray(x, dtype=np.float64)))


def recover_embeddings(records: list[QueryRecord]) -> np.ndarray:
    """Solve the per-column linear systems; returns the (m, n) database.

    Requires exactly n well-conditioned queries.  Raises
    RankDeficiencyError when fewer queries arrive or the matrix condition
    exceeds COND_LIMIT.
    """
    if not records:
        raise RankDeficiencyError("no queries recorded")
    q = np.stack([r.query for r in records])
    d = np.stack([r.revealed for r in records])  # (#queries, m)
    n = q.shape[1]
    if q.shape[0] != n:
        raise RankDeficiencyError(
            f"need n={n} independent queries, got {q.shape[0]}: system is underdetermined"
        )
    cond = cond_1norm(q)
    if not cond < COND_LIMIT:
        raise RankDeficiencyError(f"query matrix condition {cond:.3g} exceeds {COND_LIMIT:.0e}")
    return gaussian_solve(q, d).T  # (m, n)


# ------------------------------------------------------- transcript scanning
def transcript_ring_values(transcript, ell: int) -> np.ndarray:
    """Every ell-bit word that crossed the wire (captured payloads)."""
    from .sharing import unpack_ring

    words = []
    for _, _, _, payload in transcript.captured:
        if not payload:
            continue
        count = len(payload) * 8 // ell
        if count:
            words.append(unpack_ring(payload, count, ell))
    return np.concatenate(words) if words else np.zeros(0, dtype=np.uint64)


def scan_for_revealed(transcript, plaintexts: np.ndarray, cfg: RingConfig,
                      extra_offsets: np.ndarray | None = None) -> int:
    """Count wire words equal to a plaintext intermediate (or a public
    affine image of one).  Zero on the fixed protocol; positive on the
    broken scheme's reveals."""
    wire = transcript_ring_values(transcript, cfg.ell)
    if wire.size == 0:
        return 0
    targets = set(int(v) for v in np.atleast_1d(plaintexts).astype(np.uint64))
    if extra_offsets is not None:
        base = np.atleast_1d(plaintexts).astype(np.uint64)
        for off in extra_offsets.astype(np.uint64):
            targets.update(int(v) for v in cfg.reduce_arr(base + off))
            targets.update(int(v) for v in cfg.reduce_arr(base - off))
    return int(np.isin(wire, np.array(sorted(targets), dtype=np.uint64)).sum())


def information_budget(n: int, ell: int, m: int, mode: str) -> dict:
    """Bits the fixed protocol reveals per query vs bits an embedding holds.

    Not a proof - an accounting argument: recovery needs n*ell bits per
    stored embedding, the output channel carries m (indices) or 1 (bit).
    """
    revealed = m if mode == "indices" else 1
    required = n * ell
    return {
        "revealed_bits_per_query": revealed,
        "required_bits_per_embedding": required,
        "queries_needed_at_this_rate": required / revealed if revealed else float("inf"),
        "structurally_recoverable": False,
    }
