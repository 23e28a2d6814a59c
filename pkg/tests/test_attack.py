"""Leakage attack on the broken scheme; absence of leverage on the fixed one."""

import numpy as np
import pytest

from emcomp.attack import (
    QueryRecord,
    RankDeficiencyError,
    cond_1norm,
    gaussian_solve,
    information_budget,
    quantize,
    recover_embeddings,
    scan_for_revealed,
    simulate_broken_protocol,
    transcript_ring_values,
)
from emcomp.protocol import Embedding, EmbeddingDb, ProtocolConfig, run_simulated
from emcomp.ring import RingConfig

CFG = RingConfig(ell=64, frac=16)


def _db(m, n, seed):
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(m, n))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return mat


# ------------------------------------------------------------------- solver
def test_gaussian_solve_against_numpy_oracle():
    rng = np.random.default_rng(0)
    for size in (2, 5, 16, 33):
        a = rng.normal(size=(size, size))
        b = rng.normal(size=(size, 3))
        assert np.allclose(gaussian_solve(a, b), np.linalg.solve(a, b), atol=1e-9)


def test_gaussian_solve_singular():
    a = np.ones((3, 3))
    with pytest.raises(RankDeficiencyError):
        gaussian_solve(a, np.ones(3))


def test_cond_estimate_tracks_numpy():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(8, 8))
    ours = cond_1norm(a)
    ref = np.linalg.cond(a, 1)
    assert ours == pytest.approx(ref, rel=1e-9)


# ------------------------------------------------------- broken-scheme leak
def test_unit_query_extracts_coordinates():
    mat = _db(5, 8, 2)
    e1 = np.zeros(8)
    e1[0] = 1.0
    d = simulate_broken_protocol(e1, mat)
    assert np.allclose(d, mat[:, 0])


def test_self_query_reveals_norm_squared():
    mat = _db(4, 8, 3)
    d = simulate_broken_protocol(mat[0], mat)
    assert d[0] == pytest.approx(np.linalg.norm(mat[0]) ** 2)


def test_random_query_matches_dot_oracle():
    mat = _db(6, 10, 4)
    rng = np.random.default_rng(5)
    q = rng.normal(size=10)
    assert np.allclose(simulate_broken_protocol(q, mat), mat @ q)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        simulate_broken_protocol(np.ones(3), _db(2, 8, 6))


# ----------------------------------------------------------------- recovery
def test_identity_queries_recover_exactly():
    mat = _db(5, 6, 7)
    records = [QueryRecord(row, simulate_broken_protocol(row, mat)) for row in np.eye(6)]
    rec = recover_embeddings(records)
    assert np.allclose(rec, mat, atol=1e-12)


def test_random_recovery_real_and_ring():
    n, m = 16, 8
    mat = _db(m, n, 8)
    rng = np.random.default_rng(9)
    queries = rng.normal(size=(n, n))
    real = recover_embeddings(
        [QueryRecord(q, simulate_broken_protocol(q, mat, "real")) for q in queries]
    )
    assert np.abs(real - mat).max() <= 1e-9
    ring = recover_embeddings(
        [QueryRecord(quantize(q, CFG), simulate_broken_protocol(q, mat, "ring", CFG))
         for q in queries]
    )
    assert np.abs(ring - mat).max() <= 2.0 ** (-CFG.frac + 1)


def test_underdetermined_rejected():
    mat = _db(3, 6, 10)
    rng = np.random.default_rng(11)
    queries = rng.normal(size=(5, 6))  # n-1 queries only
    records = [QueryRecord(q, simulate_broken_protocol(q, mat)) for q in queries]
    with pytest.raises(RankDeficiencyError, match="underdetermined"):
        recover_embeddings(records)


def test_ill_conditioned_rejected():
    mat = _db(2, 4, 12)
    q = np.eye(4)
    q[3] = q[2] + 1e-12  # nearly dependent rows
    records = [QueryRecord(row, simulate_broken_protocol(row, mat)) for row in q]
    with pytest.raises(RankDeficiencyError, match="condition"):
        recover_embeddings(records)


def test_attack_succeeds_on_random_instances_property():
    rng = np.random.default_rng(13)
    for trial in range(10):
        n = int(rng.integers(4, 24))
        m = int(rng.integers(1, 10))
        mat = _db(m, n, 100 + trial)
        queries = rng.normal(size=(n, n))
        if not cond_1norm(queries) < 1e8:
            continue
        rec = recover_embeddings(
            [QueryRecord(q, simulate_broken_protocol(q, mat)) for q in queries]
        )
        assert np.abs(rec - mat).max() <= 1e-9


# ---------------------------------------------- transcripts: broken vs fixed
def _protocol_transcript(seed, mode="indices"):
    rng = np.random.default_rng(seed)
    n, m = 8, 4
    mat = _db(m, n, seed)
    q = rng.normal(size=n)
    q /= np.linalg.norm(q)
    db = EmbeddingDb([Embedding(r, str(i)) for i, r in enumerate(mat)])
    pcfg = ProtocolConfig(threshold=0.35, mode=mode, ring=CFG)
    out, tr = run_simulated(Embedding(q), db, pcfg, seed=seed, capture=True)
    return q, mat, tr


def test_fixed_protocol_reveals_no_dot_products():
    q, mat, tr = _protocol_transcript(20)
    dots_f = CFG.encode_arr(mat @ q)                      # frac-scale encodings
    dots_2f = CFG.encode_arr(mat @ q, frac=2 * CFG.frac)  # product-scale
    hits = scan_for_revealed(tr, np.concatenate([dots_f, dots_2f]), CFG)
    assert hits == 0
    assert transcript_ring_values(tr, CFG.ell).size > 0  # the scan saw traffic


def test_broken_scheme_scan_is_positive_control():
    # the same scanner DOES find the dot products the broken scheme reveals
    from emcomp.transport import MT_OPEN, Sent, Transcript
    from emcomp.sharing import pack_ring

    q, mat, _ = _protocol_transcript(21)
    dots = CFG.encode_arr(mat @ q)
    tr = Transcript()
    payload = pack_ring(dots, CFG.ell)
    tr.log(Sent(0, 1, MT_OPEN, len(payload), dots.size * CFG.ell, "basic", False), payload)
    assert scan_for_revealed(tr, dots, CFG) == len(dots)


def test_information_budget():
    for mode, revealed in (("indices", 4), ("bit", 1)):
        budget = information_budget(n=8, ell=64, m=4, mode=mode)
        assert budget["revealed_bits_per_query"] == revealed
        assert budget["required_bits_per_embedding"] == 8 * 64
        assert budget["revealed_bits_per_query"] < budget["required_bits_per_embedding"]
        assert budget["structurally_recoverable"] is False
