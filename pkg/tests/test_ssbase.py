"""Adder-circuit comparison baseline: correctness and its cost envelope."""

import numpy as np
import pytest

from emcomp import fss, ssbase
from emcomp.prf import Drbg
from emcomp.ring import RingConfig
from emcomp.sharing import ArithShare, MaterialError
from emcomp.transport import run_sim_pair

CFG8 = RingConfig(ell=8, frac=4)


def _shares(cfg, vals, rng):
    s0 = rng.integers(0, cfg.modulus, vals.shape, dtype=np.uint64)
    return ArithShare(0, s0), ArithShare(1, cfg.reduce_arr(vals - s0))


def _gear(cfg, m, seed, gates=1):
    rng = Drbg.from_seed(seed)
    e0, e1 = ssbase.make_edabits("e", m, cfg, rng.child("e"))
    count = gates * ssbase.ss_drelu_ands(cfg.ell) * m
    p0, p1 = ssbase.make_bool_triples("p", count, rng.child("p"))
    return (e0, p0), (e1, p1)


def test_zero_is_nonnegative():
    cfg = RingConfig(ell=64, frac=16)
    (e0, p0), (e1, p1) = _gear(cfg, 1, 1)
    rng = np.random.default_rng(1)
    s0, s1 = _shares(cfg, np.zeros(1, dtype=np.uint64), rng)
    r0, r1, _ = run_sim_pair(
        lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
        lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
    )
    assert (r0.bits ^ r1.bits)[0] == 1


def test_exhaustive_8bit_agrees_with_sign():
    xs = np.arange(256, dtype=np.uint64)
    want = (CFG8.signed_arr(xs) >= 0).astype(np.uint8)
    rng = np.random.default_rng(2)
    for trial in range(20):
        (e0, p0), (e1, p1) = _gear(CFG8, 256, 100 + trial)
        s0, s1 = _shares(CFG8, xs, rng)
        r0, r1, _ = run_sim_pair(
            lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, CFG8),
            lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, CFG8),
        )
        assert np.array_equal(r0.bits ^ r1.bits, want)


def test_cross_oracle_against_fss_gate():
    # both comparison protocols must agree on random 64-bit inputs
    cfg = RingConfig(ell=64, frac=16)
    rng = np.random.default_rng(3)
    m = 1000
    vals = rng.integers(0, cfg.modulus, m, dtype=np.uint64)
    want = (cfg.signed_arr(vals) >= 0).astype(np.uint8)

    (e0, p0), (e1, p1) = _gear(cfg, m, 4)
    s0, s1 = _shares(cfg, vals, rng)
    r0, r1, _ = run_sim_pair(
        lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
        lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
    )
    ss_bits = r0.bits ^ r1.bits

    b0, b1 = fss.make_drelu_bundle("g", m, cfg, Drbg.from_seed(5))
    f0, f1, _ = run_sim_pair(
        lambda ch: fss.drelu_gate(s0, b0, ch, cfg),
        lambda ch: fss.drelu_gate(s1, b1, ch, cfg),
    )
    fss_bits = f0.bits ^ f1.bits ^ b0.vmask_share ^ b1.vmask_share
    assert np.array_equal(ss_bits, fss_bits)
    assert np.array_equal(ss_bits, want)


@pytest.mark.parametrize("ell", [16, 64])
def test_cost_envelope(ell):
    cfg = RingConfig(ell=ell, frac=4)
    (e0, p0), (e1, p1) = _gear(cfg, 1, ell)
    rng = np.random.default_rng(6)
    s0, s1 = _shares(cfg, np.array([7], dtype=np.uint64), rng)
    _, _, tr = run_sim_pair(
        lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
        lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
    )
    bits = tr.bits_sent(party=0)
    assert 4 * ell <= bits <= 6 * ell            # the ~5*ell corridor
    assert tr.rounds >= np.log2(ell)             # logarithmic depth
    assert tr.rounds <= 2 * (np.ceil(np.log2(ell)) + 2)


def test_round_growth_is_logarithmic():
    rounds = {}
    for ell in (16, 64):
        cfg = RingConfig(ell=ell, frac=4)
        (e0, p0), (e1, p1) = _gear(cfg, 1, ell + 1)
        rng = np.random.default_rng(7)
        s0, s1 = _shares(cfg, np.array([1], dtype=np.uint64), rng)
        _, _, tr = run_sim_pair(
            lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
            lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
        )
        rounds[ell] = tr.rounds
    assert rounds[64] - rounds[16] == 2  # log2(64) - log2(16)
    assert rounds[64] >= 6


def test_aux_reuse_rejected():
    cfg = CFG8
    (e0, p0), (e1, p1) = _gear(cfg, 1, 8, gates=2)
    rng = np.random.default_rng(8)
    s0, s1 = _shares(cfg, np.array([1], dtype=np.uint64), rng)
    run_sim_pair(
        lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
        lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
    )
    with pytest.raises(MaterialError):
        run_sim_pair(
            lambda ch: ssbase.ss_drelu(s0, e0, p0, ch, cfg),
            lambda ch: ssbase.ss_drelu(s1, e1, p1, ch, cfg),
        )


def test_triple_pool_exhaustion():
    p0, _ = ssbase.make_bool_triples("p", 4, Drbg.from_seed(9))
    p0.take(3)
    with pytest.raises(MaterialError):
        p0.take(2)


def test_offsets_mode_matches_separate_gates():
    cfg = RingConfig(ell=64, frac=16)
    rng = np.random.default_rng(10)
    m, k = 20, 3
    vals = cfg.encode_arr(rng.uniform(0.1, 4.0, m))
    offs = cfg.encode_arr(np.array([0.25, 1.0, 2.0]))
    drv = Drbg.from_seed(11)
    e0, e1 = ssbase.make_edabits("e", m, cfg, drv.child("e"))
    p0, p1 = ssbase.make_bool_triples("p", k * ssbase.ss_drelu_ands(64) * m, drv.child("p"))
    s0, s1 = _shares(cfg, vals, rng)

    def party(p, sh, aux, pool):
        def fn(ch):
            from emcomp.sharing import RingRound
            from emcomp.transport import MT_MASKED

            rnd = RingRound(cfg, MT_MASKED)
            rnd.add(sh.val + aux.r_share)
            (xhat,) = rnd.exchange(ch)
            return ssbase.ss_drelu_offsets(p, xhat, offs, aux, pool, ch, cfg)
        return fn

    r0, r1, _ = run_sim_pair(party(0, s0, e0, p0), party(1, s1, e1, p1))
    for i, off in enumerate(offs):
        got = r0[i].bits ^ r1[i].bits
        want = (cfg.signed_arr(cfg.reduce_arr(vals - off)) >= 0).astype(np.uint8)
        assert np.array_equal(got, want)
