"""Comparison-function kernel: correctness, parity, serialisation."""

import numpy as np
import pytest

from emcomp import kernels
from emcomp.prf import Drbg


def _outmask(bits):
    return np.uint64(0xFFFFFFFFFFFFFFFF if bits == 64 else (1 << bits) - 1)


def _check_pointwise(in_bits, out_bits, n_keys, seed, xs=None):
    rng = Drbg.from_seed(seed)
    alphas = rng.u64(n_keys, in_bits)
    betas = rng.u64(n_keys, out_bits)
    if xs is None:
        xs = rng.u64(n_keys, in_bits)
    k0, k1 = kernels.gen_batch(alphas, betas, in_bits, out_bits,
                               rng.seeds(n_keys), rng.seeds(n_keys))
    e0 = kernels.eval_batch(0, k0, xs, in_bits, out_bits)
    e1 = kernels.eval_batch(1, k1, xs, in_bits, out_bits)
    got = (e0 + e1) & _outmask(out_bits)
    want = np.where(xs < alphas, betas & _outmask(out_bits), np.uint64(0))
    assert np.array_equal(got, want)


def test_correctness_spot_checks():
    for in_bits, out_bits in [(8, 8), (12, 12), (16, 1), (63, 64), (64, 64), (24, 32)]:
        _check_pointwise(in_bits, out_bits, 500, seed=in_bits * 100 + out_bits)


def test_exhaustive_8bit():
    rng = Drbg.from_seed(5)
    n = 30
    alphas = rng.u64(n, 8)
    betas = rng.u64(n, 8)
    k0, k1 = kernels.gen_batch(alphas, betas, 8, 8, rng.seeds(n), rng.seeds(n))
    for x in range(256):
        xs = np.full(n, x, dtype=np.uint64)
        got = (kernels.eval_batch(0, k0, xs, 8, 8)
               + kernels.eval_batch(1, k1, xs, 8, 8)) & np.uint64(255)
        want = np.where(np.uint64(x) < alphas, betas, np.uint64(0))
        assert np.array_equal(got, want), f"x={x}"


def test_zero_beta_is_zero_function():
    rng = Drbg.from_seed(6)
    alphas = rng.u64(16, 10)
    betas = np.zeros(16, dtype=np.uint64)
    k0, k1 = kernels.gen_batch(alphas, betas, 10, 16, rng.seeds(16), rng.seeds(16))
    xs = rng.u64(16, 10)
    got = (kernels.eval_batch(0, k0, xs, 10, 16)
           + kernels.eval_batch(1, k1, xs, 10, 16)) & np.uint64(0xFFFF)
    assert not got.any()


def test_zero_alpha_empty_interval():
    rng = Drbg.from_seed(7)
    alphas = np.zeros(8, dtype=np.uint64)
    betas = rng.u64(8, 16)
    k0, k1 = kernels.gen_batch(alphas, betas, 16, 16, rng.seeds(8), rng.seeds(8))
    for x in (0, 1, 77, 65535):
        xs = np.full(8, x, dtype=np.uint64)
        got = (kernels.eval_batch(0, k0, xs, 16, 16)
               + kernels.eval_batch(1, k1, xs, 16, 16)) & np.uint64(0xFFFF)
        assert not got.any()


def test_eval_deterministic():
    rng = Drbg.from_seed(8)
    k0, _ = kernels.gen_batch(rng.u64(4, 20), rng.u64(4, 20), 20, 20,
                              rng.seeds(4), rng.seeds(4))
    xs = rng.u64(4, 20)
    a = kernels.eval_batch(0, k0, xs, 20, 20)
    b = kernels.eval_batch(0, k0, xs, 20, 20)
    assert np.array_equal(a, b)


def test_key_layout_and_size():
    assert kernels.key_size(8) == 16 + 26 * 8 + 8
    assert kernels.key_size(63) == 16 + 26 * 63 + 8
    rng = Drbg.from_seed(9)
    r0, r1 = rng.seeds(3), rng.seeds(3)
    k0, k1 = kernels.gen_batch(rng.u64(3, 8), rng.u64(3, 8), 8, 8, r0, r1)
    assert k0.shape == (3, kernels.key_size(8))
    # header carries the party's root seed; correction words are shared
    assert np.array_equal(k0[:, :16], r0)
    assert np.array_equal(k1[:, :16], r1)
    assert np.array_equal(k0[:, 16:], k1[:, 16:])


def test_single_key_output_monobit():
    # one party's outputs over the full domain should look pseudorandom
    rng = Drbg.from_seed(10)
    k0, _ = kernels.gen_batch(np.array([130], dtype=np.uint64),
                              np.array([1], dtype=np.uint64), 8, 64,
                              rng.seeds(1), rng.seeds(1))
    keys = np.repeat(k0, 256, axis=0)
    xs = np.arange(256, dtype=np.uint64)
    outs = kernels.eval_batch(0, keys, xs, 8, 64)
    bits = np.unpackbits(outs.view(np.uint8))
    assert abs(bits.mean() - 0.5) < 0.02


@pytest.mark.skipif(len(kernels.available_backends()) < 2,
                    reason="compiled kernel unavailable")
def test_backend_parity():
    rng = Drbg.from_seed(11)
    for in_bits, out_bits in [(8, 8), (63, 64), (64, 64), (12, 1), (28, 64)]:
        n = 300
        alphas = rng.u64(n, in_bits)
        betas = rng.u64(n, out_bits)
        xs = rng.u64(n, in_bits)
        r0, r1 = rng.seeds(n), rng.seeds(n)
        pk = kernels.gen_batch(alphas, betas, in_bits, out_bits, r0, r1, backend="python")
        ck = kernels.gen_batch(alphas, betas, in_bits, out_bits, r0, r1, backend="compiled")
        assert np.array_equal(pk[0], ck[0]) and np.array_equal(pk[1], ck[1])
        for party in (0, 1):
            pe = kernels.eval_batch(party, pk[party], xs, in_bits, out_bits, backend="python")
            ce = kernels.eval_batch(party, ck[party], xs, in_bits, out_bits, backend="compiled")
            assert np.array_equal(pe, ce)


@pytest.mark.skipif(len(kernels.available_backends()) < 2,
                    reason="compiled kernel unavailable")
def test_threaded_eval_identical():
    rng = Drbg.from_seed(12)
    n = 257  # odd on purpose
    k0, _ = kernels.gen_batch(rng.u64(n, 63), rng.u64(n, 64), 63, 64,
                              rng.seeds(n), rng.seeds(n))
    xs = rng.u64(n, 63)
    a = kernels.eval_batch(0, k0, xs, 63, 64, threads=1)
    b = kernels.eval_batch(0, k0, xs, 63, 64, threads=4)
    assert np.array_equal(a, b)
