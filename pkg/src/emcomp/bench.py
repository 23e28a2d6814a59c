"""Benchmark suite: the 1:N comparison protocol under simulated networks.

Emits a {lan, wan} x {ss, fss} x {basic, indices, bit} grid of mean
simulated milliseconds.  The transcript of a run is profile-independent,
so each (variant, mode) pair runs once per repetition and both network
profiles are priced from the same transcript.

Absolute milliseconds depend on hardware and workload and are not
comparable across machines; the trends are the point: the FSS basic phase
beats the SS basic phase in both profiles, the FSS bit phase wins big
under WAN latency, and the indices phase is a wash (a single reveal that
the SS variant may well win).

A second entry point compares the two kernel backends (compiled AES-NI
vs pure Python) on raw comparison-key evaluation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .formats import random_db
from .prf import Drbg
from .protocol import Embedding, ProtocolConfig, run_simulated
from .ring import RingConfig
from .transport import LAN, WAN


@dataclass
class BenchRow:
    network: str
    protocol: str
    basic_ms: float
    indices_ms: float
    bit_ms: float


def bench_suite(m: int = 1000, n: int = 128, seed: int = 0, repeats: int = 10,
                threshold: float = 0.35, ring: RingConfig | None = None,
                threads: int = 1) -> list[BenchRow]:
    ring = ring or RingConfig()
    db = random_db(m, n, seed)
    rng = np.random.default_rng(seed + 1)
    q = rng.normal(size=n)
    query = Embedding(q / np.linalg.norm(q))

    acc: dict[tuple[str, str, str], list[float]] = {}
    for variant in ("ss", "fss"):
        for mode in ("indices", "bit"):
            pcfg = ProtocolConfig(threshold=threshold, mode=mode, ring=ring,
                                  variant=variant, threads=threads)
            for rep in range(repeats):
                _, tr = run_simulated(query, db, pcfg, seed=seed * 1000 + rep)
                for profile in (LAN, WAN):
                    for phase, ms in tr.phase_ms(profile).items():
                        acc.setdefault((profile.name, variant, phase), []).append(ms)

    rows = []
    for network in ("lan", "wan"):
        for variant in ("ss", "fss"):
            rows.append(BenchRow(
                network, variant.upper(),
                float(np.mean(acc[(network, variant, "basic")])),
                float(np.mean(acc[(network, variant, "indices")])),
                float(np.mean(acc[(network, variant, "bit")])),
            ))
    return rows


def format_table(rows: list[BenchRow]) -> str:
    out = ["network,protocol,basic_ms,indices_ms,bit_ms"]
    for r in rows:
        out.append(f"{r.network},{r.protocol},{r.basic_ms:.3f},{r.indices_ms:.3f},{r.bit_ms:.3f}")
    return "\n".join(out)


def trend_summary(rows: list[BenchRow]) -> dict:
    """The claims worth checking; the indices column is deliberately not
    asserted in either direction."""
    by = {(r.network, r.protocol): r for r in rows}
    return {
        "fss_basic_faster_lan": by[("lan", "FSS")].basic_ms < by[("lan", "SS")].basic_ms,
        "fss_basic_faster_wan": by[("wan", "FSS")].basic_ms < by[("wan", "SS")].basic_ms,
        "wan_bit_ratio_ss_over_fss": by[("wan", "SS")].bit_ms / by[("wan", "FSS")].bit_ms,
        "basic_wan_improvement_pct":
            100 * (1 - by[("wan", "FSS")].basic_ms / by[("wan", "SS")].basic_ms),
    }


def kernel_bench(count: int = 50000, in_bits: int = 63, repeats: int = 3) -> list[dict]:
    """Raw key-evaluation throughput per backend."""
    rng = Drbg.from_seed(99)
    alphas = rng.u64(count, in_bits)
    betas = rng.u64(count, 64)
    xs = rng.u64(count, in_bits)
    k0, _ = kernels.gen_batch(alphas, betas, in_bits, 64, rng.seeds(count), rng.seeds(count))
    rows = []
    for backend in kernels.available_backends():
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            kernels.eval_batch(0, k0, xs, in_bits, 64, backend=backend)
            best = min(best, time.perf_counter() - t0)
        rows.append({
            "backend": backend,
            "evals_per_s": count / best,
            "levels": in_bits,
            "batch": count,
        })
    return rows
