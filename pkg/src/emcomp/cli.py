"""Operator entry points.

    emcomp dealer  --m 100 --n 128 --mode indices --out-dir keys/
    emcomp run     --db db.csv --query q.csv --mode bit --net wan
    emcomp run     --role server --listen 9301 --db db.csv --dealer keys/party1.deal
    emcomp run     --role client --connect host:9301 --query q.csv --dealer keys/party0.deal
    emcomp bench   --m 1000 --n 128 --repeats 10 --out table.csv
    emcomp attack  --n 16 --m 8 --out recovered.csv

Exit codes: 0 ok, 2 configuration error, 3 protocol abort.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import kernels
from .attack import (
    QueryRecord,
    RankDeficiencyError,
    quantize,
    recover_embeddings,
    simulate_broken_protocol,
)
from .dealer import provision, read_dealer_file, write_dealer_files
from .formats import ConfigError, load_embeddings, load_profile, load_session_config, random_db
from .protocol import (
    Embedding,
    ProtocolAbort,
    ProtocolConfig,
    run_client,
    run_server,
    run_simulated,
)
from .ring import RingConfig
from .transport import ChannelClosed, RoundDesyncError, tcp_connect, tcp_listen

EXIT_CONFIG = 2
EXIT_PROTOCOL = 3


def _ring(args) -> RingConfig:
    return RingConfig(ell=args.ell, frac=args.frac)


def _pcfg(args, mode=None) -> ProtocolConfig:
    if getattr(args, "config", None):
        pcfg, _, _ = load_session_config(args.config)
        return pcfg
    return ProtocolConfig(
        threshold=args.threshold,
        mode=mode or args.mode,
        ring=_ring(args),
        variant=args.variant,
        compare=args.compare,
        threads=args.threads,
    )


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--ell", type=int, default=64)
    p.add_argument("--frac", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--variant", choices=("fss", "ss"), default="fss")
    p.add_argument("--compare", choices=("division", "crossmul"), default="division")


def cmd_dealer(args) -> int:
    if args.db:
        db = load_embeddings(args.db)
        m, n = db.m, db.n
    else:
        if not (args.m and args.n):
            raise ConfigError("dealer needs --db or both --m and --n")
        m, n = args.m, args.n
    pcfg = _pcfg(args)
    mat0, mat1 = provision(pcfg.variant, pcfg.mode, pcfg.compare, m, n, pcfg.ring, args.seed)
    p0 = f"{args.out_dir}/party0.deal"
    p1 = f"{args.out_dir}/party1.deal"
    write_dealer_files(mat0, mat1, p0, p1)
    print(json.dumps({
        "session_id": mat0.meta.session_id,
        "m": m, "n": n, "mode": pcfg.mode, "variant": pcfg.variant,
        "files": [p0, p1],
    }))
    return 0


def _report(outcome, transcript, profile, wall_s: float, rounds: int | None = None) -> dict:
    # a TCP endpoint's transcript only holds its own sends, so the round
    # counter of the channel is the authoritative total there
    rep = {
        "mode": outcome.mode,
        "session_id": outcome.session_id,
        "rounds": rounds if rounds is not None else (transcript.rounds if transcript else None),
        "wall_seconds": round(wall_s, 6),
    }
    if transcript:
        rep["bytes_client"] = transcript.bytes_sent(0)
        rep["bytes_server"] = transcript.bytes_sent(1)
        rep["simulated_ms"] = transcript.simulated_ms(profile)
        rep["phase_ms"] = {k: round(v, 6) for k, v in transcript.phase_ms(profile).items()}
    if outcome.mode == "indices" and outcome.indices is not None:
        rep["indices"] = [int(i) for i in np.flatnonzero(outcome.indices)]
        rep["v"] = [int(b) for b in outcome.indices]
    if outcome.mode == "bit" and outcome.bit is not None:
        rep["match"] = bool(outcome.bit)
    return rep


def cmd_run(args) -> int:
    pcfg = _pcfg(args)
    profile = load_profile(args.net)
    t0 = time.perf_counter()
    if args.role == "both":
        if not (args.db and args.query):
            raise ConfigError("simulated run needs --db and --query")
        db = load_embeddings(args.db)
        query = load_embeddings(args.query).embeddings[0]
        outcome, tr = run_simulated(query, db, pcfg, seed=args.seed)
        rep = _report(outcome, tr, profile, time.perf_counter() - t0)
    elif args.role == "server":
        if not (args.db and args.dealer):
            raise ConfigError("server needs --db and --dealer")
        mat = read_dealer_file(args.dealer)
        ch = tcp_listen(args.listen)
        try:
            outcome = run_server(ch, mat, pcfg, load_embeddings(args.db))
        finally:
            ch.close()
        rep = _report(outcome, ch.transcript, profile, time.perf_counter() - t0,
                      rounds=ch.round)
    elif args.role == "client":
        if not (args.query and args.dealer and args.connect):
            raise ConfigError("client needs --query, --dealer and --connect")
        host, port = args.connect.rsplit(":", 1)
        mat = read_dealer_file(args.dealer)
        ch = tcp_connect(host, int(port), party=0)
        try:
            outcome = run_client(ch, mat, pcfg, load_embeddings(args.query).embeddings[0])
        finally:
            ch.close()
        rep = _report(outcome, ch.transcript, profile, time.perf_counter() - t0,
                      rounds=ch.round)
    else:
        raise ConfigError(f"unknown role {args.role!r}")
    text = json.dumps(rep, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def cmd_bench(args) -> int:
    if args.kernels:
        rows = bench_mod.kernel_bench()
        print("backend,evals_per_s,levels,batch")
        for r in rows:
            print(f"{r['backend']},{r['evals_per_s']:.0f},{r['levels']},{r['batch']}")
        return 0
    rows = bench_mod.bench_suite(
        m=args.m, n=args.n, seed=args.seed, repeats=args.repeats,
        threshold=args.threshold, ring=_ring(args), threads=args.threads,
    )
    table = bench_mod.format_table(rows)
    print(table)
    summary = bench_mod.trend_summary(rows)
    print(json.dumps(summary), file=sys.stderr)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table + "\n")
    return 0


def cmd_attack(args) -> int:
    rng = np.random.default_rng(args.seed)
    db = random_db(args.m, args.n, args.seed)
    queries = rng.normal(size=(args.n, args.n))
    cfg = _ring(args)
    lines = ["precision,embedding,coordinate,true,recovered,abs_error"]
    summary = {}
    for precision in ("real", "ring"):
        records = [
            QueryRecord(
                quantize(q, cfg) if precision == "ring" else q,
                simulate_broken_protocol(q, db.matrix, precision, cfg),
            )
            for q in queries
        ]
        recovered = recover_embeddings(records)
        err = np.abs(recovered - db.matrix)
        summary[precision] = float(err.max())
        for i in range(args.m):
            for j in range(args.n):
                lines.append(
                    f"{precision},{i},{j},{float(db.matrix[i, j])!r},"
                    f"{float(recovered[i, j])!r},{float(err[i, j])!r}"
                )
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    print(json.dumps({"max_abs_error": summary,
                      "quantization_bound": 2.0 ** (-cfg.frac + 1)}), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="emcomp",
        description="Two-party secure embedding comparison (dealer / run / bench / attack)",
    )
    ap.add_argument("--version", action="version", version="emcomp 0.1.0")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dealer", help="provision correlated randomness for one session")
    p.add_argument("--db")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=("indices", "bit"), default="indices")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config")
    _common_flags(p)
    p.set_defaults(fn=cmd_dealer)

    p = sub.add_parser("run", help="run the comparison protocol")
    p.add_argument("--role", choices=("both", "client", "server"), default="both")
    p.add_argument("--mode", choices=("indices", "bit"), default="indices")
    p.add_argument("--db")
    p.add_argument("--query")
    p.add_argument("--dealer")
    p.add_argument("--listen", type=int, default=9301)
    p.add_argument("--connect")
    p.add_argument("--net", default="lan", help="lan | wan | profile.json")
    p.add_argument("--out")
    p.add_argument("--config")
    _common_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("bench", help="simulated-network benchmark grid")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--kernels", action="store_true",
                   help="compare compiled vs pure-Python kernel instead")
    _common_flags(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("attack", help="recover a database from the broken scheme's leaks")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--out")
    _common_flags(p)
    p.set_defaults(fn=cmd_attack)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ProtocolAbort, ChannelClosed, RoundDesyncError, RankDeficiencyError,
            ConnectionError, TimeoutError) as exc:
        print(f"protocol abort: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
