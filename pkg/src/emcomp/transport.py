"""Message transport: in-process simulated network and real TCP.

Both backends speak the same frame format and produce the same message log
for the same protocol run; they differ only in how bytes move.  Latency and
bandwidth never gate execution - the simulated time of a run is computed
after the fact from the transcript, which makes it a deterministic function
of (rounds, bytes, profile).

Frame layout (little-endian):  u32 payload length | u16 round | u8 type,
followed by the payload.  Messages a party sends within one protocol round
are already coalesced into a single frame by the round builders upstream.

Latency model: a reveal barrier (both parties exchange and must receive
before proceeding) is charged one full RTT; a strictly one-way message
(e.g. the final output share sent to the client) is charged RTT/2.  Each
round also pays the serialisation time of its largest direction at the
profile bandwidth.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

FRAME_HEADER_BYTES = 7

# message types on the wire
MT_HANDSHAKE = 0
MT_OPEN = 1      # beaver openings (d, e differences)
MT_MASKED = 2    # masked wire reveals (x + r)
MT_BITS = 3      # boolean openings
MT_OUTPUT = 4    # final reveal toward the client

MTYPE_NAMES = {0: "handshake", 1: "open", 2: "masked", 3: "bits", 4: "output"}


@dataclass(frozen=True)
class NetProfile:
    name: str
    bandwidth_bps: float
    rtt_ms: float

    def __post_init__(self) -> None:
        if self.bandwidth_bps <= 0:
            raise ValueError("bandwidth must be positive")
        if self.rtt_ms < 0:
            raise ValueError("rtt must be non-negative")

    @classmethod
    def from_json(cls, path: str) -> "NetProfile":
        with open(path) as fh:
            d = json.load(fh)
        return cls(d.get("name", "custom"), float(d["bandwidth_bps"]), float(d["rtt_ms"]))


LAN = NetProfile("lan", 1e9, 0.2)
WAN = NetProfile("wan", 100e6, 40.0)
PROFILES = {"lan": LAN, "wan": WAN}


@dataclass
class Sent:
    round: int
    party: int
    mtype: int
    nbytes: int   # payload bytes, excluding the 7-byte frame header
    nbits: int    # semantic payload bits (boolean openings are bit-packed)
    phase: str
    oneway: bool


class Transcript:
    """Ordered log of everything either party put on the wire."""

    def __init__(self) -> None:
        self.entries: list[Sent] = []
        self._lock = threading.Lock()
        self.captured: list[tuple[int, int, int, bytes]] = []  # (round, party, mtype, payload)

    def log(self, entry: Sent, payload: bytes | None = None) -> None:
        with self._lock:
            self.entries.append(entry)
            if payload is not None:
                self.captured.append((entry.round, entry.party, entry.mtype, payload))

    # ------------------------------------------------------------- accounting
    @property
    def rounds(self) -> int:
        return max((e.round for e in self.entries), default=-1) + 1

    def bytes_sent(self, party: int | None = None, framed: bool = False) -> int:
        per = FRAME_HEADER_BYTES if framed else 0
        return sum(
            e.nbytes + per for e in self.entries if party is None or e.party == party
        )

    def bits_sent(self, party: int | None = None, phase: str | None = None) -> int:
        return sum(
            e.nbits
            for e in self.entries
            if (party is None or e.party == party) and (phase is None or e.phase == phase)
        )

    def rounds_in_phase(self, phase: str) -> int:
        return len({e.round for e in self.entries if e.phase == phase})

    def _by_round(self, phase: str | None = None):
        rounds: dict[int, list[Sent]] = {}
        for e in self.entries:
            if phase is None or e.phase == phase:
                rounds.setdefault(e.round, []).append(e)
        return rounds

    def simulated_ms(self, profile: NetProfile, phase: str | None = None) -> float:
        """Wall-clock of the wire under the profile: sum over rounds of
        (rtt | rtt/2) + largest direction / bandwidth."""
        total = 0.0
        for _, entries in sorted(self._by_round(phase).items()):
            oneway = all(e.oneway for e in entries)
            lat = profile.rtt_ms / 2 if oneway else profile.rtt_ms
            per_dir = {0: 0, 1: 0}
            for e in entries:
                per_dir[e.party] += e.nbytes
            total += lat + max(per_dir.values()) * 8.0 / profile.bandwidth_bps * 1e3
        return total

    def phase_ms(self, profile: NetProfile) -> dict[str, float]:
        return {ph: self.simulated_ms(profile, ph) for ph in self.phases()}

    def phases(self) -> list[str]:
        seen: list[str] = []
        for e in self.entries:
            if e.phase not in seen:
                seen.append(e.phase)
        return seen

    # ---------------------------------------------------------------- export
    def rows(self) -> list[dict]:
        return [
            {
                "round": e.round,
                "party": e.party,
                "type": MTYPE_NAMES.get(e.mtype, str(e.mtype)),
                "payload_bytes": e.nbytes,
                "framed_bytes": e.nbytes + FRAME_HEADER_BYTES,
                "payload_bits": e.nbits,
                "phase": e.phase,
                "oneway": e.oneway,
            }
            for e in self.entries
        ]

    def to_csv(self, path: str) -> None:
        rows = self.rows()
        cols = list(rows[0].keys()) if rows else []
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(str(r[c]) for c in cols) + "\n")

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.rows(), fh, indent=1)


class ChannelClosed(RuntimeError):
    pass


class RoundDesyncError(RuntimeError):
    """Peer frame arrived with an unexpected round index."""


class _ChannelBase:
    """Shared framing, logging and round bookkeeping for both backends."""

    def __init__(self, party: int, transcript: Transcript, capture: bool = False):
        self.party = party
        self.transcript = transcript
        self.capture = capture
        self.round = 0
        self.phase = "setup"

    def set_phase(self, phase: str) -> None:
        self.phase = phase

    # subclasses provide _put/_get of (round, mtype, payload)
    def exchange(self, mtype: int, payload: bytes, nbits: int | None = None) -> bytes:
        """Reveal barrier: send own payload, return the peer's."""
        r = self.round
        self._log(r, mtype, payload, nbits, oneway=False)
        self._put(r, mtype, payload)
        pr, pm, pp = self._get()
        if pr != r or pm != mtype:
            raise RoundDesyncError(f"expected round {r}/type {mtype}, got {pr}/{pm}")
        self.round = r + 1
        return pp

    def send(self, mtype: int, payload: bytes, nbits: int | None = None) -> None:
        """One-way message; the peer picks it up with recv()."""
        r = self.round
        self._log(r, mtype, payload, nbits, oneway=True)
        self._put(r, mtype, payload)
        self.round = r + 1

    def recv(self) -> tuple[int, bytes]:
        r, mtype, payload = self._get()
        self.round = r + 1
        return mtype, payload

    def _log(self, rnd: int, mtype: int, payload: bytes, nbits: int | None, oneway: bool) -> None:
        self.transcript.log(
            Sent(rnd, self.party, mtype, len(payload),
                 8 * len(payload) if nbits is None else nbits, self.phase, oneway),
            payload if self.capture else None,
        )

    def _put(self, rnd: int, mtype: int, payload: bytes) -> None:
        raise NotImplementedError

    def _get(self) -> tuple[int, int, bytes]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class SimChannel(_ChannelBase):
    def __init__(self, party, transcript, outq, inq, abort, capture=False):
        super().__init__(party, transcript, capture)
        self._outq = outq
        self._inq = inq
        self.abort_event = abort

    def _put(self, rnd, mtype, payload):
        self._outq.put((rnd, mtype, payload))

    def _get(self):
        import time as _time

        deadline = _time.monotonic() + 120.0
        while True:
            try:
                return self._inq.get(timeout=0.05)
            except queue.Empty:
                if self.abort_event.is_set():
                    raise ChannelClosed("peer aborted") from None
                if _time.monotonic() > deadline:
                    raise ChannelClosed("simulated peer timed out") from None


def channel_pair(capture: bool = False) -> tuple[SimChannel, SimChannel]:
    """Two connected in-process endpoints sharing one transcript."""
    t = Transcript()
    q01: queue.Queue = queue.Queue()
    q10: queue.Queue = queue.Queue()
    abort = threading.Event()
    return (
        SimChannel(0, t, q01, q10, abort, capture),
        SimChannel(1, t, q10, q01, abort, capture),
    )


class TcpChannel(_ChannelBase):
    def __init__(self, party: int, sock: socket.socket, transcript: Transcript | None = None,
                 capture: bool = False):
        super().__init__(party, transcript or Transcript(), capture)
        self._sock = sock

    def _put(self, rnd, mtype, payload):
        header = struct.pack("<IHB", len(payload), rnd & 0xFFFF, mtype)
        self._sock.sendall(header + payload)

    def _get(self):
        header = self._recv_exact(FRAME_HEADER_BYTES)
        length, rnd, mtype = struct.unpack("<IHB", header)
        return rnd, mtype, self._recv_exact(length)

    def _recv_exact(self, count: int) -> bytes:
        buf = b""
        while len(buf) < count:
            chunk = self._sock.recv(count - len(buf))
            if not chunk:
                raise ChannelClosed("socket closed")
            buf += chunk
        return buf

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def tcp_listen(port: int, host: str = "127.0.0.1", party: int = 1,
               capture: bool = False, timeout: float = 60.0) -> TcpChannel:
    srv = socket.create_server((host, port))
    srv.settimeout(timeout)
    conn, _ = srv.accept()
    conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    srv.close()
    return TcpChannel(party, conn, capture=capture)


def tcp_connect(host: str, port: int, party: int = 0, capture: bool = False,
                timeout: float = 60.0) -> TcpChannel:
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return TcpChannel(party, sock, capture=capture)


def run_pair(fn0, fn1, channels: tuple | None = None):
    """Run both party closures in lockstep threads; re-raise the first error.

    With `channels` given, a failing party trips the shared abort so the
    peer unblocks immediately instead of waiting out its receive timeout.
    """
    results: list = [None, None]
    errors: list = [None, None]

    def wrap(i, fn):
        try:
            results[i] = fn()
        except BaseException as exc:  # noqa: BLE001 - propagated below
            errors[i] = exc
            if channels is not None:
                channels[i].abort_event.set()

    t0 = threading.Thread(target=wrap, args=(0, fn0))
    t1 = threading.Thread(target=wrap, args=(1, fn1))
    t0.start()
    t1.start()
    t0.join()
    t1.join()
    for err in errors:
        if err is not None:
            raise err
    return results[0], results[1]


def run_sim_pair(fn0, fn1, capture: bool = False):
    """channel_pair + run_pair with abort wiring; returns (r0, r1, transcript)."""
    ch0, ch1 = channel_pair(capture=capture)
    r0, r1 = run_pair(lambda: fn0(ch0), lambda: fn1(ch1), channels=(ch0, ch1))
    return r0, r1, ch0.transcript


@dataclass
class MeasureResult:
    profile: NetProfile
    mean_ms: float
    runs_ms: list[float]
    transcripts: list[Transcript] = field(repr=False, default_factory=list)

    def phase_means(self) -> dict[str, float]:
        acc: dict[str, list[float]] = {}
        for tr in self.transcripts:
            for ph, ms in tr.phase_ms(self.profile).items():
                acc.setdefault(ph, []).append(ms)
        return {ph: float(np.mean(v)) for ph, v in acc.items()}


def measure(run_fn, profile: NetProfile, repeats: int = 10) -> MeasureResult:
    """Execute `run_fn(rep) -> Transcript` `repeats` times, average wire time.

    Only the online stage appears in the transcript, so dealer I/O never
    contributes.
    """
    transcripts = [run_fn(rep) for rep in range(repeats)]
    times = [t.simulated_ms(profile) for t in transcripts]
    return MeasureResult(profile, float(np.mean(times)), times, transcripts)
