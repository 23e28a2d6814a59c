"""Network model arithmetic, frame accounting, sim/TCP parity."""

import json
import threading

import numpy as np
import pytest

from emcomp.transport import (
    LAN,
    WAN,
    MT_OPEN,
    NetProfile,
    Sent,
    Transcript,
    channel_pair,
    measure,
    run_pair,
    tcp_connect,
    tcp_listen,
)


def test_profile_validation():
    with pytest.raises(ValueError):
        NetProfile("x", 0, 1)
    with pytest.raises(ValueError):
        NetProfile("x", 1, -1)


def test_lan_single_round_formula():
    # 1 KB payload over 1 Gbps + 0.2 ms rtt
    tr = Transcript()
    tr.log(Sent(0, 0, MT_OPEN, 1024, 8192, "basic", False))
    want = 0.2 + 8 * 1024 / 1e9 * 1e3
    assert tr.simulated_ms(LAN) == pytest.approx(want)


def test_wan_ten_empty_rounds():
    tr = Transcript()
    for r in range(10):
        tr.log(Sent(r, 0, MT_OPEN, 0, 0, "basic", False))
        tr.log(Sent(r, 1, MT_OPEN, 0, 0, "basic", False))
    assert tr.simulated_ms(WAN) == pytest.approx(400.0)


def test_oneway_round_charges_half_rtt():
    tr = Transcript()
    tr.log(Sent(0, 1, MT_OPEN, 0, 0, "out", True))
    assert tr.simulated_ms(WAN) == pytest.approx(20.0)


def test_byte_counter_is_sum_of_payloads():
    ch0, ch1 = channel_pair()

    def p0():
        ch0.exchange(MT_OPEN, b"abc", 24)
        ch0.exchange(MT_OPEN, b"defgh", 40)

    def p1():
        ch1.exchange(MT_OPEN, b"x", 8)
        ch1.exchange(MT_OPEN, b"yz", 16)

    run_pair(p0, p1, channels=(ch0, ch1))
    tr = ch0.transcript
    assert tr.bytes_sent(0) == 8
    assert tr.bytes_sent(1) == 3
    assert tr.bytes_sent(0, framed=True) == 8 + 2 * 7
    assert tr.rounds == 2


def test_full_duplex_prices_larger_direction():
    tr = Transcript()
    tr.log(Sent(0, 0, MT_OPEN, 1000, 8000, "basic", False))
    tr.log(Sent(0, 1, MT_OPEN, 3000, 24000, "basic", False))
    want = LAN.rtt_ms + 3000 * 8 / 1e9 * 1e3
    assert tr.simulated_ms(LAN) == pytest.approx(want)


def test_simulated_time_deterministic():
    def run(rep):
        ch0, ch1 = channel_pair()
        run_pair(lambda: ch0.exchange(MT_OPEN, b"\x00" * 64, 512),
                 lambda: ch1.exchange(MT_OPEN, b"\x00" * 64, 512),
                 channels=(ch0, ch1))
        return ch0.transcript

    res = measure(run, LAN, repeats=10)
    assert len(set(res.runs_ms)) == 1
    assert res.mean_ms == res.runs_ms[0]


def test_custom_profile_json(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"name": "sat", "bandwidth_bps": 5e6, "rtt_ms": 600}))
    prof = NetProfile.from_json(str(path))
    assert prof.rtt_ms == 600


def test_tcp_matches_simulated_log():
    """Same protocol steps over both transports produce the same frames."""
    payloads = [b"a" * 9, b"b" * 17, b"c" * 3]

    def steps(ch, party):
        for i, p in enumerate(payloads):
            ch.exchange(MT_OPEN, p if party == 0 else p[::-1], len(p) * 8)
        if party == 1:
            ch.send(MT_OPEN, b"final", 40)
        else:
            ch.recv()

    ch0, ch1 = channel_pair()
    run_pair(lambda: steps(ch0, 0), lambda: steps(ch1, 1), channels=(ch0, ch1))
    sim_rows = [r for r in ch0.transcript.rows()]

    port = 19753
    result = {}

    def server():
        ch = tcp_listen(port)
        steps(ch, 1)
        result["server"] = ch.transcript.rows()
        ch.close()

    th = threading.Thread(target=server)
    th.start()
    ch = tcp_connect("127.0.0.1", port)
    steps(ch, 0)
    th.join()
    ch.close()
    tcp_rows = sorted(result["server"] + ch.transcript.rows(),
                      key=lambda r: (r["round"], r["party"]))
    sim_rows = sorted(sim_rows, key=lambda r: (r["round"], r["party"]))
    assert tcp_rows == sim_rows


def test_transcript_export(tmp_path):
    tr = Transcript()
    tr.log(Sent(0, 0, MT_OPEN, 10, 80, "basic", False))
    csv_path = tmp_path / "t.csv"
    json_path = tmp_path / "t.json"
    tr.to_csv(str(csv_path))
    tr.to_json(str(json_path))
    assert "payload_bytes" in csv_path.read_text().splitlines()[0]
    assert json.loads(json_path.read_text())[0]["round"] == 0
