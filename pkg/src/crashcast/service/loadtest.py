"""Closed-loop load harness.

Drives the prediction endpoint with N persistent keep-alive connections
managed by one selector loop: each connection fires its next request the
moment its response completes. Cells are targeted by a Zipf distribution
over the service's active cells (fetched through the hotspot surface), a
configurable slice of traffic carries what-if overrides, and the report
excludes a warmup window so percentiles reflect steady state.
"""

from __future__ import annotations

import json
import selectors
import socket
import time
from dataclasses import dataclass, field
from typing import Optional
from urllib.parse import urlsplit

import numpy as np


class ServiceUnreachable(ConnectionError):
    pass


@dataclass(frozen=True)
class LoadProfile:
    url: str
    concurrency: int = 256
    duration_s: float = 20.0
    zipf_exponent: float = 1.1
    warmup_s: float = 2.0
    whatif_fraction: float = 0.10
    n_whatif_variants: int = 8
    whatif_cell_limit: int = 200  # what-if traffic reuses the hottest cells
    seed: int = 0
    max_cells: int = 100000
    at_iso: Optional[str] = None  # pin requests to one time bucket; None = server now


def _raise_fd_limit(minimum: int) -> None:
    try:
        import resource

        soft, hard = resource.getrlimit(resource.RLIMIT_NOFILE)
        if soft < minimum:
            resource.setrlimit(resource.RLIMIT_NOFILE, (min(minimum, hard), hard))
    except (ImportError, ValueError, OSError):
        pass


@dataclass
class LatencyReport:
    concurrency: int
    duration_s: float
    requests: int
    throughput_rps: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    tier_counts: dict[str, int]
    hit_rate: float
    server_counters_delta: dict[str, int] = field(default_factory=dict)
    errors: int = 0

    def to_dict(self) -> dict:
        return {
            "concurrency": self.concurrency,
            "duration_s": self.duration_s,
            "requests": self.requests,
            "throughput_rps": self.throughput_rps,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
            "p99_ms": self.p99_ms,
            "tier_counts": dict(self.tier_counts),
            "hit_rate": self.hit_rate,
            "server_counters_delta": dict(self.server_counters_delta),
            "errors": self.errors,
        }


_WHATIF_TEMPLATES = (
    {"weather_override": {"category": "4"}},
    {"weather_override": {"category": "5"}},
    {"weather_override": {"category": "3"}},
    {"flags_override": {"ICY_ROAD": 1}},
    {"flags_override": {"ALCOHOL_RELATED": 1}},
    {"flags_override": {"AGGRESSIVE_DRIVING": 1}},
    {"weather_override": {"category": "6"}, "flags_override": {"WET_ROAD": 1}},
    {"flags_override": {"UNBELTED": 1, "AGGRESSIVE_DRIVING": 1}},
)


def _http_get(host: str, port: int, path: str, timeout: float = 30.0) -> bytes:
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            sock.sendall(f"GET {path} HTTP/1.1\r\nHost: {host}\r\nConnection: close\r\n\r\n".encode())
            raw = b""
            head_end = -1
            while True:
                data = sock.recv(65536)
                if not data:
                    break
                raw += data
                if head_end < 0:
                    head_end = raw.find(b"\r\n\r\n")
                if head_end >= 0:
                    head = raw[:head_end].lower()
                    i = head.find(b"content-length:")
                    if i >= 0:
                        j = head.find(b"\r\n", i)
                        clen = int(head[i + 15: j if j > 0 else len(head)])
                        if len(raw) >= head_end + 4 + clen:
                            break
    except OSError as exc:
        raise ServiceUnreachable(f"{host}:{port}: {exc}") from exc
    head_end = raw.find(b"\r\n\r\n")
    return raw[head_end + 4:]


def _parse_url(url: str) -> tuple[str, int]:
    parsed = urlsplit(url if "//" in url else f"http://{url}")
    if parsed.hostname is None:
        raise ServiceUnreachable(f"cannot parse url {url!r}")
    return parsed.hostname, parsed.port or 80


def fetch_active_cells(host: str, port: int, max_cells: int) -> list[dict]:
    body = _http_get(host, port, f"/hotspots?min_lat=-90&min_lon=-180&max_lat=90&max_lon=180&k={max_cells}")
    spots = json.loads(body)
    if not spots:
        raise ServiceUnreachable("service reports no active cells to target")
    return spots


def fetch_counters(host: str, port: int) -> dict:
    return json.loads(_http_get(host, port, "/metrics"))["requests"]


class _Conn:
    __slots__ = ("sock", "buf", "t0", "req_idx")

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buf = b""
        self.t0 = 0.0
        self.req_idx = -1


def _build_requests(spots: list[dict], profile: LoadProfile, at_iso: str) -> tuple[list[bytes], np.ndarray]:
    """Pre-serialized request bytes and the sampling CDF over them.

    Plain requests target cell centers with Zipf(s) weights over the risk
    ranking; what-if variants reuse the hottest cells (bounded key space,
    like operators iterating scenarios) and split the configured traffic
    fraction."""
    plain = []
    for spot in spots:
        body = json.dumps({
            "location": {"lat": spot["center"]["lat"], "lon": spot["center"]["lon"]},
            "at": at_iso,
        }).encode()
        plain.append(body)
    n_whatif_cells = min(len(spots), profile.whatif_cell_limit)
    whatif = []
    for template in _WHATIF_TEMPLATES[: profile.n_whatif_variants]:
        for spot in spots[:n_whatif_cells]:
            doc = {
                "location": {"lat": spot["center"]["lat"], "lon": spot["center"]["lon"]},
                "at": at_iso,
            }
            doc.update(template)
            whatif.append(json.dumps(doc).encode())

    def wrap(body: bytes) -> bytes:
        return (b"POST /predict HTTP/1.1\r\nHost: load\r\nContent-Type: application/json\r\n"
                b"Content-Length: " + str(len(body)).encode() + b"\r\n\r\n" + body)

    requests = [wrap(b) for b in plain] + [wrap(b) for b in whatif]

    n = len(plain)
    ranks = np.arange(1, n + 1, dtype=float)
    zipf = ranks ** (-profile.zipf_exponent)
    zipf /= zipf.sum()
    if whatif:
        n_variants = max(len(whatif) // n_whatif_cells, 1)
        whatif_cell_w = zipf[:n_whatif_cells] / zipf[:n_whatif_cells].sum()
        weights = np.concatenate([
            zipf * (1.0 - profile.whatif_fraction),
            np.tile(whatif_cell_w / n_variants, n_variants) * profile.whatif_fraction,
        ])
    else:
        weights = zipf
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return requests, cdf


def run_load_test(profile: LoadProfile) -> LatencyReport:
    """Closed-loop run against a live service; percentiles exclude warmup."""
    host, port = _parse_url(profile.url)
    _raise_fd_limit(profile.concurrency + 64)
    spots = fetch_active_cells(host, port, profile.max_cells)
    counters_before = fetch_counters(host, port)
    # target the service's wall-clock so requests land in the live bucket
    at_iso = profile.at_iso or json.loads(_http_get(host, port, "/metrics")).get("now") or _now_iso()
    requests, cdf = _build_requests(spots, profile, at_iso)

    rng = np.random.default_rng(profile.seed)
    pre_draw = rng.random(1 << 16)
    draw_i = 0

    sel = selectors.DefaultSelector()
    conns = []
    try:
        for _ in range(profile.concurrency):
            sock = socket.create_connection((host, port), timeout=10.0)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.setblocking(False)
            conn = _Conn(sock)
            sel.register(sock, selectors.EVENT_READ, conn)
            conns.append(conn)
    except OSError as exc:
        raise ServiceUnreachable(f"cannot open {profile.concurrency} connections: {exc}") from exc

    lat_all: list[tuple[float, float]] = []  # (completion time, latency)
    tier_counts = {"PRIMARY": 0, "SECONDARY": 0, "MISS": 0}
    errors = 0

    def next_request(conn: _Conn) -> None:
        nonlocal draw_i
        u = pre_draw[draw_i & 0xFFFF]
        draw_i += 1
        idx = int(np.searchsorted(cdf, u, side="right"))
        conn.req_idx = min(idx, len(requests) - 1)
        conn.t0 = time.perf_counter()
        conn.sock.sendall(requests[conn.req_idx])

    t_start = time.perf_counter()
    stop_at = t_start + profile.duration_s
    for conn in conns:
        next_request(conn)

    open_conns = len(conns)
    while time.perf_counter() < stop_at and open_conns > 0:
        for key, _ in sel.select(timeout=0.05):
            conn: _Conn = key.data
            try:
                data = conn.sock.recv(65536)
            except (BlockingIOError, InterruptedError):
                continue
            except ConnectionResetError:
                data = b""
            if not data:
                sel.unregister(conn.sock)
                conn.sock.close()
                open_conns -= 1
                errors += 1
                continue
            conn.buf += data
            end = conn.buf.find(b"\r\n\r\n")
            if end < 0:
                continue
            i = conn.buf.find(b"Content-Length:")
            if i < 0:
                i = conn.buf.lower().find(b"content-length:")
            j = conn.buf.find(b"\r\n", i)
            clen = int(conn.buf[i + 15: j])
            total = end + 4 + clen
            if len(conn.buf) < total:
                continue
            body = conn.buf[end + 4: total]
            conn.buf = conn.buf[total:]
            now = time.perf_counter()
            lat_all.append((now - t_start, now - conn.t0))
            k = body.find(b'"cache_tier":"')
            if k >= 0:
                tier = {80: "PRIMARY", 83: "SECONDARY", 77: "MISS"}.get(body[k + 14])
                if tier:
                    tier_counts[tier] += 1
            else:
                errors += 1
            next_request(conn)

    elapsed = time.perf_counter() - t_start
    for conn in conns:
        try:
            sel.unregister(conn.sock)
        except (KeyError, ValueError):
            pass
        conn.sock.close()
    sel.close()

    counters_after = fetch_counters(host, port)
    delta = {k: counters_after.get(k, 0) - counters_before.get(k, 0) for k in counters_after}

    steady = [lat for t, lat in lat_all if t >= profile.warmup_s]
    if not steady:
        steady = [lat for _, lat in lat_all]
    steady.sort()
    pick = lambda q: steady[min(len(steady) - 1, int(q * (len(steady) - 1)))] * 1000.0 if steady else 0.0  # noqa: E731
    hits = tier_counts["PRIMARY"] + tier_counts["SECONDARY"]
    answered = sum(tier_counts.values())
    return LatencyReport(
        concurrency=profile.concurrency,
        duration_s=elapsed,
        requests=len(lat_all),
        throughput_rps=len(lat_all) / elapsed if elapsed > 0 else 0.0,
        p50_ms=pick(0.50),
        p95_ms=pick(0.95),
        p99_ms=pick(0.99),
        tier_counts=tier_counts,
        hit_rate=hits / answered if answered else 0.0,
        server_counters_delta=delta,
        errors=errors,
    )


def _now_iso() -> str:
    from datetime import datetime, timezone

    return datetime.now(tz=timezone.utc).isoformat()
