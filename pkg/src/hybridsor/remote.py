"""HTTP seam for an external QUBO sampling service.

Protocol: ``POST <endpoint>/v1/sample`` with JSON body::

    {"qubo": "<QUBO text format>", "reads": n, "sweeps": n, "seed": n}

answered by::

    {"samples": [{"bits": "0101...", "energy": e, "count": k}, ...]}

:func:`remote_sample` is the client. :func:`make_sampler_server` runs the
same protocol on top of the local annealer and is what the tests and demos
talk to.
"""

import json
import math
import socket
import threading
import urllib.error
import urllib.request
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .annealer import AnnealConfig, Sample, SampleSet, simulated_anneal
from .errors import (
    EnergyInconsistencyError,
    FormatError,
    InvalidArgumentError,
    MalformedResponseError,
    ProtocolError,
    RemoteConnectionError,
    RemoteTimeoutError,
)
from .io import qubo_from_text, qubo_to_text
from .qubo import energy

__all__ = ["remote_sample", "make_sampler_server", "serve_in_thread", "ENERGY_TOLERANCE"]

SAMPLE_PATH = "/v1/sample"
ENERGY_TOLERANCE = 1e-6


def _url(endpoint):
    endpoint = endpoint.rstrip("/")
    return endpoint if endpoint.endswith(SAMPLE_PATH) else endpoint + SAMPLE_PATH


def _is_timeout(exc):
    return isinstance(exc, (socket.timeout, TimeoutError)) or "timed out" in str(exc)


def remote_sample(endpoint, problem, config=AnnealConfig(), timeout=30.0):
    """Sample ``problem`` on a remote service and validate the answer.

    Every returned energy is re-evaluated locally; a disagreement larger than
    ``1e-6`` (relative to ``max(1, |E|)``) raises
    :class:`EnergyInconsistencyError`.

    Raises
    ------
    RemoteConnectionError, RemoteTimeoutError, ProtocolError,
    MalformedResponseError, EnergyInconsistencyError
    """
    body = json.dumps({"qubo": qubo_to_text(problem), "reads": int(config.reads),
                       "sweeps": int(config.sweeps), "seed": int(config.seed)}).encode()
    request = urllib.request.Request(_url(endpoint), data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            payload = resp.read()
    except urllib.error.HTTPError as exc:
        raise ProtocolError(f"sampler answered HTTP {exc.code}", status=exc.code) from exc
    except urllib.error.URLError as exc:
        if _is_timeout(exc.reason):
            raise RemoteTimeoutError(f"sampler timed out after {timeout} s") from exc
        raise RemoteConnectionError(f"cannot reach sampler: {exc.reason}") from exc
    except (socket.timeout, TimeoutError) as exc:
        raise RemoteTimeoutError(f"sampler timed out after {timeout} s") from exc
    except (ConnectionError, OSError) as exc:
        raise RemoteConnectionError(f"cannot reach sampler: {exc}") from exc
    return parse_response(payload, problem)


def parse_response(payload, problem):
    try:
        doc = json.loads(payload)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedResponseError(f"response is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("samples"), list) \
            or not doc["samples"]:
        raise MalformedResponseError("response must hold a non-empty 'samples' list")
    n = problem.variable_count
    samples = []
    for k, item in enumerate(doc["samples"]):
        if not isinstance(item, dict):
            raise MalformedResponseError(f"sample {k} is not an object")
        bits, reported, count = item.get("bits"), item.get("energy"), item.get("count", 1)
        if not isinstance(bits, str) or len(bits) != n or set(bits) - {"0", "1"}:
            raise MalformedResponseError(f"sample {k}: 'bits' must be {n} characters of 0/1")
        if isinstance(reported, bool) or not isinstance(reported, (int, float)) \
                or not math.isfinite(reported):
            raise MalformedResponseError(f"sample {k}: 'energy' must be a finite number")
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise MalformedResponseError(f"sample {k}: 'count' must be a positive integer")
        q = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        local = energy(problem, q)
        if abs(reported - local) > ENERGY_TOLERANCE * max(1.0, abs(local)):
            raise EnergyInconsistencyError(
                f"sample {k}: reported energy {reported!r} but local evaluation gives {local!r}")
        samples.append(Sample(q.astype(np.uint8), local, count))
    return SampleSet.sorted(samples)


def sample_set_to_json(samples):
    return {"samples": [{"bits": s.bitstring(), "energy": s.energy, "count": s.count}
                        for s in samples]}


class _SamplerHandler(BaseHTTPRequestHandler):
    sampler = staticmethod(simulated_anneal)
    base_config = AnnealConfig()

    def log_message(self, format, *args):
        pass

    def _reply(self, status, doc):
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != SAMPLE_PATH:
            self._reply(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            req = json.loads(self.rfile.read(length))
            problem = qubo_from_text(req["qubo"])
            cfg = replace(self.base_config, reads=int(req.get("reads", self.base_config.reads)),
                          sweeps=int(req.get("sweeps", self.base_config.sweeps)),
                          seed=int(req.get("seed", self.base_config.seed)))
        except (ValueError, KeyError, TypeError, FormatError, InvalidArgumentError) as exc:
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, sample_set_to_json(self.sampler(problem, cfg)))


def make_sampler_server(host="127.0.0.1", port=0, sampler=None, config=AnnealConfig()):
    """HTTP server speaking the sampling protocol.

    ``sampler(problem, config)`` defaults to :func:`simulated_anneal`;
    ``config`` supplies the beta schedule (reads, sweeps and seed come from
    each request). ``port=0`` picks a free port (see ``server.server_address``).
    """
    attrs = {"base_config": config}
    if sampler is not None:
        attrs["sampler"] = staticmethod(sampler)
    handler = type("SamplerHandler", (_SamplerHandler,), attrs)
    return ThreadingHTTPServer((host, port), handler)


def serve_in_thread(server):
    """Start ``server`` on a daemon thread; returns its base URL."""
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return f"http://{host}:{port}"
