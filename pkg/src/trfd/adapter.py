"""External-evaluator protocol: line-delimited JSON over a child process's
standard streams, plus the mock server used for round-trip testing.

Request:  {"id": 1, "x": [...], "freq": [...]}
Response: {"id": 1, "r_db": [...]}  or  {"id": 1, "error": "..."}
One object per line, UTF-8.  Floats serialize via repr (shortest round-trip),
so exact cache keys survive the wire.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import sys
import threading

import numpy as np

from .core import EvaluationError, Evaluator, FrequencySweep


class ProtocolError(RuntimeError):
    """Malformed or out-of-order traffic on the evaluator protocol."""


class ExternalEvaluator(Evaluator):
    """Evaluator backed by a child process speaking the line protocol.

    Sequential: one in-flight request at a time.  No caching here; the
    evaluation cache is the single source of truth for cost accounting.
    """

    def __init__(self, command: str | list[str], sweep: FrequencySweep,
                 dim: int, timeout: float = 600.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.sweep = sweep
        self.dim = dim
        self.timeout = timeout
        self._next_id = 0
        self._send_lock = threading.Lock()
        self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE,
                                      stdout=subprocess.PIPE, text=True,
                                      bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def evaluate(self, x) -> np.ndarray:
        with self._send_lock:
            req_id = self._next_id
            self._next_id += 1
            msg = json.dumps({"id": req_id,
                              "x": [float(v) for v in np.asarray(x, dtype=np.float64)],
                              "freq": [float(f) for f in self.sweep.points]})
            try:
                self._proc.stdin.write(msg + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError) as exc:
                raise ProtocolError(f"evaluator process is gone: {exc}") from exc
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                raise EvaluationError(
                    f"evaluator timed out after {self.timeout} s on request {req_id}")
            if line is None:
                raise ProtocolError("evaluator process closed its output stream")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line: {line!r}") from exc
        if resp.get("id") != req_id:
            raise ProtocolError(f"response id {resp.get('id')} != request id {req_id}")
        if "error" in resp:
            raise EvaluationError(f"remote evaluator error: {resp['error']}")
        r = np.asarray(resp.get("r_db"), dtype=np.float64)
        if r.shape != self.sweep.points.shape:
            raise ProtocolError(
                f"response length {r.size} != sweep length {self.sweep.n_points}")
        return r

    def close(self):
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve_mock(ev: Evaluator, stdin=None, stdout=None, stderr=None) -> None:
    """Answer protocol requests from stdin on stdout until end-of-input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    for line in stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            req_id = req["id"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            print(f"unparseable request: {exc}", file=stderr)
            continue
        try:
            x = np.asarray(req["x"], dtype=np.float64)
            r = np.asarray(ev.evaluate(x), dtype=np.float64)
            resp = {"id": req_id, "r_db": [float(v) for v in r]}
        except Exception as exc:
            resp = {"id": req_id, "error": str(exc)}
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()
