"""Language-model transports: canned (mock), recorded (replay) and HTTP."""

import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request

from ..errors import TransportFailure

log = logging.getLogger(__name__)

MAX_IN_FLIGHT = 4


def prompt_hash(prompt):
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class MockTransport:
    """Answers from a prompt -> response dict or a callable; ``default`` otherwise."""

    max_in_flight = MAX_IN_FLIGHT

    def __init__(self, responses=None, default=""):
        self.responses = responses if responses is not None else {}
        self.default = default
        self.calls = []
        self._lock = threading.Lock()

    def send(self, prompt):
        with self._lock:
            self.calls.append(prompt)
        if callable(self.responses):
            return self.responses(prompt)
        return self.responses.get(prompt, self.default)


class ReplayTransport:
    """Serves responses recorded as JSON lines ``{"prompt_hash": ..., "response": ...}``."""

    max_in_flight = MAX_IN_FLIGHT

    def __init__(self, path=None, records=None):
        self.table = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self.table[rec["prompt_hash"]] = rec["response"]
        for h, resp in (records or {}).items():
            self.table[h] = resp
        self.calls = 0

    def send(self, prompt):
        self.calls += 1
        try:
            return self.table[prompt_hash(prompt)]
        except KeyError:
            raise TransportFailure(f"no recorded response for prompt {prompt_hash(prompt)[:12]}") from None


class RecordingTransport:
    """Wraps another transport and appends every exchange to a replay file."""

    def __init__(self, inner, path):
        self.inner = inner
        self.path = path
        self.max_in_flight = getattr(inner, "max_in_flight", MAX_IN_FLIGHT)
        self._lock = threading.Lock()

    def send(self, prompt):
        response = self.inner.send(prompt)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"prompt_hash": prompt_hash(prompt), "response": response}) + "\n")
        return response


def write_replay(path, pairs):
    """Write ``(prompt, response)`` pairs as a replay file."""
    with open(path, "w", encoding="utf-8") as fh:
        for prompt, response in pairs:
            fh.write(json.dumps({"prompt_hash": prompt_hash(prompt), "response": response}) + "\n")


class HttpTransport:
    """Minimal JSON chat endpoint client.

    Request ``{"model": ..., "messages": [{"role": "user", "content": prompt}]}``;
    response ``{"content": ...}``. The credential comes from the environment
    variable named by ``api_key_env`` and is sent in ``auth_header``.
    """

    max_in_flight = MAX_IN_FLIGHT

    def __init__(self, endpoint, model="default", timeout=60.0, retries=3, backoff=1.0,
                 api_key_env="LOGO_TE_API_KEY", auth_header="Authorization", opener=None):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.api_key_env = api_key_env
        self.auth_header = auth_header
        self._open = opener or urllib.request.urlopen
        self._slots = threading.BoundedSemaphore(self.max_in_flight)

    def _request(self, prompt):
        body = json.dumps({"model": self.model, "messages": [{"role": "user", "content": prompt}]}).encode()
        req = urllib.request.Request(self.endpoint, data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
        key = os.environ.get(self.api_key_env)
        if key:
            value = key if self.auth_header.lower() != "authorization" else f"Bearer {key}"
            req.add_header(self.auth_header, value)
        return req

    def send(self, prompt):
        last = None
        for attempt in range(self.retries + 1):
            try:
                with self._slots, self._open(self._request(prompt), timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                content = payload.get("content") if isinstance(payload, dict) else None
                if not isinstance(content, str):
                    raise ValueError("response lacks a string 'content' field")
                return content
            except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
                last = exc
                log.warning("LLM request failed (attempt %d/%d): %s", attempt + 1, self.retries + 1, exc)
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise TransportFailure(f"request failed after {self.retries + 1} attempts: {last}")


def make_transport(kind, *, responses=None, replay_path=None, endpoint=None, **kw):
    if kind == "mock":
        return MockTransport(responses, **kw)
    if kind == "replay":
        if replay_path is None:
            raise ValueError("replay transport needs a replay file")
        return ReplayTransport(replay_path)
    if kind == "http":
        if not endpoint:
            raise ValueError("http transport needs an endpoint")
        return HttpTransport(endpoint, **kw)
    raise ValueError(f"unknown transport {kind!r}")
