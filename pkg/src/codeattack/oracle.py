"""Clients for the two model oracles the attack consumes.

Both the victim seq2seq model and the masked language model sit behind a
small JSON-over-HTTP protocol (version "1"):

    POST /generate      {"proto": "1", "tokens": [...]}
                     -> {"proto": "1", "tokens": [...], "step_logits": [...]}
                        (optionally "text": detokenized output)
    POST /score         {"proto": "1", "tokens": [...], "target": [...]}
                     -> {"proto": "1", "target_logits": [...]}
    POST /mask_predict  {"proto": "1", "tokens": [...],
                         "mask_span": [i, j], "k": n}
                     -> {"proto": "1", "candidates": [["text", score], ...]}
    GET  /health     -> {"proto": "1", "status": "ok"}

`mask_span` is a half-open token-index interval [i, j); the request carries
the original token texts and the server performs the masking so that
sub-word alignment stays server-side. Every payload must carry the protocol
version, and all numbers must be finite doubles.

In-process stand-ins (for tests and offline runs) live in
`codeattack.mocks` and implement the same `VictimOracle` / `MaskedLMOracle`
interfaces.
"""

import json
import logging
import math
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

import requests

from .errors import MalformedResponse, OracleUnavailable

log = logging.getLogger(__name__)

PROTO_VERSION = "1"
MASK_SENTINEL = "<mask>"

DEFAULT_TIMEOUT_MS = 30_000
TIMEOUT_ENV_VAR = "CODEATTACK_TIMEOUT_MS"

_RETRY_STATUSES = frozenset({502, 503, 504})
_MAX_ATTEMPTS = 3
_BACKOFF_S = 0.5


@dataclass(frozen=True)
class GenerationOutput:
    """Decoded output tokens with one logit (chosen-token score) per step."""

    tokens: tuple
    step_logits: tuple
    text: str = None

    def total_score(self):
        return sum(self.step_logits)


@dataclass(frozen=True)
class ScoreOutput:
    """Per-step logits of a forced decode of `target` given the input."""

    target_logits: tuple

    def total_score(self):
        return sum(self.target_logits)


@dataclass(frozen=True)
class MaskCandidate:
    """One masked-LM fill for a masked span."""

    text: str
    score: float


@dataclass(frozen=True)
class MaskPrediction:
    """Top-k masked-LM fills, best first (scores non-increasing)."""

    candidates: tuple

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


class VictimOracle(ABC):
    """The model under attack."""

    @abstractmethod
    def generate(self, tokens):
        """Decode an output for the given input tokens."""

    @abstractmethod
    def score(self, tokens, target):
        """Force-decode `target` under the given input and return its
        per-step logits."""


class MaskedLMOracle(ABC):
    """Substitute provider used to fill masked input spans."""

    @abstractmethod
    def mask_predict(self, tokens, start, end, k):
        """Top-k candidates for the span [start, end) of `tokens`."""


# -- payload codec ---------------------------------------------------------


def _require(condition, message):
    if not condition:
        raise MalformedResponse(message)


def _check_finite(values, name):
    for v in values:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{name} must be numeric")
        _require(math.isfinite(v), f"{name} must be finite")


def _check_tokens(tokens, name):
    _require(isinstance(tokens, list), f"{name} must be a list")
    for t in tokens:
        _require(isinstance(t, str), f"{name} entries must be strings")


def _check_proto(payload):
    _require(isinstance(payload, dict), "payload must be a JSON object")
    _require(payload.get("proto") == PROTO_VERSION,
             f"missing or unsupported protocol version: {payload.get('proto')!r}")


def encode_generate_request(tokens):
    return {"proto": PROTO_VERSION, "tokens": list(tokens)}


def decode_generate_response(payload):
    _check_proto(payload)
    tokens = payload.get("tokens")
    logits = payload.get("step_logits")
    _check_tokens(tokens, "tokens")
    _require(isinstance(logits, list), "step_logits must be a list")
    _check_finite(logits, "step_logits")
    _require(len(tokens) == len(logits), "tokens and step_logits must have equal length")
    text = payload.get("text")
    _require(text is None or isinstance(text, str), "text must be a string when present")
    return GenerationOutput(tokens=tuple(tokens), step_logits=tuple(float(v) for v in logits),
                            text=text)


def encode_score_request(tokens, target):
    return {"proto": PROTO_VERSION, "tokens": list(tokens), "target": list(target)}


def decode_score_response(payload, target_length):
    _check_proto(payload)
    logits = payload.get("target_logits")
    _require(isinstance(logits, list), "target_logits must be a list")
    _check_finite(logits, "target_logits")
    _require(len(logits) == target_length,
             f"target_logits length {len(logits)} != target length {target_length}")
    return ScoreOutput(target_logits=tuple(float(v) for v in logits))


def encode_mask_request(tokens, start, end, k):
    return {"proto": PROTO_VERSION, "tokens": list(tokens), "mask_span": [start, end], "k": k}


def decode_mask_response(payload):
    _check_proto(payload)
    candidates = payload.get("candidates")
    _require(isinstance(candidates, list), "candidates must be a list")
    out = []
    for entry in candidates:
        _require(isinstance(entry, (list, tuple)) and len(entry) == 2,
                 "each candidate must be a [text, score] pair")
        text, score = entry
        _require(isinstance(text, str) and text != "", "candidate text must be a non-empty string")
        _check_finite([score], "candidate score")
        out.append(MaskCandidate(text=text, score=float(score)))
    for previous, current in zip(out, out[1:]):
        _require(previous.score >= current.score, "candidate scores must be non-increasing")
    return MaskPrediction(candidates=tuple(out))


def _timeout_seconds():
    raw = os.environ.get(TIMEOUT_ENV_VAR)
    if raw is None:
        return DEFAULT_TIMEOUT_MS / 1000.0
    try:
        ms = int(raw)
        if ms <= 0:
            raise ValueError
    except ValueError:
        log.warning("ignoring invalid %s=%r", TIMEOUT_ENV_VAR, raw)
        return DEFAULT_TIMEOUT_MS / 1000.0
    return ms / 1000.0


class HttpOracle(VictimOracle, MaskedLMOracle):
    """HTTP client for a model server speaking the protocol above.

    One instance can point at a victim endpoint, a masked-LM endpoint, or a
    combined server exposing both. Transient failures (connection errors,
    502/503/504) are retried with a short backoff before giving up with
    OracleUnavailable.
    """

    def __init__(self, base_url, timeout_s=None, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = _timeout_seconds() if timeout_s is None else timeout_s
        self._session = session or requests.Session()

    def _post(self, route, payload):
        url = f"{self.base_url}{route}"
        last_error = None
        for attempt in range(_MAX_ATTEMPTS):
            try:
                response = self._session.post(url, json=payload, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    try:
                        return response.json()
                    except json.JSONDecodeError as exc:
                        raise MalformedResponse(f"{route}: response is not JSON: {exc}") from exc
                if response.status_code in _RETRY_STATUSES:
                    last_error = OracleUnavailable(f"{route} returned {response.status_code}")
                else:
                    raise MalformedResponse(
                        f"{route} returned {response.status_code}: {response.text[:200]}"
                    )
            if attempt + 1 < _MAX_ATTEMPTS:
                time.sleep(_BACKOFF_S * (attempt + 1))
        raise OracleUnavailable(f"{url} unreachable after {_MAX_ATTEMPTS} attempts: {last_error}")

    def generate(self, tokens):
        return decode_generate_response(self._post("/generate", encode_generate_request(tokens)))

    def score(self, tokens, target):
        target = list(target)
        payload = self._post("/score", encode_score_request(tokens, target))
        return decode_score_response(payload, len(target))

    def mask_predict(self, tokens, start, end, k):
        payload = self._post("/mask_predict", encode_mask_request(tokens, start, end, k))
        return decode_mask_response(payload)

    def health(self):
        """True when the server reports ready; raises nothing."""
        try:
            response = self._session.get(f"{self.base_url}/health", timeout=self.timeout_s)
            if response.status_code != 200:
                return False
            payload = response.json()
            return payload.get("proto") == PROTO_VERSION and payload.get("status") == "ok"
        except (requests.RequestException, json.JSONDecodeError):
            return False


@dataclass
class QueryCounter:
    """Tally of oracle traffic for one attack run."""

    victim: int = 0
    masked_lm: int = 0

    def snapshot(self):
        return QueryCounter(victim=self.victim, masked_lm=self.masked_lm)


class CountingVictim(VictimOracle):
    """Proxy recording how many times the victim is consulted. Both
    `generate` and `score` count: each is one model invocation. Only
    completed calls count, so the tally always equals the number of
    round-trips the backing transport served."""

    def __init__(self, inner, counter=None):
        self.inner = inner
        self.counter = counter if counter is not None else QueryCounter()

    def generate(self, tokens):
        out = self.inner.generate(tokens)
        self.counter.victim += 1
        return out

    def score(self, tokens, target):
        out = self.inner.score(tokens, target)
        self.counter.victim += 1
        return out


class CountingMaskedLM(MaskedLMOracle):
    """Proxy recording masked-LM traffic (reported separately from victim
    queries). Only completed calls count."""

    def __init__(self, inner, counter=None):
        self.inner = inner
        self.counter = counter if counter is not None else QueryCounter()

    def mask_predict(self, tokens, start, end, k):
        out = self.inner.mask_predict(tokens, start, end, k)
        self.counter.masked_lm += 1
        return out
