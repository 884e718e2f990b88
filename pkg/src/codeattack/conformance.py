"""Wire-protocol conformance suite.

A recorded set of request fixtures plus structural response checks that any
server implementing the oracle protocol must pass. The cases are
checkpoint-independent: they verify shapes, status codes, orderings, and the
generate/score self-consistency identity, never exact model outputs.

Usage (against a running server):

    from codeattack.conformance import run_conformance
    failures = [r for r in run_conformance("http://localhost:9009") if not r.ok]
"""

import json
from dataclasses import dataclass
from importlib import resources

import requests

from .errors import MalformedResponse
from .oracle import (
    PROTO_VERSION,
    decode_generate_response,
    decode_mask_response,
    decode_score_response,
)

_FIXTURE_FILE = "protocol_conformance.json"


@dataclass(frozen=True)
class CaseResult:
    name: str
    ok: bool
    detail: str = ""


def load_cases():
    """The recorded fixture cases, as parsed JSON records."""
    path = resources.files("codeattack.data").joinpath(_FIXTURE_FILE)
    return json.loads(path.read_text(encoding="utf-8"))["cases"]


def _check_static(case, response):
    expect = case["expect"]
    if response.status_code != expect["status"]:
        return f"status {response.status_code}, expected {expect['status']}"
    if expect["status"] != 200:
        return None
    try:
        payload = response.json()
    except json.JSONDecodeError as exc:
        return f"response not JSON: {exc}"
    kind = expect.get("kind")
    try:
        if kind == "generate":
            decode_generate_response(payload)
        elif kind == "score":
            decode_score_response(payload, expect["target_len"])
        elif kind == "mask":
            prediction = decode_mask_response(payload)
            limit = expect.get("max_candidates")
            if limit is not None and len(prediction.candidates) > limit:
                return f"{len(prediction.candidates)} candidates, expected <= {limit}"
        elif kind == "health":
            if payload.get("proto") != PROTO_VERSION or payload.get("status") != "ok":
                return f"unexpected health payload {payload}"
    except MalformedResponse as exc:
        return f"malformed response: {exc}"
    return None


def _run_static_case(base_url, case, session):
    url = base_url.rstrip("/") + case["route"]
    if case["method"] == "GET":
        response = session.get(url, timeout=30)
    else:
        response = session.post(url, json=case["payload"], timeout=30)
    detail = _check_static(case, response)
    return CaseResult(name=case["name"], ok=detail is None, detail=detail or "")


def _post(session, base_url, route, payload):
    response = session.post(base_url.rstrip("/") + route, json=payload, timeout=30)
    if response.status_code != 200:
        raise MalformedResponse(f"{route} returned {response.status_code}")
    return response.json()


def _run_dynamic_case(base_url, case, session):
    """Cases that need chained calls: decode determinism and the forced-decode
    identity score(X, generate(X).tokens) == sum of generate's logits."""
    name = case["name"]
    tokens = case["tokens"]
    try:
        first = decode_generate_response(
            _post(session, base_url, "/generate", {"proto": PROTO_VERSION, "tokens": tokens})
        )
        if case["check"] == "deterministic":
            second = decode_generate_response(
                _post(session, base_url, "/generate", {"proto": PROTO_VERSION, "tokens": tokens})
            )
            if first != second:
                return CaseResult(name, False, "two generate calls differ")
            return CaseResult(name, True)
        if case["check"] == "score_consistency":
            scored = decode_score_response(
                _post(session, base_url, "/score",
                      {"proto": PROTO_VERSION, "tokens": tokens,
                       "target": list(first.tokens)}),
                len(first.tokens),
            )
            gap = abs(sum(scored.target_logits) - sum(first.step_logits))
            tolerance = case.get("tolerance", 1e-3)
            if gap > tolerance:
                return CaseResult(name, False, f"logit sums differ by {gap:.6g}")
            return CaseResult(name, True)
        return CaseResult(name, False, f"unknown dynamic check {case['check']!r}")
    except MalformedResponse as exc:
        return CaseResult(name, False, str(exc))


def run_conformance(base_url, session=None):
    """Run every recorded case against `base_url`; returns CaseResults in
    fixture order."""
    session = session or requests.Session()
    results = []
    for case in load_cases():
        if case.get("dynamic"):
            results.append(_run_dynamic_case(base_url, case, session))
        else:
            results.append(_run_static_case(base_url, case, session))
    return results
