"""Request validation for protocol version 1.

Parsers accept a decoded JSON payload and either return the useful fields
or raise ProtocolError; the HTTP layer turns those into 400 responses. The
checks mirror the wire contract exactly: mandatory ``"proto": "1"``, token
lists of strings, a half-open ``mask_span`` [start, end), and an integer
``k >= 1``.
"""

PROTO_VERSION = "1"


class ProtocolError(ValueError):
    """The request payload does not follow protocol version 1."""


def _require(condition, message):
    if not condition:
        raise ProtocolError(message)


def _check_payload(payload):
    _require(isinstance(payload, dict), "payload must be a JSON object")
    _require(payload.get("proto") == PROTO_VERSION,
             f"missing or unsupported protocol version: {payload.get('proto')!r}")


def _token_list(payload, field, allow_empty=False):
    tokens = payload.get(field)
    _require(isinstance(tokens, list), f"{field} must be a list")
    _require(allow_empty or len(tokens) > 0, f"{field} must be non-empty")
    for entry in tokens:
        _require(isinstance(entry, str), f"{field} entries must be strings")
    return tokens


def _integer(value, name):
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"{name} must be an integer")
    return value


def parse_generate_request(payload):
    """-> tokens"""
    _check_payload(payload)
    return _token_list(payload, "tokens")


def parse_score_request(payload):
    """-> (tokens, target)"""
    _check_payload(payload)
    tokens = _token_list(payload, "tokens")
    target = _token_list(payload, "target")
    return tokens, target


def parse_mask_request(payload):
    """-> (tokens, start, end, k)"""
    _check_payload(payload)
    tokens = _token_list(payload, "tokens")
    span = payload.get("mask_span")
    _require(isinstance(span, list) and len(span) == 2,
             "mask_span must be a [start, end) pair")
    start = _integer(span[0], "mask_span start")
    end = _integer(span[1], "mask_span end")
    _require(0 <= start < end <= len(tokens),
             f"mask_span [{start}, {end}) out of range for {len(tokens)} tokens")
    _require("k" in payload, "k is required")
    k = _integer(payload["k"], "k")
    _require(k >= 1, "k must be at least 1")
    return tokens, start, end, k
