"""Request-validation unit tests; no models involved."""

import pytest

from modelserver.protocol import (
    ProtocolError,
    parse_generate_request,
    parse_mask_request,
    parse_score_request,
)


def test_generate_accepts_minimal_payload():
    assert parse_generate_request({"proto": "1", "tokens": ["int", "x"]}) == \
        ["int", "x"]


@pytest.mark.parametrize("payload", [
    None,
    [],
    {},
    {"tokens": ["a"]},
    {"proto": "2", "tokens": ["a"]},
    {"proto": 1, "tokens": ["a"]},
    {"proto": "1"},
    {"proto": "1", "tokens": []},
    {"proto": "1", "tokens": "ab"},
    {"proto": "1", "tokens": [1, 2]},
    {"proto": "1", "tokens": ["a", None]},
])
def test_generate_rejections(payload):
    with pytest.raises(ProtocolError):
        parse_generate_request(payload)


def test_score_accepts_tokens_and_target():
    tokens, target = parse_score_request(
        {"proto": "1", "tokens": ["a"], "target": ["ok", "done"]})
    assert tokens == ["a"]
    assert target == ["ok", "done"]


@pytest.mark.parametrize("payload", [
    {"proto": "1", "tokens": ["a"]},
    {"proto": "1", "tokens": ["a"], "target": []},
    {"proto": "1", "tokens": ["a"], "target": [3]},
    {"proto": "1", "tokens": [], "target": ["x"]},
])
def test_score_rejections(payload):
    with pytest.raises(ProtocolError):
        parse_score_request(payload)


def test_mask_accepts_span_and_k():
    tokens, start, end, k = parse_mask_request(
        {"proto": "1", "tokens": ["int", "x", ";"], "mask_span": [1, 2],
         "k": 5})
    assert (tokens, start, end, k) == (["int", "x", ";"], 1, 2, 5)


def test_mask_accepts_multi_token_span():
    _, start, end, _ = parse_mask_request(
        {"proto": "1", "tokens": ["a", "b", "c"], "mask_span": [0, 3],
         "k": 1})
    assert (start, end) == (0, 3)


@pytest.mark.parametrize("payload", [
    {"proto": "1", "tokens": ["a", "b"], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [1, 1], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [1, 5], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [-1, 1], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [1], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [0, "1"], "k": 5},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [0, 1]},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [0, 1], "k": 0},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [0, 1], "k": True},
    {"proto": "1", "tokens": ["a", "b"], "mask_span": [0, 1], "k": 2.5},
])
def test_mask_rejections(payload):
    with pytest.raises(ProtocolError):
        parse_mask_request(payload)
