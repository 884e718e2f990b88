"""Shared test infrastructure: the planted-vulnerability corpus generator,
a random mock corpus, and a threaded HTTP stub that serves any mock oracle
pair over the wire protocol."""

import contextlib
import json
import math
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from codeattack.dataset import Sample
from codeattack.errors import NoMaskInRequest
from codeattack.mocks import FixtureMaskedLM, PlantedKeyVictim

_SYLLABLES = ("load", "store", "parse", "merge", "flush", "track", "scan", "emit",
              "index", "count", "cache", "queue", "batch", "probe")
_NOUNS = ("Buffer", "Total", "Entry", "State", "Value", "Block", "Limit", "Width")


class PlantedSample:
    """One generated sample whose victim collapses only when `key` is
    replaced outright. Structure (Java-ish statement block):

        { } { } obj . call ( 1 , 2 ) ; KEY = a + b + c ; obj . log ( a ) ;

    Invariants the attack relies on, asserted at build time:
      * the key appears exactly once and owns every def-use pair, so a
        token-level substitution of it zeroes the semantics component;
      * every token before the key is a brace, call punctuation, literal, or
        plain identifier — no '=' — so greedy operator-level commits on
        zero-influence tokens never touch dataflow;
      * the key's index is at least theta - 1, keeping all those commits
        inside the safe prefix.
    """

    def __init__(self, seed):
        rng = random.Random(seed)
        self.seed = seed
        a, b = rng.sample(_SYLLABLES, 2)
        noun = rng.choice(_NOUNS)
        self.key = f"{a}{noun}{seed}"
        self.replacement = f"{b}{noun}Alt"
        obj = rng.choice(("helper", "worker", "ledger", "engine"))
        method_a, method_b = rng.sample(_SYLLABLES, 2)
        arity = rng.randint(3, 5)
        self.fillers = [f"{rng.choice(_SYLLABLES)}{i}" for i in range(arity)]
        lit_a, lit_b = rng.randint(0, 9), rng.randint(10, 99)
        rhs = " + ".join(self.fillers)
        self.source = (
            f"{{ }} {{ }} {obj} . {method_a} ( {lit_a} , {lit_b} ) ; "
            f"{self.key} = {rhs} ; "
            f"{obj} . {method_b} ( {self.fillers[0]} ) ;"
        )
        self.good_output = ("translated", f"snippet{seed}", "summary", "done")
        self.reference = " ".join(self.good_output)
        self._check_structure()

    def _check_structure(self):
        tokens = self.source.split()
        assert tokens.count(self.key) == 1
        key_index = tokens.index(self.key)
        theta = math.ceil(0.4 * len(tokens))
        assert key_index >= theta - 1, (key_index, theta)
        assert "=" not in tokens[:key_index]
        assert self.replacement not in tokens

    def victim(self):
        return PlantedKeyVictim(key=self.key, good_output=self.good_output)

    def masked_lm(self):
        return FixtureMaskedLM(
            table={self.key: [(self.replacement, 0.99), (f"{self.replacement}B", 0.5)]},
            language="java",
        )

    def sample(self):
        return Sample(id=f"planted{self.seed:03d}", source_code=self.source,
                      reference=self.reference, task="summarize", language="java")


def planted_corpus(n, first_seed=0):
    return [PlantedSample(first_seed + i) for i in range(n)]


def random_java_source(rng, min_statements=1, max_statements=4):
    """Small random but lexable Java-ish snippet for property runs."""
    statements = []
    for _ in range(rng.randint(min_statements, max_statements)):
        kind = rng.randrange(3)
        name = f"{rng.choice(_SYLLABLES)}{rng.randint(0, 99)}"
        other = f"{rng.choice(_SYLLABLES)}{rng.randint(0, 99)}"
        if kind == 0:
            statements.append(f"int {name} = {other} + {rng.randint(0, 50)} ;")
        elif kind == 1:
            statements.append(f"{name} . {rng.choice(_SYLLABLES)} ( {other} ) ;")
        else:
            statements.append(f"if ( {name} < {rng.randint(1, 20)} ) {{ {other} ++ ; }}")
    return " ".join(statements)


def random_corpus(n, seed=0):
    rng = random.Random(seed)
    samples = []
    for i in range(n):
        samples.append(Sample(
            id=f"rand{i:04d}",
            source_code=random_java_source(rng),
            reference="expected output tokens here",
            task="summarize",
            language="java",
        ))
    return samples


# -- wire-protocol stub server --------------------------------------------


def _json_error(handler, status, message):
    body = json.dumps({"proto": "1", "error": message}).encode("utf-8")
    handler.send_response(status)
    handler.send_header("Content-Type", "application/json")
    handler.send_header("Content-Length", str(len(body)))
    handler.end_headers()
    handler.wfile.write(body)


def _json_ok(handler, payload):
    body = json.dumps(payload).encode("utf-8")
    handler.send_response(200)
    handler.send_header("Content-Type", "application/json")
    handler.send_header("Content-Length", str(len(body)))
    handler.end_headers()
    handler.wfile.write(body)


def _string_list(value):
    return isinstance(value, list) and all(isinstance(t, str) for t in value)


class _OracleHandler(BaseHTTPRequestHandler):
    """Serves a (victim, masked_lm) mock pair over the protocol. Also the
    reference shape for what a real model server must implement."""

    victim = None
    masked_lm = None
    fail_first = 0
    _failures_left = None

    def log_message(self, *_args):
        pass

    def _maybe_fail(self):
        cls = type(self)
        if cls._failures_left is None:
            cls._failures_left = cls.fail_first
        if cls._failures_left > 0:
            cls._failures_left -= 1
            _json_error(self, 503, "warming up")
            return True
        return False

    def do_GET(self):
        if self.path != "/health":
            _json_error(self, 404, f"unknown route {self.path}")
            return
        _json_ok(self, {"proto": "1", "status": "ok"})

    def do_POST(self):
        if self._maybe_fail():
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length) or b"null")
        except json.JSONDecodeError:
            _json_error(self, 400, "body is not JSON")
            return
        if not isinstance(payload, dict) or payload.get("proto") != "1":
            _json_error(self, 400, "missing or unsupported proto")
            return
        try:
            if self.path == "/generate":
                self._generate(payload)
            elif self.path == "/score":
                self._score(payload)
            elif self.path == "/mask_predict":
                self._mask_predict(payload)
            else:
                _json_error(self, 404, f"unknown route {self.path}")
        except (ValueError, NoMaskInRequest) as exc:
            _json_error(self, 400, str(exc))

    def _generate(self, payload):
        tokens = payload.get("tokens")
        if not _string_list(tokens) or not tokens:
            _json_error(self, 400, "tokens must be a non-empty list of strings")
            return
        out = self.victim.generate(tokens)
        _json_ok(self, {"proto": "1", "tokens": list(out.tokens),
                        "step_logits": list(out.step_logits)})

    def _score(self, payload):
        tokens = payload.get("tokens")
        target = payload.get("target")
        if not _string_list(tokens) or not tokens:
            _json_error(self, 400, "tokens must be a non-empty list of strings")
            return
        if not _string_list(target) or not target:
            _json_error(self, 400, "target must be a non-empty list of strings")
            return
        out = self.victim.score(tokens, target)
        _json_ok(self, {"proto": "1", "target_logits": list(out.target_logits)})

    def _mask_predict(self, payload):
        tokens = payload.get("tokens")
        span = payload.get("mask_span")
        k = payload.get("k")
        if not _string_list(tokens) or not tokens:
            _json_error(self, 400, "tokens must be a non-empty list of strings")
            return
        if (not isinstance(span, list) or len(span) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in span)):
            _json_error(self, 400, "mask_span must be [start, end]")
            return
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            _json_error(self, 400, "k must be a positive integer")
            return
        start, end = span
        if not (0 <= start < end <= len(tokens)):
            _json_error(self, 400, f"mask span [{start}, {end}) out of range")
            return
        prediction = self.masked_lm.mask_predict(tokens, start, end, k)
        _json_ok(self, {"proto": "1",
                        "candidates": [[c.text, c.score] for c in prediction]})


@contextlib.contextmanager
def oracle_server(victim, masked_lm, fail_first=0):
    """Context manager running the stub server; yields its base URL."""
    handler = type("Handler", (_OracleHandler,), {
        "victim": victim,
        "masked_lm": masked_lm,
        "fail_first": fail_first,
        "_failures_left": None,
    })
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
