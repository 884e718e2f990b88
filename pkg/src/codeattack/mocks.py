"""Deterministic in-process oracles for tests and offline runs.

Every mock implements the same interfaces as the HTTP clients and keeps a
`call_log` so tests can check query accounting against the transport level.
All of them are pure functions of their constructor arguments and inputs —
identical calls give identical outputs on every platform.
"""

import hashlib
import struct

from .errors import NoMaskInRequest
from .lexer import OPERATOR_ALPHABET, TokenClass, keywords_for, tokenize
from .oracle import (
    GenerationOutput,
    MaskCandidate,
    MaskedLMOracle,
    MaskPrediction,
    ScoreOutput,
    VictimOracle,
)


class _LoggedVictim(VictimOracle):
    """Base recording every round-trip as ("generate"|"score", payload)."""

    def __init__(self):
        self.call_log = []

    def generate(self, tokens):
        tokens = tuple(tokens)
        if not tokens:
            raise ValueError("generate requires a non-empty input")
        self.call_log.append(("generate", tokens))
        return self._generate(tokens)

    def score(self, tokens, target):
        tokens = tuple(tokens)
        target = tuple(target)
        if not tokens or not target:
            raise ValueError("score requires non-empty input and target")
        self.call_log.append(("score", tokens, target))
        return self._score(tokens, target)

    @property
    def victim_calls(self):
        return len(self.call_log)


class EchoVictim(_LoggedVictim):
    """Parrots its input: generate echoes the tokens with unit logits, and
    score gives a target token 1.0 iff it occurs anywhere in the input."""

    def _generate(self, tokens):
        return GenerationOutput(tokens=tokens, step_logits=(1.0,) * len(tokens))

    def _score(self, tokens, target):
        present = set(tokens)
        return ScoreOutput(target_logits=tuple(1.0 if t in present else 0.0 for t in target))


class KeyedVictim(_LoggedVictim):
    """Fixture-table victim: maps exact input tuples to canned outputs.

    Inputs not in the table fall back to echo behavior so attacks can still
    run against perturbed variants of a fixture input.
    """

    def __init__(self, table):
        super().__init__()
        self.table = {tuple(k): (tuple(v[0]), tuple(float(x) for x in v[1]))
                      for k, v in table.items()}

    def _generate(self, tokens):
        if tokens in self.table:
            out_tokens, logits = self.table[tokens]
            return GenerationOutput(tokens=out_tokens, step_logits=logits)
        return GenerationOutput(tokens=tokens, step_logits=(1.0,) * len(tokens))

    def _score(self, tokens, target):
        out = self._generate(tokens)
        logits = []
        for i, t in enumerate(target):
            if i < len(out.tokens) and out.tokens[i] == t:
                logits.append(out.step_logits[i])
            else:
                logits.append(0.0)
        return ScoreOutput(target_logits=tuple(logits))


def _strip_operators(text):
    return "".join(ch for ch in text if ch not in OPERATOR_ALPHABET)


class PlantedKeyVictim(_LoggedVictim):
    """Victim whose output quality hinges on one input token.

    While any input token — ignoring operator characters — equals `key`, the
    victim emits `good_output` with unit logits. Once the key is gone it
    emits `bad_output` with zero logits. Stripping operator characters before
    the comparison means operator-level edits (inserted/removed symbols)
    never dislodge the key; only replacing the whole token does.
    """

    def __init__(self, key, good_output, bad_output=None):
        super().__init__()
        self.key = key
        self.good_output = tuple(good_output)
        self.bad_output = tuple(bad_output) if bad_output is not None else tuple(
            f"noise{i}" for i in range(len(self.good_output))
        )

    def _has_key(self, tokens):
        return any(_strip_operators(t) == self.key for t in tokens)

    def _generate(self, tokens):
        if self._has_key(tokens):
            return GenerationOutput(tokens=self.good_output,
                                    step_logits=(1.0,) * len(self.good_output))
        return GenerationOutput(tokens=self.bad_output,
                                step_logits=(0.0,) * len(self.bad_output))

    def _score(self, tokens, target):
        value = 1.0 if self._has_key(tokens) else 0.0
        return ScoreOutput(target_logits=(value,) * len(target))


class HashedVictim(_LoggedVictim):
    """Pseudo-random but fully deterministic victim for property tests.

    Outputs and logits are derived from BLAKE2b digests of the inputs, so
    two processes (or two runs) always agree, yet small input changes give
    unrelated outputs.
    """

    _VOCAB = tuple(f"out{i}" for i in range(16))

    def __init__(self, seed=0):
        super().__init__()
        self.seed = seed

    def _digest(self, *parts):
        h = hashlib.blake2b(digest_size=16)
        h.update(str(self.seed).encode("utf-8"))
        for part in parts:
            h.update(b"\x1f")
            h.update(part.encode("utf-8"))
        return h.digest()

    def _logit(self, *parts):
        raw = struct.unpack(">Q", self._digest(*parts)[:8])[0]
        return round((raw / 2**64) * 8.0 - 4.0, 6)

    def _generate(self, tokens):
        d = self._digest("gen", *tokens)
        length = 1 + d[0] % 6
        out = tuple(self._VOCAB[d[1 + i] % len(self._VOCAB)] for i in range(length))
        logits = tuple(self._logit("gen-logit", str(i), *tokens) for i in range(length))
        return GenerationOutput(tokens=out, step_logits=logits)

    def _score(self, tokens, target):
        logits = tuple(
            self._logit("score", str(i), t, *tokens) for i, t in enumerate(target)
        )
        return ScoreOutput(target_logits=logits)


class FixtureMaskedLM(MaskedLMOracle):
    """Masked-LM stand-in with a fixture table plus class-aware defaults.

    The masked span's original text is the lookup key. Unknown texts get
    deterministic same-class fallbacks (identifier-shaped fills for
    identifier-shaped tokens, digits for numbers, keywords for keywords,
    single symbols for operators) so greedy search always has something to
    try, like a real fill-mask model would.
    """

    _IDENTIFIER_FILLS = ("value", "result", "temp", "data")
    _NUMBER_FILLS = ("0", "1", "2")
    _OPERATOR_FILLS = ("+", "-", "*", ";")

    def __init__(self, table=None, language="java", default_fills=True):
        self.table = {
            k: sorted((MaskCandidate(text=t, score=float(s)) for t, s in v),
                      key=lambda c: -c.score)
            for k, v in (table or {}).items()
        }
        self.language = language
        self.default_fills = default_fills
        self.call_log = []

    def _default_candidates(self, text):
        if not self.default_fills:
            return []
        try:
            toks = tokenize(text, self.language)
        except Exception:
            toks = []
        cls = toks[0].token_class if len(toks) == 1 else None
        if cls is TokenClass.KEYWORD:
            pool = sorted(keywords_for(self.language))[:4]
        elif cls is TokenClass.ARGUMENT:
            pool = self._NUMBER_FILLS
        elif cls is TokenClass.OPERATOR:
            pool = self._OPERATOR_FILLS
        else:
            pool = self._IDENTIFIER_FILLS
        return [MaskCandidate(text=t, score=round(0.9 - 0.1 * i, 6))
                for i, t in enumerate(pool)]

    def mask_predict(self, tokens, start, end, k):
        tokens = list(tokens)
        if not (0 <= start < end <= len(tokens)):
            raise NoMaskInRequest(f"invalid mask span [{start}, {end}) for {len(tokens)} tokens")
        if k < 1:
            raise ValueError("k must be >= 1")
        self.call_log.append(("mask_predict", tuple(tokens), start, end, k))
        text = " ".join(tokens[start:end])
        candidates = self.table.get(text)
        if candidates is None:
            candidates = self._default_candidates(text)
        return MaskPrediction(candidates=tuple(candidates[:k]))

    @property
    def masked_lm_calls(self):
        return len(self.call_log)


def make_victim(spec_string):
    """Build a mock victim from a CLI selector like "echo", "hashed:7", or
    "planted:<key>"."""
    name, _, arg = spec_string.partition(":")
    if name == "echo":
        return EchoVictim()
    if name == "hashed":
        return HashedVictim(seed=int(arg) if arg else 0)
    if name == "planted":
        if not arg:
            raise ValueError("planted victim needs a key, e.g. mock:planted:secret")
        return PlantedKeyVictim(key=arg, good_output=("good", "output", "tokens"))
    raise ValueError(f"unknown mock victim {spec_string!r} (try echo, hashed[:seed], planted:<key>)")


def make_masked_lm(spec_string, language="java"):
    """Build a mock masked LM from a CLI selector like "fixture"."""
    name, _, _arg = spec_string.partition(":")
    if name == "fixture":
        return FixtureMaskedLM(language=language)
    raise ValueError(f"unknown mock masked LM {spec_string!r} (try fixture)")
