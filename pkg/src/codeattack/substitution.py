"""Substitute generation and the code-specific constraints.

Token-level candidates come from the masked LM (top-k fills of the
vulnerable token's span). Operator-level candidates are generated
mechanically — insert one operator symbol at either end of the token,
delete one operator character, or replace one operator character with
another — which keeps them typo-like without consulting the masked LM.

A candidate survives filtering when (a) its operator multiset size is
within one of the original's, (b) its class signature matches the
original's exactly, and (c) it differs from the original text. Rejections
are recorded with the first failing reason.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from .lexer import OPERATOR_ALPHABET, class_signature, operator_count

REJECT_IDENTICAL = "Identical"
REJECT_OPERATOR_COUNT = "OperatorCount"
REJECT_CLASS_LENGTH = "ClassLength"
REJECT_CLASS_MISMATCH = "ClassMismatch"

EDIT_TOKEN = "Token"
EDIT_OPERATOR_INSERT = "OperatorInsert"
EDIT_OPERATOR_DELETE = "OperatorDelete"
EDIT_OPERATOR_REPLACE = "OperatorReplace"

OPERATOR_EDIT_KINDS = (EDIT_OPERATOR_INSERT, EDIT_OPERATOR_DELETE, EDIT_OPERATOR_REPLACE)


@dataclass(frozen=True)
class Candidate:
    """A substitute text for one vulnerable token. `score` is the masked-LM
    score for token-level candidates and -inf for mechanical operator edits
    (they carry no model preference)."""

    text: str
    score: float
    edit_kind: str


@dataclass
class CandidateSet:
    """Raw and filtered substitutes for one vulnerable token, with every
    rejection accounted for: len(raw) == len(filtered) + len(rejections)."""

    vulnerable_index: int
    raw: list = field(default_factory=list)
    filtered: list = field(default_factory=list)
    rejections: list = field(default_factory=list)


def propose(tokens, v_index, masked_lm, k):
    """Top-k whole-token substitutes for `tokens[v_index]` from the masked
    LM: one mask_predict call over the token's span. Candidates are
    deduplicated case-sensitively keeping the highest score, and empty or
    whitespace-only fills are dropped."""
    tokens = list(tokens)
    if not 0 <= v_index < len(tokens):
        raise IndexError(f"token index {v_index} out of range for {len(tokens)} tokens")
    if k < 1:
        raise ValueError("k must be >= 1")
    prediction = masked_lm.mask_predict(tokens, v_index, v_index + 1, k)
    best = {}
    order = []
    for candidate in prediction:
        text = candidate.text
        if not text.strip():
            continue
        if text not in best:
            best[text] = candidate.score
            order.append(text)
        elif candidate.score > best[text]:
            best[text] = candidate.score
    return [Candidate(text=t, score=best[t], edit_kind=EDIT_TOKEN) for t in order]


def operator_edits(v_text):
    """Mechanical one-symbol operator edits of `v_text`, deduplicated and
    deterministically ordered (by edit kind, then text)."""
    seen = {}

    def add(text, kind):
        if text != v_text and (text not in seen):
            seen[text] = kind

    for symbol in OPERATOR_ALPHABET:
        add(symbol + v_text, EDIT_OPERATOR_INSERT)
        add(v_text + symbol, EDIT_OPERATOR_INSERT)
    for i, ch in enumerate(v_text):
        if ch not in OPERATOR_ALPHABET:
            continue
        add(v_text[:i] + v_text[i + 1 :], EDIT_OPERATOR_DELETE)
        for symbol in OPERATOR_ALPHABET:
            if symbol != ch:
                add(v_text[:i] + symbol + v_text[i + 1 :], EDIT_OPERATOR_REPLACE)
    rank = {kind: i for i, kind in enumerate(OPERATOR_EDIT_KINDS)}
    ordered = sorted(seen.items(), key=lambda item: (rank[item[1]], item[0]))
    return [Candidate(text=t, score=-math.inf, edit_kind=kind) for t, kind in ordered]


def check_constraints(v_text, candidate_text, language):
    """First violated constraint for substituting `candidate_text` in place
    of `v_text`, or None when the substitution is admissible."""
    if candidate_text == v_text:
        return REJECT_IDENTICAL
    v_ops = operator_count(v_text)
    c_ops = operator_count(candidate_text)
    if not (v_ops - 1 <= c_ops <= v_ops + 1):
        return REJECT_OPERATOR_COUNT
    v_sig = class_signature(v_text, language)
    c_sig = class_signature(candidate_text, language)
    if len(v_sig) != len(c_sig):
        return REJECT_CLASS_LENGTH
    if v_sig != c_sig:
        return REJECT_CLASS_MISMATCH
    return None


def filter_candidates(v_text, raw, language, v_index=0, enforce_constraints=True):
    """Partition raw candidates into filtered survivors and reasoned
    rejections. With `enforce_constraints=False` only the identity rejection
    applies (the unconstrained ablation)."""
    result = CandidateSet(vulnerable_index=v_index, raw=list(raw))
    for candidate in result.raw:
        if enforce_constraints:
            reason = check_constraints(v_text, candidate.text, language)
        else:
            reason = REJECT_IDENTICAL if candidate.text == v_text else None
        if reason is None:
            result.filtered.append(candidate)
        else:
            result.rejections.append((candidate.text, reason))
    return result


def similarity(tokens_a, tokens_b):
    """Cosine similarity of the token-frequency vectors of two sequences,
    in [0, 1]; 1.0 for identical sequences, 1.0 also for two empties."""
    counts_a = Counter(tokens_a)
    counts_b = Counter(tokens_b)
    if counts_a == counts_b:
        # Equal multisets are exactly parallel; skip the norms so identical
        # sequences score 1.0 rather than 1 - epsilon.
        return 1.0
    if not counts_a or not counts_b:
        return 0.0
    dot = sum(c * counts_b[t] for t, c in counts_a.items())
    norm_a = math.sqrt(sum(c * c for c in counts_a.values()))
    norm_b = math.sqrt(sum(c * c for c in counts_b.values()))
    value = dot / (norm_a * norm_b)
    return min(1.0, max(0.0, value))


def apply_substitution(tokens, v_index, candidate_text):
    """New token sequence with `candidate_text` at `v_index`; an empty
    candidate (operator-level delete of a whole token) shortens the
    sequence by one. The input list is never mutated."""
    tokens = list(tokens)
    if not 0 <= v_index < len(tokens):
        raise IndexError(f"token index {v_index} out of range for {len(tokens)} tokens")
    if candidate_text == "":
        return tokens[:v_index] + tokens[v_index + 1 :]
    return tokens[:v_index] + [candidate_text] + tokens[v_index + 1 :]
