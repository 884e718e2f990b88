"""Quality metrics: sentence/corpus BLEU, a code-aware BLEU variant, and
attack-level aggregation.

The code metric is a documented approximation of the usual four-component
code BLEU: token n-gram BLEU, keyword-weighted n-gram BLEU (keywords count
5x), a syntax component (F1 over token-class n-grams), and a semantics
component (F1 over def-use identifier pairs found by a linear scan). Exact
AST and dataflow matching would need full parsers, which this toolkit
deliberately avoids; scores are internally consistent, not comparable to
other implementations.

All scores live on a 0..100 scale. Smoothing for the BLEU family adds one to
numerator and denominator of every n-gram precision with n >= 2, so
single-sentence scores keep a usable gradient.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from statistics import fmean

from .lexer import TokenClass, class_signature, keywords_for, lex

MAX_NGRAM = 4
KEYWORD_WEIGHT = 5.0

_ASSIGN_OPS = frozenset(
    {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
     "<<=", ">>=", ">>>=", "**=", "//=", ".=", "??=", ":="}
)


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _precision(hyp_tokens, ref_tokens, n):
    """Modified n-gram precision with add-one smoothing for n >= 2."""
    hyp_counts = _ngram_counts(hyp_tokens, n)
    ref_counts = _ngram_counts(ref_tokens, n)
    matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    total = sum(hyp_counts.values())
    if n >= 2:
        return (matches + 1) / (total + 1)
    return matches / total if total else 0.0


def _brevity_penalty(hyp_len, ref_len):
    if hyp_len == 0:
        return 0.0
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def bleu(hypothesis_tokens, reference_tokens, max_n=MAX_NGRAM):
    """Sentence-level BLEU in [0, 100]."""
    if not reference_tokens:
        raise ValueError("reference_tokens must be non-empty")
    hyp = list(hypothesis_tokens)
    ref = list(reference_tokens)
    if not hyp:
        return 0.0
    product = 1.0
    for n in range(1, max_n + 1):
        product *= _precision(hyp, ref, n)
    score = product ** (1.0 / max_n)
    return 100.0 * _brevity_penalty(len(hyp), len(ref)) * score


def corpus_bleu(hypotheses, references, max_n=MAX_NGRAM):
    """Corpus-level BLEU: n-gram counts pooled across all pairs before the
    geometric mean, with the same smoothing rule."""
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must pair up")
    if not hypotheses:
        raise ValueError("corpus_bleu requires at least one pair")
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return 0.0
    product = 1.0
    for n in range(1, max_n + 1):
        matches = 0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = _ngram_counts(hyp, n)
            ref_counts = _ngram_counts(ref, n)
            matches += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            total += sum(hyp_counts.values())
        if n >= 2:
            product *= (matches + 1) / (total + 1)
        else:
            product *= matches / total if total else 0.0
    return 100.0 * _brevity_penalty(hyp_len, ref_len) * product ** (1.0 / max_n)


# -- code-aware components -------------------------------------------------


@dataclass
class CodeBleuWeights:
    """Component weights; must be non-negative and sum to one."""

    w_ngram: float = 0.25
    w_weighted_ngram: float = 0.25
    w_syntax: float = 0.25
    w_semantics: float = 0.25

    def validate(self):
        values = (self.w_ngram, self.w_weighted_ngram, self.w_syntax, self.w_semantics)
        if any(w < 0 for w in values):
            raise ValueError("component weights must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ValueError(f"component weights must sum to 1, got {sum(values)}")
        return self


def _weighted_precision(hyp_tokens, ref_tokens, n, keyword_set):
    """Keyword-weighted modified precision; an n-gram weighs KEYWORD_WEIGHT
    when any of its tokens is a keyword."""

    def weight(gram):
        return KEYWORD_WEIGHT if any(t in keyword_set for t in gram) else 1.0

    hyp_counts = _ngram_counts(hyp_tokens, n)
    ref_counts = _ngram_counts(ref_tokens, n)
    matches = sum(weight(g) * min(c, ref_counts[g]) for g, c in hyp_counts.items())
    total = sum(weight(g) * c for g, c in hyp_counts.items())
    if n >= 2:
        return (matches + 1) / (total + 1)
    return matches / total if total else 0.0


def weighted_bleu(hypothesis_tokens, reference_tokens, keyword_set, max_n=MAX_NGRAM):
    hyp = list(hypothesis_tokens)
    ref = list(reference_tokens)
    if not hyp:
        return 0.0
    product = 1.0
    for n in range(1, max_n + 1):
        product *= _weighted_precision(hyp, ref, n, keyword_set)
    return 100.0 * _brevity_penalty(len(hyp), len(ref)) * product ** (1.0 / max_n)


def _multiset_f1(hyp_counts, ref_counts):
    hyp_total = sum(hyp_counts.values())
    ref_total = sum(ref_counts.values())
    if hyp_total == 0 and ref_total == 0:
        return 1.0
    if hyp_total == 0 or ref_total == 0:
        return 0.0
    matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    precision = matches / hyp_total
    recall = matches / ref_total
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _pooled_class_ngrams(source, language, max_n=MAX_NGRAM):
    signature = class_signature(source, language)
    pooled = Counter()
    for n in range(1, max_n + 1):
        pooled.update(_ngram_counts(signature, n))
    return pooled


def syntax_match(hyp_source, ref_source, language):
    """F1 over pooled token-class n-grams of the two sources, in [0, 1]."""
    return _multiset_f1(
        _pooled_class_ngrams(hyp_source, language),
        _pooled_class_ngrams(ref_source, language),
    )


def def_use_pairs(lexed):
    """Multiset of (rhs identifier, assigned identifier) pairs collected by a
    linear scan: for each `name <assign-op> rhs...` statement, every
    identifier read on the right-hand side flows into `name`. Statements end
    at ';' or, for Python, at a line break between tokens."""
    tokens = lexed.tokens
    pairs = Counter()
    for i, tok in enumerate(tokens):
        if tok.token_class is not TokenClass.IDENTIFIER:
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text not in _ASSIGN_OPS:
            continue
        target = tok.text
        j = i + 2
        while j < len(tokens):
            gap = lexed.source[tokens[j - 1].end : tokens[j].start]
            if lexed.language == "python" and "\n" in gap:
                break
            current = tokens[j]
            if current.text == ";":
                break
            if current.token_class is TokenClass.IDENTIFIER:
                pairs[(current.text, target)] += 1
            j += 1
    return pairs


def semantics_match(hyp_lexed, ref_lexed):
    """F1 over def-use pair multisets, in [0, 1]."""
    return _multiset_f1(def_use_pairs(hyp_lexed), def_use_pairs(ref_lexed))


def codebleu(hyp_source, ref_source, language, weights=None):
    """Code quality score in [0, 100] combining the four components.
    Identical sources score exactly 100."""
    weights = (weights or CodeBleuWeights()).validate()
    if hyp_source == ref_source:
        return 100.0
    hyp_lexed = lex(hyp_source, language, lenient=True)
    ref_lexed = lex(ref_source, language, lenient=True)
    keyword_set = keywords_for(language)
    ngram = bleu(hyp_lexed.token_texts(), ref_lexed.token_texts()) if ref_lexed.tokens else 0.0
    weighted = weighted_bleu(hyp_lexed.token_texts(), ref_lexed.token_texts(), keyword_set)
    syntax = 100.0 * syntax_match(hyp_source, ref_source, language)
    semantics = 100.0 * semantics_match(hyp_lexed, ref_lexed)
    return (
        weights.w_ngram * ngram
        + weights.w_weighted_ngram * weighted
        + weights.w_syntax * syntax
        + weights.w_semantics * semantics
    )


def codebleu_q(original_source, adversarial_source, language, weights=None):
    """Consistency of a perturbed input with its original: the code score of
    the adversarial source against the original as reference."""
    return codebleu(adversarial_source, original_source, language, weights=weights)


# -- aggregation -----------------------------------------------------------


@dataclass
class MetricBundle:
    """Averaged attack effectiveness/quality statistics over a result set."""

    q_before: float
    q_after: float
    delta_drop: float
    success_rate: float
    avg_queries: float
    avg_perturbations: float
    avg_codebleu_q: float
    n_samples: int

    def as_dict(self):
        return {
            "q_before": self.q_before,
            "q_after": self.q_after,
            "delta_drop": self.delta_drop,
            "success_rate": self.success_rate,
            "avg_queries": self.avg_queries,
            "avg_perturbations": self.avg_perturbations,
            "avg_codebleu_q": self.avg_codebleu_q,
            "n_samples": self.n_samples,
        }


def aggregate(results):
    """Average a list of attack results into one MetricBundle; raises
    ValueError on an empty list."""
    results = list(results)
    if not results:
        raise ValueError("aggregate requires at least one attack result")
    q_before = fmean(r.q_before for r in results)
    q_after = fmean(r.q_after for r in results)
    return MetricBundle(
        q_before=q_before,
        q_after=q_after,
        delta_drop=q_before - q_after,
        success_rate=100.0 * sum(1 for r in results if r.success) / len(results),
        avg_queries=fmean(r.victim_queries for r in results),
        avg_perturbations=fmean(r.perturbed_token_count for r in results),
        avg_codebleu_q=fmean(r.codebleu_q for r in results),
        n_samples=len(results),
    )
