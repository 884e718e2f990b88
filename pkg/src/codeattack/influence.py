"""Vulnerable-token ranking.

A token's influence is how much the summed logits of the victim's original
prediction fall when that token is masked out of the input: the baseline
generation gives one logit per output step, and a forced decode of the same
output under the masked input gives the counterfactual logits. High
influence marks the tokens the model leans on, which are the ones worth
perturbing first.
"""

from dataclasses import dataclass

from .lexer import LexedSource
from .oracle import MASK_SENTINEL


@dataclass(frozen=True)
class InfluenceRanking:
    """Attackable token indices with influence scores, highest first; ties
    broken by ascending index so runs are reproducible."""

    entries: tuple
    baseline_output: object

    def indices(self):
        return [index for index, _score in self.entries]


def influence_score(tokens, index, victim, baseline, regenerate=False):
    """Influence of `tokens[index]`: baseline logit sum minus the logit sum
    of the baseline output force-decoded with that token masked. Issues
    exactly one victim query.

    With `regenerate=True` the masked input is decoded freely instead and
    its own logit sum is used; output lengths may then differ, which is why
    forced decoding is the default.
    """
    tokens = list(tokens)
    if not 0 <= index < len(tokens):
        raise IndexError(f"token index {index} out of range for {len(tokens)} tokens")
    if len(baseline.tokens) != len(baseline.step_logits):
        raise ValueError("baseline output has mismatched tokens/logits lengths")
    masked = list(tokens)
    masked[index] = MASK_SENTINEL
    baseline_sum = sum(baseline.step_logits)
    if regenerate:
        counterfactual = victim.generate(masked)
        return baseline_sum - sum(counterfactual.step_logits)
    scored = victim.score(masked, list(baseline.tokens))
    if len(scored.target_logits) != len(baseline.tokens):
        raise ValueError("score returned a logit count different from the target length")
    return baseline_sum - sum(scored.target_logits)


def rank_vulnerable(source, victim, budget, regenerate=False):
    """Rank all attackable tokens of `source` by influence and keep the top
    `budget`.

    `source` may be a LexedSource (attackable = its code tokens; trivia is
    already excluded by lexing) or a plain token-text sequence (all positions
    attackable). Issues exactly 1 + (number of attackable tokens) victim
    queries: one baseline generation plus one masked score per token.
    """
    if isinstance(source, LexedSource):
        texts = source.token_texts()
    else:
        texts = [str(t) for t in source]
    if not texts:
        raise ValueError("cannot rank an empty token sequence")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    baseline = victim.generate(texts)
    scored = [
        (index, influence_score(texts, index, victim, baseline, regenerate=regenerate))
        for index in range(len(texts))
    ]
    scored.sort(key=lambda pair: -pair[1])
    return InfluenceRanking(entries=tuple(scored[:budget]), baseline_output=baseline)
