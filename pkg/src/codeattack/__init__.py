"""Black-box adversarial attacks on sequence-to-sequence code models.

The toolkit lexes a source snippet into classed tokens, ranks them by how
much masking each one hurts the victim model's own prediction, then greedily
substitutes the influential ones — masked-LM fills and typo-like operator
edits, under class/operator constraints that keep the perturbed code looking
like code — until the victim's output quality drops.

Quick start against the in-process mocks:

    >>> from codeattack import CodeAttacker
    >>> from codeattack.mocks import EchoVictim, FixtureMaskedLM
    >>> attacker = CodeAttacker(victim=EchoVictim(), masked_lm=FixtureMaskedLM(),
    ...                         task="summarize", language="java").fit()
    >>> result = attacker.attack("int total = base + 1;", reference="adds one")
    >>> result.victim_queries > 0
    True
"""

from .attack import (
    AttackConfig,
    AttackResult,
    CodeAttacker,
    TraceStep,
    attack,
    perturbation_budget,
    quality,
    run_attack,
    target_language,
)
from .errors import (
    CodeAttackError,
    FormatError,
    LexError,
    MalformedResponse,
    NoMaskInRequest,
    OracleUnavailable,
    UnsupportedLanguage,
)
from .influence import InfluenceRanking, influence_score, rank_vulnerable
from .lexer import (
    OPERATOR_ALPHABET,
    CodeToken,
    LexedSource,
    TokenClass,
    class_signature,
    keywords_for,
    lex,
    operator_count,
    operator_multiset,
    tokenize,
)
from .metrics import (
    CodeBleuWeights,
    MetricBundle,
    aggregate,
    bleu,
    codebleu,
    codebleu_q,
    corpus_bleu,
)
from .oracle import (
    CountingMaskedLM,
    CountingVictim,
    GenerationOutput,
    HttpOracle,
    MaskCandidate,
    MaskedLMOracle,
    MaskPrediction,
    QueryCounter,
    ScoreOutput,
    VictimOracle,
)
from .substitution import (
    Candidate,
    CandidateSet,
    apply_substitution,
    check_constraints,
    filter_candidates,
    operator_edits,
    propose,
    similarity,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackResult",
    "Candidate",
    "CandidateSet",
    "CodeAttacker",
    "CodeAttackError",
    "CodeBleuWeights",
    "CodeToken",
    "CountingMaskedLM",
    "CountingVictim",
    "FormatError",
    "GenerationOutput",
    "HttpOracle",
    "InfluenceRanking",
    "LexedSource",
    "LexError",
    "MalformedResponse",
    "MaskCandidate",
    "MaskPrediction",
    "MaskedLMOracle",
    "MetricBundle",
    "NoMaskInRequest",
    "OPERATOR_ALPHABET",
    "OracleUnavailable",
    "QueryCounter",
    "ScoreOutput",
    "TokenClass",
    "TraceStep",
    "UnsupportedLanguage",
    "VictimOracle",
    "aggregate",
    "apply_substitution",
    "attack",
    "bleu",
    "check_constraints",
    "class_signature",
    "codebleu",
    "codebleu_q",
    "corpus_bleu",
    "filter_candidates",
    "influence_score",
    "keywords_for",
    "lex",
    "operator_count",
    "operator_edits",
    "operator_multiset",
    "perturbation_budget",
    "propose",
    "quality",
    "rank_vulnerable",
    "run_attack",
    "similarity",
    "target_language",
    "tokenize",
]
