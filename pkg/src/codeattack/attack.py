"""Greedy black-box attack loop and its sklearn-style front end.

The loop ranks input tokens by influence, then walks them in order. At each
token it gathers substitute candidates (masked-LM fills, mechanical
operator edits, or both, depending on mode), tries each against the victim,
and returns as soon as one perturbed input satisfies the success condition:
quality drop >= phi, input similarity >= epsilon, and at most theta
perturbed tokens, where theta = ceil(p * attackable). When no candidate at
a token succeeds, the one with the largest quality drop is committed and
the search moves on; on exhaustion the accumulated adversarial input is
returned with success=False.

Modes:
  full    influence ranking, both edit kinds, constraints on
  rand    random token order (seeded) instead of ranking; otherwise full
  vul     influence ranking, token-level fills only, constraints off
  op      influence ranking, operator-level edits only
  optok   influence ranking, both edit kinds (same behavior as full)
"""

import math
import random
from dataclasses import dataclass, replace

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import OracleUnavailable
from .influence import rank_vulnerable
from .lexer import lex
from .metrics import CodeBleuWeights, bleu, codebleu, codebleu_q
from .oracle import CountingMaskedLM, CountingVictim, QueryCounter
from .substitution import (
    filter_candidates,
    operator_edits,
    propose,
    similarity,
)
from .validation import (
    check_edit_kinds,
    check_fraction,
    check_language,
    check_mode,
    check_nonnegative,
    check_positive_int,
    check_task,
)

_MODE_EDIT_KINDS = {
    "full": ("operator", "token"),
    "rand": ("operator", "token"),
    "vul": ("token",),
    "op": ("operator",),
    "optok": ("operator", "token"),
}
_UNCONSTRAINED_MODES = frozenset({"vul"})

_TRANSLATE_TARGET = {"java": "csharp", "csharp": "java"}


def perturbation_budget(fraction, attackable_count):
    """theta = ceil(fraction * attackable_count), with a 1e-9 slack so that
    binary-float products like 0.1 * 30 = 3.000...0004 do not inflate the
    budget past the intended integer."""
    return max(0, math.ceil(fraction * attackable_count - 1e-9))


def target_language(task, source_language):
    """Language the victim's output is evaluated in for code-to-code
    tasks: the paired language for translation, the source language
    otherwise."""
    if task == "translate":
        return _TRANSLATE_TARGET.get(source_language, source_language)
    return source_language


def quality(output_tokens, reference, task, language):
    """Downstream quality Q in [0, 100]: the code score for code-to-code
    tasks (translate, repair), BLEU for code-to-NL (summarize).

    `reference` may be a raw string (lexed/split as needed) or a token
    sequence. An empty output scores 0.
    """
    task = check_task(task)
    output_tokens = list(output_tokens)
    if not output_tokens:
        return 0.0
    if task == "summarize":
        ref_tokens = reference.split() if isinstance(reference, str) else list(reference)
        if not ref_tokens:
            return 0.0
        return bleu(output_tokens, ref_tokens)
    ref_source = reference if isinstance(reference, str) else " ".join(reference)
    if not ref_source.strip():
        return 0.0
    return codebleu(" ".join(output_tokens), ref_source, target_language(task, language))


@dataclass
class AttackConfig:
    """Attack hyper-parameters. Defaults: perturb at most 40% of the
    attackable tokens, keep input similarity at least 0.5, count any
    strictly positive quality drop as success, take the top 50 masked-LM
    fills per token."""

    task: str = "translate"
    language: str = "java"
    mode: str = "full"
    max_perturb_fraction: float = 0.40
    similarity_threshold: float = 0.5
    quality_drop_target: float = 1e-6
    top_k: int = 50
    allowed_edits: tuple = None
    seed: int = 0
    influence_regenerate: bool = False
    codebleu_weights: CodeBleuWeights = None

    def validate(self):
        """Normalized copy with every field checked; raises ValueError or
        UnsupportedLanguage on bad values."""
        task = check_task(self.task)
        language = check_language(self.language)
        mode = check_mode(self.mode)
        check_fraction(self.max_perturb_fraction, "max_perturb_fraction",
                       inclusive_low=False)
        check_fraction(self.similarity_threshold, "similarity_threshold")
        check_nonnegative(self.quality_drop_target, "quality_drop_target")
        check_positive_int(self.top_k, "top_k")
        allowed = check_edit_kinds(self.allowed_edits)
        if allowed is not None and not set(allowed) & set(_MODE_EDIT_KINDS[mode]):
            raise ValueError(
                f"allowed_edits {allowed} leaves no edit kind usable in mode {mode!r}"
            )
        if self.codebleu_weights is not None:
            self.codebleu_weights.validate()
        return replace(self, task=task, language=language, mode=mode, allowed_edits=allowed)

    def edit_kinds(self):
        kinds = _MODE_EDIT_KINDS[self.mode]
        if self.allowed_edits is None:
            return kinds
        return tuple(k for k in kinds if k in self.allowed_edits)

    def constraints_enabled(self):
        return self.mode not in _UNCONSTRAINED_MODES


@dataclass(frozen=True)
class TraceStep:
    """One committed perturbation. `token_index` refers to the original
    token sequence; `delta_at_step` is the quality drop the full perturbed
    input achieved when this candidate was tried."""

    token_index: int
    original_text: str
    substitute_text: str
    edit_kind: str
    delta_at_step: float


@dataclass
class AttackResult:
    """Outcome of one attack run, including everything needed to rescore or
    audit it offline."""

    sample_id: str
    source: str
    adversarial_source: str
    adversarial_tokens: tuple
    success: bool
    q_before: float
    q_after: float
    delta_drop: float
    codebleu_q: float
    similarity: float
    victim_queries: int
    masked_lm_queries: int
    perturbed_token_count: int
    trace: tuple
    mode: str
    theta: int
    attackable_count: int
    output_before: tuple = ()
    output_after: tuple = ()
    aborted: bool = False
    degraded: bool = False
    unsupervised: bool = False


@dataclass
class _Trial:
    candidate: object
    drop: float
    q: float
    output: object
    sequence: tuple

    def beats(self, other):
        if other is None:
            return True
        if (self.drop, self.candidate.score) != (other.drop, other.candidate.score):
            return (self.drop, self.candidate.score) > (other.drop, other.candidate.score)
        return self.candidate.text < other.candidate.text


def _materialize(working):
    return [t for t in working if t != ""]


def attack(source, reference, victim, masked_lm, config, sample_id=""):
    """Run the attack on one source snippet and return an AttackResult.

    `reference` is the ground-truth output used for quality; pass None to
    score against the victim's own original prediction instead
    (unsupervised mode). Oracle outages produce an aborted partial result
    rather than an exception.
    """
    config = config.validate()
    counter = QueryCounter()
    victim = CountingVictim(victim, counter)
    masked_lm = CountingMaskedLM(masked_lm, counter) if masked_lm is not None else None

    lexed = lex(source, config.language, lenient=True)
    texts = lexed.token_texts()
    attackable = len(texts)
    theta = perturbation_budget(config.max_perturb_fraction, attackable)

    def build(working, *, success, q_before, q_after, sim, trace,
              output_before, output_after, aborted=False, unsupervised=False):
        edits = {
            step.token_index: (step.substitute_text or None)
            for step in trace
        }
        adv_source = lexed.render(edits) if edits else source
        return AttackResult(
            sample_id=sample_id,
            source=source,
            adversarial_source=adv_source,
            adversarial_tokens=tuple(_materialize(working)),
            success=success,
            q_before=q_before,
            q_after=q_after,
            delta_drop=q_before - q_after,
            codebleu_q=codebleu_q(source, adv_source, config.language,
                                  weights=config.codebleu_weights),
            similarity=sim,
            victim_queries=counter.victim,
            masked_lm_queries=counter.masked_lm,
            perturbed_token_count=len(trace),
            trace=tuple(trace),
            mode=config.mode,
            theta=theta,
            attackable_count=attackable,
            output_before=tuple(output_before),
            output_after=tuple(output_after),
            aborted=aborted,
            degraded=lexed.degraded,
            unsupervised=unsupervised,
        )

    if attackable == 0:
        return build([], success=False, q_before=0.0, q_after=0.0, sim=1.0, trace=[],
                     output_before=(), output_after=())

    working = list(texts)
    trace = []
    unsupervised = reference is None
    q_before = 0.0
    q_current = 0.0
    baseline = None
    output_current = ()

    try:
        if config.mode == "rand":
            baseline = victim.generate(texts)
            rng = random.Random(config.seed)
            order = list(range(attackable))
            rng.shuffle(order)
            targets = [(i, 0.0) for i in order[:theta]]
        else:
            ranking = rank_vulnerable(lexed, victim, theta,
                                      regenerate=config.influence_regenerate)
            baseline = ranking.baseline_output
            targets = list(ranking.entries)

        ref = reference if reference is not None else list(baseline.tokens)
        q_before = quality(baseline.tokens, ref, config.task, config.language)
        q_current = q_before
        output_current = baseline.tokens
        kinds = config.edit_kinds()
        constrained = config.constraints_enabled()

        for orig_index, _influence in targets:
            if len(trace) >= theta:
                break
            v_text = working[orig_index]
            if v_text == "":
                continue

            candidates = []
            if "token" in kinds and masked_lm is not None:
                current_seq = _materialize(working)
                local_index = sum(1 for t in working[:orig_index] if t != "")
                raw = propose(current_seq, local_index, masked_lm, config.top_k)
                cset = filter_candidates(v_text, raw, config.language,
                                         v_index=orig_index,
                                         enforce_constraints=constrained)
                candidates.extend(
                    sorted(cset.filtered, key=lambda c: (-c.score, c.text))
                )
            if "operator" in kinds:
                for cand in operator_edits(v_text):
                    if constrained and filter_candidates(
                        v_text, [cand], config.language,
                        enforce_constraints=True,
                    ).rejections:
                        continue
                    candidates.append(cand)

            best = None
            for cand in candidates:
                trial_working = list(working)
                trial_working[orig_index] = cand.text
                trial_seq = _materialize(trial_working)
                if not trial_seq:
                    continue
                output = victim.generate(trial_seq)
                q = quality(output.tokens, ref, config.task, config.language)
                drop = q_before - q
                sim = similarity(texts, trial_seq)
                trial = _Trial(candidate=cand, drop=drop, q=q, output=output,
                               sequence=tuple(trial_seq))
                if (drop >= config.quality_drop_target
                        and sim >= config.similarity_threshold
                        and len(trace) + 1 <= theta):
                    working = trial_working
                    trace.append(TraceStep(orig_index, v_text, cand.text,
                                           cand.edit_kind, drop))
                    return build(working, success=True, q_before=q_before,
                                 q_after=q, sim=sim, trace=trace,
                                 output_before=baseline.tokens,
                                 output_after=output.tokens,
                                 unsupervised=unsupervised)
                if trial.beats(best):
                    best = trial

            if best is None:
                continue
            working[orig_index] = best.candidate.text
            trace.append(TraceStep(orig_index, v_text, best.candidate.text,
                                   best.candidate.edit_kind, best.drop))
            q_current = best.q
            output_current = best.output.tokens

    except OracleUnavailable:
        final_seq = _materialize(working)
        return build(working, success=False, q_before=q_before, q_after=q_current,
                     sim=similarity(texts, final_seq), trace=trace,
                     output_before=baseline.tokens if baseline else (),
                     output_after=output_current, aborted=True,
                     unsupervised=unsupervised)

    final_seq = _materialize(working)
    return build(working, success=False, q_before=q_before, q_after=q_current,
                 sim=similarity(texts, final_seq), trace=trace,
                 output_before=baseline.tokens, output_after=output_current,
                 unsupervised=unsupervised)


run_attack = attack


class CodeAttacker(TransformerMixin, BaseEstimator):
    """Estimator wrapper: fit() validates parameters and oracles, then
    transform() maps source snippets to adversarial variants. Per-sample
    results land in `results_` after each transform/attack call batch.

    >>> attacker = CodeAttacker(victim=EchoVictim(), masked_lm=FixtureMaskedLM())
    >>> attacker.fit().attack("int x = 1;").success
    """

    def __init__(self, victim=None, masked_lm=None, task="translate",
                 language="java", mode="full", max_perturb_fraction=0.40,
                 similarity_threshold=0.5, quality_drop_target=1e-6,
                 top_k=50, allowed_edits=None, seed=0,
                 influence_regenerate=False, codebleu_weights=None):
        self.victim = victim
        self.masked_lm = masked_lm
        self.task = task
        self.language = language
        self.mode = mode
        self.max_perturb_fraction = max_perturb_fraction
        self.similarity_threshold = similarity_threshold
        self.quality_drop_target = quality_drop_target
        self.top_k = top_k
        self.allowed_edits = allowed_edits
        self.seed = seed
        self.influence_regenerate = influence_regenerate
        self.codebleu_weights = codebleu_weights

    def _build_config(self):
        return AttackConfig(
            task=self.task,
            language=self.language,
            mode=self.mode,
            max_perturb_fraction=self.max_perturb_fraction,
            similarity_threshold=self.similarity_threshold,
            quality_drop_target=self.quality_drop_target,
            top_k=self.top_k,
            allowed_edits=self.allowed_edits,
            seed=self.seed,
            influence_regenerate=self.influence_regenerate,
            codebleu_weights=self.codebleu_weights,
        ).validate()

    def fit(self, X=None, y=None):
        """Validate parameters; X/y are accepted for pipeline compatibility
        but nothing is learned."""
        if self.victim is None:
            raise ValueError("CodeAttacker requires a victim oracle")
        self.config_ = self._build_config()
        if "token" in self.config_.edit_kinds() and self.masked_lm is None:
            raise ValueError(
                f"mode {self.config_.mode!r} uses token-level edits and needs a masked_lm"
            )
        return self

    def _check_fitted(self):
        if not hasattr(self, "config_"):
            raise ValueError("CodeAttacker is not fitted; call fit() first")

    def attack(self, source, reference=None, sample_id=""):
        """Attack one snippet; returns the full AttackResult."""
        self._check_fitted()
        return attack(source, reference, self.victim, self.masked_lm,
                      self.config_, sample_id=sample_id)

    def transform(self, X):
        """Adversarial source for each input. Entries may be raw strings or
        sample records carrying `source_code`/`reference`/`id`."""
        self._check_fitted()
        results = []
        for position, item in enumerate(X):
            source = getattr(item, "source_code", item)
            reference = getattr(item, "reference", None)
            sample_id = getattr(item, "id", str(position))
            results.append(self.attack(source, reference, sample_id=sample_id))
        self.results_ = results
        return [r.adversarial_source for r in results]
