"""Acceptance gate: one test per release criterion.

Each test prints a single summary line with its measured numbers, so a
verbose run doubles as the acceptance report. Tolerances and time budgets
are asserted, not just reported. Everything runs against in-process mocks;
no network or model checkpoints are involved.
"""

import math
import random
import time
from fractions import Fraction
from statistics import fmean

import pytest

from codeattack.attack import AttackConfig, attack
from codeattack.cli import main
from codeattack.dataset import save_corpus
from codeattack.influence import rank_vulnerable
from codeattack.lexer import keywords_for, lex
from codeattack.metrics import bleu, codebleu, codebleu_q
from codeattack.mocks import FixtureMaskedLM, HashedVictim
from codeattack.substitution import EDIT_TOKEN, Candidate, filter_candidates

from helpers import PlantedSample, planted_corpus, random_corpus
from reference_impls import (
    ref_bleu,
    ref_class_signature,
    ref_codebleu_java,
    ref_cosine,
    ref_op_size,
    ref_ranking,
)

# Randomized-token building blocks for the constraint soundness corpus:
# word runs never mix letters and digits, and '/' stays out of the operator
# pool so no candidate accidentally forms a comment. That keeps the
# independent signature oracle exact.
_OPS = "+-*=<>!&|;,()"
_KEYWORDS = ("if", "for", "while", "return", "int", "public", "static",
             "new", "void", "else")
_IDENTS = ("alpha", "beta", "gamma", "delta", "omega", "count", "total",
           "value", "buffer", "probe")
_NUMS = ("0", "1", "7", "12", "99", "100")
_WORDS = _KEYWORDS + _IDENTS + _NUMS


def _random_token(rng):
    form = rng.randrange(4)
    if form == 0:
        return "".join(rng.choice(_OPS) for _ in range(rng.randint(1, 2)))
    word = rng.choice(_WORDS)
    if form == 1:
        return word
    if form == 2:
        prefix = rng.choice(_OPS) if rng.random() < 0.5 else ""
        suffix = rng.choice(_OPS) if rng.random() < 0.7 else ""
        return (prefix + word + suffix) or word
    return word + rng.choice(_OPS) + rng.choice(_WORDS)


def _sign_test_p(wins, losses):
    """One-sided exact binomial tail: P(X >= wins) under a fair coin over
    the non-tied samples."""
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, i) for i in range(wins, n + 1)) / 2 ** n


@pytest.fixture(scope="module")
def corpus_run():
    """500 independent attacks on the randomized mock corpus, keeping each
    run's oracles so accounting can be checked against the transport logs."""
    samples = random_corpus(500, seed=7)
    config = AttackConfig(task="summarize", language="java")
    runs = []
    for i, sample in enumerate(samples):
        victim = HashedVictim(seed=i)
        masked_lm = FixtureMaskedLM()
        result = attack(sample.source_code, None, victim, masked_lm, config,
                        sample_id=sample.id)
        runs.append((sample, result, victim, masked_lm))
    return runs


def test_criterion_1_constraint_soundness():
    rng = random.Random(20250825)
    keyword_set = keywords_for("java")
    pairs = 12_000
    survivors = 0
    violations = []
    start = time.perf_counter()
    for _ in range(pairs):
        v_text = _random_token(rng)
        cand_text = "" if rng.random() < 0.02 else _random_token(rng)
        out = filter_candidates(
            v_text, [Candidate(cand_text, 0.5, EDIT_TOKEN)], "java")
        if not out.filtered:
            continue
        survivors += 1
        if abs(ref_op_size(cand_text) - ref_op_size(v_text)) > 1:
            violations.append(("operator-size", v_text, cand_text))
        if ref_class_signature(cand_text, keyword_set) != \
                ref_class_signature(v_text, keyword_set):
            violations.append(("class-signature", v_text, cand_text))
        if cand_text == v_text:
            violations.append(("identity", v_text, cand_text))
    elapsed = time.perf_counter() - start
    assert violations == [], violations[:5]
    assert survivors > 500, "constraint corpus too lopsided to be meaningful"
    assert elapsed < 10.0, f"{elapsed:.2f}s exceeds the 10s budget"
    print(f"[PASS] criterion-1 constraint soundness: {pairs} randomized "
          f"pairs, {survivors} survivors, 0 violations, {elapsed:.2f}s")


def test_criterion_2_influence_matches_brute_force():
    rng = random.Random(90210)
    vocab = [f"tok{i}" for i in range(10)] + ["+", ";", "int", "value"]
    start = time.perf_counter()
    for i in range(100):
        n = rng.randint(1, 30)
        tokens = [rng.choice(vocab) for _ in range(n)]
        budget = rng.randint(0, n)
        got = rank_vulnerable(tokens, HashedVictim(seed=1000 + i), budget)
        want = ref_ranking(tokens, HashedVictim(seed=1000 + i), budget)
        assert list(got.entries) == want, f"oracle {i} diverged"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"{elapsed:.2f}s exceeds the 30s budget"
    print(f"[PASS] criterion-2 influence equivalence: 100 randomized "
          f"oracles bit-exact, {elapsed:.2f}s")


def test_criterion_3_budget_and_similarity_invariants(corpus_run):
    successes = 0
    violations = []
    for sample, result, _victim, _mlm in corpus_run:
        original = lex(sample.source_code, "java", lenient=True).token_texts()
        theta_oracle = math.ceil(Fraction(2, 5) * result.attackable_count)
        assert result.theta == theta_oracle
        if not result.success:
            continue
        successes += 1
        if result.perturbed_token_count > theta_oracle:
            violations.append(("budget", result.sample_id))
        recomputed = ref_cosine(original, list(result.adversarial_tokens))
        if recomputed < 0.5 - 1e-12:
            violations.append(("similarity", result.sample_id))
        if abs(recomputed - result.similarity) > 1e-9:
            violations.append(("similarity-report", result.sample_id))
        if result.adversarial_source == result.source:
            violations.append(("unchanged-input", result.sample_id))
    assert violations == [], violations[:5]
    assert successes >= 100, f"only {successes} successes of 500"
    print(f"[PASS] criterion-3 budget/similarity invariants: 500 samples, "
          f"{successes} successes, 0 violations")


def test_criterion_4_query_accounting_is_exact(corpus_run):
    mismatches = []
    for _sample, result, victim, masked_lm in corpus_run:
        if result.victim_queries != victim.victim_calls:
            mismatches.append((result.sample_id, result.victim_queries,
                               victim.victim_calls))
        if result.masked_lm_queries != masked_lm.masked_lm_calls:
            mismatches.append((result.sample_id, "masked-lm"))
    assert mismatches == [], mismatches[:5]
    total = sum(r.victim_queries for _s, r, _v, _m in corpus_run)
    print(f"[PASS] criterion-4 query accounting: 500 runs, "
          f"{total} victim queries, all equal to transport log lengths")


def test_criterion_5_metric_identities_and_oracle_agreement():
    rng = random.Random(5150)
    vocab = ["if", "x", "y", "(", ")", "{", "}", "+", "0", "return", "int",
             ";"]
    for _ in range(50):
        toks = [rng.choice(vocab) for _ in range(rng.randint(1, 20))]
        assert bleu(toks, toks) == 100.0
    for _ in range(20):
        src = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 15)))
        assert codebleu(src, src, "java") == 100.0

    snippet = ("static int scanBuffer ( int first , int second ) { "
               "int total = first + second ; "
               "int limit = total + 10 ; "
               "if ( limit > 100 ) { total = limit - first ; } "
               "return total ; }")
    edited = snippet.replace("limit", "bound", 1)
    ref_edit = ref_codebleu_java(edited, snippet)
    ref_disjoint = ref_codebleu_java("aa = bb ; cc = dd ;", "7 8 9 101 ;")
    got_edit = codebleu_q(snippet, edited, "java")
    got_disjoint = codebleu_q("7 8 9 101 ;", "aa = bb ; cc = dd ;", "java")
    assert ref_edit > 80.0 > ref_disjoint and ref_disjoint < 10.0
    assert got_edit == pytest.approx(ref_edit, abs=1e-9)
    assert got_disjoint == pytest.approx(ref_disjoint, abs=1e-9)
    assert got_edit > 80.0 > got_disjoint and got_disjoint < 10.0

    worst = 0.0
    for _ in range(1000):
        hyp = [rng.choice(vocab) for _ in range(rng.randint(1, 20))]
        ref = [rng.choice(vocab) for _ in range(rng.randint(1, 20))]
        worst = max(worst, abs(bleu(hyp, ref) - ref_bleu(hyp, ref)))
    assert worst <= 1e-9, f"worst deviation {worst:.3e}"
    print(f"[PASS] criterion-5 metric identities: identity scores exact, "
          f"fixtures {got_edit:.2f} > 80 > {got_disjoint:.2f}, "
          f"1000-pair max deviation {worst:.1e}")


def test_criterion_6_attack_runs_are_byte_deterministic(tmp_path, monkeypatch):
    corpus = tmp_path / "corpus.jsonl"
    save_corpus([PlantedSample(i).sample() for i in range(2)], corpus)
    outputs = []
    for run in ("first", "second"):
        workdir = tmp_path / run
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        code = main(["attack", "--task", "summarize", "--lang", "java",
                     "--corpus", str(corpus), "--victim", "mock:echo",
                     "--masked-lm", "mock:fixture", "--k", "5", "--seed", "3",
                     "--out", "results.jsonl"])
        assert code == 0
        outputs.append((workdir / "results.jsonl").read_bytes())
    assert outputs[0] == outputs[1]
    print(f"[PASS] criterion-6 determinism: two identical runs, "
          f"{len(outputs[0])} bytes each, byte-identical result files")


def test_criterion_7_ranking_beats_random_token_order():
    planted = PlantedSample(0)
    full_victim = planted.victim()
    full = attack(planted.source, planted.reference, full_victim,
                  planted.masked_lm(),
                  AttackConfig(task="summarize", language="java",
                               mode="full"))
    assert full.success is True
    assert full.perturbed_token_count == 1
    assert full.victim_queries == full_victim.victim_calls

    rand_queries = []
    for seed in range(50):
        result = attack(planted.source, planted.reference, planted.victim(),
                        planted.masked_lm(),
                        AttackConfig(task="summarize", language="java",
                                     mode="rand", seed=seed))
        rand_queries.append(result.victim_queries)
    mean_rand = fmean(rand_queries)
    assert full.victim_queries < mean_rand
    print(f"[PASS] criterion-7 planted end-to-end: ranked mode succeeded "
          f"with 1 perturbation and {full.victim_queries} queries vs "
          f"{mean_rand:.1f} mean over 50 random-order seeds")


def test_criterion_8_ablation_ordering_on_planted_corpus():
    corpus = planted_corpus(50)
    drops = {"op": [], "optok": []}
    consistencies = {"op": [], "optok": []}
    for planted in corpus:
        for mode in ("op", "optok"):
            result = attack(planted.source, planted.reference,
                            planted.victim(), planted.masked_lm(),
                            AttackConfig(task="summarize", language="java",
                                         mode=mode))
            drops[mode].append(result.delta_drop)
            consistencies[mode].append(result.codebleu_q)

    mean_drop_op = fmean(drops["op"])
    mean_drop_optok = fmean(drops["optok"])
    mean_cbq_op = fmean(consistencies["op"])
    mean_cbq_optok = fmean(consistencies["optok"])
    assert mean_drop_optok >= mean_drop_op
    assert mean_cbq_op >= mean_cbq_optok

    drop_wins = sum(1 for a, b in zip(drops["optok"], drops["op"]) if a > b)
    drop_losses = sum(1 for a, b in zip(drops["optok"], drops["op"]) if a < b)
    cbq_wins = sum(1 for a, b in zip(consistencies["op"],
                                     consistencies["optok"]) if a > b)
    cbq_losses = sum(1 for a, b in zip(consistencies["op"],
                                       consistencies["optok"]) if a < b)
    p_drop = _sign_test_p(drop_wins, drop_losses)
    p_cbq = _sign_test_p(cbq_wins, cbq_losses)
    assert p_drop < 0.05, f"drop ordering sign test p={p_drop:.3g}"
    assert p_cbq < 0.05, f"consistency ordering sign test p={p_cbq:.3g}"
    print(f"[PASS] criterion-8 ablation ordering: drop "
          f"{mean_drop_optok:.1f} >= {mean_drop_op:.1f} "
          f"(p={p_drop:.2g}); input consistency {mean_cbq_op:.1f} >= "
          f"{mean_cbq_optok:.1f} (p={p_cbq:.2g}) over 50 samples")
