"""Command-line front end.

    codeattack attack   --task translate --lang java --corpus corpus.jsonl \
                        --victim mock:echo --masked-lm mock:fixture --out results.jsonl
    codeattack rank     --task translate --lang java --corpus corpus.jsonl \
                        --victim mock:echo --out influence.csv
    codeattack evaluate --results results.jsonl [--corpus corpus.jsonl --task ... --lang ...]
    codeattack report   --results results.jsonl --out sweep.csv

Oracle selectors: `mock:<name>` for in-process mocks (echo, hashed[:seed],
planted:<key>, fixture) or `http:<url>` / a plain http(s) URL for a model
server speaking the wire protocol. Exit codes: 0 success, 1 bad flags,
2 oracle failure.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone

from . import __version__
from .attack import AttackConfig, attack, quality, target_language
from .dataset import load, load_results, save_results
from .errors import CodeAttackError, OracleUnavailable
from .influence import rank_vulnerable
from .lexer import lex
from .metrics import aggregate, corpus_bleu
from .mocks import make_masked_lm, make_victim
from .oracle import HttpOracle

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ORACLE = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; this CLI reserves 2 for oracle
    failures, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_oracle_spec(spec):
    """Split an oracle selector into ("mock", name) or ("http", url)."""
    if spec.startswith("mock:"):
        return "mock", spec[len("mock:"):]
    if spec.startswith(("http://", "https://")):
        return "http", spec
    if spec.startswith("http:"):
        rest = spec[len("http:"):]
        return "http", rest if rest.startswith(("http://", "https://")) else f"http://{rest}"
    raise ValueError(f"oracle selector must start with mock: or http:, got {spec!r}")


def build_victim(spec):
    kind, value = parse_oracle_spec(spec)
    if kind == "mock":
        return make_victim(value)
    return HttpOracle(value)


def build_masked_lm(spec, language):
    if spec in (None, "", "none"):
        return None
    kind, value = parse_oracle_spec(spec)
    if kind == "mock":
        return make_masked_lm(value, language=language)
    return HttpOracle(value)


def _add_attack_flags(parser):
    parser.add_argument("--task", choices=("translate", "repair", "summarize"),
                        default="translate")
    parser.add_argument("--lang", default="java",
                        help="source language: java, csharp, python, php")
    parser.add_argument("--victim", required=True,
                        help="victim oracle selector (mock:<name> or http:<url>)")
    parser.add_argument("--masked-lm", default="mock:fixture",
                        help="masked-LM selector, or 'none' for operator-only modes")
    parser.add_argument("--mode", choices=("full", "rand", "vul", "op", "optok"),
                        default="full")
    parser.add_argument("--p", type=float, default=0.40,
                        help="max fraction of attackable tokens to perturb")
    parser.add_argument("--epsilon", type=float, default=0.5,
                        help="minimum input similarity for success")
    parser.add_argument("--phi", type=float, default=1e-6,
                        help="minimum quality drop for success")
    parser.add_argument("--k", type=int, default=50,
                        help="top-k masked-LM candidates per token")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-samples", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)


def _config_from_args(args):
    return AttackConfig(
        task=args.task,
        language=args.lang,
        mode=args.mode,
        max_perturb_fraction=args.p,
        similarity_threshold=args.epsilon,
        quality_drop_target=args.phi,
        top_k=args.k,
        seed=args.seed,
    ).validate()


def _manifest(args, config, command):
    manifest = {
        "tool": "codeattack",
        "version": __version__,
        "command": command,
        "config": dataclasses.asdict(config),
        "corpus": args.corpus,
        "victim": args.victim,
        "masked_lm": getattr(args, "masked_lm", None),
        "out": args.out,
    }
    return manifest


def _write_manifest(manifest, out_path):
    stamped = dict(manifest)
    stamped["timestamp"] = datetime.now(timezone.utc).isoformat()
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as handle:
        json.dump(stamped, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _reference_tokens(sample, task):
    if task == "summarize":
        return sample.reference.split()
    lang = target_language(task, sample.language)
    return lex(sample.reference, lang, lenient=True).token_texts()


def _print_summary(results):
    bundle = aggregate(results)
    header = ("Before", "After", "Drop", "Success%", "#Queries", "#Perturb", "CodeBLEU_q")
    row = (
        f"{bundle.q_before:.2f}", f"{bundle.q_after:.2f}", f"{bundle.delta_drop:.2f}",
        f"{bundle.success_rate:.1f}", f"{bundle.avg_queries:.1f}",
        f"{bundle.avg_perturbations:.2f}", f"{bundle.avg_codebleu_q:.2f}",
    )
    widths = [max(len(h), len(v)) for h, v in zip(header, row)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    print("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    print(f"samples: {bundle.n_samples}  (quality columns are sentence averages)")


def _print_corpus_bleu(results, references):
    """Corpus-level token BLEU of the victim outputs, before and after, as a
    complement to the sentence averages."""
    pairs = [(r, ref) for r, ref in zip(results, references) if ref]
    if not pairs:
        return
    refs = [ref for _r, ref in pairs]
    before = [list(r.output_before) for r, _ref in pairs]
    after = [list(r.output_after) for r, _ref in pairs]
    print(f"corpus BLEU (token): before {corpus_bleu(before, refs):.2f}, "
          f"after {corpus_bleu(after, refs):.2f}")


def cmd_attack(args):
    config = _config_from_args(args)
    samples = load(args.corpus, args.task)
    if args.max_samples is not None:
        samples = samples[: args.max_samples]
    victim = build_victim(args.victim)
    masked_lm = build_masked_lm(args.masked_lm, config.language)
    if "token" in config.edit_kinds() and masked_lm is None:
        print(f"mode {config.mode!r} needs a masked LM (--masked-lm)", file=sys.stderr)
        return EXIT_USAGE

    def run_one(sample):
        return attack(sample.source_code, sample.reference or None, victim,
                      masked_lm, config, sample_id=sample.id)

    if args.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(run_one, samples))
    else:
        results = [run_one(sample) for sample in samples]
    results.sort(key=lambda r: r.sample_id)

    manifest = _manifest(args, config, "attack")
    save_results(results, args.out, extra_summary={"manifest": manifest})
    _write_manifest(manifest, args.out)

    if results:
        _print_summary(results)
        by_id = {s.id: s for s in samples}
        references = [_reference_tokens(by_id[r.sample_id], config.task) for r in results]
        _print_corpus_bleu(results, references)
        if any(r.aborted for r in results):
            aborted = sum(1 for r in results if r.aborted)
            print(f"oracle failures: {aborted} aborted runs", file=sys.stderr)
            return EXIT_ORACLE
    else:
        print("no samples attacked")
    return EXIT_OK


def cmd_rank(args):
    config = _config_from_args(args)
    samples = load(args.corpus, args.task)
    if args.max_samples is not None:
        samples = samples[: args.max_samples]
    victim = build_victim(args.victim)
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample_id", "rank", "token_index", "token_text",
                         "token_class", "influence"])
        for sample in samples:
            lexed = lex(sample.source_code, config.language, lenient=True)
            if not lexed.tokens:
                continue
            ranking = rank_vulnerable(lexed, victim, len(lexed.tokens),
                                      regenerate=config.influence_regenerate)
            for rank, (index, score) in enumerate(ranking.entries, start=1):
                writer.writerow([
                    sample.id, rank, index, lexed[index].text,
                    lexed[index].token_class.value, f"{score:.6f}",
                ])
    print(f"wrote influence ranking for {len(samples)} samples to {args.out}")
    return EXIT_OK


def cmd_evaluate(args):
    results, summary = load_results(args.results)
    if not results:
        print("no results to evaluate")
        return EXIT_OK
    if args.corpus:
        samples = {s.id: s for s in load(args.corpus, args.task)}
        rescored = 0
        mismatched = 0
        for result in results:
            sample = samples.get(result.sample_id)
            if sample is None or not sample.reference:
                continue
            q_before = quality(result.output_before, sample.reference,
                               args.task, sample.language)
            q_after = quality(result.output_after, sample.reference,
                              args.task, sample.language)
            rescored += 1
            if abs(q_before - result.q_before) > 1e-6 or abs(q_after - result.q_after) > 1e-6:
                mismatched += 1
                log.warning("sample %s: stored quality differs from rescoring "
                            "(%.4f/%.4f vs %.4f/%.4f)", result.sample_id,
                            result.q_before, result.q_after, q_before, q_after)
        print(f"rescored {rescored} results against {args.corpus}; "
              f"{mismatched} mismatches")
    stored = (summary or {}).get("metrics")
    recomputed = aggregate(results).as_dict()
    if stored:
        drift = {k: (stored[k], recomputed[k]) for k in recomputed
                 if k in stored and abs(stored[k] - recomputed[k]) > 1e-9}
        if drift:
            print(f"summary drift detected: {sorted(drift)}")
    for key, value in recomputed.items():
        print(f"{key}: {value:.4f}" if isinstance(value, float) else f"{key}: {value}")
    return EXIT_OK


def cmd_report(args):
    results, _summary = load_results(args.results)
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample_id", "step", "token_index", "edit_kind",
                         "delta_at_step", "success", "perturbed_total", "queries"])
        for result in results:
            for step_number, step in enumerate(result.trace, start=1):
                writer.writerow([
                    result.sample_id, step_number, step.token_index, step.edit_kind,
                    f"{step.delta_at_step:.6f}", int(result.success),
                    result.perturbed_token_count, result.victim_queries,
                ])
    print(f"wrote perturbation sweep for {len(results)} results to {args.out}")
    return EXIT_OK


def make_parser():
    parser = _Parser(prog="codeattack",
                     description="Black-box adversarial attacks on code models.")
    parser.add_argument("--version", action="version", version=f"codeattack {__version__}")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="attack a corpus and write results")
    _add_attack_flags(p_attack)
    p_attack.add_argument("--corpus", required=True)
    p_attack.add_argument("--out", required=True)
    p_attack.set_defaults(func=cmd_attack)

    p_rank = sub.add_parser("rank", help="write per-token influence rankings as CSV")
    _add_attack_flags(p_rank)
    p_rank.add_argument("--corpus", required=True)
    p_rank.add_argument("--out", required=True)
    p_rank.set_defaults(func=cmd_rank)

    p_eval = sub.add_parser("evaluate", help="rescore an existing result file")
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--corpus", default=None)
    p_eval.add_argument("--task", choices=("translate", "repair", "summarize"),
                        default="translate")
    p_eval.add_argument("--lang", default="java")
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="emit per-step CSV for sweep plots")
    p_report.add_argument("--results", required=True)
    p_report.add_argument("--out", required=True)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OracleUnavailable as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (CodeAttackError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
