"""Train the tiny checkpoint pair on a synthetic summarization task.

Random weights are enough for protocol conformance but carry no quality
signal, so directional attack runs against them are meaningless. This
module gives the pair real signal without any downloads: it generates a
small java-flavoured corpus whose summaries are fully determined by two
identifier slots ("<verb> the <noun>"), trains the seq2seq victim to emit
those summaries and the masked LM to fill masked slots, and writes both to
standard checkpoint directories plus a held-out attack corpus.

The learned rule makes the victim genuinely vulnerable in the way the
attack expects: the summary depends on a handful of source identifiers, so
substituting them degrades output quality sharply while structural tokens
barely matter.
"""

import json
import pathlib
import random

import torch

from .checkpoints import build_masked_lm, build_victim
from .engine import InferenceEngine

VERBS = ["scans", "reads", "writes", "clears", "merges",
         "builds", "counts", "copies", "checks", "prints"]
NOUNS = ["buffer", "index", "limit", "value", "item",
         "result", "name", "total", "flag", "cache"]

_TEMPLATES = [
    "void run ( ) {{ {verb} ( {noun} ) ; }}",
    "int get ( ) {{ return {verb} ( {noun} ) ; }}",
    "public void go ( ) {{ {noun} . {verb} ( ) ; }}",
]


def make_pairs():
    """Every (template, verb, noun) combination as (source, summary)."""
    pairs = []
    for template in _TEMPLATES:
        for verb in VERBS:
            for noun in NOUNS:
                pairs.append((template.format(verb=verb, noun=noun),
                              f"{verb} the {noun}"))
    return pairs


def _tokenizer_lines(pairs):
    return [source for source, _ in pairs] + [summary for _, summary in pairs]


def _batches(items, size, rng):
    order = list(items)
    while True:
        rng.shuffle(order)
        for start in range(0, len(order) - size + 1, size):
            yield order[start:start + size]


def _pad(rows, fill):
    width = max(len(row) for row in rows)
    return torch.tensor([row + [fill] * (width - len(row)) for row in rows])


def _train_victim(directory, pairs, steps, seed):
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(directory)
    model = AutoModelForSeq2SeqLM.from_pretrained(directory)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=3e-4)
    rng = random.Random(seed)
    torch.manual_seed(seed)
    batches = _batches(pairs, 32, rng)
    for step in range(steps):
        batch = next(batches)
        sources = [tokenizer(src)["input_ids"] for src, _ in batch]
        summaries = [
            tokenizer(summary, add_special_tokens=False)["input_ids"]
            + [tokenizer.eos_token_id]
            for _, summary in batch
        ]
        input_ids = _pad(sources, tokenizer.pad_token_id)
        attention = (input_ids != tokenizer.pad_token_id).long()
        labels = _pad(summaries, -100)
        loss = model(input_ids=input_ids, attention_mask=attention,
                     labels=labels).loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    model.eval()
    model.save_pretrained(directory)
    return float(loss.detach())


def _train_masked_lm(directory, pairs, steps, seed):
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(directory)
    model = AutoModelForMaskedLM.from_pretrained(directory)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=3e-4)
    rng = random.Random(seed + 17)
    torch.manual_seed(seed + 17)
    lines = [source for source, _ in pairs]
    batches = _batches(lines, 32, rng)
    for step in range(steps):
        batch = [tokenizer(line)["input_ids"] for line in next(batches)]
        input_ids = _pad(batch, tokenizer.pad_token_id)
        attention = (input_ids != tokenizer.pad_token_id).long()
        labels = input_ids.clone()
        special = torch.zeros_like(input_ids, dtype=torch.bool)
        for special_id in tokenizer.all_special_ids:
            special |= input_ids == special_id
        masked = (torch.rand(input_ids.shape) < 0.25) & ~special
        input_ids = torch.where(masked,
                                torch.tensor(tokenizer.mask_token_id),
                                input_ids)
        labels[~masked] = -100
        loss = model(input_ids=input_ids, attention_mask=attention,
                     labels=labels).loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    model.eval()
    model.save_pretrained(directory)
    return float(loss.detach())


def write_attack_corpus(path, pairs, count, seed=0):
    """A held-out JSONL corpus in the attack CLI's input format."""
    rng = random.Random(seed + 29)
    chosen = rng.sample(pairs, count)
    path = pathlib.Path(path)
    with open(path, "w", encoding="utf-8") as handle:
        for index, (source, summary) in enumerate(chosen):
            handle.write(json.dumps({
                "id": f"trained{index:03d}",
                "source": source,
                "reference": summary,
                "language": "java",
            }, sort_keys=True) + "\n")
    return path


def _fitness(victim_dir, masked_dir, pairs, probes=30):
    """Fraction of probed training pairs whose greedy decode reproduces
    the reference summary exactly."""
    engine = InferenceEngine(victim_dir, masked_dir)
    hits = 0
    for source, summary in pairs[:probes]:
        tokens, _, _ = engine.generate(source.split())
        hits += " ".join(tokens) == summary
    return hits / probes


def build_trained_pair(root, seed=0, victim_steps=900, mlm_steps=250,
                       corpus_samples=20):
    """Build, train, and verify the pair; returns a report dict.

    Writes victim/, masked_lm/, and corpus.jsonl under `root`.
    """
    root = pathlib.Path(root)
    pairs = make_pairs()
    lines = _tokenizer_lines(pairs)
    # Vocabularies come from the synthetic corpus itself, so every slot
    # word is in-vocabulary for both models.
    victim_dir = build_victim(root / "victim", seed=seed, lines=lines)
    masked_dir = build_masked_lm(root / "masked_lm", seed=seed, lines=lines)

    victim_loss = _train_victim(victim_dir, pairs, victim_steps, seed)
    mlm_loss = _train_masked_lm(masked_dir, pairs, mlm_steps, seed)
    corpus = write_attack_corpus(root / "corpus.jsonl", pairs,
                                 corpus_samples, seed=seed)
    accuracy = _fitness(victim_dir, masked_dir, pairs)
    return {
        "victim_dir": str(victim_dir),
        "masked_lm_dir": str(masked_dir),
        "corpus": str(corpus),
        "victim_loss": victim_loss,
        "mlm_loss": mlm_loss,
        "exact_match": accuracy,
    }
