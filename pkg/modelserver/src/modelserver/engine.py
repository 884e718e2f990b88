"""Inference over local checkpoints, shaped for the wire protocol.

One victim (seq2seq) and one masked LM live in the process. Decoding is
greedy and sampling-free, so identical requests always produce identical
responses. Forward passes are serialized with a lock; CPU serving gains
nothing from parallel forwards and the protocol promises per-request
determinism, not throughput.

Self-consistency between the two victim endpoints is structural rather than
numerical: ``/generate`` reports its step logits by running the same forced
pass over its own output that ``/score`` runs over a caller-provided target,
so ``score(X, generate(X).tokens)`` reproduces the generate logits exactly.
"""

import threading

import torch
from transformers import AutoModelForMaskedLM, AutoModelForSeq2SeqLM, AutoTokenizer
from transformers.utils import logging as _hf_logging

_hf_logging.disable_progress_bar()


class EngineInputError(ValueError):
    """The request was well-formed JSON but impossible to serve (for
    example a context longer than the model's position table)."""


def _finite(value):
    return float(value)


class InferenceEngine:
    """Serves generate / score / mask_predict over a checkpoint pair."""

    def __init__(self, victim_checkpoint, masked_lm_checkpoint, device="cpu",
                 max_length=128):
        self.max_length = int(max_length)
        self.device = torch.device(device)
        self._lock = threading.Lock()
        self._victim_tok = AutoTokenizer.from_pretrained(victim_checkpoint)
        self._victim = AutoModelForSeq2SeqLM.from_pretrained(
            victim_checkpoint).to(self.device).eval()
        self._mlm_tok = AutoTokenizer.from_pretrained(masked_lm_checkpoint)
        self._mlm = AutoModelForMaskedLM.from_pretrained(
            masked_lm_checkpoint).to(self.device).eval()

        self._decoder_start = self._victim.config.decoder_start_token_id
        if self._decoder_start is None:
            self._decoder_start = self._victim.config.bos_token_id
        if self._decoder_start is None:
            raise ValueError("victim checkpoint declares no decoder start token")
        self._eos = self._victim.config.eos_token_id
        # Specials never appear as output tokens; EOS is only a stop signal.
        self._banned = set(self._victim_tok.all_special_ids) - {self._eos}
        self._banned.add(self._decoder_start)
        self._mlm_special = set(self._mlm_tok.all_special_ids)
        self._mlm_limit = int(self._mlm.config.max_position_embeddings) - 8
        self._start_penalty, self._continuation_penalty = self._piece_penalties()

    # -- victim -----------------------------------------------------------

    def _encoder_ids(self, tokens):
        text = " ".join(tokens)
        ids = self._victim_tok(text, truncation=True,
                               max_length=self.max_length)["input_ids"]
        if not ids:
            raise EngineInputError("input encodes to nothing")
        return torch.tensor([ids], device=self.device)

    def _forced_logits(self, encoder_ids, wanted_ids):
        """Logits the victim assigns to each of `wanted_ids` when forced to
        decode exactly that sequence. Shared by generate and score."""
        decoder_in = torch.tensor(
            [[self._decoder_start] + wanted_ids[:-1]], device=self.device)
        logits = self._victim(input_ids=encoder_ids,
                              decoder_input_ids=decoder_in).logits[0]
        return [_finite(logits[step, token_id])
                for step, token_id in enumerate(wanted_ids)]

    def generate(self, tokens):
        """Greedy decode; returns (output_tokens, step_logits, text)."""
        with self._lock, torch.inference_mode():
            encoder_ids = self._encoder_ids(tokens)
            current = [self._decoder_start]
            emitted = []
            for step in range(self.max_length):
                decoder_in = torch.tensor([current], device=self.device)
                logits = self._victim(input_ids=encoder_ids,
                                      decoder_input_ids=decoder_in).logits[0, -1]
                logits = logits.clone()
                for banned_id in self._banned:
                    logits[banned_id] = float("-inf")
                if step == 0:
                    # always emit at least one real token
                    logits[self._eos] = float("-inf")
                next_id = int(logits.argmax())
                if next_id == self._eos:
                    break
                emitted.append(next_id)
                current.append(next_id)
            step_logits = self._forced_logits(encoder_ids, emitted)
            out_tokens = self._victim_tok.convert_ids_to_tokens(emitted)
            text = self._victim_tok.decode(emitted, skip_special_tokens=True)
            return out_tokens, step_logits, text

    def score(self, tokens, target):
        """Per-position logits of `target` under forced decoding."""
        if len(target) > self.max_length:
            raise EngineInputError(
                f"target of {len(target)} tokens exceeds max_length "
                f"{self.max_length}")
        with self._lock, torch.inference_mode():
            encoder_ids = self._encoder_ids(tokens)
            wanted = self._victim_tok.convert_tokens_to_ids(list(target))
            return self._forced_logits(encoder_ids, wanted)

    # -- masked LM --------------------------------------------------------

    def _word_pieces(self, word):
        ids = self._mlm_tok(word, add_special_tokens=False)["input_ids"]
        return ids or [self._mlm_tok.unk_token_id]

    def _piece_penalties(self):
        """Additive logit penalties that keep predicted fills well-formed:
        the first piece of a masked token may only be a word-start piece,
        later pieces only continuations. Classification probes the
        tokenizer's own joining rule, so it works for any sub-word scheme.
        Special tokens are banned from both classes."""
        vocab_size = self._mlm.config.vocab_size
        start_ok = torch.zeros(vocab_size, dtype=torch.bool)
        continuation_ok = torch.zeros(vocab_size, dtype=torch.bool)
        pieces = self._mlm_tok.convert_ids_to_tokens(list(range(vocab_size)))
        for piece_id, piece in enumerate(pieces):
            if piece is None or piece_id in self._mlm_special:
                continue
            joined = self._mlm_tok.convert_tokens_to_string(["x", piece])
            if " " in joined.strip():
                start_ok[piece_id] = True
            else:
                continuation_ok[piece_id] = True
        negative_inf = float("-inf")
        start = torch.where(start_ok, 0.0, negative_inf).to(self.device)
        continuation = torch.where(continuation_ok, 0.0,
                                   negative_inf).to(self.device)
        return start, continuation

    def mask_predict(self, tokens, start, end, k):
        """Top-k whole-token fills for the span [start, end) of `tokens`.

        Every sub-word of each masked token is replaced by one mask piece
        (span-aligned masking); per-position predictions are then combined
        by a beam of width k ranked by summed log-probability, and the
        surviving piece sequences are joined back into whole tokens.
        """
        with self._lock, torch.inference_mode():
            pieces = [self._word_pieces(word) for word in tokens]
            ids = [self._mlm_tok.bos_token_id]
            mask_positions = []
            position_is_start = []
            group_sizes = []
            for index, word_ids in enumerate(pieces):
                if start <= index < end:
                    group_sizes.append(len(word_ids))
                    for offset in range(len(word_ids)):
                        mask_positions.append(len(ids))
                        position_is_start.append(offset == 0)
                        ids.append(self._mlm_tok.mask_token_id)
                else:
                    ids.extend(word_ids)
            ids.append(self._mlm_tok.eos_token_id)
            if len(ids) > self._mlm_limit:
                raise EngineInputError(
                    f"context of {len(ids)} pieces exceeds the masked LM "
                    f"limit {self._mlm_limit}")

            logits = self._mlm(
                input_ids=torch.tensor([ids], device=self.device)).logits[0]
            log_probs = torch.log_softmax(logits[mask_positions], dim=-1)
            beams = [((), 0.0)]
            for row, is_start in zip(log_probs, position_is_start):
                penalty = (self._start_penalty if is_start
                           else self._continuation_penalty)
                scored = row + penalty
                values, indices = scored.topk(min(k, scored.numel()))
                grown = [
                    (prefix + (piece_id,), score + value)
                    for prefix, score in beams
                    for value, piece_id in zip(values.tolist(), indices.tolist())
                    if value != float("-inf")
                ]
                grown.sort(key=lambda beam: -beam[1])
                beams = grown[:k]

            best = {}
            for prefix, score in beams:
                text = self._span_text(prefix, group_sizes)
                if text is None:
                    continue
                if text not in best or score > best[text]:
                    best[text] = score
            ranked = sorted(best.items(), key=lambda item: (-item[1], item[0]))
            return [(text, _finite(score)) for text, score in ranked[:k]]

    def _span_text(self, piece_ids, group_sizes):
        """Piece ids -> span text, one word per masked token; None when the
        pieces do not assemble into clean whole words."""
        words = []
        cursor = 0
        for size in group_sizes:
            group = list(piece_ids[cursor:cursor + size])
            cursor += size
            word = self._mlm_tok.convert_tokens_to_string(
                self._mlm_tok.convert_ids_to_tokens(group)).strip()
            if not word or "##" in word or any(ch.isspace() for ch in word):
                return None
            words.append(word)
        return " ".join(words)

    # -- startup checks ---------------------------------------------------

    def self_check(self, probe=("int", "total", "=", "base", "+", "1", ";")):
        """Absolute gap between generate's logit sum and score's re-scoring
        of the same output; a healthy server reports 0 up to float noise."""
        out_tokens, step_logits, _text = self.generate(list(probe))
        rescored = self.score(list(probe), out_tokens)
        return abs(sum(rescored) - sum(step_logits))
