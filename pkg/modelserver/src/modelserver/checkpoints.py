"""Build tiny local checkpoints for offline serving and tests.

Deployments without access to a public checkpoint hub still need something
to serve, so this module assembles a pair of small randomly initialized
models on the spot:

* a word-level encoder-decoder victim (one vocabulary entry per whitespace
  token, so wire tokens and model pieces coincide), and
* a word-piece masked LM whose vocabulary is deliberately small, so long
  identifiers split into several sub-words and the span-alignment path in
  the serving engine gets exercised for real.

Builds are seeded: the same seed always writes bit-identical weights. The
output directories are standard ``save_pretrained`` layouts, interchangeable
with any real checkpoint that follows the same conventions.
"""

import pathlib

import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, processors, trainers
from transformers import (
    BartConfig,
    BartForConditionalGeneration,
    PreTrainedTokenizerFast,
    RobertaConfig,
    RobertaForMaskedLM,
)
from transformers.utils import logging as _hf_logging

_hf_logging.disable_progress_bar()

SPECIAL_TOKENS = ["<s>", "<pad>", "</s>", "<unk>", "<mask>"]

# Vocabulary-building text: java-flavoured statements plus the natural
# language that summaries are made of. Word-level training keeps every
# distinct whitespace token; word-piece training fragments the longer ones.
_LINES = [
    "public static int total = base + count ;",
    "private final long limit = threshold * factor ;",
    "if ( value > limit ) { return cached ; } else { return fresh ; }",
    "for ( int index = 0 ; index < length ; index ++ ) { buffer += item ; }",
    "while ( reader hasNext ( ) ) { items add ( reader next ( ) ) ; }",
    "try { stream close ( ) ; } catch ( Exception error ) { throw error ; }",
    "String name = builder toString ( ) ;",
    "boolean done = first == second && ! empty ;",
    "int scanBuffer ( int first , int second ) { return first - second ; }",
    "void appendItem ( Object item ) { targetList add ( item ) ; }",
    "new HashMap < String , Integer > ( ) ;",
    "result = destination copyFrom ( source , offset , size ) ;",
    "switch ( mode ) { case 0 : break ; default : continue ; }",
    "double ratio = sum / Math max ( 1 , count ) ;",
    "char marker = text charAt ( position ) ;",
    "adds the given numbers and returns the sum",
    "copies each element from the source into the destination buffer",
    "returns true when the collection is empty otherwise false",
    "scans the buffer and counts matching entries",
    "appends the item to the end of the target list",
    "translated snippet summary done expected output tokens here",
    "0 1 2 3 7 10 42 100 1000",
]


def _word_level_tokenizer(lines):
    tokenizer = Tokenizer(models.WordLevel(unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.WordLevelTrainer(special_tokens=SPECIAL_TOKENS)
    tokenizer.train_from_iterator(lines, trainer)
    return tokenizer


def _word_piece_tokenizer(lines, vocab_size):
    tokenizer = Tokenizer(models.WordPiece(unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    tokenizer.decoder = decoders.WordPiece(prefix="##")
    trainer = trainers.WordPieceTrainer(
        vocab_size=vocab_size,
        special_tokens=SPECIAL_TOKENS,
        continuing_subword_prefix="##",
    )
    tokenizer.train_from_iterator(lines, trainer)
    return tokenizer


def _wrap(tokenizer):
    """Attach the sentence template and special-token roles, giving the raw
    tokenizer the same calling conventions as a published checkpoint."""
    bos = tokenizer.token_to_id("<s>")
    eos = tokenizer.token_to_id("</s>")
    tokenizer.post_processor = processors.TemplateProcessing(
        single="<s> $A </s>",
        pair="<s> $A </s> $B </s>",
        special_tokens=[("<s>", bos), ("</s>", eos)],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        bos_token="<s>",
        eos_token="</s>",
        unk_token="<unk>",
        pad_token="<pad>",
        mask_token="<mask>",
    )


def build_victim(directory, seed=0, lines=None):
    """Write a word-level seq2seq checkpoint into `directory`.

    `lines` overrides the vocabulary-building text, for callers that train
    the model on their own corpus afterwards.
    """
    directory = pathlib.Path(directory)
    tokenizer = _wrap(_word_level_tokenizer(lines or _LINES))
    config = BartConfig(
        vocab_size=len(tokenizer),
        d_model=64,
        encoder_layers=2,
        decoder_layers=2,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=128,
        decoder_ffn_dim=128,
        max_position_embeddings=512,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.bos_token_id,
        forced_eos_token_id=None,
    )
    torch.manual_seed(seed)
    model = BartForConditionalGeneration(config)
    tokenizer.save_pretrained(directory)
    model.save_pretrained(directory)
    return directory


def build_masked_lm(directory, seed=0, vocab_size=150, lines=None):
    """Write a word-piece masked-LM checkpoint into `directory`."""
    directory = pathlib.Path(directory)
    tokenizer = _wrap(_word_piece_tokenizer(lines or _LINES, vocab_size))
    config = RobertaConfig(
        vocab_size=len(tokenizer),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=128,
        max_position_embeddings=520,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    torch.manual_seed(seed + 1)
    model = RobertaForMaskedLM(config)
    tokenizer.save_pretrained(directory)
    model.save_pretrained(directory)
    return directory


def build_pair(root, seed=0):
    """Build victim + masked-LM checkpoints under `root`; returns the two
    directories as (victim_dir, masked_lm_dir)."""
    root = pathlib.Path(root)
    victim_dir = build_victim(root / "victim", seed=seed)
    masked_dir = build_masked_lm(root / "masked_lm", seed=seed)
    return victim_dir, masked_dir
