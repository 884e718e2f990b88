"""Serve masked-LM and seq2seq checkpoints behind the oracle wire protocol.

The package hosts two local model checkpoints — a sequence-to-sequence
victim and a masked language model — behind the JSON/HTTP protocol the
attack toolkit queries: ``/generate`` (greedy decode with per-step logits),
``/score`` (forced decoding of a fixed target), ``/mask_predict`` (top-k
fills for a masked token span), and ``/health``.
"""

from .app import ServerBootError, create_app, serve_in_thread
from .config import ServerConfig, load_config
from .engine import EngineInputError, InferenceEngine

__version__ = "0.1.0"

__all__ = [
    "EngineInputError",
    "InferenceEngine",
    "ServerBootError",
    "ServerConfig",
    "create_app",
    "load_config",
    "serve_in_thread",
    "__version__",
]
