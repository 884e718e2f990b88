"""HTTP front end implementing the oracle wire protocol.

The app parses request bodies by hand instead of using framework request
models, so malformed payloads produce the protocol's 400 rather than a
framework-specific 422. Model loading happens before the first request is
accepted; until an engine is attached every route answers 503, and a failed
startup self-check refuses to serve at all.
"""

import contextlib
import threading
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .engine import EngineInputError, InferenceEngine
from .protocol import (
    PROTO_VERSION,
    ProtocolError,
    parse_generate_request,
    parse_mask_request,
    parse_score_request,
)

# generate and score share one forced-decode code path, so their logit sums
# agree to float noise; anything larger means a broken checkpoint.
SELF_CHECK_TOLERANCE = 1e-3


class ServerBootError(RuntimeError):
    """The checkpoints could not be loaded or failed the startup check."""


def boot_engine(config):
    """Load both checkpoints and verify the generate/score identity before
    any request is accepted."""
    try:
        engine = InferenceEngine(
            config.victim_checkpoint,
            config.masked_lm_checkpoint,
            device=config.device,
            max_length=config.max_length,
        )
    except (OSError, ValueError) as exc:
        raise ServerBootError(f"cannot load checkpoints: {exc}") from exc
    gap = engine.self_check()
    if gap > SELF_CHECK_TOLERANCE:
        raise ServerBootError(
            f"generate/score self-check gap {gap:.3g} exceeds "
            f"{SELF_CHECK_TOLERANCE}")
    return engine


def _bad_request(message):
    return JSONResponse({"proto": PROTO_VERSION, "error": message},
                        status_code=400)


def _loading():
    return JSONResponse({"proto": PROTO_VERSION, "status": "loading"},
                        status_code=503)


def create_app(config, engine=None, eager=True):
    """Build the FastAPI app. With `eager` the checkpoints load now and a
    boot failure raises instead of binding; pass `eager=False` to attach an
    engine later via ``app.state.engine``."""
    config.validate()
    app = FastAPI(title="modelserver", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.engine = engine
    if engine is None and eager:
        app.state.engine = boot_engine(config)

    @app.get("/health")
    def health():
        if app.state.engine is None:
            return _loading()
        return {"proto": PROTO_VERSION, "status": "ok"}

    async def _payload(request):
        try:
            return await request.json()
        except Exception as exc:
            raise ProtocolError(f"body is not valid JSON: {exc}") from exc

    @app.post("/generate")
    async def generate(request: Request):
        if app.state.engine is None:
            return _loading()
        try:
            tokens = parse_generate_request(await _payload(request))
            out_tokens, step_logits, text = await run_in_threadpool(
                app.state.engine.generate, tokens)
        except (ProtocolError, EngineInputError) as exc:
            return _bad_request(str(exc))
        return {"proto": PROTO_VERSION, "tokens": out_tokens,
                "step_logits": step_logits, "text": text}

    @app.post("/score")
    async def score(request: Request):
        if app.state.engine is None:
            return _loading()
        try:
            tokens, target = parse_score_request(await _payload(request))
            target_logits = await run_in_threadpool(
                app.state.engine.score, tokens, target)
        except (ProtocolError, EngineInputError) as exc:
            return _bad_request(str(exc))
        return {"proto": PROTO_VERSION, "target_logits": target_logits}

    @app.post("/mask_predict")
    async def mask_predict(request: Request):
        if app.state.engine is None:
            return _loading()
        try:
            tokens, start, end, k = parse_mask_request(await _payload(request))
            candidates = await run_in_threadpool(
                app.state.engine.mask_predict, tokens, start, end, k)
        except (ProtocolError, EngineInputError) as exc:
            return _bad_request(str(exc))
        return {"proto": PROTO_VERSION,
                "candidates": [[text, score] for text, score in candidates]}

    return app


@contextlib.contextmanager
def serve_in_thread(config, engine=None):
    """Run the app in a background uvicorn thread; yields the base URL.

    Used by tests and batch drivers. `config.port` of 0 picks a free port.
    """
    import uvicorn

    app = create_app(config, engine=engine)
    server = uvicorn.Server(uvicorn.Config(
        app, host=config.host, port=config.port, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 30
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise ServerBootError("server did not start")
        time.sleep(0.02)
    try:
        port = server.servers[0].sockets[0].getsockname()[1]
        yield f"http://{config.host}:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)
