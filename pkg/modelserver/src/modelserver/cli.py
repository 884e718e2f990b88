"""Command-line entry points.

`modelserver serve` hosts a checkpoint pair behind the wire protocol;
`modelserver make-checkpoints` builds the tiny offline pair used by tests
and demos. Flags override config-file values.
"""

import argparse
import sys

from .app import create_app
from .checkpoints import build_pair
from .config import load_config


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="modelserver",
        description="Serve masked-LM and seq2seq checkpoints behind the "
                    "oracle wire protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="load checkpoints and serve them")
    serve.add_argument("--config", help="JSON config file")
    serve.add_argument("--victim", dest="victim_checkpoint",
                       help="victim seq2seq checkpoint directory")
    serve.add_argument("--masked-lm", dest="masked_lm_checkpoint",
                       help="masked-LM checkpoint directory")
    serve.add_argument("--device", help="cpu (default) or cuda[:N]")
    serve.add_argument("--max-length", type=int, dest="max_length",
                       help="input/output length cap in model pieces")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)

    make = sub.add_parser("make-checkpoints",
                          help="build the tiny offline checkpoint pair")
    make.add_argument("--out", required=True, help="output directory")
    make.add_argument("--seed", type=int, default=0)

    trained = sub.add_parser(
        "make-trained",
        help="build and train the pair on a synthetic summarization task")
    trained.add_argument("--out", required=True, help="output directory")
    trained.add_argument("--seed", type=int, default=0)
    trained.add_argument("--victim-steps", type=int, default=900,
                         dest="victim_steps")
    trained.add_argument("--mlm-steps", type=int, default=250,
                         dest="mlm_steps")

    direction = sub.add_parser(
        "directional",
        help="serve a checkpoint pair and measure attack drop direction")
    direction.add_argument("--victim", dest="victim_checkpoint", required=True)
    direction.add_argument("--masked-lm", dest="masked_lm_checkpoint",
                           required=True)
    direction.add_argument("--corpus", required=True,
                           help="attack corpus (JSON lines)")
    direction.add_argument("--out", required=True, help="output directory")
    direction.add_argument("--task", default="summarize",
                           choices=["translate", "repair", "summarize"])
    direction.add_argument("--lang", default="java")
    direction.add_argument("--max-samples", type=int, default=20,
                           dest="max_samples")
    direction.add_argument("--device", default="cpu")
    direction.add_argument("--max-length", type=int, default=128,
                           dest="max_length")
    return parser


def _cmd_serve(args):
    import uvicorn

    config = load_config(
        args.config,
        victim_checkpoint=args.victim_checkpoint,
        masked_lm_checkpoint=args.masked_lm_checkpoint,
        device=args.device,
        max_length=args.max_length,
        host=args.host,
        port=args.port,
    )
    app = create_app(config)
    print(f"serving {config.victim_checkpoint} + "
          f"{config.masked_lm_checkpoint} on "
          f"http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _cmd_make_checkpoints(args):
    victim_dir, masked_dir = build_pair(args.out, seed=args.seed)
    print(f"victim checkpoint:    {victim_dir}")
    print(f"masked-LM checkpoint: {masked_dir}")
    return 0


def _cmd_make_trained(args):
    from .train_demo import build_trained_pair

    report = build_trained_pair(args.out, seed=args.seed,
                                victim_steps=args.victim_steps,
                                mlm_steps=args.mlm_steps)
    print(f"victim checkpoint:    {report['victim_dir']} "
          f"(final loss {report['victim_loss']:.4f})")
    print(f"masked-LM checkpoint: {report['masked_lm_dir']} "
          f"(final loss {report['mlm_loss']:.4f})")
    print(f"attack corpus:        {report['corpus']}")
    print(f"exact-match fitness:  {report['exact_match']:.0%}")
    return 0


def _cmd_directional(args):
    from .config import ServerConfig
    from .directional import run_directional

    config = ServerConfig(
        victim_checkpoint=args.victim_checkpoint,
        masked_lm_checkpoint=args.masked_lm_checkpoint,
        device=args.device,
        max_length=args.max_length,
        port=0,
    )
    report = run_directional(config, args.corpus, args.out,
                             task=args.task, lang=args.lang,
                             max_samples=args.max_samples)
    print(f"samples:        {report['samples']}")
    print(f"positive drop:  {report['positive_drop']} "
          f"({report['fraction_positive']:.0%})")
    print(f"results:        {report['results_path']}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "directional":
            return _cmd_directional(args)
        if args.command == "make-trained":
            return _cmd_make_trained(args)
        return _cmd_make_checkpoints(args)
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
