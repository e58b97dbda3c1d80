"""Command-line interface: server, capture, dataset, train, eval."""

import argparse
import asyncio
import logging
import os
import sys

from . import __version__


def _parse_bind(value):
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"bind must be <addr:port>, got {value!r}")
    return host, int(port)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="signcast",
        description="Real-time sign-language caption pipeline",
    )
    parser.add_argument("--version", action="version", version=f"signcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("server", help="run the caption broadcast server")
    p.add_argument("--bind", default="127.0.0.1:8765", metavar="ADDR:PORT",
                   help="listen address (env SIGNCAST_BIND overrides)")
    p.add_argument("--max-room", type=int, default=64,
                   help="maximum members per room")
    p.add_argument("--heartbeat-secs", type=float, default=15.0)
    p.add_argument("--timeout-secs", type=float, default=45.0)
    p.add_argument("--log-level", default="info")

    p = sub.add_parser("capture", help="run the capture client on a frame source")
    p.add_argument("--source", required=True, help="directory of frame_NN.ppm files")
    p.add_argument("--model", required=True, help="trained model (.slw + .slw.json)")
    p.add_argument("--server", default="ws://127.0.0.1:8765/ws")
    p.add_argument("--room", default="captions")
    p.add_argument("--name", default="signer")
    p.add_argument("--stride", type=int, default=6)
    p.add_argument("--min-confidence", type=float, default=0.6)
    p.add_argument("--repeat-gap", type=int, default=3)
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--transcript", default=None, metavar="OUT-FILE")
    p.add_argument("--log-level", default="info")

    p = sub.add_parser("dataset", help="generate a synthetic dataset on disk")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--clips-per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--image-size", type=int, default=96)

    p = sub.add_parser("train", help="train the classifier on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output model path (.slw)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--image-size", type=int, default=96)
    p.add_argument("--hidden-units", type=int, default=1000)
    p.add_argument("--dropout", type=float, default=0.75)
    p.add_argument("--width-multiplier", type=float, default=0.25)
    p.add_argument("--stop-train-acc", type=float, default=None)
    p.add_argument("--stop-val-acc", type=float, default=None)
    p.add_argument("--freeze-backbone", action="store_true")

    p = sub.add_parser("eval", help="evaluate a trained model on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)

    return parser


def _setup_logging(level):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def resolve_bind(flag_value, env=None):
    """SIGNCAST_BIND beats --bind when set."""
    env = os.environ if env is None else env
    return _parse_bind(env.get("SIGNCAST_BIND") or flag_value)


def cmd_server(args):
    from .server import ServerConfig, run_server

    _setup_logging(args.log_level)
    host, port = resolve_bind(args.bind)
    config = ServerConfig(host=host, port=port,
                          max_room_members=args.max_room,
                          heartbeat_interval=args.heartbeat_secs,
                          timeout=args.timeout_secs)
    try:
        asyncio.run(run_server(config))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_capture(args):
    from .capture import CaptureConfig, ConnectionFailedError, run_capture_loop
    from .video import VideoError

    _setup_logging(args.log_level)
    config = CaptureConfig(
        source=args.source,
        model_path=args.model,
        server_url=args.server,
        room=args.room,
        name=args.name,
        stride=args.stride,
        min_confidence=args.min_confidence,
        repeat_gap=args.repeat_gap,
        fps=args.fps,
        transcript_path=args.transcript,
    )
    try:
        report = asyncio.run(run_capture_loop(config))
    except ConnectionFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, VideoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"windows evaluated: {len(report.windows)}")
    print(f"captions published: {len(report.emissions)}")
    if report.dropped_events:
        print(f"events dropped on overflow: {report.dropped_events}")
    for e in report.emissions:
        print(f"  {e.seq}\t{e.word}\t{e.confidence:.3f}")
    return 0


def cmd_dataset(args):
    from .synthetic import generate_synthetic_dataset, save_dataset

    ds = generate_synthetic_dataset(args.classes, args.clips_per_class,
                                    seed=args.seed, image_size=args.image_size)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} clips ({args.classes} classes) to {args.out}")
    return 0


def cmd_train(args):
    from .classifier import ModelConfig, build_model, save_sign_model, train
    from .synthetic import load_dataset, split_dataset

    ds = load_dataset(args.data)
    train_set, val_set = split_dataset(ds, val_fraction=args.val_fraction,
                                       seed=args.seed)
    config = ModelConfig(
        height=args.image_size, width=args.image_size,
        num_classes=len(ds.vocabulary),
        hidden_units=args.hidden_units,
        dropout_rate=args.dropout,
        width_multiplier=args.width_multiplier,
        seed=args.seed,
        freeze_backbone=args.freeze_backbone,
    )
    model = build_model(config, vocabulary=ds.vocabulary)
    report = train(model, train_set, val_set, epochs=args.epochs,
                   learning_rate=args.lr, batch_size=args.batch_size,
                   seed=args.seed, stop_train_accuracy=args.stop_train_acc,
                   stop_val_accuracy=args.stop_val_acc, log=print)
    save_sign_model(model, args.out)
    print(f"saved model to {args.out} "
          f"(train {report.final_train_accuracy:.3f}, "
          f"val {report.final_val_accuracy:.3f}, "
          f"{report.wall_time_s:.0f}s)")
    return 0


def cmd_eval(args):
    from .classifier import evaluate, load_sign_model
    from .synthetic import load_dataset

    model = load_sign_model(args.model)
    ds = load_dataset(args.data)
    result = evaluate(model, ds)
    print(f"accuracy: {result.accuracy:.4f} on {len(ds)} clips")
    for idx, acc in enumerate(result.per_class_accuracy):
        word = ds.vocabulary[idx] if idx < len(ds.vocabulary) else "?"
        print(f"  class {idx:3d} {word:12s} {acc:.3f}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {
        "server": cmd_server,
        "capture": cmd_capture,
        "dataset": cmd_dataset,
        "train": cmd_train,
        "eval": cmd_eval,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
