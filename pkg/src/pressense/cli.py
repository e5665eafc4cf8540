"""Command line entry point: synth, train, evaluate, replay, serve.

Exit codes: 0 success, 2 invalid arguments, 3 unreadable/invalid data,
4 training diverged.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import RecordParseError, TrainingDivergedError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

SPLIT_NAMES = ("full_train", "weak_train", "full_test", "weak_test")


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser,
                       argv: list[str]) -> None:
    """Fill defaults from a JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config, "r", encoding="utf-8") as f:
            overrides = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file: {exc}")
    if not isinstance(overrides, dict):
        parser.error("config file must hold a JSON object")
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in explicit:
            setattr(args, attr, value)


def _cmd_synth(args, parser) -> int:
    from .synth import DatasetSplits, SplitPlan, SynthConfig, generate_dataset, write_records
    import os

    try:
        config = SynthConfig(width=args.width, height=args.height, seed=args.seed,
                             frame_rate=args.frame_rate,
                             prompts_per_session=args.prompts_per_session)
        plan = SplitPlan(full_train=tuple(args.full_train),
                         weak_train=tuple(args.weak_train),
                         full_test=tuple(args.full_test),
                         weak_test=tuple(args.weak_test))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    splits = generate_dataset(config, plan, sessions_per_participant=args.sessions)
    os.makedirs(args.out, exist_ok=True)
    for name in SPLIT_NAMES:
        path = os.path.join(args.out, f"{name}.jsonl")
        write_records(getattr(splits, name), path)
        print(f"wrote {len(getattr(splits, name))} records to {path}")
    return EXIT_OK


def _load_split_dir(data_dir: str):
    from .synth import DatasetSplits, read_records
    import os

    parts = {}
    for name in SPLIT_NAMES:
        path = os.path.join(data_dir, f"{name}.jsonl")
        parts[name] = read_records(path) if os.path.exists(path) else []
    return DatasetSplits(**parts)


def _cmd_train(args, parser) -> int:
    from .pressure import make_bin_spec
    from .tinynet import TrainConfig, save_checkpoint, train_toy

    try:
        dataset = _load_split_dir(args.data)
    except (OSError, RecordParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                      lambda1=args.lambda1, lambda2=args.lambda2,
                      enable_contact=not args.no_contact_loss,
                      enable_domain=not args.no_domain_loss,
                      seed=args.seed, hidden_channels=args.hidden_channels)
    try:
        result = train_toy(dataset, cfg)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    save_checkpoint(args.out, result.params, result.model_config,
                    make_bin_spec(cfg.n_bins, cfg.p_low, cfg.p_high))
    last = result.history[-1]
    print(f"saved checkpoint to {args.out}")
    print(f"final epoch {last.epoch}: total={last.total:.4f} "
          f"weak_contact_accuracy={last.weak_contact_accuracy:.3f} "
          f"full_volumetric_iou={last.full_volumetric_iou:.3f}")
    if args.history:
        with open(args.history, "w", encoding="utf-8") as f:
            json.dump([vars(m) if not hasattr(m, "__dataclass_fields__") else
                       {k: getattr(m, k) for k in m.__dataclass_fields__}
                       for m in result.history], f, sort_keys=True)
            f.write("\n")
    return EXIT_OK


def _cmd_evaluate(args, parser) -> int:
    from .metrics import report_to_dict
    from .service.replay import evaluate_records
    from .synth import read_records
    from .tinynet import load_checkpoint

    try:
        records = read_records(args.records)
        params = bins = None
        if args.checkpoint:
            _, params, bins = load_checkpoint(args.checkpoint)
        report = evaluate_records(records, params=params, bins=bins,
                                  threshold=args.threshold, iou_mode=args.iou_mode)
    except (OSError, RecordParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    payload = report_to_dict(report)
    text = json.dumps(payload, sort_keys=True, indent=1)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(json.dumps(payload, sort_keys=True))
            f.write("\n")
    print(text)
    return EXIT_OK


def _cmd_replay(args, parser) -> int:
    from .service.replay import ReplaySettings, replay_records
    from .synth import read_records
    from .tinynet import load_checkpoint

    try:
        settings = ReplaySettings(mode=args.mode, layout=args.layout or None,
                                  debounce_frames=args.debounce_frames,
                                  threshold=args.threshold, iou_mode=args.iou_mode,
                                  frame_rate=args.frame_rate, reference=args.reference)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        records = read_records(args.records)
        params = bins = None
        if args.checkpoint:
            _, params, bins = load_checkpoint(args.checkpoint)
        result = replay_records(records, settings, params=params, bins=bins)
    except (OSError, RecordParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    text = json.dumps(result.report, sort_keys=True, indent=1)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(json.dumps(result.report, sort_keys=True))
            f.write("\n")
    print(text)
    return EXIT_OK


def _cmd_serve(args, parser) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level=args.log_level)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pressense",
                                     description="fingertip pressure toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic record files")
    p.add_argument("--out", required=True, help="output directory for the four splits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--frame-rate", type=float, default=15.0)
    p.add_argument("--prompts-per-session", type=int, default=8)
    p.add_argument("--sessions", type=int, default=1, help="sessions per participant")
    p.add_argument("--full-train", type=int, nargs="*", default=[0, 1])
    p.add_argument("--weak-train", type=int, nargs="*", default=[2, 3])
    p.add_argument("--full-test", type=int, nargs="*", default=[4])
    p.add_argument("--weak-test", type=int, nargs="*", default=[5])
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the small model on generated splits")
    p.add_argument("--data", required=True, help="directory holding the split files")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--history", help="optional JSON file for per-epoch metrics")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lambda1", type=float, default=0.01)
    p.add_argument("--lambda2", type=float, default=0.001)
    p.add_argument("--hidden-channels", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-contact-loss", action="store_true")
    p.add_argument("--no-domain-loss", action="store_true")
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score records against a checkpoint or the zero guesser")
    p.add_argument("--records", required=True)
    p.add_argument("--checkpoint", help="model checkpoint; without it the zero guesser is scored")
    p.add_argument("--report", help="write the report JSON here")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--iou-mode", choices=("per_frame", "global"), default="per_frame")
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("replay", help="stream records through the touch event engine")
    p.add_argument("--records", required=True)
    p.add_argument("--checkpoint", help="replay model estimates instead of recorded pressure")
    p.add_argument("--report", help="write the report JSON here")
    p.add_argument("--mode", choices=("keyboard", "drawing", "raw-events"), default="raw-events")
    p.add_argument("--layout", default="qwerty")
    p.add_argument("--reference", help="reference sentence for typing scores")
    p.add_argument("--debounce-frames", type=int, default=2)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--frame-rate", type=float, default=15.0)
    p.add_argument("--iou-mode", choices=("per_frame", "global"), default="per_frame")
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="run the streaming service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log-level", default="info")
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0,) else EXIT_OK
    _apply_config_file(args, parser, argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
