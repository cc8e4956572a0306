"""Command-line entry points.

Subcommands: make-corpus, extract, train, evaluate, replay, serve,
analyze, simulate-feedback.  Every command takes --config (flat key =
value file) and --seed, and writes byte-identical artifacts for identical
seeds.  Exit codes: 0 success, 2 usage, 3 config, 4 data, 5 runtime fault.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from pianoduet import corpus as corpus_mod
from pianoduet import replacement as repl_mod
from pianoduet import synthetic
from pianoduet.config import ConfigError, SessionConfig, load_config
from pianoduet.harness import CONDITIONS, simulate_all_conditions
from pianoduet.model import TrainConfig, load_checkpoint, save_checkpoint, split_dataset, train
from pianoduet.model import samples_to_arrays
from pianoduet.session import run_replay
from pianoduet.smf import MidiParseError, parse_smf, write_smf
from pianoduet.sync_metrics import build_report

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_RUNTIME = 5


def _write_jsonl(path: Path, records):
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def _session_config(args) -> SessionConfig:
    cfg = load_config(args.config) if args.config else SessionConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_make_corpus(args) -> int:
    out = Path(args.out)
    truth = synthetic.make_corpus(
        out, num_songs=args.songs, bars_per_song=args.bars, seed=args.seed or 0
    )
    total = sum(len(v) for v in truth.values())
    print(f"wrote {len(truth)} songs ({total} planted bars) to {out}")
    return EXIT_OK


def cmd_extract(args) -> int:
    mir = corpus_mod.MirConfig()
    pairs = corpus_mod.extract_corpus(
        args.corpus, mir, progress=lambda p, n: print(f"{p.name}: {n} pairs")
    )
    corpus_mod.save_dataset(pairs, args.out, mir)
    print(f"extracted {len(pairs)} pairs -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    pairs = corpus_mod.load_dataset(args.dataset)
    samples = corpus_mod.as_samples(pairs)
    cfg = TrainConfig(seed=args.seed or 0, max_epochs=args.epochs, log_every=args.log_every)
    model, history = train(samples, cfg)
    save_checkpoint(model, args.out, config_hash="", seed=cfg.seed)
    print(
        f"trained on {len(samples)} pairs: best epoch {history.best_epoch} "
        f"of {history.epochs_run}, val accuracy {max(history.val_accuracy):.4f}"
    )
    print(f"checkpoint -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pairs = corpus_mod.load_dataset(args.dataset)
    samples = corpus_mod.as_samples(pairs)
    model = load_checkpoint(args.model)
    tokens, labels = samples_to_arrays(samples)
    cfg = TrainConfig(seed=model.seed if args.seed is None else args.seed)
    idx_train, idx_val, idx_test = split_dataset(tokens, labels, cfg)
    train_samples = [samples[i] for i in np.concatenate([idx_train, idx_val])]
    test_samples = [samples[i] for i in idx_test] or samples
    table = repl_mod.build_replacement_table(train_samples, strength=args.strength)
    report = repl_mod.evaluate(model, test_samples, table)
    print(repl_mod.format_confidence_table(table))
    print()
    print(report.format())
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _session_config(args)
    melody = parse_smf(Path(args.melody).read_bytes())
    model = load_checkpoint(args.model)
    result = run_replay(melody, model, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "duet.mid").write_bytes(write_smf(result.merged))
    _write_jsonl(out / "session.jsonl", result.log)
    (out / "trajectory.tsv").write_text(result.trajectory_text())
    human, robot = result.matched_beats()
    if len(human) >= 2:
        (out / "report.txt").write_text(build_report(human, robot).format() + "\n")
    print(
        f"replayed {len(result.melody)} melody notes over "
        f"{len(result.decisions)} accompanied bars; "
        f"{len(result.faults)} faults -> {out}"
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from pianoduet.server import create_app

    cfg = _session_config(args)
    cfg.mode = "live"
    model = load_checkpoint(args.model)
    app = create_app(model, cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return EXIT_OK


def cmd_analyze(args) -> int:
    records = []
    path = Path(args.log)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if line.strip():
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise corpus_mod.DatasetError(f"{path}:{lineno}: {exc}") from None
    t_bar = 60.0 * 4 / 90.0
    human: dict[int, float] = {}
    robot: dict[int, float] = {}
    for rec in records:
        if rec.get("type") == "hello":
            t_bar = rec.get("payload", {}).get("bar_seconds", t_bar)
        bar = int(rec.get("t", 0.0) / t_bar + 1e-9) + 1
        if rec.get("type") == "note_on":
            human.setdefault(bar, rec["t"])
        elif rec.get("type") == "strike":
            robot.setdefault(bar, rec["t"])
    bars = sorted(set(human) & set(robot))
    if len(bars) < 2:
        raise corpus_mod.DatasetError(f"{path}: fewer than two accompanied bars")
    report = build_report([human[b] for b in bars], [robot[b] for b in bars])
    print(report.format())
    if args.out:
        Path(args.out).write_text(report.format() + "\n")
    return EXIT_OK


def cmd_simulate_feedback(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sessions = simulate_all_conditions(seed=args.seed or 0, bars=args.bars)
    from pianoduet.sync_metrics import deviation_entropy, mae_sae

    lines = ["condition  MAE(s)   SAE(s)   entropy(bits)"]
    for condition in CONDITIONS:
        s = sessions[condition]
        mae, sae = mae_sae(s.human_beats, s.robot_beats)
        entropy = deviation_entropy(s.human_beats - s.robot_beats)
        lines.append(f"{condition:<9} {mae:7.4f} {sae:8.4f} {entropy:10.4f}")
        (out / f"{condition}.mid").write_bytes(write_smf(s.human_track))
        _write_jsonl(
            out / f"{condition}.beats.jsonl",
            (
                {
                    "type": "beat",
                    "t": round(float(h), 6),
                    "robot_t": round(float(r), 6),
                }
                for h, r in zip(s.human_beats, s.robot_beats)
            ),
        )
    summary = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pianoduet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("make-corpus", help="write a synthetic training corpus")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--songs", type=int, default=40)
    p.add_argument("--bars", type=int, default=16)
    p.set_defaults(fn=cmd_make_corpus)

    p = sub.add_parser("extract", help="chord-melody pairs from a .mid directory")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("train", help="fit the chord classifier on a dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="replacement table and accuracies")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--strength", type=float, default=0.25)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("replay", help="accompany a recorded melody")
    common(p)
    p.add_argument("--melody", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("serve", help="run the live websocket session")
    common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("analyze", help="cooperation metrics from a session log")
    common(p)
    p.add_argument("--log", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate-feedback", help="four-condition interaction harness")
    common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bars", type=int, default=32)
    p.set_defaults(fn=cmd_simulate_feedback)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (corpus_mod.DatasetError, MidiParseError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeError as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
