"""Command-line entry point: ``cfn generate|train|evaluate|report|benchmark``."""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import data as dp
from .composition import describe
from .errors import CFNError, ShapeError
from .nodes import SinusoidalNode
from .pipeline import evaluate, run, summarize
from .presets import PRESETS, get_preset
from .serialization import dumps, load

GENERATORS = ("shm", "spiral", "concentric")


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _artifact_base(out):
    out = Path(out)
    return out.with_suffix("") if out.suffix == ".json" else out


def write_history(result, path):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "lr"])
        for r in result.history:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.lr)])
    os.replace(tmp, path)


def sinusoid_expression(net):
    """Closed form for single-sinusoid models, or None for anything else."""
    nodes = net.nodes()
    if len(nodes) != 1 or not isinstance(nodes[0], SinusoidalNode) or net.input_dim != 1:
        return None
    A, w, phi = nodes[0].canonical()
    return A, w, phi


def _sinusoid_lines(net):
    found = sinusoid_expression(net)
    if found is None:
        return []
    A, w, phi = found
    return [f"Amplitude (A): {A:.4f}", f"Frequency (omega): {w:.4f}", f"Phase (phi): {phi:.4f}",
            f"x(t) = {A:.4f}*sin({w:.4f}*t + {phi:.4f})"]


def _print_metrics(metrics, fmt, extra_lines=()):
    if fmt == "structured":
        sys.stdout.write(_dump(metrics))
        return
    for key, value in metrics["metrics"].items():
        print(f"{key}: {value:.6f}")
    for line in extra_lines:
        print(line)


# ---------------------------------------------------------------- commands


def cmd_generate(args):
    if args.kind == "shm":
        ds = dp.gen_shm(args.n, noise_sd=args.noise if args.noise is not None else 0.1, seed=args.seed)
    elif args.kind == "spiral":
        ds = dp.gen_spiral(args.n, classes=args.classes,
                           noise_sd=args.noise if args.noise is not None else 0.2, seed=args.seed)
    else:
        ds = dp.gen_concentric(args.n, seed=args.seed)
    dp.write_csv(ds, args.out)
    print(f"wrote {len(ds)} rows to {args.out}")
    return 0


def cmd_train(args):
    ds = dp.load_csv(args.data, args.target, args.task)
    out = run(ds, args.preset, seed=args.seed, split_seed=args.split_seed,
              epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch_size, patience=args.patience)
    base = _artifact_base(args.out)
    metadata = {"preset": args.preset, "task": args.task, "target": args.target,
                "feature_names": ds.feature_names, "classes": ds.classes, "seed": args.seed,
                "split_seed": args.split_seed, "train_config": out.config.to_dict()}
    metrics = {
        "preset": args.preset, "task": args.task, "seed": args.seed, "split_seed": args.split_seed,
        "n_train": len(out.train_set), "n_test": len(out.test_set),
        "best_epoch": out.result.best_epoch, "stopped_epoch": out.result.stopped_epoch,
        "metrics": out.metrics,
    }
    model_text = dumps(out.net, out.scaler, metadata)
    dp.write_csv(out.test_set, f"{base}.test.csv")
    write_history(out.result, f"{base}.history.csv")
    _atomic_write(f"{base}.metrics.json", _dump(metrics))
    _atomic_write(args.out, model_text)
    _print_metrics(metrics, args.format, _sinusoid_lines(out.net))
    return 0


def cmd_evaluate(args):
    net, scaler, meta = load(args.model)
    task = args.task or meta.get("task")
    target = args.target or meta.get("target")
    if task is None or target is None:
        raise CFNError("--task and --target are required for models without stored metadata")
    ds = dp.load_csv(args.data, target, task)
    if ds.X.shape[1] != net.input_dim:
        raise ShapeError(f"model expects {net.input_dim} features, {args.data} has {ds.X.shape[1]}")
    if ds.y.shape[1] != net.output_dim:
        raise ShapeError(f"model produces {net.output_dim} outputs, {args.data} targets have {ds.y.shape[1]}")
    metrics = {"task": task, "n": len(ds), "metrics": evaluate(net, ds, scaler)}
    _print_metrics(metrics, args.format)
    return 0


def cmd_report(args):
    net, scaler, meta = load(args.model)
    if args.format == "structured":
        doc = describe(net, "structured")
        found = sinusoid_expression(net)
        if found is not None:
            doc["expression"] = {"amplitude": found[0], "frequency": found[1], "phase": found[2]}
        sys.stdout.write(_dump(doc))
        return 0
    if meta.get("preset"):
        print(f"Preset: {meta['preset']}")
    print(describe(net, "text"))
    for line in _sinusoid_lines(net):
        print(line)
    return 0


def cmd_benchmark(args):
    ds = dp.load_csv(args.data, args.target, args.task)
    get_preset(args.preset)
    runs, failed = [], False
    for seed in range(args.seed, args.seed + args.seeds):
        try:
            out = run(ds, args.preset, seed=seed, split_seed=args.split_seed, epochs=args.epochs,
                      learning_rate=args.lr, batch_size=args.batch_size, patience=args.patience)
        except CFNError as exc:
            failed = True
            runs.append({"seed": seed, "status": "failed", "error": str(exc)})
            continue
        runs.append({"seed": seed, "status": "ok", "metrics": out.metrics, "seconds": out.seconds,
                     "best_epoch": out.result.best_epoch, "stopped_epoch": out.result.stopped_epoch})
    ok = [r for r in runs if r["status"] == "ok"]
    summary = {}
    if ok:
        for key in ok[0]["metrics"]:
            summary[key] = summarize([r["metrics"][key] for r in ok])
        summary["seconds"] = summarize([r["seconds"] for r in ok])
    report = {"dataset": str(args.data), "task": args.task, "preset": args.preset,
              "split_seed": args.split_seed, "seeds": args.seeds, "n_ok": len(ok),
              "sd_defined": len(ok) > 1, "runs": runs, "summary": summary}
    if args.out:
        _atomic_write(args.out, _dump(report))
    if args.format == "structured":
        sys.stdout.write(_dump(report))
    else:
        for r in runs:
            if r["status"] == "ok":
                vals = ", ".join(f"{k}={v:.4f}" for k, v in r["metrics"].items())
                print(f"seed {r['seed']}: {vals} ({r['seconds']:.3f}s)")
            else:
                print(f"seed {r['seed']}: FAILED {r['error']}")
        note = "" if len(ok) > 1 else " (single run: sd reported as 0)"
        for key, s in summary.items():
            print(f"{key}: {s['mean']:.4f} (+/-{s['sd']:.4f}){note}")
    return 1 if failed else 0


# ---------------------------------------------------------------- parser


def _train_flags(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", required=True, help="name of the target column")
    p.add_argument("--task", required=True, choices=dp.TASKS)
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=0, help="initialization / shuffling seed")
    p.add_argument("--split-seed", type=int, default=42)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, help="0 means full batch")
    p.add_argument("--patience", type=int)
    p.add_argument("--format", choices=("text", "structured"), default="text")


def build_parser():
    parser = argparse.ArgumentParser(prog="cfn", description="Compositional function networks")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("kind", choices=GENERATORS)
    g.add_argument("--n", type=int, default=500, help="rows (shm, concentric) or rows per class (spiral)")
    g.add_argument("--noise", type=float, help="noise sd (shm: on x, spiral: on angle)")
    g.add_argument("--classes", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="split, train a preset network, save it with its history and metrics")
    _train_flags(t)
    t.add_argument("--out", required=True, help="model file path (siblings get .history.csv etc.)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a saved model on a CSV file")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--target")
    e.add_argument("--task", choices=dp.TASKS)
    e.add_argument("--format", choices=("text", "structured"), default="text")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="interpretability report of a saved model")
    r.add_argument("--model", required=True)
    r.add_argument("--format", choices=("text", "structured"), default="text")
    r.set_defaults(func=cmd_report)

    b = sub.add_parser("benchmark", help="repeat training over several seeds and aggregate")
    _train_flags(b)
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--out", help="write the benchmark report (JSON) here")
    b.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seeds", 1) < 1:
        parser.error("--seeds must be >= 1")
    try:
        return args.func(args)
    except (CFNError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
