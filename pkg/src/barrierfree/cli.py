"""Command line entry point.

    barrierfree kernels selfcheck [--cases N]
    barrierfree sim run --config PATH --seed INT --out DIR [--ablate-n 1..5]
    barrierfree sim ablate-n --config PATH --seed INT --out DIR --n-values 1..5
    barrierfree controller replay --events PATH --config PATH [--out DIR]
    barrierfree dataset stats|split|eval-ap ...

Every command that writes files adds ``manifest.json`` next to them. The output
directory defaults to ``$BARRIERFREE_OUT`` or ``./barrierfree-out``.
"""
import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import numba, numba_enabled
from .controller import controller_config_from_dict, frames_from_lines, replay
from .dataset import (
    EvalResult,
    LabelError,
    class_distribution,
    evaluate_ap,
    ground_truth_boxes,
    parse_annotations,
    parse_predictions,
    split_dataset,
)
from .detection import CLASS_NAMES, RESTRICTED_GROUPS
from .errors import ConfigError, OrderingError
from .kernels import selfcheck
from .sim import ablate_n, dumps_frames, run_scenario, scenario_from_dict, scenario_to_dict

log = logging.getLogger("barrierfree")

OUT_ENV = "BARRIERFREE_OUT"
METRIC_COLUMNS = ("N", "success_rate", "latency_s", "real_success_rate",
                  "avg_ext_walking", "avg_ext_visual", "avg_ext_burden")

# Published field-study values for the validation-window ablation, kept
# alongside simulated tables for comparison only.
REFERENCE_TABLE = (
    (1, 13.4, 0.8, 32.3, 1.6, 2.2, 0.8),
    (2, 77.2, 1.2, 95.4, 2.9, 3.9, 1.3),
    (3, 92.7, 1.6, 96.6, 3.1, 4.2, 1.6),
    (4, 94.6, 1.9, 96.9, 3.3, 4.3, 1.7),
    (5, 94.8, 2.3, 97.0, 3.5, 4.5, 1.9),
)


class UsageError(Exception):
    pass


# -- helpers ----------------------------------------------------------------------

def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def write_manifest(out_dir, command, config, seeds, outputs):
    manifest = {
        "command": command,
        "config_digest": config_digest(config),
        "seeds": list(seeds),
        "versions": {
            "barrierfree": __version__,
            "numpy": np.__version__,
            "numba": None if numba is None else numba.__version__,
        },
        "outputs": sorted(str(p) for p in outputs),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def out_dir_from(args):
    out = Path(args.out or os.environ.get(OUT_ENV) or "barrierfree-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{what} not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path} is not valid JSON: {exc}") from None


def parse_int_range(text):
    """``"1..5"`` or ``"1,2,4"`` -> list of ints."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return values


def parse_image_size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"image size must look like 640x512, got {text!r}") from None


def _fmt(v):
    return f"{v:.6f}"


def metrics_row(n, m):
    ext = m.avg_extended_green_s
    return [str(n), _fmt(m.success_rate), _fmt(m.latency_s), _fmt(m.real_success_rate),
            *(_fmt(ext[g]) for g in RESTRICTED_GROUPS)]


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


# -- commands -----------------------------------------------------------------------

def cmd_kernels_selfcheck(args):
    results = selfcheck.run_selfcheck(cases=args.cases, seed=args.seed)
    lines = [r.line() for r in results]
    for ln in lines:
        print(ln)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    if args.out or os.environ.get(OUT_ENV):
        out = out_dir_from(args)
        (out / "selfcheck.txt").write_text("\n".join(lines) + "\n")
        write_manifest(out, "kernels selfcheck", {"cases": args.cases}, [args.seed], ["selfcheck.txt"])
    if failed:
        print("failing: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _scenario(args):
    doc = load_json(args.config, "scenario config")
    cfg = scenario_from_dict(doc)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    return cfg


def _controller_doc(cfg):
    ctl = cfg.controller_config()
    return {
        "base_green_s": ctl.base_green_s,
        "validation_frames": None if ctl.validation_frames == float("inf") else ctl.validation_frames,
        "confidence_threshold": ctl.confidence_threshold,
        "frame_interval_ms": ctl.frame_interval_ms,
        "zones": {str(cam): [list(v) for v in z.vertices] for cam, z in ctl.zones.items()},
    }


def _write_ablation(out, cfg, n_values, n_seeds, command):
    seeds = list(range(cfg.rng_seed, cfg.rng_seed + n_seeds))
    table = ablate_n(cfg, n_values, seeds)
    write_csv(out / "metrics.csv", METRIC_COLUMNS, [metrics_row(n, m) for n, m in table.items()])
    write_csv(out / "reference.csv", METRIC_COLUMNS,
              [[str(r[0]), *(f"{v:.1f}" for v in r[1:])] for r in REFERENCE_TABLE if r[0] in n_values])
    write_manifest(out, command, scenario_to_dict(cfg) | {"n_values": n_values}, seeds,
                   ["metrics.csv", "reference.csv"])
    for n, m in table.items():
        print("N=%d success=%.1f%% latency=%.2fs real_success=%.1f%%"
              % (n, m.success_rate, m.latency_s, m.real_success_rate))


def cmd_sim_run(args):
    cfg = _scenario(args)
    out = out_dir_from(args)
    if args.ablate_n:
        _write_ablation(out, cfg, args.ablate_n, args.seeds, "sim run")
        return 0
    metrics, event_log = run_scenario(cfg)
    n = cfg.validation_frames
    write_csv(out / "metrics.csv", METRIC_COLUMNS, [metrics_row(n, metrics)])
    outputs = ["metrics.csv", "controller.json"]
    (out / "controller.json").write_text(json.dumps(_controller_doc(cfg), sort_keys=True, indent=2) + "\n")
    for sub in ("events", "commands"):
        (out / sub).mkdir(exist_ok=True)
    for i, entry in enumerate(event_log):
        ev = f"events/event_{i:04d}.jsonl"
        cm = f"commands/event_{i:04d}.jsonl"
        (out / ev).write_text(dumps_frames(entry["frames"]))
        (out / cm).write_text("".join(json.dumps(c) + "\n" for c in entry["commands"]))
        outputs += [ev, cm]
    write_manifest(out, "sim run", scenario_to_dict(cfg), [cfg.rng_seed], outputs)
    print("success=%.1f%% latency=%.2fs real_success=%.1f%% events=%d"
          % (metrics.success_rate, metrics.latency_s, metrics.real_success_rate, metrics.n_events))
    return 0


def cmd_sim_ablate(args):
    cfg = _scenario(args)
    _write_ablation(out_dir_from(args), cfg, args.n_values, args.seeds, "sim ablate-n")
    return 0


def cmd_controller_replay(args):
    doc = load_json(args.config, "controller config")
    green_start = doc.get("green_start_s", 0)
    cfg = controller_config_from_dict(doc)
    try:
        lines = Path(args.events).read_text().splitlines()
    except FileNotFoundError:
        raise UsageError(f"events file not found: {args.events}") from None
    records = replay(frames_from_lines(lines), cfg, green_start_s=green_start)
    text = "".join(json.dumps(r) + "\n" for r in records)
    sys.stdout.write(text)
    total = sum(r["extend_green_by"] for r in records)
    print(f"total extension: {total} s", file=sys.stderr)
    if args.out or os.environ.get(OUT_ENV):
        out = out_dir_from(args)
        (out / "commands.jsonl").write_text(text)
        write_manifest(out, "controller replay", doc, [], ["commands.jsonl"])
    return 0


def cmd_dataset_stats(args):
    records = parse_annotations(args.labels, args.names)
    dist = class_distribution(records)
    out = out_dir_from(args)
    write_csv(out / "histogram.csv", ("class_index", "name", "count"),
              [[i, name, c] for i, (name, c) in enumerate(zip(CLASS_NAMES, dist.counts))])
    stats = {
        "records": len(records),
        "images": len({r.image_id for r in records}),
        "imbalance_ratio": dist.imbalance_ratio,
        "season_images": dist.season_images,
        "season_counts": {s: list(c) for s, c in dist.season_counts.items()},
    }
    (out / "stats.json").write_text(json.dumps(stats, sort_keys=True, indent=2) + "\n")
    write_manifest(out, "dataset stats", {"labels": str(args.labels)}, [], ["histogram.csv", "stats.json"])
    for i, c in enumerate(dist.counts):
        print(f"{i:2d} {CLASS_NAMES[i]:<40} {c}")
    return 0


def cmd_dataset_split(args):
    records = parse_annotations(args.labels, args.names)
    train, held_out = split_dataset(records, args.ratio, args.seed)
    out = out_dir_from(args)
    for name, part in (("train.txt", train), ("eval.txt", held_out)):
        ids = sorted({r.image_id for r in part})
        (out / name).write_text("".join(i + "\n" for i in ids))
    write_manifest(out, "dataset split", {"labels": str(args.labels), "ratio": args.ratio},
                   [args.seed], ["train.txt", "eval.txt"])
    print(f"train images: {len({r.image_id for r in train})}, "
          f"eval images: {len({r.image_id for r in held_out})}")
    return 0


def cmd_dataset_eval(args):
    records = parse_annotations(args.labels, args.names)
    try:
        lines = Path(args.predictions).read_text().splitlines()
    except FileNotFoundError:
        raise UsageError(f"predictions not found: {args.predictions}") from None
    result = evaluate_ap(parse_predictions(lines), ground_truth_boxes(records, args.image_size))
    out = out_dir_from(args)
    write_csv(out / "metrics.csv", EvalResult.COLUMNS, [[_fmt(v) for v in result.as_row()]])
    (out / "metrics.json").write_text(
        json.dumps(dict(zip(EvalResult.COLUMNS, result.as_row())), sort_keys=True, indent=2) + "\n")
    write_manifest(out, "dataset eval-ap",
                   {"labels": str(args.labels), "predictions": str(args.predictions),
                    "image_size": list(args.image_size)},
                   [], ["metrics.csv", "metrics.json"])
    print(" ".join(f"{k}={v:.4f}" for k, v in zip(EvalResult.COLUMNS, result.as_row())))
    return 0


# -- parser --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="barrierfree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="group", required=True)

    kernels = sub.add_parser("kernels").add_subparsers(dest="action", required=True)
    p = kernels.add_parser("selfcheck", help="run the kernel oracle suite")
    p.add_argument("--cases", type=int, default=1000, help="random cases per property")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernels_selfcheck)

    sim = sub.add_parser("sim").add_subparsers(dest="action", required=True)
    for name, func in (("run", cmd_sim_run), ("ablate-n", cmd_sim_ablate)):
        p = sim.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON")
        p.add_argument("--seed", type=int, help="overrides rng_seed in the config")
        p.add_argument("--out")
        p.add_argument("--seeds", type=int, default=500, help="ensemble size for ablations")
        if name == "run":
            p.add_argument("--ablate-n", type=parse_int_range, metavar="RANGE",
                           help="run a paired-seed ablation over N, e.g. 1..5")
        else:
            p.add_argument("--n-values", type=parse_int_range, default=[1, 2, 3, 4, 5], metavar="RANGE")
        p.set_defaults(func=func)

    ctl = sub.add_parser("controller").add_subparsers(dest="action", required=True)
    p = ctl.add_parser("replay", help="stream detection events through the controller")
    p.add_argument("--events", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_controller_replay)

    ds = sub.add_parser("dataset").add_subparsers(dest="action", required=True)
    for name, func in (("stats", cmd_dataset_stats), ("split", cmd_dataset_split),
                       ("eval-ap", cmd_dataset_eval)):
        p = ds.add_parser(name)
        p.add_argument("--labels", required=True, help="directory of per-image label files")
        p.add_argument("--names", help="12-line class names file")
        p.add_argument("--out")
        if name == "split":
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--ratio", type=float, default=0.8)
        if name == "eval-ap":
            p.add_argument("--predictions", required=True)
            p.add_argument("--image-size", type=parse_image_size, default=(640, 512))
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    log.debug("numba kernels %s", "enabled" if numba_enabled() else "disabled")
    try:
        return args.func(args)
    except (UsageError, ConfigError, OrderingError, LabelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
