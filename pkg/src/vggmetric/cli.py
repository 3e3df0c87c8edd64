"""Command-line front end.

One executable with subcommands covering the whole pipeline: pairwise
comparison, heatmaps, the scale pyramid, region scrambling, triplet
synthesis, weight training, and evaluation. Exit codes: 0 success,
1 usage error, 2 data/format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import distort, evaluation, report, trainer
from . import heatmap as hm
from .errors import DataError, FormatError, NumericError, PreconditionError
from .metric import load_weights, metric as metric_fn, save_weights, uniform_weights
from .ppm import read_ppm, write_pgm16, write_ppm
from .vgg import load_vgg_weights

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_metric_weights(path):
    if path is None:
        return uniform_weights()
    return load_weights(path)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vggmetric", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        return p

    p = add("compare", "print the metric value of each image against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--img", action="append", required=True, dest="images")
    p.add_argument("--vgg", required=True, help="VGGW weights file")
    p.add_argument("--weights", help="metric weights file (default: all ones)")

    p = add("heatmap", "write the per-pixel distortion map and optional overlay")
    p.add_argument("--ref", required=True)
    p.add_argument("--img", required=True)
    p.add_argument("--vgg", required=True)
    p.add_argument("--weights")
    p.add_argument("--out", required=True, help="output 16-bit PGM path")
    p.add_argument("--overlay", help="optional overlay PPM path")
    p.add_argument("--gain", type=float, default=1.0)

    p = add("pyramid", "heatmaps of added noise at successive downsamplings")
    p.add_argument("--ref", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--vgg", required=True)
    p.add_argument("--weights")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("scramble", "shuffle the pixels inside a rectangle")
    p.add_argument("--img", required=True)
    p.add_argument("--rect", required=True, help="x,y,w,h")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("make-triplets", "synthesize distorted triplets from reference images")
    p.add_argument("--refs", required=True, help="directory of reference PPM files")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=0, help="use at most N references (0 = all)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--crop", type=int, default=distort.CROP_SIZE)

    p = add("train", "fit metric weights to a rated triplet dataset")
    p.add_argument("--dataset", required=True, help="triplets JSON-lines file")
    p.add_argument("--vgg", required=True)
    p.add_argument("--out", required=True, help="output weights file")
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--unsure", choices=["discard", "half"], default="discard")
    p.add_argument("--cache", help="feature cache file to reuse/create")

    p = add("eval-mos", "rank-correlate the metric against a MOS manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--vgg", required=True)
    p.add_argument("--weights")
    p.add_argument("--json", action="store_true")
    p.add_argument("--report-dir", help="write CSV scores and a scatter figure here")

    p = add("eval-triplets", "triplet accuracy and human ceiling on a rated dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--vgg", required=True)
    p.add_argument("--weights")
    p.add_argument("--json", action="store_true")
    p.add_argument("--report-dir")

    return parser


def _cmd_compare(args):
    vgg = load_vgg_weights(args.vgg)
    weights = _load_metric_weights(args.weights)
    ref = read_ppm(args.ref)
    values = []
    for path in args.images:
        value = metric_fn(ref, read_ppm(path), weights, vgg)
        values.append(value)
        print(f"{path}\t{value!r}")
    if len(values) == 2:
        prob = trainer.predict_preference(np.ones(1), [values[0] - values[1]])
        print(f"P(second image judged closer)\t{prob!r}")
    return 0


def _cmd_heatmap(args):
    vgg = load_vgg_weights(args.vgg)
    weights = _load_metric_weights(args.weights)
    ref = read_ppm(args.ref)
    img = read_ppm(args.img)
    hmap = hm.heatmap(ref, img, weights, vgg)
    scale = write_pgm16(args.out, np.maximum(hmap, 0.0))
    print(f"heatmap sum\t{hmap.sum()!r}")
    print(f"stored scale\t{scale!r}")
    if args.overlay:
        write_ppm(args.overlay, hm.render_overlay(img, hmap, gain=args.gain))
    return 0


def _cmd_pyramid(args):
    vgg = load_vgg_weights(args.vgg)
    weights = _load_metric_weights(args.weights)
    ref = read_ppm(args.ref)
    maps = hm.pyramid_heatmaps(ref, args.sigma, args.levels, weights, vgg, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sums = []
    for level, m in enumerate(maps):
        write_pgm16(out_dir / f"level{level}.pgm", np.maximum(m, 0.0))
        sums.append(float(m.sum()))
        print(f"level {level}\t{m.shape[1]}x{m.shape[0]}\t{sums[-1]!r}")
    with open(out_dir / "level_sums.csv", "w") as fh:
        fh.write("level,height,width,metric_value\n")
        for level, m in enumerate(maps):
            fh.write(f"{level},{m.shape[0]},{m.shape[1]},{sums[level]!r}\n")
    report.save_pyramid_sums(sums, out_dir / "level_sums.png")
    return 0


def _cmd_scramble(args):
    try:
        rect = tuple(int(v) for v in args.rect.split(","))
        if len(rect) != 4:
            raise ValueError
    except ValueError:
        print(f"error: --rect must be x,y,w,h, got {args.rect!r}", file=sys.stderr)
        return 1
    img = read_ppm(args.img)
    write_ppm(args.out, hm.scramble_region(img, rect, seed=args.seed))
    return 0


def _cmd_make_triplets(args):
    refs = sorted(Path(args.refs).glob("*.ppm"))
    if args.count > 0:
        refs = refs[: args.count]
    if not refs:
        print(f"error: no .ppm references in {args.refs}", file=sys.stderr)
        return 2
    records = distort.make_triplets(
        refs, args.out, seed=args.seed, max_len=args.max_len, size=args.crop
    )
    print(f"wrote {len(records)} triplets to {args.out}")
    return 0


def _cmd_train(args):
    vgg = load_vgg_weights(args.vgg)
    cache = Path(args.cache) if args.cache else None
    if cache is not None and cache.exists():
        features = trainer.load_feature_cache(cache)
    else:
        records = trainer.read_triplet_records(args.dataset)
        base_dir = Path(args.dataset).parent
        features = trainer.build_features(records, vgg, base_dir=base_dir, unsure_policy=args.unsure)
        if cache is not None:
            trainer.save_feature_cache(features, cache)
    config = trainer.TrainConfig(l2_lambda=args.l2, unsure_policy=args.unsure)
    weights = trainer.train(features, config, name=str(args.out))
    save_weights(weights, args.out)
    print(f"trained on {len(features)} weighted examples; wrote {args.out}")
    return 0


def _cmd_eval_mos(args):
    vgg = load_vgg_weights(args.vgg)
    weights = _load_metric_weights(args.weights)
    entries = evaluation.read_mos_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    result = evaluation.evaluate_mos_dataset(entries, weights, vgg, base_dir=base_dir)
    summary = {
        "srocc": result.srocc,
        "krocc": result.krocc,
        "orientation": "inverted" if result.inverted else "normal",
        "raw_srocc_sign": result.raw_srocc_sign,
        "n_used": result.n_used,
        "n_skipped": result.n_skipped,
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"SROCC (-metric vs MOS)\t{result.srocc!r}")
        print(f"KROCC (-metric vs MOS)\t{result.krocc!r}")
        print(f"orientation\t{summary['orientation']}")
        print(f"entries used/skipped\t{result.n_used}/{result.n_skipped}")
    if args.report_dir:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "scores.csv", "w") as fh:
            fh.write("metric_value,mos\n")
            for value, mos in result.values:
                fh.write(f"{value!r},{mos!r}\n")
        report.save_mos_scatter(result.values, result.srocc, result.krocc, out / "scatter.png")
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    return 0


def _cmd_eval_triplets(args):
    vgg = load_vgg_weights(args.vgg)
    weights = _load_metric_weights(args.weights)
    records = trainer.read_triplet_records(args.dataset)
    base_dir = Path(args.dataset).parent
    outcomes = []
    for rec in records:
        x = trainer.triplet_feature_vector(rec, vgg, base_dir=base_dir)
        # W.X < 0 means A is predicted closer to the reference
        predicted = "A" if float(weights.w @ x) < 0 else "B"
        outcomes.append(
            evaluation.TripletOutcome(
                predicted=predicted,
                votes_a=rec.votes_a,
                votes_b=rec.votes_b,
                votes_unsure=rec.votes_unsure,
            )
        )
    accuracy = evaluation.triplet_accuracy(outcomes)
    try:
        ceiling = evaluation.human_ceiling(records)
    except PreconditionError:
        ceiling = None
    summary = {"accuracy": accuracy, "human_ceiling": ceiling, "n_triplets": len(outcomes)}
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"triplet accuracy\t{accuracy!r}")
        print(f"human ceiling\t{ceiling!r}")
        print(f"triplets\t{len(outcomes)}")
    if args.report_dir:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        report.save_accuracy_bars(accuracy, ceiling, out / "accuracy.png")
    return 0


_COMMANDS = {
    "compare": _cmd_compare,
    "heatmap": _cmd_heatmap,
    "pyramid": _cmd_pyramid,
    "scramble": _cmd_scramble,
    "make-triplets": _cmd_make_triplets,
    "train": _cmd_train,
    "eval-mos": _cmd_eval_mos,
    "eval-triplets": _cmd_eval_triplets,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (FormatError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
