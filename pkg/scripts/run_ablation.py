"""Ablation table: every method on every synthetic preset (or a manifest).

    python3 scripts/run_ablation.py --repeats 10 --seed 7 --output ablation.json
"""
import argparse
import json
import sys

from spdcrc.classify import METHODS, CrcConfig
from spdcrc.datasets import SYNTHETIC_PRESETS, generate_synthetic, load_dataset, synthetic_spec
from spdcrc.evaluation import PreparedDataset, SplitSpec, run_protocol


def sources(args):
    if args.manifest:
        return {args.manifest: load_dataset(args.manifest)}
    return {name: generate_synthetic(synthetic_spec(name, seed=args.seed)) for name in args.presets}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--presets", nargs="+", default=list(SYNTHETIC_PRESETS), choices=list(SYNTHETIC_PRESETS))
    p.add_argument("--manifest")
    p.add_argument("--methods", nargs="+", default=["crc", "spd_crc", "log_crc", "logek_crc"], choices=METHODS)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-per-class", type=int)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--lambda1", type=float, default=0.01)
    p.add_argument("--lambda2", type=float, default=0.5)
    p.add_argument("--output", help="write the table as JSON")
    args = p.parse_args(argv)

    cfg = CrcConfig(args.lambda1, args.lambda2)
    table = {}
    print(f"{'dataset':<16}" + "".join(f"{m:>18}" for m in args.methods))
    for name, sets in sources(args).items():
        data = PreparedDataset.from_sets(sets)
        smallest = min(int((data.labels == c).sum()) for c in data.classes)
        spec = SplitSpec(args.train_per_class or max(1, smallest // 2), args.repeats, args.seed)
        row = {}
        for m in args.methods:
            r = run_protocol(data, m, cfg, spec)
            row[m] = {"mean": r.mean, "std": r.std}
        table[name] = row
        print(f"{name:<16}" + "".join(f"{100 * v['mean']:>11.2f} ± {100 * v['std']:<4.1f}" for v in row.values()))
    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"seed": args.seed, "repeats": args.repeats, "table": table}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
