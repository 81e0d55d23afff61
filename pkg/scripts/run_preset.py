"""Run one or more built-in presets and print their reports.

    python scripts/run_preset.py fhn-regularized spiral-speed --out runs/
"""

import argparse
import json
import os
import time

from dlds.experiments import PRESETS, preset, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="preset names (default: all with a bundled system)")
    ap.add_argument("--out", help="parent directory for per-preset artifacts")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    names = args.names or [n for n in PRESETS if preset(n).system is not None]
    for name in names:
        cfg = preset(name)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = os.path.join(args.out, name) if args.out else None
        t0 = time.perf_counter()
        res = run_experiment(cfg, out)
        report = res.report.to_dict()
        report["seconds"] = round(time.perf_counter() - t0, 1)
        print(name, json.dumps(report, sort_keys=True), flush=True)


if __name__ == "__main__":
    main()
