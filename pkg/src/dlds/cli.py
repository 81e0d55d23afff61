"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import continuous as ct
from . import discrete as dd
from .config import CtTrainConfig, TrainConfig
from .errors import DimensionError, DomainError, IntegrityError, ParseError
from .experiments import PRESETS, load_config, preset, run_experiment, to_ini
from .io import load_archive, load_csv, write_csv
from .metrics import evaluate
from .systems import generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the documented code is 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment config file (INI)")
    common.add_argument("--preset", help="built-in experiment instead of --config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quiet", action="store_true", help="only print errors")

    parser = _Parser(prog="dlds", description="Decomposed linear dynamical systems.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="simulate the configured system to CSV")
    sub.add_parser("train", parents=[common], help="train a model and write its artifacts")
    for name, text in (("infer", "coefficient path of a CSV under a saved model"),
                       ("eval", "one-step prediction metrics of a saved model on a CSV")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--model", required=True, help="model archive (.dlds)")
        p.add_argument("--data", required=True, help="time-by-channel CSV")
        p.add_argument("--has-header", action="store_true")
        p.add_argument("--dt", type=float, default=None, help="sample spacing (default: archive)")
    p = sub.add_parser("presets", parents=[common], help="list built-in experiments")
    p.add_argument("--show", metavar="NAME", help="print the config of one preset")
    return parser


def _experiment(args):
    if (args.config is None) == (args.preset is None):
        raise _UsageError("give exactly one of --config and --preset")
    cfg = load_config(args.config) if args.config else preset(args.preset)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _say(args, text):
    if not args.quiet:
        print(text)


def _cmd_generate(args):
    cfg = _experiment(args)
    if cfg.system is None:
        raise DomainError("generate needs a config with a [system] section")
    traj = generate(cfg.system)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "trajectory.csv")
    write_csv(path, traj.samples)
    _say(args, f"wrote {path} ({traj.T} rows, {traj.k} columns)")


def _cmd_train(args):
    cfg = _experiment(args)
    res = run_experiment(cfg, args.out)
    _say(args, json.dumps(res.report.to_dict(), indent=2, sort_keys=True))
    if args.out:
        _say(args, f"artifacts in {args.out}: {', '.join(res.files)}")


def _load_for_model(args):
    arc = load_archive(args.model)
    dt = args.dt if args.dt is not None else arc.meta.get("dt", 1.0)
    zs = arc.meta.get("preprocessing") == "zscore_per_channel"
    traj = load_csv(args.data, args.has_header, dt, zscore_channels=zs)
    return arc, traj


def _fit_path(arc, traj):
    if arc.variant == "continuous":
        cfg = CtTrainConfig.from_dict(arc.config)
        C = ct.infer_coefficients(arc.model, traj, cfg)
        return traj.samples, C, ct.one_step_predict(arc.model, traj, C)
    cfg = TrainConfig.from_dict(arc.config)
    if arc.variant == "discrete_identity":
        if traj.k != arc.model.k:
            raise DimensionError(f"data has {traj.k} channels, model expects {arc.model.k}")
        C, _ = dd._identity_coefficients(arc.model.f, traj.samples, traj.transition_mask(), cfg)
        path = dd.CoefficientPath(traj.samples.copy(), C)
    else:
        path = dd.infer_sequence(traj, arc.model, cfg)
    return path.x, path.c, dd.one_step_predict(arc.model, path)


def _cmd_infer(args):
    arc, traj = _load_for_model(args)
    X, C, _ = _fit_path(arc, traj)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    rows = [np.column_stack([np.arange(len(X)), np.zeros(len(X)), np.full(len(X), j), X[:, j]])
            for j in range(X.shape[1])]
    rows += [np.column_stack([np.arange(1, len(C) + 1), np.ones(len(C)), np.full(len(C), m), C[:, m]])
             for m in range(C.shape[1])]
    long = np.vstack(rows)
    long = long[np.lexsort((long[:, 2], long[:, 1], long[:, 0]))]
    path = os.path.join(out, "path.csv")
    write_csv(path, long, ["t", "kind", "index", "value"])
    _say(args, f"wrote {path}")


def _cmd_eval(args):
    arc, traj = _load_for_model(args)
    _, _, pred = _fit_path(arc, traj)
    mask = traj.transition_mask()
    report = evaluate(traj.samples[1:][mask], pred[mask])
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    _say(args, text)


def _cmd_presets(args):
    if args.show:
        print(to_ini(preset(args.show)), end="")
        return
    for name in PRESETS:
        print(name)


_COMMANDS = {"generate": _cmd_generate, "train": _cmd_train, "infer": _cmd_infer,
             "eval": _cmd_eval, "presets": _cmd_presets}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError(parser.format_usage().strip())
        _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DimensionError, DomainError, ParseError, IntegrityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
