"""Experiment configs, built-in presets and the end-to-end runner.

Config files use INI syntax (read with :mod:`configparser`)::

    [experiment]
    name = fhn-regularized
    variant = discrete          # discrete | discrete_identity | continuous
    latent_dim = 2              # p; discrete only
    n_ops = 2                   # M (discrete) or L (continuous)
    preprocessing = none        # none | zscore_per_channel
    seed = 0

    [system]                    # either [system] ...
    kind = fhn
    T = 1000
    dt = 0.2
    x0 = -0.5, 0.0
    a = 0.8                     # any kind-specific parameter

    [data]                      # ... or [data], never both
    path = recording.csv
    has_header = false
    dt = 1.0

    [train]                     # TrainConfig fields; [ct_train] for continuous
    tau = 0.3

Values are parsed as int, float, bool (true/false), ``none``, or a
comma-separated list of numbers; anything else stays a string.
"""

import configparser
import io as _io
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import continuous as ct
from . import discrete as dd
from .config import CtTrainConfig, TrainConfig
from .errors import DimensionError, DivergenceError, DomainError, ParseError
from .io import load_csv, save_model, write_csv, zscore
from .linalg import expm
from .metrics import align_dictionaries, evaluate, pearson_r
from .systems import SystemSpec, gen_scaled_permutation, generate, rotated_center_generator
from .trajectory import Trajectory

VARIANTS = ("discrete", "discrete_identity", "continuous")
PREPROCESSING = ("none", "zscore_per_channel")


@dataclass
class ExperimentConfig:
    """One reproducible run: data source, model variant, sizes and training settings."""

    name: str
    variant: str
    n_ops: int
    train: object
    latent_dim: int = None
    system: SystemSpec = None
    data_path: str = None
    has_header: bool = False
    data_dt: float = 1.0
    preprocessing: str = "none"
    rng_seed: int = 0
    notes: str = ""

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}")
        if (self.system is None) == (self.data_path is None):
            raise DomainError("exactly one of system and data_path must be given")
        if self.n_ops < 1:
            raise DomainError("n_ops must be positive")
        if self.variant == "discrete" and (self.latent_dim is None or self.latent_dim < 1):
            raise DomainError("discrete experiments need a positive latent_dim")
        if self.preprocessing not in PREPROCESSING:
            raise DomainError(f"preprocessing must be one of {PREPROCESSING}")
        want = CtTrainConfig if self.variant == "continuous" else TrainConfig
        if not isinstance(self.train, want):
            raise DomainError(f"variant {self.variant} needs a {want.__name__}")

    def with_seed(self, seed):
        """Copy whose data and training both use ``seed``."""
        system = None if self.system is None else replace(self.system, rng_seed=seed)
        return replace(self, rng_seed=seed, system=system, train=replace(self.train, rng_seed=seed))


# --------------------------------------------------------------------------
# config text

def _format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(text):
    """Scalar, bool, ``none`` or comma-separated numeric list from config text."""
    s = text.strip()
    low = s.lower()
    if low in ("none", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in s:
        return tuple(parse_value(part) for part in s.split(","))
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def to_ini(cfg):
    """Render an :class:`ExperimentConfig` in the documented grammar."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    exp = {"name": cfg.name, "variant": cfg.variant, "n_ops": cfg.n_ops,
           "latent_dim": cfg.latent_dim, "preprocessing": cfg.preprocessing, "seed": cfg.rng_seed}
    if cfg.notes:
        exp["notes"] = cfg.notes
    cp["experiment"] = {k: _format_value(v) for k, v in exp.items()}
    if cfg.system is not None:
        s = cfg.system
        sec = {"kind": s.kind, "T": s.T, "dt": s.dt, "x0": s.x0}
        sec.update(s.params)
        cp["system"] = {k: _format_value(v) for k, v in sec.items()}
    else:
        cp["data"] = {"path": cfg.data_path, "has_header": _format_value(cfg.has_header),
                      "dt": _format_value(float(cfg.data_dt))}
    section = "ct_train" if cfg.variant == "continuous" else "train"
    cp[section] = {k: _format_value(v) for k, v in cfg.train.to_dict().items() if k != "rng_seed"}
    buf = _io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _typed_section(cp, name, cls):
    names = {f.name for f in fields(cls)}
    out = {}
    for key, raw in cp[name].items():
        if key not in names:
            raise ParseError(f"[{name}] unknown key {key!r}")
        out[key] = parse_value(raw)
    return out


def from_ini(text, base_dir="."):
    """Parse config text; relative data paths resolve against ``base_dir``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed config: {exc}") from None
    if "experiment" not in cp:
        raise ParseError("config needs an [experiment] section")
    e = {k: parse_value(v) for k, v in cp["experiment"].items()}
    known = {"name", "variant", "n_ops", "latent_dim", "preprocessing", "seed", "notes"}
    if set(e) - known:
        raise ParseError(f"[experiment] unknown keys {sorted(set(e) - known)}")
    for key in ("variant", "n_ops"):
        if key not in e:
            raise ParseError(f"[experiment] missing {key!r}")
    seed = int(e.get("seed") or 0)
    variant = e["variant"]
    system = data_path = None
    has_header, data_dt = False, 1.0
    if "system" in cp and "data" in cp:
        raise ParseError("give either [system] or [data], not both")
    if "system" in cp:
        sec = {k: parse_value(v) for k, v in cp["system"].items()}
        if "kind" not in sec:
            raise ParseError("[system] missing 'kind'")
        kind = sec.pop("kind")
        T, dt, x0 = sec.pop("T", None), sec.pop("dt", None), sec.pop("x0", None)
        if x0 is not None and not isinstance(x0, tuple):
            x0 = (x0,)
        system = SystemSpec(kind, sec, T, dt, x0, seed)
    elif "data" in cp:
        sec = {k: parse_value(v) for k, v in cp["data"].items()}
        if "path" not in sec:
            raise ParseError("[data] missing 'path'")
        data_path = os.path.join(base_dir, str(sec["path"]))
        has_header = bool(sec.get("has_header") or False)
        data_dt = float(sec.get("dt") or 1.0)
    else:
        raise ParseError("config needs a [system] or [data] section")
    cls, section = (CtTrainConfig, "ct_train") if variant == "continuous" else (TrainConfig, "train")
    tr = _typed_section(cp, section, cls) if section in cp else {}
    tr["rng_seed"] = seed
    return ExperimentConfig(
        name=str(e.get("name") or "experiment"), variant=variant, n_ops=int(e["n_ops"]),
        train=cls(**tr), latent_dim=e.get("latent_dim"), system=system, data_path=data_path,
        has_header=has_header, data_dt=data_dt, preprocessing=e.get("preprocessing") or "none",
        rng_seed=seed, notes=str(e.get("notes") or ""))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return from_ini(fh.read(), os.path.dirname(os.path.abspath(path)))


# --------------------------------------------------------------------------
# presets

def _presets():
    table1_speed = CtTrainConfig(lambda_G=1.0, lambda_c=0.1, eta_G=0.1, eta_c=0.01,
                                 gamma=0.985, max_epochs=80)
    # eta_G raised from 5e-3: with gamma = 0.985 the smaller step freezes
    # before the dictionary settles onto two generators
    table1_rotation = CtTrainConfig(lambda_G=20.0, lambda_c=0.08, eta_G=0.02, eta_c=0.01,
                                    gamma=0.985, max_epochs=100)
    return {
        "fhn-regularized": ExperimentConfig(
            "fhn-regularized", "discrete", 2, TrainConfig(tau=0.3, solver_mode="constrained",
                                                          lambda0=0.1, max_epochs=200),
            latent_dim=2, system=SystemSpec("fhn")),
        "fhn-unregularized": ExperimentConfig(
            "fhn-unregularized", "discrete", 2, TrainConfig(solver_mode="pseudo_inverse",
                                                            max_epochs=50),
            latent_dim=2, system=SystemSpec("fhn")),
        "lorenz-regularized": ExperimentConfig(
            "lorenz-regularized", "discrete", 5, TrainConfig(tau=0.55, solver_mode="constrained",
                                                             lambda0=0.1, max_epochs=150),
            latent_dim=3, system=SystemSpec("lorenz"), preprocessing="zscore_per_channel"),
        "lorenz-unregularized": ExperimentConfig(
            "lorenz-unregularized", "discrete", 5, TrainConfig(solver_mode="pseudo_inverse",
                                                               max_epochs=50),
            latent_dim=3, system=SystemSpec("lorenz")),
        "spiral-speed": ExperimentConfig(
            "spiral-speed", "continuous", 4, table1_speed,
            system=SystemSpec("spiral_speed", T=81, dt=0.25, x0=(5.0, 0.0))),
        "rotating-center": ExperimentConfig(
            "rotating-center", "continuous", 4, table1_rotation,
            system=SystemSpec("rotating_center", T=501, dt=0.25, x0=(5.0, 1.5, 1.0))),
        "permutation-1": ExperimentConfig(
            "permutation-1", "discrete_identity", 1,
            TrainConfig(solver_mode="penalized", lambda2=0.01, eta_f=1.0, gamma=1.0,
                        max_epochs=200),
            system=SystemSpec("scaled_permutation", dict(k=36, n_ops=1, sparsity=1), T=2000)),
        "permutation-12": ExperimentConfig(
            "permutation-12", "discrete_identity", 12,
            # a warm-started, capped coefficient solve per epoch keeps the
            # alternation smooth; the large decaying step escapes early ties
            TrainConfig(solver_mode="penalized", lambda2=0.3, eta_f=100.0, gamma=0.995,
                        max_epochs=600, solver_max_iter=50),
            system=SystemSpec("scaled_permutation", dict(k=16, n_ops=12, sparsity=2), T=4000)),
        "celegans": ExperimentConfig(
            "celegans", "discrete", 10, TrainConfig(tau=0.3, solver_mode="constrained",
                                                    max_epochs=3000),
            latent_dim=10, data_path="celegans.csv", has_header=False,
            preprocessing="zscore_per_channel",
            notes="data not bundled: export the recording as a time-by-neuron CSV"),
    }


PRESETS = tuple(_presets())


def preset(name):
    """A fresh copy of a built-in experiment config."""
    table = _presets()
    if name not in table:
        raise DomainError(f"unknown preset {name!r}; available: {', '.join(table)}")
    return table[name]


# --------------------------------------------------------------------------
# evaluation helpers

def load_data(cfg):
    """Trajectory for a config, plus ground truth when the system provides it."""
    truth = {}
    if cfg.system is not None:
        if cfg.system.kind == "scaled_permutation":
            traj, ops, C = gen_scaled_permutation(cfg.system)
            truth = {"operators": ops, "coefficients": C}
        else:
            traj = generate(cfg.system)
    else:
        traj = load_csv(cfg.data_path, cfg.has_header, cfg.data_dt)
    if cfg.preprocessing == "zscore_per_channel":
        traj = Trajectory(zscore(traj.samples), traj.dt, traj.labels, traj.segment_starts)
    return traj, truth


def surviving_generators(model, frac=0.1):
    """Indices of generators whose Frobenius norm exceeds ``frac`` of the largest."""
    n = model.frobenius_norms()
    return np.nonzero(n > frac * n.max())[0] if n.max() > 0 else np.array([], dtype=int)


def rotation_interpolation(model, dt, thetas, x0, steps=40, omega=1.0):
    """How well two learned generators span the family of tilted rotations.

    The two generators with the largest Frobenius norms are kept. For each
    angle the ground-truth step generator ``dt * G_theta`` is projected onto
    their span by least squares, and a ``steps``-long rollout from ``x0``
    under the fitted combination is correlated with the true rollout.

    Returns ``(correlations, weights)``, one entry / row per angle.
    """
    idx = np.argsort(model.frobenius_norms())[::-1][:2]
    basis = model.G[idx].reshape(len(idx), -1).T
    x0 = np.asarray(x0, dtype=float)
    rs, ws = [], []
    for th in thetas:
        target = dt * rotated_center_generator(th, omega)
        w, *_ = np.linalg.lstsq(basis, target.ravel(), rcond=None)
        fitted = (basis @ w).reshape(target.shape)
        true_step, fit_step = expm(target), expm(fitted)
        a, b = [x0], [x0]
        for _ in range(steps):
            a.append(true_step @ a[-1])
            b.append(fit_step @ b[-1])
        rs.append(pearson_r(np.array(a), np.array(b)))
        ws.append(w)
    return np.array(rs), np.array(ws)


def _predict(cfg, model, path_or_C, traj):
    if cfg.variant == "continuous":
        return ct.one_step_predict(model, traj, path_or_C)
    return dd.one_step_predict(model, path_or_C)


def _phase_portrait(model, variant, lo, hi, n=15):
    """Vector field of every operator on an ``n x n`` grid of a 2-D latent space."""
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    ops = model.G if variant == "continuous" else model.f
    rows = []
    for m, A in enumerate(ops):
        field_ = pts @ A.T if variant == "continuous" else pts @ A.T - pts
        rows.append(np.column_stack([np.full(len(pts), m), pts, field_]))
    return np.vstack(rows)


# --------------------------------------------------------------------------
# runner

@dataclass
class ExperimentResult:
    report: object
    model: object
    coefficients: np.ndarray
    trace: object
    files: list = field(default_factory=list)


def train(cfg, traj, callback=None):
    """Train the configured variant. Returns ``(model, path_or_C, trace)``."""
    if cfg.variant == "discrete":
        if traj.k < 1:
            raise DimensionError("trajectory has no channels")
        return dd.train_discrete(traj, cfg.n_ops, cfg.latent_dim, cfg.train, callback=callback)
    if cfg.variant == "discrete_identity":
        return dd.train_identity_observation(traj, cfg.n_ops, cfg.train, callback=callback)
    return ct.train_continuous(traj, cfg.n_ops, cfg.train, callback=callback)


def run_experiment(cfg, out_dir=None, callback=None):
    """Generate or load data, train, evaluate, and optionally write artifacts.

    Artifacts (``out_dir``): ``model.dlds``, ``path.csv`` (long format
    ``t, kind, index, value`` with kind 0 = latent state, 1 = coefficient),
    ``coefficients.csv``, ``reconstruction.csv``, ``report.json``,
    ``config.ini`` and, for 2-D latents, ``phase_portraits.csv``. Files are
    staged in a temporary directory and moved in only after everything
    succeeded, so a failed run leaves nothing behind.

    Errors from any stage are re-raised with the experiment name prefixed.
    """
    if out_dir is not None and os.path.isdir(out_dir) and os.listdir(out_dir):
        raise DomainError(f"output directory {out_dir!r} is not empty")
    try:
        traj, truth = load_data(cfg)
        model, fitted, trace = train(cfg, traj, callback)
        mask = traj.transition_mask()
        pred = _predict(cfg, model, fitted, traj)
        report = evaluate(traj.samples[1:][mask], pred[mask])
        C = fitted if cfg.variant == "continuous" else fitted.c
        report.extra["epochs"] = int(trace.final_epoch)
        if cfg.variant == "continuous":
            report.extra["generator_norms"] = model.frobenius_norms().tolist()
            report.extra["n_surviving"] = int(len(surviving_generators(model)))
        else:
            report.extra["final_rmse"] = float(trace.rmse[-1]) if trace.rmse else None
            report.extra["perturbations"] = len(trace.perturbation_events)
            report.extra["solver_failures"] = int(fitted.solver_failures)
        if "operators" in truth and truth["operators"].shape == model.f.shape:
            _, scores, _ = align_dictionaries(model.f, truth["operators"])
            report.extra["aligned_scores"] = scores.tolist()
            report.extra["mean_aligned_score"] = float(scores.mean())
    except Exception as exc:
        new = _with_context(exc, cfg.name)
        if new is exc:
            raise
        raise new from exc
    result = ExperimentResult(report, model, C, trace)
    if out_dir is not None:
        result.files = _write_artifacts(cfg, out_dir, traj, model, fitted, C, pred, mask, trace, report)
    return result


def _with_context(exc, name):
    msg = f"[{name}] {exc}"
    if isinstance(exc, DivergenceError):
        return DivergenceError(msg, exc.step)
    try:
        return type(exc)(msg)
    except Exception:
        return exc


def _write_artifacts(cfg, out_dir, traj, model, fitted, C, pred, mask, trace, report):
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".dlds-stage-", dir=parent)
    try:
        trace_summary = {"final_epoch": int(trace.final_epoch)}
        if cfg.variant == "continuous":
            trace_summary["final_loss"] = float(trace.loss[-1]) if trace.loss else None
        else:
            trace_summary["final_rmse"] = float(trace.rmse[-1]) if trace.rmse else None
            trace_summary["perturbations"] = len(trace.perturbation_events)
        save_model(model, os.path.join(stage, "model.dlds"), cfg.variant, cfg.train.to_dict(),
                   trace_summary, {"name": cfg.name, "preprocessing": cfg.preprocessing,
                                   "dt": float(traj.dt)})
        X = traj.samples if cfg.variant == "continuous" else fitted.x
        T = traj.T
        t_idx = np.arange(T)
        long_x = [np.column_stack([t_idx, np.zeros(T), np.full(T, j), X[:, j]]) for j in range(X.shape[1])]
        long_c = [np.column_stack([t_idx[1:], np.ones(T - 1), np.full(T - 1, m), C[:, m]])
                  for m in range(C.shape[1])]
        long = np.vstack(long_x + long_c)
        long = long[np.lexsort((long[:, 2], long[:, 1], long[:, 0]))]
        write_csv(os.path.join(stage, "path.csv"), long, ["t", "kind", "index", "value"])
        write_csv(os.path.join(stage, "coefficients.csv"), np.column_stack([t_idx[1:], C]),
                  ["t"] + [f"c{m}" for m in range(C.shape[1])])
        k = traj.k
        recon = np.column_stack([t_idx[1:][mask], traj.samples[1:][mask], pred[mask]])
        write_csv(os.path.join(stage, "reconstruction.csv"), recon,
                  ["t"] + [f"truth{j}" for j in range(k)] + [f"pred{j}" for j in range(k)])
        if X.shape[1] == 2:
            pad = 0.1 * (X.max(axis=0) - X.min(axis=0) + 1e-12)
            grid = _phase_portrait(model, cfg.variant, X.min(axis=0) - pad, X.max(axis=0) + pad)
            write_csv(os.path.join(stage, "phase_portraits.csv"), grid, ["op", "x0", "x1", "dx0", "dx1"])
        with open(os.path.join(stage, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(stage, "config.ini"), "w", encoding="utf-8") as fh:
            fh.write(to_ini(cfg))
        if os.path.isdir(out_dir):
            os.rmdir(out_dir)
        os.replace(stage, out_dir)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return sorted(os.listdir(out_dir))
