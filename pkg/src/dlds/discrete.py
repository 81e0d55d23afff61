"""Discrete-time decomposed linear dynamics.

Observation and dynamics model::

    y_t = D x_t + noise
    x_t = (sum_m c_{m,t} f_m) x_{t-1} + noise

``c[t - 1]`` holds the coefficients of the transition from ``x[t - 1]`` to
``x[t]``, so a path of ``T`` states carries ``T - 1`` coefficient vectors.

Training alternates sequential sparse inference of ``(x_t, c_t)`` with one
projected gradient step on ``D`` (unit-norm columns) and on each ``f_m``
(unit operator norm).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import operator_norm
from .metrics import rmse_relative
from .solvers import LassoProblem, solve, solve_batch
from .trajectory import Trajectory


@dataclass(frozen=True)
class DiscreteModel:
    """Loading matrix ``D`` (k x p) and operator dictionary ``f`` (M x p x p)."""

    D: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        f = np.array(self.f, dtype=float)
        if D.ndim != 2:
            raise DimensionError("D must be 2-D")
        if f.ndim != 3 or f.shape[1] != f.shape[2] or f.shape[1] != D.shape[1]:
            raise DimensionError(f"f must have shape (M, p, p) with p = {D.shape[1]}, got {f.shape}")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(f))):
            raise DomainError("model has non-finite entries")
        D.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "f", f)

    @property
    def M(self):
        return self.f.shape[0]

    @property
    def p(self):
        return self.D.shape[1]

    @property
    def k(self):
        return self.D.shape[0]


@dataclass
class CoefficientPath:
    """Latent states ``x`` (T x p) and transition coefficients ``c`` (T-1 x M)."""

    x: np.ndarray
    c: np.ndarray
    solver_failures: int = 0


@dataclass
class TrainTrace:
    rmse: list = field(default_factory=list)
    perturbation_events: list = field(default_factory=list)
    final_epoch: int = 0

    def to_dict(self):
        return {"rmse": list(map(float, self.rmse)),
                "perturbation_events": list(map(int, self.perturbation_events)),
                "final_epoch": int(self.final_epoch)}


# --------------------------------------------------------------------------
# projections

def normalize_columns(D, rng=None):
    """Scale each column to unit l2 norm; zero columns are redrawn on the sphere."""
    D = np.array(D, dtype=float)
    norms = np.linalg.norm(D, axis=0)
    for j in np.nonzero(norms == 0.0)[0]:
        rng = rng or np.random.default_rng(0)
        D[:, j] = rng.standard_normal(D.shape[0])
        norms[j] = np.linalg.norm(D[:, j])
    return D / norms


def normalize_operator(f, rng=None):
    """Rescale to unit spectral norm; an all-zero operator is redrawn first."""
    f = np.array(f, dtype=float)
    n = operator_norm(f)
    if n == 0.0:
        rng = rng or np.random.default_rng(0)
        f = rng.standard_normal(f.shape)
        n = operator_norm(f)
    return f / n


def project_operator(f, rng=None):
    """Nearest matrix in Frobenius norm with spectral norm exactly one.

    Singular values above one are clipped to one and a largest singular
    value below one is raised to one. Unlike a global rescale this leaves an
    operator that already satisfies the constraint in every direction but
    one untouched in those directions.
    """
    f = np.array(f, dtype=float)
    U, s, Vt = np.linalg.svd(f)
    if s[0] == 0.0:
        return normalize_operator(f, rng)
    s = np.minimum(s, 1.0)
    s[0] = 1.0
    return (U * s) @ Vt


def random_model(k, p, M, rng):
    D = normalize_columns(rng.standard_normal((k, p)), rng)
    f = np.stack([normalize_operator(rng.standard_normal((p, p)), rng) for _ in range(M)])
    return DiscreteModel(D, f)


# --------------------------------------------------------------------------
# dynamics

def build_effective_dynamics(model, c):
    """``sum_m c[m] * f[m]``."""
    c = np.asarray(c, dtype=float).ravel()
    if c.shape[0] != model.M:
        raise DimensionError(f"expected {model.M} coefficients, got {c.shape[0]}")
    if not np.all(np.isfinite(c)):
        raise DomainError("coefficients must be finite")
    return np.tensordot(c, model.f, axes=1)


def build_F_tilde(model, x_prev):
    """``p x M`` matrix whose column ``m`` is ``f[m] @ x_prev``."""
    x_prev = np.asarray(x_prev, dtype=float).ravel()
    if x_prev.shape[0] != model.p:
        raise DimensionError(f"expected a state of dim {model.p}, got {x_prev.shape[0]}")
    return np.einsum("mij,j->im", model.f, x_prev)


def one_step_predict(model, path):
    """Predicted observations ``D (sum_m c_{m,t} f_m) x_{t-1}`` for t = 1..T-1."""
    x = np.asarray(path.x, dtype=float)
    c = np.asarray(path.c, dtype=float)
    if c.shape != (x.shape[0] - 1, model.M):
        raise DimensionError("path does not match the model")
    latent = np.einsum("tm,mij,tj->ti", c, model.f, x[:-1])
    return latent @ model.D.T


# --------------------------------------------------------------------------
# inference

class _Inference:
    """Per-model cache for the sequential filter (pseudo-inverses of D)."""

    def __init__(self, model, cfg):
        self.model = model
        self.cfg = cfg
        D = model.D
        self.D_pinv = np.linalg.pinv(D)
        lam0 = cfg.lambda0
        if lam0 > 0:
            self.K = np.linalg.inv(D.T @ D + lam0 * np.eye(model.p))
        else:
            self.K = None
        self.stacked = np.vstack([D, np.sqrt(lam0) * np.eye(model.p)])

    def observe(self, y):
        """Observation-only estimate of the latent state."""
        cfg = self.cfg
        if cfg.lambda1 == 0 or cfg.solver_mode == "pseudo_inverse":
            return self.D_pinv @ y
        p = LassoProblem(self.model.D, y, "penalized", lam=cfg.lambda1 / 2)
        return solve(p, cfg.solver_tol).solution

    def x_step(self, y, pred):
        """argmin ||y - D x||^2 + lambda0 ||x - pred||^2 + lambda1 ||x||_1."""
        cfg = self.cfg
        if cfg.lambda1 == 0 or cfg.solver_mode == "pseudo_inverse":
            if self.K is None:
                return self.D_pinv @ y
            return self.K @ (self.model.D.T @ y + cfg.lambda0 * pred)
        b = np.concatenate([y, np.sqrt(cfg.lambda0) * pred])
        p = LassoProblem(self.stacked, b, "penalized", lam=cfg.lambda1 / 2)
        return solve(p, cfg.solver_tol).solution

    def c_step(self, F, x, c_init=None):
        cfg = self.cfg
        if cfg.solver_mode == "constrained":
            p = LassoProblem(F, x, "constrained", tau=cfg.tau)
        elif cfg.solver_mode == "penalized":
            lam = cfg.lambda2 / (2 * cfg.lambda0) if cfg.lambda0 > 0 else cfg.lambda2
            p = LassoProblem(F, x, "penalized", lam=lam)
        else:
            p = LassoProblem(F, x, "pseudo_inverse")
        rep = solve(p, cfg.solver_tol, cfg.coef_max_iter, x0=c_init)
        return rep.solution, rep.converged

    def step(self, y, x_prev, c_init=None):
        F = build_F_tilde(self.model, x_prev)
        x = self.observe(y)
        c = np.zeros(self.model.M)
        ok = True
        for _ in range(self.cfg.inference_rounds):
            c, ok = self.c_step(F, x, c_init)
            c_init = c
            x = self.x_step(y, F @ c)
        return x, c, ok


def infer_step(y_t, x_prev, model, cfg, c_init=None):
    """Estimate ``(x_t, c_t)`` given the previous state.

    Block coordinate descent on
    ``||y - D x||^2 + lambda0 ||x - F c||^2 + lambda1 ||x||_1 + lambda2 ||c||_1``
    with ``F = build_F_tilde(model, x_prev)``: starting from the
    observation-only state, alternately solve for ``c`` with the configured
    coefficient solver and for ``x`` by stacked least squares,
    ``cfg.inference_rounds`` times.

    Returns ``(x_t, c_t, converged)``; ``converged`` is False when the
    coefficient solver hit its iteration cap (the iterate is still used).
    """
    y_t = np.asarray(y_t, dtype=float).ravel()
    if y_t.shape[0] != model.k:
        raise DimensionError(f"observation has dim {y_t.shape[0]}, model expects {model.k}")
    return _Inference(model, cfg).step(y_t, np.asarray(x_prev, dtype=float).ravel(), c_init)


def infer_sequence(traj, model, cfg):
    """Run the filter through a whole trajectory.

    The first state of every segment comes from the observation-only
    problem (no dynamics prior exists there) and its incoming coefficient
    vector is zero.
    """
    if not isinstance(traj, Trajectory):
        traj = Trajectory(traj)
    Y = traj.samples
    if Y.shape[1] != model.k:
        raise DimensionError(f"trajectory has {Y.shape[1]} channels, model expects {model.k}")
    inf = _Inference(model, cfg)
    T = Y.shape[0]
    X = np.zeros((T, model.p))
    C = np.zeros((T - 1, model.M))
    valid = traj.transition_mask()
    failures = 0
    X[0] = inf.observe(Y[0])
    c_prev = None
    for t in range(1, T):
        if not valid[t - 1]:
            X[t] = inf.observe(Y[t])
            c_prev = None
            continue
        X[t], C[t - 1], ok = inf.step(Y[t], X[t - 1], c_prev)
        c_prev = C[t - 1]
        failures += not ok
    return CoefficientPath(X, C, failures)


def objective(traj, model, path, cfg):
    """Full inference objective summed over the trajectory.

    In constrained mode the l1 term on ``c`` is replaced by the budget and
    therefore omitted.
    """
    Y = traj.samples
    X, C = path.x, path.c
    mask = traj.transition_mask()
    pred = np.einsum("tm,mij,tj->ti", C, model.f, X[:-1])
    dyn = np.sum(((X[1:] - pred) ** 2)[mask])
    val = np.sum((Y - X @ model.D.T) ** 2) + cfg.lambda0 * dyn + cfg.lambda1 * np.abs(X).sum()
    if cfg.solver_mode == "penalized":
        val += cfg.lambda2 * np.abs(C[mask]).sum()
    return float(val)


# --------------------------------------------------------------------------
# learning

def grad_D(model, Y, X):
    """Gradient of ``mean_t 1/2 ||y_t - D x_t||^2`` with respect to ``D``."""
    R = np.asarray(Y) - np.asarray(X) @ model.D.T
    return -(R.T @ np.asarray(X)) / len(Y)


def grad_f(model, X_prev, X_next, C):
    """Gradient of ``mean_t 1/2 ||x_t - sum_m c_mt f_m x_{t-1}||^2`` w.r.t. each ``f_m``."""
    X_prev = np.asarray(X_prev, dtype=float)
    X_next = np.asarray(X_next, dtype=float)
    C = np.asarray(C, dtype=float)
    R = X_next - np.einsum("tm,mij,tj->ti", C, model.f, X_prev)
    return -np.einsum("tm,ti,tj->mij", C, R, X_prev) / len(X_prev)


def update_D(model, Y, X, eta_D, rng=None, normalize=True):
    """``D <- D + eta_D <(y_t - D x_t) x_t^T>`` then unit-norm columns."""
    D = model.D - eta_D * grad_D(model, Y, X)
    if normalize:
        D = normalize_columns(D, rng)
    return DiscreteModel(D, model.f)


def update_f(model, X_prev, X_next, C, eta_f, rng=None, normalize=True):
    """One gradient step on the dynamics residual, then projection onto unit operator norm."""
    f = model.f - eta_f * grad_f(model, X_prev, X_next, C)
    if normalize:
        f = np.stack([project_operator(fm, rng) for fm in f])
    return DiscreteModel(model.D, f)


def perturb_dictionary(model, sigma, rng):
    """Add ``N(0, sigma^2)`` noise to every operator entry and renormalize."""
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if sigma == 0:
        return model
    f = model.f + sigma * rng.standard_normal(model.f.shape)
    return DiscreteModel(model.D, np.stack([normalize_operator(fm, rng) for fm in f]))


def _plateau(history, window, tol):
    if len(history) <= window or history[-1] <= tol:
        return False
    recent = np.asarray(history[-window - 1:])
    return bool(np.all(np.abs(np.diff(recent)) < tol))


def train_discrete(traj, M, p, cfg, model=None, callback=None):
    """Learn ``D`` and ``{f_m}`` from one trajectory.

    Each epoch infers the full path, takes one gradient step on ``D`` and on
    the operators (both projected back onto their norm constraints) and
    decays the learning rates by ``gamma``. When the relative observation
    error ``||Y - X D^T|| / ||Y||`` has moved by less than ``conv_tol`` for
    ``plateau_window`` consecutive epochs, the operators are perturbed.
    Training stops once that error drops below ``conv_tol`` or after
    ``max_epochs``.

    ``callback(epoch, model, path)``, if given, runs after every epoch's
    updates.

    Returns ``(model, path, trace)`` where ``path`` is inferred with the
    final model.
    """
    if not isinstance(traj, Trajectory):
        traj = Trajectory(traj)
    if M < 1 or p < 1:
        raise DomainError("M and p must be >= 1")
    rng = np.random.default_rng(cfg.rng_seed)
    if model is None:
        model = random_model(traj.k, p, M, rng)
    Y = traj.samples
    mask = traj.transition_mask()
    eta_D, eta_f = cfg.eta_D, cfg.eta_f
    trace = TrainTrace()
    y_norm = np.linalg.norm(Y)
    for epoch in range(cfg.max_epochs):
        path = infer_sequence(traj, model, cfg)
        err = rmse_relative(Y, path.x @ model.D.T) if y_norm > 0 else 0.0
        trace.rmse.append(err)
        trace.final_epoch = epoch + 1
        if err < cfg.conv_tol:
            break
        model = update_D(model, Y, path.x, eta_D, rng)
        model = update_f(model, path.x[:-1][mask], path.x[1:][mask], path.c[mask], eta_f, rng)
        eta_D *= cfg.gamma
        eta_f *= cfg.gamma
        if _plateau(trace.rmse, cfg.plateau_window, cfg.conv_tol):
            model = perturb_dictionary(model, cfg.perturb_sigma, rng)
            trace.perturbation_events.append(epoch)
        if callback is not None:
            callback(epoch, model, path)
    path = infer_sequence(traj, model, cfg)
    return model, path, trace


def _identity_coefficients(f, Y, mask, cfg, C0=None):
    """Batched coefficient solve for ``D = I``: ``y_t ~ sum_m c_m f_m y_{t-1}``."""
    designs = np.einsum("mij,tj->tim", f, Y[:-1][mask])
    C = np.zeros((len(Y) - 1, f.shape[0]))
    C[mask], ok = solve_batch(designs, Y[1:][mask], cfg.solver_mode, lam=cfg.lambda2,
                              tau=cfg.tau, tol=cfg.solver_tol, max_iter=cfg.coef_max_iter,
                              x0=None if C0 is None else C0[mask])
    return C, int((~ok).sum())


def dynamics_rmse(model, Y, C, mask):
    """Relative error of the one-step dynamics reconstruction over valid transitions."""
    pred = np.einsum("tm,mij,tj->ti", C[mask], model.f, Y[:-1][mask])
    return rmse_relative(Y[1:][mask], pred)


def train_identity_observation(traj, M, cfg, model=None, callback=None):
    """Dictionary learning of the operators with ``D`` fixed to the identity.

    Each epoch solves ``c_t = argmin 1/2 ||y_t - sum_m c_m f_m y_{t-1}||^2 + lambda2 ||c||_1``
    (or the configured constrained / pseudo-inverse variant) for all ``t``
    at once, then takes one projected gradient step on the operators.
    Plateau perturbation and stopping follow :func:`train_discrete`, with
    the error measured on the dynamics reconstruction, since ``X = Y``.

    Returns ``(model, path, trace)``.
    """
    if not isinstance(traj, Trajectory):
        traj = Trajectory(traj)
    if M < 1:
        raise DomainError("M must be >= 1")
    rng = np.random.default_rng(cfg.rng_seed)
    Y = traj.samples
    k = traj.k
    if model is None:
        f = np.stack([normalize_operator(rng.standard_normal((k, k)), rng) for _ in range(M)])
        model = DiscreteModel(np.eye(k), f)
    mask = traj.transition_mask()
    eta_f = cfg.eta_f
    trace = TrainTrace()
    C = None
    degenerate = np.linalg.norm(Y[1:][mask]) == 0
    for epoch in range(cfg.max_epochs):
        C, _ = _identity_coefficients(model.f, Y, mask, cfg, C)
        err = 0.0 if degenerate else dynamics_rmse(model, Y, C, mask)
        trace.rmse.append(err)
        trace.final_epoch = epoch + 1
        if err < cfg.conv_tol:
            break
        model = update_f(model, Y[:-1][mask], Y[1:][mask], C[mask], eta_f, rng)
        eta_f *= cfg.gamma
        if _plateau(trace.rmse, cfg.plateau_window, cfg.conv_tol):
            model = perturb_dictionary(model, cfg.perturb_sigma, rng)
            trace.perturbation_events.append(epoch)
        if callback is not None:
            callback(epoch, model, C)
    C, failures = _identity_coefficients(model.f, Y, mask, cfg, C)
    return model, CoefficientPath(Y.copy(), C, failures), trace
