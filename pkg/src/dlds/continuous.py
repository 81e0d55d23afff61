"""Continuous-time decomposed dynamics with transport-operator generators.

Transport between consecutive samples::

    x_{t+1} = expm(sum_l c_{l,t} G_l) x_t

Generators are kept small by a Frobenius penalty rather than a norm
constraint. Training assumes an identity observation model.

The gradient of ``||x' - expm(A) x||^2`` with ``A = sum_l c_l G_l`` is
obtained from the adjoint Frechet derivative: with ``r = x' - expm(A) x``
and ``W = L(A^T, r x^T)``,

    d/dc_l = -2 <G_l, W>_F        d/dG_l = -2 c_l W
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import _expm, expm, expm_frechet_adjoint, operator_norm
from .solvers import soft_threshold
from .trajectory import Trajectory


@dataclass(frozen=True)
class ContinuousModel:
    """Dictionary of ``L`` generators, shape ``(L, p, p)``."""

    G: np.ndarray

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.ndim != 3 or G.shape[1] != G.shape[2]:
            raise DimensionError(f"generators must have shape (L, p, p), got {G.shape}")
        if not np.all(np.isfinite(G)):
            raise DomainError("generators have non-finite entries")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def L(self):
        return self.G.shape[0]

    @property
    def p(self):
        return self.G.shape[1]

    def frobenius_norms(self):
        return np.sqrt(np.sum(self.G ** 2, axis=(1, 2)))


@dataclass
class CtTrainTrace:
    loss: list = field(default_factory=list)
    final_epoch: int = 0

    def to_dict(self):
        return {"loss": list(map(float, self.loss)), "final_epoch": int(self.final_epoch)}


def _generator(model, c):
    c = np.asarray(c, dtype=float).ravel()
    if c.shape[0] != model.L:
        raise DimensionError(f"expected {model.L} coefficients, got {c.shape[0]}")
    return (c @ model.G.reshape(model.L, -1)).reshape(model.p, model.p)


def propagate(model, x, c, tau=1.0):
    """``expm(tau * sum_l c_l G_l) @ x``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.p:
        raise DimensionError(f"state has dim {x.shape[0]}, model expects {model.p}")
    if not np.isfinite(tau):
        raise DomainError("tau must be finite")
    return expm(tau * _generator(model, c)) @ x


def pair_loss_and_grads(model, x, x_next, c):
    """Squared transport residual of one pair and its gradients.

    Returns ``(loss, grad_c, grad_G)`` for ``||x_next - expm(sum c G) x||^2``
    (no penalty terms).
    """
    A = _generator(model, c)
    r = x_next - expm(A) @ x
    W = expm_frechet_adjoint(A, np.outer(r, x))
    grad_c = -2.0 * np.einsum("lij,ij->l", model.G, W)
    grad_G = -2.0 * np.asarray(c, dtype=float)[:, None, None] * W[None]
    return float(r @ r), grad_c, grad_G


def ct_loss(model, x_pairs, c_seq, lambda_c, lambda_G):
    """Total transport loss with l1 (coefficients) and Frobenius (generators) penalties.

    ``x_pairs`` is a sequence of ``(x_t, x_next)``; ``c_seq`` has one row per pair.
    """
    total = 0.0
    for (x, x_next), c in zip(x_pairs, c_seq):
        r = _residual(model, np.asarray(x, float), np.asarray(x_next, float), c)
        total += float(r @ r) + lambda_c * float(np.abs(c).sum())
    return total + lambda_G * float(np.sum(model.G ** 2))


def _residual(model, x, x_next, c):
    return x_next - _expm(_generator(model, c)) @ x


def _grad_c(model, c, r, x):
    W = expm_frechet_adjoint(_generator(model, c), np.outer(r, x))
    return -2.0 * np.einsum("lij,ij->l", model.G, W)


def infer_c_step(model, x, x_next, c_init, cfg, return_history=False):
    """Proximal gradient on one pair's coefficients.

    Starts from ``c_init`` and runs up to ``cfg.inner_c_iters`` accelerated
    proximal gradient iterations (gradient step plus soft-thresholding at
    ``lambda_c * step``) with function-value restart. The first trial step
    is ``cfg.eta_c``; a step is halved until the objective at the new
    point does not exceed the current one and doubled after every accepted
    iteration. Accepted iterates are therefore monotone in the pair
    objective. Stops once the relative decrease falls below ``cfg.c_tol``.
    """
    x = np.asarray(x, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    c = np.asarray(c_init, dtype=float).copy()
    lam = cfg.lambda_c

    def evaluate(v):
        r = _residual(model, x, x_next, v)
        return r, float(r @ r) + lam * float(np.abs(v).sum())

    r, obj = evaluate(c)
    history = [obj]
    step = cfg.eta_c
    c_prev, t_mom = c, 1.0
    for _ in range(cfg.inner_c_iters):
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom ** 2))
        y = c + ((t_mom - 1.0) / t_next) * (c - c_prev)
        r_y, obj_y = (r, obj) if y is c or np.array_equal(y, c) else evaluate(y)
        if obj_y > obj:  # extrapolation went uphill: restart from c
            y, r_y, obj_y, t_next = c, r, obj, 1.0
        g = _grad_c(model, y, r_y, x)
        for _ in range(40):
            cand = soft_threshold(y - step * g, lam * step)
            r_cand, val = evaluate(cand)
            if val <= obj:
                break
            step *= 0.5
        else:
            break
        done = obj - val <= cfg.c_tol * max(obj, 1e-300)
        c_prev, c, r, obj, t_mom = c, cand, r_cand, val, t_next
        history.append(obj)
        if done:
            break
        step *= 2.0
    return (c, history) if return_history else c


def update_G_step(model, x, x_next, c, eta_G, lambda_G):
    """One gradient step on every generator for one pair.

    Gradient of the pair's transport residual plus ``2 lambda_G G_l`` from
    the Frobenius penalty.
    """
    _, _, gG = pair_loss_and_grads(model, np.asarray(x, float), np.asarray(x_next, float), c)
    return ContinuousModel(model.G - eta_G * (gG + 2.0 * lambda_G * model.G))


def random_ct_model(p, L, rng):
    """Gaussian generators, each scaled to unit operator norm."""
    G = rng.standard_normal((L, p, p))
    return ContinuousModel(np.stack([g / operator_norm(g) for g in G]))


def infer_coefficients(model, traj, cfg, C_init=None, iters=None):
    """Coefficients for every valid pair of a trajectory under a fixed model.

    Rows of segment-start transitions stay zero.
    """
    Y = traj.samples if isinstance(traj, Trajectory) else np.asarray(traj, float)
    mask = traj.transition_mask() if isinstance(traj, Trajectory) else np.ones(len(Y) - 1, bool)
    C = np.zeros((len(Y) - 1, model.L)) if C_init is None else np.array(C_init, dtype=float)
    run_cfg = cfg if iters is None else _with(cfg, inner_c_iters=iters)
    for t in np.nonzero(mask)[0]:
        C[t] = infer_c_step(model, Y[t], Y[t + 1], C[t], run_cfg)
    return C


def _with(cfg, **changes):
    return replace(cfg, **changes)


def one_step_predict(model, traj, C):
    """``expm(sum_l c_{l,t} G_l) y_t`` for every transition, shape ``(T - 1, p)``."""
    Y = traj.samples if isinstance(traj, Trajectory) else np.asarray(traj, float)
    return np.stack([expm(_generator(model, C[t])) @ Y[t] for t in range(len(Y) - 1)])


def train_continuous(traj, L, cfg, model=None, callback=None):
    """Learn ``L`` generators from a directly observed trajectory.

    Each epoch walks the time-adjacent pairs in order. For every pair the
    coefficients are drawn from ``N(0, c_init_sigma^2)`` (or warm-started
    from the previous epoch), refined with :func:`infer_c_step`, and then
    the generators take ``inner_G_iters`` gradient steps. Learning rates
    decay by ``gamma`` per epoch. The Frobenius penalty is split evenly
    over the pair updates of an epoch. Stops after ``max_epochs`` or when the
    relative change of the epoch loss drops below ``conv_tol``.

    Returns ``(model, C, trace)``; ``C`` is re-inferred under the final
    model, warm-started from the last epoch's coefficients.
    """
    if not isinstance(traj, Trajectory):
        traj = Trajectory(traj)
    if L < 1:
        raise DomainError("L must be >= 1")
    rng = np.random.default_rng(cfg.rng_seed)
    if model is None:
        model = random_ct_model(traj.k, L, rng)
    Y = traj.samples
    mask = traj.transition_mask()
    pairs = np.nonzero(mask)[0]
    C = np.zeros((len(Y) - 1, L))
    eta_G, eta_c = cfg.eta_G, cfg.eta_c
    # the Frobenius term appears once in the summed loss; each per-pair step
    # carries its 1/N share so an epoch applies it once in total
    lam_G = cfg.lambda_G / max(len(pairs), 1)
    trace = CtTrainTrace()
    for epoch in range(cfg.max_epochs):
        step_cfg = _with(cfg, eta_c=eta_c)
        for t in pairs:
            if cfg.warm_start and epoch > 0:
                c0 = C[t]
            else:
                c0 = rng.normal(0.0, cfg.c_init_sigma, L)
            C[t] = infer_c_step(model, Y[t], Y[t + 1], c0, step_cfg)
            for _ in range(cfg.inner_G_iters):
                model = update_G_step(model, Y[t], Y[t + 1], C[t], eta_G, lam_G)
        eta_G *= cfg.gamma
        eta_c *= cfg.gamma
        loss = ct_loss(model, [(Y[t], Y[t + 1]) for t in pairs], C[pairs], cfg.lambda_c, cfg.lambda_G)
        trace.loss.append(loss)
        trace.final_epoch = epoch + 1
        if callback is not None:
            callback(epoch, model, C)
        if len(trace.loss) > 1 and abs(trace.loss[-2] - loss) <= cfg.conv_tol * max(abs(loss), 1e-300):
            break
    C = infer_coefficients(model, traj, cfg, C_init=C)
    return model, C, trace
