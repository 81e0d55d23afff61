"""l1-regularized / l1-constrained least squares and the pseudo-inverse path.

Three problem modes share one container:

* ``penalized``:       min_c  1/2 ||A c - b||^2 + lam ||c||_1
* ``constrained``:     min_c  ||A c - b||_2   s.t. ||c||_1 <= tau
* ``pseudo_inverse``:  c = pinv(A) b

Both iterative solvers are monotone accelerated proximal-gradient schemes
(MFISTA, Beck & Teboulle 2009) with fixed step ``1 / ||A||_2^2``. The
monotone variant keeps the reported objective non-increasing, which plain
FISTA does not guarantee. Non-convergence is reported, never raised.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import operator_norm

MODES = ("penalized", "constrained", "pseudo_inverse")


@dataclass(frozen=True)
class LassoProblem:
    design: np.ndarray
    target: np.ndarray
    mode: str = "penalized"
    lam: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.design, dtype=float))
        b = np.asarray(self.target, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise DimensionError(f"design has {A.shape[0]} rows, target has {b.shape[0]} entries")
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.lam < 0:
            raise DomainError("lam must be >= 0")
        if self.tau < 0:
            raise DomainError("tau must be >= 0")
        object.__setattr__(self, "design", A)
        object.__setattr__(self, "target", b)


@dataclass
class SolverReport:
    solution: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def soft_threshold(v, theta):
    """Entrywise ``sign(v) * max(|v| - theta, 0)``."""
    if theta < 0:
        raise DomainError("threshold must be >= 0")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def project_l1_ball(v, tau):
    """Euclidean projection onto ``{u : ||u||_1 <= tau}`` (Duchi et al. 2008)."""
    if tau < 0:
        raise DomainError("radius must be >= 0")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= tau:
        return v.copy()
    if tau == 0:
        return np.zeros_like(v)
    mu = np.sort(a.ravel())[::-1]
    cssv = np.cumsum(mu) - tau
    idx = np.arange(1, mu.size + 1)
    support = np.nonzero(mu - cssv / idx > 0)[0]
    if not support.size:
        # tau is below the rounding of the entries; the exact projection is
        # within tau of zero
        return np.zeros_like(v)
    rho = support[-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _mfista(A, b, prox, penalty, tol, max_iter, x0):
    """Shared monotone accelerated proximal-gradient loop.

    ``prox(z, step)`` is the proximal map and ``penalty(x)`` the value of the
    non-smooth term. Stops when the gradient mapping
    ``L * ||x - prox(x - grad / L)||`` is at most ``tol``.
    """
    m = A.shape[1]
    L = operator_norm(A) ** 2
    x = np.zeros(m) if x0 is None else prox(np.asarray(x0, dtype=float), 0.0)
    if L == 0.0:
        obj = 0.5 * float(b @ b) + penalty(x)
        return SolverReport(np.zeros(m), obj, 0, True, [obj])

    def objective(u):
        r = A @ u - b
        return 0.5 * float(r @ r) + penalty(u)

    step = 1.0 / L
    y = x.copy()
    t = 1.0
    obj = objective(x)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = prox(y - step * (A.T @ (A @ y - b)), step)
        fz = objective(z)
        x_prev = x
        if fz <= obj:
            x, obj_new = z, fz
        else:
            obj_new = obj
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        obj = obj_new
        history.append(obj)
        gm = x - prox(x - step * (A.T @ (A @ x - b)), step)
        if L * np.sqrt(gm @ gm) <= tol:
            converged = True
            break
    return SolverReport(x, obj, it, converged, history)


def solve_lasso_penalized(p, tol=1e-10, max_iter=5000, x0=None):
    """Minimise ``1/2 ||A c - b||^2 + lam ||c||_1``.

    On convergence every coordinate satisfies the subgradient condition to
    within ``tol``: ``|A_i^T (A c - b)| <= lam + tol``.
    """
    if p.mode != "penalized":
        raise DomainError(f"expected penalized problem, got {p.mode}")
    A, b, lam = p.design, p.target, p.lam

    def prox(z, step):
        return soft_threshold(z, lam * step)

    return _mfista(A, b, prox, lambda u: lam * np.abs(u).sum(), tol, max_iter, x0)


def solve_lasso_constrained(p, tol=1e-10, max_iter=10, x0=None):
    """Minimise ``||A c - b||_2`` subject to ``||c||_1 <= tau``.

    Runs projected MFISTA on the squared residual (same minimiser); the
    reported objective is the unsquared residual norm. The default cap of
    10 iterations is the inner-solve budget used during training.
    """
    if p.mode != "constrained":
        raise DomainError(f"expected constrained problem, got {p.mode}")
    A, b, tau = p.design, p.target, p.tau

    def prox(z, step):
        return project_l1_ball(z, tau)

    rep = _mfista(A, b, prox, lambda u: 0.0, tol, max_iter, x0)
    rep.objective = float(np.sqrt(2.0 * rep.objective))
    rep.history = [float(np.sqrt(2.0 * h)) for h in rep.history]
    return rep


def solve_pseudo_inverse(p, rcond=1e-12):
    """Minimum-norm least-squares solution ``pinv(A) b`` via SVD.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    if p.mode != "pseudo_inverse":
        raise DomainError(f"expected pseudo_inverse problem, got {p.mode}")
    A, b = p.design, p.target
    if A.size == 0:
        return SolverReport(np.zeros(A.shape[1]), float(np.linalg.norm(b)), 0, True)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * (s[0] if s.size else 0.0)
    c = Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])
    obj = float(np.linalg.norm(A @ c - b))
    return SolverReport(c, obj, 1, True, [obj])


def solve(p, tol=1e-10, max_iter=None, x0=None):
    """Dispatch on ``p.mode``."""
    if p.mode == "pseudo_inverse":
        return solve_pseudo_inverse(p)
    if p.mode == "constrained":
        return solve_lasso_constrained(p, tol, 10 if max_iter is None else max_iter, x0)
    return solve_lasso_penalized(p, tol, 5000 if max_iter is None else max_iter, x0)


def solve_batch(designs, targets, mode, lam=0.0, tau=0.0, tol=1e-10, max_iter=500, x0=None):
    """Solve ``N`` independent small problems of one mode at once.

    ``designs`` is ``(N, n, m)``, ``targets`` ``(N, n)``. Same algorithm and
    stopping rule as the single-problem solvers, applied per instance.

    Returns ``(solutions (N, m), converged (N,) bool)``.
    """
    A = np.asarray(designs, dtype=float)
    b = np.asarray(targets, dtype=float)
    N, _, m = A.shape
    if mode == "pseudo_inverse":
        return np.einsum("nij,nj->ni", np.linalg.pinv(A, rcond=1e-12), b), np.ones(N, bool)
    if mode == "penalized":
        def prox(z, step):
            return np.sign(z) * np.maximum(np.abs(z) - lam * step[:, None], 0.0)

        def penalty(u):
            return lam * np.abs(u).sum(axis=1)
    elif mode == "constrained":
        def prox(z, step):
            return _project_l1_rows(z, tau)

        def penalty(u):
            return np.zeros(len(u))
    else:
        raise DomainError(f"unknown mode {mode!r}")

    L = np.linalg.svd(A, compute_uv=False)[:, 0] ** 2
    live = L > 0
    step = np.where(live, 1.0 / np.where(live, L, 1.0), 0.0)

    def grad(u):
        return np.einsum("nij,ni->nj", A, np.einsum("nij,nj->ni", A, u) - b)

    def objective(u):
        r = np.einsum("nij,nj->ni", A, u) - b
        return 0.5 * np.sum(r * r, axis=1) + penalty(u)

    x = np.zeros((N, m)) if x0 is None else prox(np.array(x0, dtype=float), np.zeros(N))
    y = x.copy()
    t = 1.0
    obj = objective(x)
    done = ~live
    for _ in range(max_iter):
        z = prox(y - step[:, None] * grad(y), step)
        fz = objective(z)
        better = (fz <= obj)[:, None]
        x_prev = x
        x = np.where(better & ~done[:, None], z, x)
        obj = np.minimum(obj, np.where(done, obj, fz))
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        gm = np.linalg.norm(x - prox(x - step[:, None] * grad(x), step), axis=1) * np.where(live, L, 0.0)
        done = done | (gm <= tol)
        if done.all():
            break
    x[~live] = 0.0
    return x, done


def _project_l1_rows(V, tau):
    """Row-wise projection onto the l1 ball of radius ``tau``."""
    A = np.abs(V)
    inside = A.sum(axis=1) <= tau
    if tau == 0:
        return np.where(inside[:, None], V, 0.0)
    mu = -np.sort(-A, axis=1)
    cssv = np.cumsum(mu, axis=1) - tau
    idx = np.arange(1, V.shape[1] + 1)
    cond = mu - cssv / idx > 0
    rho = V.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = cssv[np.arange(len(V)), rho] / (rho + 1.0)
    theta = np.where(cond.any(axis=1), theta, np.inf)
    theta = np.where(inside, 0.0, theta)
    return np.sign(V) * np.maximum(A - theta[:, None], 0.0)
