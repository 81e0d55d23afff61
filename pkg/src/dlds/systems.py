"""Ground-truth synthetic systems used as training data.

Every generator is deterministic given its :class:`SystemSpec`, including
the seed. Rollouts use classical fourth-order Runge-Kutta.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError
from .trajectory import Trajectory

KINDS = ("fhn", "lorenz", "spiral_speed", "rotating_center", "scaled_permutation")

# Defaults per kind. ``x0`` is listed separately because its length depends on the kind.
DEFAULTS = {
    "fhn": dict(T=1000, dt=0.2, x0=(-0.5, 0.0),
                params=dict(a=0.8, b=0.7, tau=20.0, I_ext=0.5)),
    "lorenz": dict(T=1000, dt=0.01, x0=(1.0, 1.0, 1.0),
                   params=dict(alpha=10.0, beta=28.0, gamma=8.0 / 3.0)),
    "spiral_speed": dict(T=400, dt=0.05, x0=(1.0, 0.0),
                         params=dict(decay=0.05, omega=1.0, segment_time=5.0,
                                     speeds=(1.0, 2.0, 3.0, 4.0))),
    "rotating_center": dict(T=2000, dt=0.05, x0=(1.0, 0.3, 0.2),
                            params=dict(omega=1.0, segment_time=5.0, thetas=None)),
    "scaled_permutation": dict(T=2000, dt=1.0, x0=None,
                               params=dict(k=36, n_ops=1, sparsity=1, segment_length=20,
                                           active_pixels=4, scale_low=0.5, scale_high=1.5)),
}


@dataclass
class SystemSpec:
    """Which system to simulate and how.

    ``params`` holds kind-specific values and is merged over ``DEFAULTS``;
    ``T``, ``dt`` and ``x0`` left as ``None`` take the kind's default.
    """

    kind: str
    params: dict = field(default_factory=dict)
    T: int = None
    dt: float = None
    x0: tuple = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown system kind {self.kind!r}; expected one of {KINDS}")
        d = DEFAULTS[self.kind]
        unknown = set(self.params) - set(d["params"])
        if unknown:
            raise DomainError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        self.params = {**d["params"], **self.params}
        if self.T is None:
            self.T = d["T"]
        if self.dt is None:
            self.dt = d["dt"]
        if self.x0 is None and d["x0"] is not None:
            self.x0 = d["x0"]
        self.T = int(self.T)
        self.dt = float(self.dt)
        if self.T < 2:
            raise DomainError("T must be >= 2")
        if self.dt <= 0:
            raise DomainError("dt must be positive")


def integrate_rk4(f, x0, T, dt):
    """Roll out ``x' = f(x)`` for ``T`` samples (``x0`` included) with RK4.

    Returns the ``(T, n)`` array of states. Raises :class:`DivergenceError`
    carrying the index of the first non-finite state.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    x = np.array(x0, dtype=float)
    out = np.empty((int(T), x.size))
    out[0] = x
    h2 = 0.5 * dt
    # overflow is caught below and reported as a DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, int(T)):
            k1 = f(x)
            k2 = f(x + h2 * k1)
            k3 = f(x + h2 * k2)
            k4 = f(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"state became non-finite at step {n}", n)
            out[n] = x
    return out


def fhn_field(a=0.8, b=0.7, tau=20.0, I_ext=0.5):
    def f(x):
        v, w = x
        return np.array([v - v ** 3 / 3.0 - w + I_ext, (v + a - b * w) / tau])
    return f


def lorenz_field(alpha=10.0, beta=28.0, gamma=8.0 / 3.0):
    def f(s):
        x, y, z = s
        return np.array([alpha * (y - x), x * (beta - z) - y, x * y - gamma * z])
    return f


def gen_fhn(spec):
    p = spec.params
    Y = integrate_rk4(fhn_field(p["a"], p["b"], p["tau"], p["I_ext"]), spec.x0, spec.T, spec.dt)
    return Trajectory(Y, spec.dt)


def gen_lorenz(spec):
    p = spec.params
    Y = integrate_rk4(lorenz_field(p["alpha"], p["beta"], p["gamma"]), spec.x0, spec.T, spec.dt)
    return Trajectory(Y, spec.dt)


def spiral_generator(decay=0.05, omega=1.0):
    """Decaying planar spiral ``[[-decay, -omega], [omega, -decay]]``."""
    return np.array([[-decay, -omega], [omega, -decay]])


def _piecewise_linear(generators, x0, T, dt, steps_per_segment):
    """RK4 rollout of ``x' = A_j x`` where ``A_j`` switches every segment."""
    out = np.empty((T, len(x0)))
    out[0] = x0
    n = 1
    x = np.array(x0, dtype=float)
    j = 0
    while n < T:
        A = generators[min(j, len(generators) - 1)]
        steps = min(steps_per_segment, T - n)
        seg = integrate_rk4(lambda s, A=A: A @ s, x, steps + 1, dt)
        out[n:n + steps] = seg[1:]
        x = seg[-1]
        n += steps
        j += 1
    return out


def _steps_per_segment(segment_time, dt):
    steps = int(round(segment_time / dt))
    if steps < 1 or abs(steps * dt - segment_time) > 1e-9 * max(1.0, segment_time):
        raise DomainError(f"segment_time {segment_time} must be a multiple of dt {dt}")
    return steps


def gen_spiral_speed(spec):
    """Decaying 2-D spiral whose speed steps up every ``segment_time``.

    Sample ``n`` is labelled with the speed multiplier governing the step
    from ``n`` to ``n + 1``; labels change exactly at multiples of
    ``segment_time``.
    """
    p = spec.params
    A = spiral_generator(p["decay"], p["omega"])
    speeds = [float(s) for s in p["speeds"]]
    steps = _steps_per_segment(p["segment_time"], spec.dt)
    Y = _piecewise_linear([s * A for s in speeds], spec.x0, spec.T, spec.dt, steps)
    seg = np.minimum(np.arange(spec.T) // steps, len(speeds) - 1)
    return Trajectory(Y, spec.dt, labels=np.asarray(speeds)[seg])


def rotation_x(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def center_generator(omega=1.0):
    """Pure rotation in the x-y plane, zero dynamics along z.

    The plane contains the x-axis, so conjugating by a rotation about x
    actually tilts it; a y-z rotation would commute with every such
    conjugation.
    """
    return omega * np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def rotated_center_generator(theta, omega=1.0):
    R = rotation_x(theta)
    return R @ center_generator(omega) @ R.T


def gen_rotating_center(spec):
    """3-D center system re-oriented by a random x-axis rotation every segment.

    Labels carry the angle of each sample's segment. ``params['thetas']``
    overrides the random draw.
    """
    p = spec.params
    steps = _steps_per_segment(p["segment_time"], spec.dt)
    n_seg = -(-(spec.T - 1) // steps)
    if p["thetas"] is not None:
        thetas = np.resize(np.asarray(p["thetas"], dtype=float), n_seg)
    else:
        thetas = np.random.default_rng(spec.rng_seed).uniform(0.0, 2.0 * np.pi, n_seg)
    gens = [rotated_center_generator(th, p["omega"]) for th in thetas]
    Y = _piecewise_linear(gens, spec.x0, spec.T, spec.dt, steps)
    seg = np.minimum(np.arange(spec.T) // steps, n_seg - 1)
    return Trajectory(Y, spec.dt, labels=thetas[seg])


def random_scaled_permutation(k, rng, low=0.5, high=1.5):
    """``P @ diag(s)`` with ``P`` a random permutation and ``s ~ U[low, high]``."""
    P = np.eye(k)[rng.permutation(k)]
    return P * rng.uniform(low, high, size=k)[None, :]


def gen_scaled_permutation(spec):
    """Sparse pixels moved around by a dictionary of scaled permutations.

    The trajectory is a concatenation of segments of ``segment_length``
    samples, each restarted from a fresh state with ``active_pixels``
    positive entries; a single orbit of a fixed linear map collapses onto
    its dominant eigenvector and cannot identify the whole operator. At each
    step ``sparsity`` operators are picked and mixed with positive weights,
    rescaled so the state keeps its norm.

    Returns
    -------
    traj : Trajectory
        Labels hold the segment index.
    ops : (n_ops, k, k) ndarray
        Ground-truth operators.
    coeffs : (T - 1, n_ops) ndarray
        Ground-truth coefficients; rows of segment-start transitions are zero.
    """
    p = spec.params
    k, n_ops, s = int(p["k"]), int(p["n_ops"]), int(p["sparsity"])
    if not 1 <= s <= n_ops:
        raise DomainError("sparsity must be between 1 and n_ops")
    rng = np.random.default_rng(spec.rng_seed)
    ops = np.stack([random_scaled_permutation(k, rng, p["scale_low"], p["scale_high"])
                    for _ in range(n_ops)])
    T, seg_len = spec.T, int(p["segment_length"])
    Y = np.zeros((T, k))
    C = np.zeros((T - 1, n_ops))
    starts = list(range(0, T, seg_len))
    for t in range(T):
        if t in starts:
            idx = rng.choice(k, size=min(int(p["active_pixels"]), k), replace=False)
            Y[t, idx] = rng.uniform(0.5, 1.5, size=idx.size)
            continue
        active = rng.choice(n_ops, size=s, replace=False)
        w = rng.uniform(0.5, 1.5, size=s)
        nxt = np.einsum("m,mij,j->i", w, ops[active], Y[t - 1])
        w *= np.linalg.norm(Y[t - 1]) / np.linalg.norm(nxt)
        C[t - 1, active] = w
        Y[t] = np.einsum("m,mij,j->i", w, ops[active], Y[t - 1])
    labels = np.arange(T) // seg_len
    return Trajectory(Y, spec.dt, labels=labels, segment_starts=tuple(starts)), ops, C


_GENERATORS = {
    "fhn": gen_fhn,
    "lorenz": gen_lorenz,
    "spiral_speed": gen_spiral_speed,
    "rotating_center": gen_rotating_center,
}


def generate(spec):
    """Trajectory for any kind; drops the ground truth of ``scaled_permutation``."""
    if spec.kind == "scaled_permutation":
        return gen_scaled_permutation(spec)[0]
    return _GENERATORS[spec.kind](spec)
