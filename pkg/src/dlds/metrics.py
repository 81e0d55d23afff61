"""Evaluation metrics.

Multichannel inputs are flattened (channels concatenated) before computing
the scalar Pearson r / R^2; per-channel values are reported alongside.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError, DomainError


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def pearson_r(a, b):
    """Sample Pearson correlation of two equally long (flattened) series."""
    a, b = _pair(a, b)
    a, b = a.ravel(), b.ravel()
    if a.size < 2:
        raise DomainError("need at least 2 samples")
    da, db = a - a.mean(), b - b.mean()
    na, nb = np.sqrt(da @ da), np.sqrt(db @ db)
    if na == 0.0 or nb == 0.0:
        raise DomainError("correlation undefined for a constant series")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def r2_score(truth, pred):
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    truth, pred = _pair(truth, pred)
    truth, pred = truth.ravel(), pred.ravel()
    ss_tot = np.sum((truth - truth.mean()) ** 2)
    if ss_tot == 0.0:
        raise DomainError("R^2 undefined for constant truth")
    return float(1.0 - np.sum((truth - pred) ** 2) / ss_tot)


def rmse_relative(truth, pred):
    """``||truth - pred||_F / ||truth||_F``."""
    truth, pred = _pair(truth, pred)
    denom = np.linalg.norm(truth)
    if denom == 0.0:
        raise DomainError("relative error undefined for all-zero truth")
    return float(np.linalg.norm(truth - pred) / denom)


def _cosine_matrix(A, B):
    A = np.asarray(A, dtype=float).reshape(len(A), -1)
    B = np.asarray(B, dtype=float).reshape(len(B), -1)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    na[na == 0] = 1.0
    nb[nb == 0] = 1.0
    return (A @ B.T) / np.outer(na, nb)


def align_dictionaries(learned, truth):
    """Match learned operators to ground-truth ones up to order and sign.

    Uses the optimal assignment (Hungarian method) on the absolute cosine
    similarity ``|<A, B>_F| / (||A||_F ||B||_F)``.

    Returns
    -------
    assignment : ndarray of int
        ``assignment[i]`` is the index of the learned operator matched to
        ``truth[i]``.
    scores : ndarray
        Matched absolute cosines, in ``[0, 1]``.
    signs : ndarray
        Sign that maps each matched learned operator onto its truth.
    """
    learned = np.asarray(learned, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if learned.shape != truth.shape:
        raise DimensionError(f"shape mismatch {learned.shape} vs {truth.shape}")
    cos = _cosine_matrix(truth, learned)
    rows, cols = linear_sum_assignment(-np.abs(cos))
    assignment = np.empty(len(truth), dtype=int)
    assignment[rows] = cols
    matched = cos[np.arange(len(truth)), assignment]
    return assignment, np.clip(np.abs(matched), 0.0, 1.0), np.where(matched < 0, -1.0, 1.0)


@dataclass
class EvalReport:
    pearson_r: float
    r2: float
    rmse: float
    per_channel: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def evaluate(truth, pred):
    """Flattened and per-channel Pearson r, R^2 and relative RMSE."""
    truth, pred = _pair(truth, pred)
    truth2 = truth.reshape(truth.shape[0], -1)
    pred2 = pred.reshape(pred.shape[0], -1)
    per = {"pearson_r": [], "r2": [], "rmse": []}
    for j in range(truth2.shape[1]):
        for key, fn in (("pearson_r", pearson_r), ("r2", r2_score), ("rmse", rmse_relative)):
            try:
                per[key].append(fn(truth2[:, j], pred2[:, j]))
            except DomainError:
                per[key].append(float("nan"))
    return EvalReport(pearson_r(truth2, pred2), r2_score(truth2, pred2),
                      rmse_relative(truth2, pred2), per)
