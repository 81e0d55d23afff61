"""Dense linear-algebra kernels.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 in numpy's
default row-major (C) layout.

The matrix exponential follows the scaling-and-squaring scheme of
Higham (2005), "The scaling and squaring method for the matrix exponential
revisited": a diagonal Pade approximant of degree 3, 5, 7, 9 or 13 is chosen
from the 1-norm of the input, and degree 13 is combined with scaling by a
power of two followed by repeated squaring.
"""

import numpy as np

from .errors import DimensionError, DomainError

__all__ = ["expm", "expm_frechet", "expm_and_frechet", "expm_frechet_adjoint", "operator_norm", "frobenius_norm"]

# Backward-error thresholds for the 1-norm (Higham 2005, Table 2.3).
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}


def _check_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def _pade_low(A, m):
    b = _PADE[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    # odd and even parts as polynomials in A^2, evaluated by Horner's rule
    U = b[m] * A2 + b[m - 2] * ident
    V = b[m - 1] * A2 + b[m - 3] * ident
    for j in range(m - 4, 0, -2):
        U = U @ A2 + b[j] * ident
        V = V @ A2 + b[j - 1] * ident
    return A @ U, V


def _pade13(A):
    b = _PADE[13]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return U, V


def expm(A):
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Parameters
    ----------
    A : (n, n) array_like
        Real square matrix with finite entries.

    Returns
    -------
    (n, n) ndarray

    Raises
    ------
    DimensionError
        If ``A`` is not square.
    DomainError
        If ``A`` contains NaN or Inf.
    """
    A = _check_square(A)
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    return _expm(A)


def _expm(A):
    norm1 = np.abs(A).sum(axis=0).max()
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_low(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13]))))
    U, V = _pade13(A / 2.0 ** s)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def expm_and_frechet(A, E):
    """``(expm(A), expm_frechet(A, E))`` from one block exponential.

    Uses the block identity ``expm([[A, E], [0, A]]) = [[e^A, L(A, E)], [0, e^A]]``.
    ``E`` is rescaled to the norm of ``A`` before the block exponential and the
    result scaled back, which keeps the block well balanced.
    """
    A = _check_square(A)
    E = _check_square(E, "E")
    if A.shape != E.shape:
        raise DimensionError(f"shape mismatch: A {A.shape} vs E {E.shape}")
    n = A.shape[0]
    e_norm = np.linalg.norm(E)
    if e_norm == 0.0:
        return _expm(A), np.zeros_like(A)
    scale = max(np.linalg.norm(A), 1.0) / e_norm
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A
    block[n:, n:] = A
    block[:n, n:] = E * scale
    big = _expm(block)
    return big[:n, :n], big[:n, n:] / scale


def expm_frechet(A, E):
    """Directional derivative of :func:`expm` at ``A`` along ``E``."""
    return expm_and_frechet(A, E)[1]


def expm_frechet_adjoint(A, W):
    """Adjoint of ``E -> expm_frechet(A, E)`` in the Frobenius inner product.

    ``<expm_frechet(A, E), W> == <E, expm_frechet_adjoint(A, W)>`` for all ``E``.
    This is what turns the gradient of ``||b - expm(A) x||^2`` into a single
    Frechet evaluation instead of one per direction.
    """
    return expm_frechet(np.asarray(A, dtype=float).T, W)


def operator_norm(A, max_iter=1000, rtol=1e-12, direct_below=16):
    """Spectral norm (largest singular value).

    Matrices whose smaller side is at most ``direct_below`` go through a
    symmetric eigen-solve of the smaller Gram matrix, which at that size is
    both cheaper and more accurate than iterating. Larger ones use power
    iteration on ``A.T @ A`` and fall back to a full SVD if the
    eigen-residual has not dropped below ``rtol`` after ``max_iter`` steps.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        raise DomainError("operator norm of an empty matrix")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    if A.ndim == 1:
        return float(np.sqrt(A @ A))
    if min(A.shape) <= direct_below:
        B = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
        return float(np.sqrt(max(np.linalg.eigvalsh(B)[-1], 0.0)))
    B = A.T @ A
    scale = np.abs(B).max()
    if scale == 0.0:
        return 0.0
    B = B / scale
    # fixed, generic start vector keeps the routine deterministic
    v = 1.0 + 0.01 * np.arange(B.shape[0], dtype=float) / B.shape[0]
    v /= np.sqrt(v @ v)
    for _ in range(max_iter):
        w = B @ v
        mu = v @ w
        if mu <= 0.0:
            break
        r = w - mu * v
        if np.sqrt(r @ r) <= rtol * mu:
            return float(np.sqrt(mu * scale))
        v = w / np.sqrt(w @ w)
    return float(np.linalg.svd(A, compute_uv=False)[0])


def frobenius_norm(A):
    """Square root of the sum of squared entries."""
    return float(np.sqrt(np.sum(np.square(np.asarray(A, dtype=float)))))
