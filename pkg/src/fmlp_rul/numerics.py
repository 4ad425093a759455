"""Deterministic numerical kernels shared by the FPCA and network code.

Everything here is 64-bit float. The eigensolver is a cyclic Jacobi
iteration: for the small dense symmetric matrices this package needs
(window lengths are at most a few dozen) it is fast, simple, and gives
bitwise-reproducible output once the sign convention below is applied.
"""

import numpy as np

from .errors import NumericError

# Jacobi stops when the off-diagonal Frobenius norm falls below this
# fraction of the matrix Frobenius norm.
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100

ASYMMETRY_TOL = 1e-10


def seeded_rng(seed: int) -> np.random.Generator:
    """Return the package-wide RNG (PCG64) for a 64-bit seed.

    PCG64 streams are fixed by numpy's random-generator compatibility
    policy, so an identical seed yields an identical stream on every
    platform.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def logistic(x: np.ndarray) -> np.ndarray:
    """Standard logistic 1/(1+e^-x), safe against exp overflow."""
    return 1.0 / (1.0 + np.exp(np.clip(-x, None, 700.0)))


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^T)/2 after checking A is square and nearly symmetric."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > ASYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not symmetric within tolerance")
    return (a + a.T) / 2.0


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so each coordinate sum is >= 0.

    On an exactly-zero sum the first nonzero coordinate is made positive,
    which makes the decomposition a deterministic function of its input.
    """
    for j in range(vectors.shape[1]):
        s = vectors[:, j].sum()
        if s < 0.0:
            vectors[:, j] = -vectors[:, j]
        elif s == 0.0:
            nonzero = np.nonzero(vectors[:, j])[0]
            if nonzero.size and vectors[nonzero[0], j] < 0.0:
                vectors[:, j] = -vectors[:, j]
    return vectors


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns, sign-fixed
    per ``_fix_signs``.

    Raises NumericError if the off-diagonal mass has not vanished after
    the sweep cap.
    """
    work = symmetrize(a).copy()
    m = work.shape[0]
    vectors = np.eye(m)
    if m == 1:
        return work.diagonal().copy(), vectors

    scale = np.linalg.norm(work)
    if scale == 0.0:
        return work.diagonal().copy(), vectors
    tol = _JACOBI_TOL * scale
    # Pivots below this cannot push the off-diagonal norm above tol.
    skip = tol / m

    for _ in range(_JACOBI_MAX_SWEEPS):
        off_diag = work.copy()
        np.fill_diagonal(off_diag, 0.0)
        if np.linalg.norm(off_diag) <= tol:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = work[p, q]
                if abs(apq) <= skip:
                    continue
                # Rutishauser's stable rotation parameters.
                gap = work[q, q] - work[p, p]
                if gap == 0.0:
                    t = 1.0
                else:
                    theta = gap / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                rot = np.array([[c, -s], [s, c]])
                work[[p, q], :] = rot @ work[[p, q], :]
                work[:, [p, q]] = work[:, [p, q]] @ rot.T
                work[p, q] = 0.0
                work[q, p] = 0.0
                vectors[:, [p, q]] = vectors[:, [p, q]] @ rot.T
    else:
        raise NumericError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    values = work.diagonal().copy()
    order = np.argsort(-values, kind="stable")
    return values[order], _fix_signs(vectors[:, order])


def discrete_integral(f: np.ndarray, g: np.ndarray) -> float:
    """Approximate the integral of f*g on a shared M-point grid: mean(f*g)."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError(f"length mismatch: {f.shape} vs {g.shape}")
    return float(np.mean(f * g))
