"""Cyclic complex Jacobi sweeps, numpy fallback for the compiled kernel."""

import math

import numpy as np


def off_norm(a: np.ndarray) -> float:
    """Frobenius norm of the strictly off-diagonal part of ``a``."""
    mask = ~np.eye(a.shape[0], dtype=bool)
    return math.sqrt(float(np.sum(np.abs(a[mask]) ** 2)))


def jacobi_sweeps(a: np.ndarray, v: np.ndarray, tol: float, max_sweeps: int):
    """Diagonalize the Hermitian matrix ``a`` in place.

    ``v`` accumulates the rotations (start it at the identity); on return its
    columns are eigenvectors and ``diag(a)`` holds the eigenvalues.

    Returns ``(sweeps_used, final_off_norm)``. Convergence is not asserted
    here; callers compare the off-norm against ``tol``.
    """
    n = a.shape[0]
    off = off_norm(a)
    for sweep in range(max_sweeps):
        if off <= tol:
            return sweep, off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cph = phase.conjugate()
                # J restricted to (p, q): [[c, s], [-s*conj(ph), c*conj(ph)]]
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * cph * colq
                a[:, q] = s * colp + c * cph * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * phase * rowq
                a[q, :] = s * rowp + c * phase * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * cph * vq
                v[:, q] = s * vp + c * cph * vq
        off = off_norm(a)
    return max_sweeps, off
