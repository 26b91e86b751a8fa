"""Dense complex eigenvalues: balance, Hessenberg reduction, shifted QR.

Only eigenvalues are computed, so rotations are applied to the active
unreduced window of the Hessenberg matrix and nothing outside it.
"""

from __future__ import annotations

import numpy as np

DEFAULT_MAX_DIM = 2000
_EPS = np.finfo(float).eps


class EigensolverError(RuntimeError):
    """Shifted QR failed to converge within the iteration cap."""

    def __init__(self, message, size):
        super().__init__(message)
        self.size = size


def _isolate(A):
    """Permutation part of balancing.

    Moves rows whose off-diagonal part (inside the active range) vanishes to
    the bottom and such columns to the top.  Returns ``(A, lo, hi)``; the
    diagonal entries outside ``[lo, hi]`` are eigenvalues.
    """
    n = A.shape[0]
    lo, hi = 0, n - 1
    nz = A != 0
    found = True
    while found and hi > lo:
        found = False
        for j in range(hi, lo - 1, -1):
            row = nz[j, lo : hi + 1].copy()
            row[j - lo] = False
            if not row.any():
                _swap(A, nz, j, hi)
                hi -= 1
                found = True
                break
    found = True
    while found and hi > lo:
        found = False
        for j in range(lo, hi + 1):
            col = nz[lo : hi + 1, j].copy()
            col[j - lo] = False
            if not col.any():
                _swap(A, nz, j, lo)
                lo += 1
                found = True
                break
    return A, lo, hi


def _swap(A, nz, i, j):
    if i == j:
        return
    for M in (A, nz):
        M[[i, j], :] = M[[j, i], :]
        M[:, [i, j]] = M[:, [j, i]]


def _scale(A, lo, hi):
    """Diagonal scaling by powers of two so row and column norms match."""
    sub = A[lo : hi + 1, lo : hi + 1]
    m = sub.shape[0]
    if m < 2:
        return
    d = np.ones(m)
    for _ in range(100):
        converged = True
        for i in range(m):
            c = np.abs(sub[:, i]).sum() - abs(sub[i, i])
            r = np.abs(sub[i, :]).sum() - abs(sub[i, i])
            if c == 0 or r == 0:
                continue
            f = 1.0
            s = c + r
            while c < r / 2:
                c *= 2
                r /= 2
                f *= 2
            while c >= r * 2:
                c /= 2
                r *= 2
                f /= 2
            if (c + r) < 0.95 * s:
                converged = False
                d[i] *= f
                sub[i, :] /= f
                sub[:, i] *= f
        if converged:
            break


def hessenberg(A):
    """Reduce to upper Hessenberg form by Householder reflections (in place)."""
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0:
            continue
        v = x.copy()
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        A[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ A[k + 1 :, k:])
        A[:, k + 1 :] -= 2.0 * np.outer(A[:, k + 1 :] @ v, v.conj())
        A[k + 2 :, k] = 0.0
    return A


def _wilkinson(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closer to d
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4 - det)
    e1 = tr / 2 + disc
    e2 = tr / 2 - disc
    return e1 if abs(e1 - d) <= abs(e2 - d) else e2


def _givens(f, g):
    # unitary G with G @ [f, g] = [r, 0]
    if g == 0:
        return 1.0, 0.0j
    if f == 0:
        return 0.0, np.conj(g) / abs(g)
    nf = abs(f)
    r = np.hypot(nf, abs(g))
    c = nf / r
    s = (f / nf) * np.conj(g) / r
    return c, s


def hessenberg_qr(H, max_iter=None):
    """Eigenvalues of an upper Hessenberg matrix by single-shift complex QR.

    Wilkinson shifts, with an exceptional shift every 10 iterations spent on
    one eigenvalue.  The total iteration count is capped at ``30 * n``.
    """
    H = np.array(H, dtype=complex)
    n = H.shape[0]
    if max_iter is None:
        max_iter = 30 * max(n, 1)
    eig = np.empty(n, dtype=complex)
    norm = np.abs(H).sum() or 1.0
    hi = n - 1
    total = 0
    stall = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            s = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if s == 0:
                s = norm
            if abs(H[lo, lo - 1]) <= _EPS * s:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            stall = 0
            continue
        total += 1
        stall += 1
        if total > max_iter:
            raise EigensolverError(
                f"shifted QR did not converge after {max_iter} iterations "
                f"(unreduced submatrix of size {hi - lo + 1})",
                size=hi - lo + 1,
            )
        if stall % 10 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j) / np.sqrt(2)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        W = H[lo : hi + 1, lo : hi + 1]
        m = W.shape[0]
        W[np.arange(m), np.arange(m)] -= mu
        rots = []
        for i in range(m - 1):
            c, s = _givens(W[i, i], W[i + 1, i])
            ri = W[i, i:].copy()
            rj = W[i + 1, i:].copy()
            W[i, i:] = c * ri + s * rj
            W[i + 1, i:] = -np.conj(s) * ri + c * rj
            W[i + 1, i] = 0.0
            rots.append((c, s))
        for i, (c, s) in enumerate(rots):
            top = min(i + 2, m - 1)
            ci = W[: top + 1, i].copy()
            cj = W[: top + 1, i + 1].copy()
            W[: top + 1, i] = c * ci + np.conj(s) * cj
            W[: top + 1, i + 1] = -s * ci + c * cj
        W[np.arange(m), np.arange(m)] += mu
    return eig


def dense_eigenvalues(matrix, max_dim: int = DEFAULT_MAX_DIM, backend: str = "qr"):
    """All eigenvalues of a dense complex square matrix.

    ``backend="qr"`` runs the in-house balance / Hessenberg / shifted-QR path;
    ``backend="lapack"`` defers to :func:`scipy.linalg.eigvals` and is meant
    for cross-checks.
    """
    A = np.array(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > max_dim:
        raise ValueError(f"matrix dimension {n} exceeds the cap {max_dim}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if n == 0:
        return np.empty(0, dtype=complex)
    if backend == "lapack":
        import scipy.linalg

        return scipy.linalg.eigvals(A)
    if backend != "qr":
        raise ValueError(f"unknown backend {backend!r}")
    A, lo, hi = _isolate(A)
    _scale(A, lo, hi)
    isolated = np.concatenate([np.diag(A)[:lo], np.diag(A)[hi + 1 :]])
    core = A[lo : hi + 1, lo : hi + 1].copy()
    if core.shape[0] == 0:
        return isolated
    hessenberg(core)
    return np.concatenate([hessenberg_qr(core), isolated])
