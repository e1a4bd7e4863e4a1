"""Dense small-matrix kernels used across the package.

Everything here assumes tiny matrices (dimension well below 100): a cyclic
Jacobi eigensolver, pseudoinverse built on it, generalized-eigenvalue
extremes, the block-diagonal column stacking map, and sliding-window column
shifts.
"""

import numpy as np

_EPS = np.finfo(float).eps


class InvalidInput(ValueError):
    """Raised on malformed numerical input (shape, finiteness)."""


class NotPositiveDefinite(ValueError):
    """Raised when an operation requires a positive definite matrix."""


def as_matrix(a, shape=None, name="matrix"):
    """Coerce to a finite 2-D float array, raising InvalidInput otherwise."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.size == 0:
        raise InvalidInput(f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{name} contains non-finite entries")
    if shape is not None and m.shape != tuple(shape):
        raise InvalidInput(f"{name} has shape {m.shape}, expected "
                           f"{tuple(shape)}")
    return m


def as_vector(a, length=None, name="vector"):
    v = np.asarray(a, dtype=float).reshape(-1)
    if v.size == 0:
        raise InvalidInput(f"{name} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} contains non-finite entries")
    if length is not None and v.size != length:
        raise InvalidInput(f"{name} has length {v.size}, expected {length}")
    return v


def symmetrize(a):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput("square matrix required")
    return 0.5 * (a + a.T)


def sym_eig(s, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). The input is
    symmetrized first; non-finite entries raise InvalidInput.
    """
    a = symmetrize(s).copy()
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a[0].copy(), v
    scale = np.max(np.abs(a)) + 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= n * _EPS * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.5 * _EPS * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                # rotate rows/cols p and q
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def spectral_norm(m):
    m = as_matrix(m)
    g = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    w, _ = sym_eig(g)
    return float(np.sqrt(max(w[-1], 0.0)))


def psd_tolerance(s_or_eigs):
    """Default PSD tolerance: 1e-9 * (1 + lambda_max)."""
    w = np.asarray(s_or_eigs, dtype=float)
    if w.ndim == 2:
        w, _ = sym_eig(w)
    return 1e-9 * (1.0 + max(float(w[-1]), 0.0))


def is_psd(s, tol=None):
    w, _ = sym_eig(s)
    if tol is None:
        tol = psd_tolerance(w)
    return float(w[0]) >= -tol


def is_pd(s, tol=None):
    w, _ = sym_eig(s)
    if tol is None:
        tol = psd_tolerance(w)
    return float(w[0]) >= tol


def pinv(m, tol=None):
    """Moore-Penrose pseudoinverse via eigendecomposition.

    Symmetric inputs are decomposed directly; otherwise the Gram matrix
    M^T M is used. `tol` is a threshold on singular values (default
    max(shape) * eps * sigma_max).
    """
    m = as_matrix(m)
    if tol is not None and tol < 0:
        raise InvalidInput("tol must be >= 0")
    r, c = m.shape
    if r == c and np.allclose(m, m.T, atol=1e-13 * (1.0 + np.max(np.abs(m)))):
        w, v = sym_eig(m)
        smax = np.max(np.abs(w)) if w.size else 0.0
        cut = tol if tol is not None else r * _EPS * smax
        inv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
        return (v * inv) @ v.T
    g = m.T @ m
    w, v = sym_eig(g)
    s = np.sqrt(np.clip(w, 0.0, None))
    smax = s[-1] if s.size else 0.0
    cut = tol if tol is not None else max(r, c) * _EPS * smax
    inv2 = np.where(s > cut, 1.0 / np.where(w <= 0.0, 1.0, w), 0.0)
    return (v * inv2) @ v.T @ m.T


def _inv_sqrt_pd(b, rel_tol=1e-12):
    w, v = sym_eig(b)
    if w[0] <= rel_tol * max(float(w[-1]), rel_tol):
        raise NotPositiveDefinite("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


def gen_eig_max(a, b):
    """Largest generalized eigenvalue of (A, B) with B > 0.

    Equals lambda_max(B^{-1/2} A B^{-1/2}) = min{t : A <= t B}.
    """
    a = symmetrize(a)
    bmh = _inv_sqrt_pd(as_matrix(b))
    w, _ = sym_eig(bmh @ a @ bmh)
    return float(w[-1])


def gen_eig_min(a, b):
    """Smallest generalized eigenvalue of (A, B) with B > 0."""
    a = symmetrize(a)
    bmh = _inv_sqrt_pd(as_matrix(b))
    w, _ = sym_eig(bmh @ a @ bmh)
    return float(w[0])


def pd_inverse(s):
    """Inverse of a symmetric positive definite matrix."""
    w, v = sym_eig(s)
    if w[0] <= 1e-12 * max(float(w[-1]), 1e-12):
        raise NotPositiveDefinite("matrix is not positive definite")
    return (v / w) @ v.T


def n_map(z):
    """Block-diagonal stacking of the columns of an n x T matrix.

    Column t of the nT x T result holds column t of Z in block t and zeros
    elsewhere.
    """
    z = as_matrix(z)
    n, t = z.shape
    out = np.zeros((n * t, t))
    for i in range(t):
        out[i * n:(i + 1) * n, i] = z[:, i]
    return out


def shift_append(m, col):
    """Drop the first column of m and append col on the right."""
    m = as_matrix(m)
    col = as_vector(col)
    if col.size != m.shape[0]:
        raise InvalidInput("column length must match the row count")
    out = np.empty_like(m)
    out[:, :-1] = m[:, 1:]
    out[:, -1] = col
    return out
