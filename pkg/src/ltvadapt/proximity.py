"""Set of plant matrices consistent with a data window up to a noise bound.

For a window with regressor Z = [Xhat; U] and successor block X, the
consistency set collects the stacked transposed pairs Zhat = [A B]^T whose
one-step residual satisfies ([A B] Z - X)([A B] Z - X)^T <= F. The same
set has an ellipsoidal description centered at Zc with shape matrices
(M, Delta); both forms are implemented here together with sampling and
inflation utilities.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg


@dataclass(frozen=True)
class EllipsoidParams:
    M: np.ndarray
    Zc: np.ndarray
    Delta: np.ndarray


def ellipsoid_params(w, F):
    """Center and shape matrices of the consistency set of window w."""
    F = linalg.symmetrize(linalg.as_matrix(F, (w.nx, w.nx)))
    z = w.z_matrix()
    m = linalg.symmetrize(z @ z.T)
    m_pinv = linalg.pinv(m)
    zc = m_pinv @ z @ w.X.T
    delta = w.X @ z.T @ m_pinv @ z @ w.X.T - w.X @ w.X.T + F
    return EllipsoidParams(M=m, Zc=zc, Delta=linalg.symmetrize(delta))


def is_nonempty(params, tol=None):
    w, _ = linalg.sym_eig(params.Delta)
    if tol is None:
        tol = linalg.psd_tolerance(params.Delta)
    return bool(w[0] >= -tol)


def is_bounded(params, tol=None):
    w, _ = linalg.sym_eig(params.M)
    if tol is None:
        tol = linalg.psd_tolerance(params.M)
    return bool(w[0] >= tol)


def dtilde(w, MA, MB):
    """Residual [MA MB] Z - X of a candidate pair against the window."""
    MA = linalg.as_matrix(MA, (w.nx, w.nx))
    MB = linalg.as_matrix(MB, (w.nx, w.nu))
    return np.hstack([MA, MB]) @ w.z_matrix() - w.X


def contains(w, F, MA, MB, tol=None):
    """Whether (MA, MB) lies in the consistency set of (w, F)."""
    d = dtilde(w, MA, MB)
    gap = linalg.symmetrize(F - d @ d.T)
    if tol is None:
        tol = linalg.psd_tolerance(gap)
    eigs, _ = linalg.sym_eig(gap)
    return bool(eigs[0] >= -tol)


def membership_quadratic(params, zhat):
    """Delta - (zhat - Zc)^T M (zhat - Zc), psd iff zhat is a member."""
    diff = np.asarray(zhat, dtype=float) - params.Zc
    return linalg.symmetrize(params.Delta - diff.T @ params.M @ diff)


def contains_ellipsoid(params, zhat, tol=None):
    gap = membership_quadratic(params, zhat)
    if tol is None:
        tol = linalg.psd_tolerance(gap)
    eigs, _ = linalg.sym_eig(gap)
    return bool(eigs[0] >= -tol)


def min_inflation(w, F, S, A_true, B_true):
    """Smallest eps >= 0 with the true pair in the set for F + eps * S^-1."""
    S = linalg.symmetrize(linalg.as_matrix(S, (w.nx, w.nx)))
    d = dtilde(w, A_true, B_true)
    gap = linalg.symmetrize(d @ d.T - linalg.as_matrix(F, (w.nx, w.nx)))
    s_inv = linalg.pd_inverse(S)
    return max(0.0, float(linalg.gen_eig_max(gap, s_inv)))


def inflated(F, S, eps):
    """Noise bound loosened by eps in the S^-1 metric."""
    return linalg.symmetrize(F + eps * linalg.pd_inverse(S))


def _psd_sqrt_and_pinv_sqrt(m, tol=None):
    w, v = linalg.sym_eig(linalg.symmetrize(m))
    if tol is None:
        tol = max(m.shape) * np.finfo(float).eps * max(float(w[-1]), 0.0)
    w = np.clip(w, 0.0, None)
    root = np.sqrt(w)
    inv_root = np.where(w > tol, 1.0 / np.maximum(root, 1e-300), 0.0)
    return v @ np.diag(root) @ v.T, v @ np.diag(inv_root) @ v.T


def sample_members(params, num_samples, rng, boundary_bias=True):
    """Draw members of the ellipsoidal form of the consistency set.

    Points are generated as Zhat = Zc + M^(+1/2) V Delta^(1/2) with
    sigma_max(V) <= 1, so the quadratic membership condition holds by
    construction. Directions in the kernel of M are pinned to the center.
    With boundary_bias the radius is drawn as u^(1/4), concentrating
    samples near the boundary where violations would show up first.
    """
    _, m_pinv_sqrt = _psd_sqrt_and_pinv_sqrt(params.M)
    d_sqrt, _ = _psd_sqrt_and_pinv_sqrt(params.Delta)
    rows, cols = params.Zc.shape
    out = []
    for _ in range(num_samples):
        g = rng.standard_normal((rows, cols))
        s = linalg.spectral_norm(g)
        if s == 0.0:
            v = g
        else:
            r = float(rng.uniform()) ** 0.25 if boundary_bias else float(
                rng.uniform()
            )
            v = (r / s) * g
        zhat = params.Zc + m_pinv_sqrt @ v @ d_sqrt
        out.append(zhat)
    return out
