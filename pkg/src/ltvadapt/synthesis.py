"""Data-driven state-feedback design from a single window of measurements.

A feasible design produces a gain K together with a quadratic certificate
(S, F, a1, a2): V(x) = x^T S x decreases at rate a1 along the nominal
closed loop, and the decrease degrades gracefully (rate a1 + a2 * eps)
for any plant in the data-consistency set inflated by eps. The design
problem is a determinant-maximization SDP solved by the in-package
solver; the product Xhat Y is constrained to be symmetric by restricting
Y to the null space of the skew-symmetry conditions.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import linalg, maxdet, proximity
from .window import DataWindow

logger = logging.getLogger(__name__)

DEFAULT_EPS_F = 0.1


@dataclass(frozen=True)
class ControllerBundle:
    """Gain plus certificate extracted from one synthesis solve."""

    K: np.ndarray
    S: np.ndarray
    F: np.ndarray
    a1: float
    a2: float
    a: float
    varsigma: float
    Y: np.ndarray
    H: np.ndarray
    eps_F: float
    window: DataWindow
    solver_status: str = ""
    solver_iterations: int = 0

    def lyapunov(self, x):
        x = linalg.as_vector(x, self.S.shape[0])
        return float(x @ self.S @ x)

    def to_dict(self):
        d = {
            "K": self.K.tolist(),
            "S": self.S.tolist(),
            "F": self.F.tolist(),
            "a1": self.a1,
            "a2": self.a2,
            "a": self.a,
            "varsigma": self.varsigma,
            "Y": self.Y.tolist(),
            "H": self.H.tolist(),
            "eps_F": self.eps_F,
            "window": {
                "kappa": self.window.kappa,
                "Xhat": self.window.Xhat.tolist(),
                "X": self.window.X.tolist(),
                "U": self.window.U.tolist(),
            },
            "solver_status": self.solver_status,
            "solver_iterations": self.solver_iterations,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        w = DataWindow(
            kappa=int(d["window"]["kappa"]),
            Xhat=np.array(d["window"]["Xhat"], dtype=float),
            X=np.array(d["window"]["X"], dtype=float),
            U=np.array(d["window"]["U"], dtype=float),
        )
        return cls(
            K=np.array(d["K"], dtype=float),
            S=np.array(d["S"], dtype=float),
            F=np.array(d["F"], dtype=float),
            a1=float(d["a1"]),
            a2=float(d["a2"]),
            a=float(d["a"]),
            varsigma=float(d["varsigma"]),
            Y=np.array(d["Y"], dtype=float),
            H=np.array(d["H"], dtype=float),
            eps_F=float(d["eps_F"]),
            window=w,
            solver_status=str(d.get("solver_status", "")),
            solver_iterations=int(d.get("solver_iterations", 0)),
        )

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fallback_bundle(w):
    """Zero gain with a unit certificate, used when design is infeasible
    at the forced initial synthesis."""
    nx = w.nx
    return ControllerBundle(
        K=np.zeros((w.nu, nx)),
        S=np.eye(nx),
        F=np.eye(nx),
        a1=1.0,
        a2=0.0,
        a=0.0,
        varsigma=0.0,
        Y=np.zeros((w.width, nx)),
        H=np.eye(nx),
        eps_F=DEFAULT_EPS_F,
        window=w,
        solver_status="Fallback",
    )


def _symmetry_nullspace(xhat):
    """Basis Y_i of matrices with Xhat @ Y_i symmetric.

    Returns an array of shape (d, T, nx); the basis is deterministic
    (right singular vectors of the skew-symmetry constraint matrix).
    """
    nx, t = xhat.shape
    pairs = [(r, c) for r in range(nx) for c in range(r + 1, nx)]
    if not pairs:
        basis = np.zeros((t * nx, t, nx))
        for i in range(t * nx):
            basis[i, i // nx, i % nx] = 1.0
        return basis
    cmat = np.zeros((len(pairs), t * nx))
    for row, (r, c) in enumerate(pairs):
        for s in range(t):
            # entry Y[s, c] contributes xhat[r, s]; Y[s, r] contributes
            # -xhat[c, s] to skew(Xhat Y)[r, c]
            cmat[row, s * nx + c] += xhat[r, s]
            cmat[row, s * nx + r] -= xhat[c, s]
    _, sig, vt = np.linalg.svd(cmat)
    tol = max(cmat.shape) * np.finfo(float).eps * (sig[0] if sig.size else 0.0)
    rank = int(np.sum(sig > tol))
    null = vt[rank:]
    return null.reshape(-1, t, nx)


def _svec_basis(nx):
    basis = []
    for i in range(nx):
        for j in range(i, nx):
            e = np.zeros((nx, nx))
            e[i, j] = 1.0
            e[j, i] = 1.0
            if i == j:
                e[i, i] = 1.0
            basis.append(e)
    return np.array(basis)


@dataclass
class _DesignProblem:
    problem: maxdet.SdpProblem
    y_basis: np.ndarray
    h_basis: np.ndarray

    def unpack(self, x):
        d_y = self.y_basis.shape[0]
        varsigma = float(x[0])
        y = np.einsum("i,iab->ab", x[1:1 + d_y], self.y_basis)
        h = np.einsum("i,iab->ab", x[1 + d_y:], self.h_basis)
        return varsigma, y, linalg.symmetrize(h)


def build_design_problem(w):
    """Assemble the SDP whose solution yields (K, S, F, a1, a2)."""
    xhat, x, u = w.Xhat, w.X, w.U
    nx, t = xhat.shape
    y_basis = _symmetry_nullspace(xhat)
    h_basis = _svec_basis(nx)
    d_y = y_basis.shape[0]
    d_h = h_basis.shape[0]
    nvar = 1 + d_y + d_h

    xxt = x @ x.T

    # block 1: [[Xhat Y - varsigma X X^T - H, X Y], [(X Y)^T, Xhat Y]] > 0
    dim1 = 2 * nx
    c1 = np.zeros((nvar, dim1, dim1))
    c1[0, :nx, :nx] = -xxt
    for i in range(d_y):
        yi = y_basis[i]
        py = linalg.symmetrize(xhat @ yi)
        xy = x @ yi
        c1[1 + i, :nx, :nx] = py
        c1[1 + i, :nx, nx:] = xy
        c1[1 + i, nx:, :nx] = xy.T
        c1[1 + i, nx:, nx:] = py
    for j in range(d_h):
        c1[1 + d_y + j, :nx, :nx] = -h_basis[j]
    lmi1 = maxdet.AffineMatFn(np.zeros((dim1, dim1)), c1)

    # block 2: [[I_T, Y], [Y^T, Xhat Y]] > 0
    dim2 = t + nx
    k2 = np.zeros((dim2, dim2))
    k2[:t, :t] = np.eye(t)
    c2 = np.zeros((nvar, dim2, dim2))
    for i in range(d_y):
        yi = y_basis[i]
        c2[1 + i, :t, t:] = yi
        c2[1 + i, t:, :t] = yi.T
        c2[1 + i, t:, t:] = linalg.symmetrize(xhat @ yi)
    lmi2 = maxdet.AffineMatFn(k2, c2)

    # block 3: H > 0 (determinant objective)
    c3 = np.zeros((nvar, nx, nx))
    c3[1 + d_y:] = h_basis
    hblock = maxdet.AffineMatFn(np.zeros((nx, nx)), c3)

    problem = maxdet.SdpProblem(
        num_vars=nvar,
        constraints=[lmi1, lmi2, hblock],
        det_block=2,
        var_bounds={0: 0.0},
    )
    return _DesignProblem(problem=problem, y_basis=y_basis, h_basis=h_basis)


def extract_bundle(w, design, solution, eps_F=DEFAULT_EPS_F):
    """Gain and certificate from a solved design problem."""
    if not 0.0 < eps_F < 1.0:
        raise linalg.InvalidInput("eps_F must lie in (0, 1)")
    varsigma, y, h = design.unpack(solution.x)
    p = linalg.symmetrize(w.Xhat @ y)
    s = linalg.pd_inverse(p)
    k = w.U @ y @ s
    sig_hat = varsigma / (varsigma + 1.0)
    f = linalg.symmetrize((1.0 - eps_F) * sig_hat * h)
    # largest a' with a' S^{-1} <= eps_F H; S^{-1} = P
    a = eps_F * float(linalg.gen_eig_min(h, p))
    a1 = 1.0 - a
    a2 = 1.0 + 1.0 / varsigma
    return ControllerBundle(
        K=k,
        S=linalg.symmetrize(s),
        F=f,
        a1=a1,
        a2=a2,
        a=a,
        varsigma=varsigma,
        Y=y,
        H=h,
        eps_F=eps_F,
        window=w,
        solver_status=solution.status,
        solver_iterations=solution.iterations,
    )


def synthesize(w, eps_F=DEFAULT_EPS_F, opts=None):
    """Attempt a design from window w; None when no feasible design exists."""
    if float(np.max(np.abs(w.Xhat))) == 0.0:
        logger.info("design infeasible at kappa=%d (empty data)", w.kappa)
        return None
    design = build_design_problem(w)
    opts = opts or maxdet.SolverOptions()
    try:
        sol = maxdet.solve_maxdet(design.problem, opts)
    except maxdet.SolverBreakdown as exc:
        logger.warning("design solve broke down at kappa=%d: %s",
                       w.kappa, exc)
        return None
    if sol.status not in (maxdet.OPTIMAL,):
        logger.info("design infeasible at kappa=%d (status %s)",
                    w.kappa, sol.status)
        return None
    return extract_bundle(w, design, sol, eps_F=eps_F)


def is_feasible(w, opts=None):
    """Strict feasibility of the design LMIs for window w."""
    if float(np.max(np.abs(w.Xhat))) == 0.0:
        return False
    design = build_design_problem(w)
    opts = opts or maxdet.SolverOptions()
    try:
        sol = maxdet.solve_feasibility(design.problem, opts)
    except maxdet.SolverBreakdown:
        return False
    return sol.status == maxdet.FEASIBLE


def decay_rate_bound(bundle, eps):
    """Certified contraction factor for plants within inflation eps."""
    if eps < 0:
        raise linalg.InvalidInput("inflation must be nonnegative")
    return bundle.a1 + bundle.a2 * eps


@dataclass
class PropertyReport:
    num_samples: int
    eps_values: list
    max_relative_excess: float
    num_violations: int
    vacuous: bool


def verify_property(bundle, num_samples=500, rng_seed=0, eps_values=None,
                    rel_tol=1e-7):
    """Sample the inflated consistency sets and check the certified rate.

    For each eps, every sampled pair (A, B) must satisfy
    (A + B K)^T S (A + B K) <= (a1 + a2 eps) S up to the relative
    tolerance. Sampling is boundary biased. A report with vacuous=True
    means the inflated set was empty so the claim holds trivially.
    """
    if eps_values is None:
        if bundle.a2 > 0:
            eps_values = [0.0, bundle.a / (2.0 * bundle.a2),
                          2.0 * bundle.a / bundle.a2]
        else:
            eps_values = [0.0]
    if any(e < 0 for e in eps_values):
        raise linalg.InvalidInput("inflation values must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    w = bundle.window
    nx, nu = w.nx, w.nu
    worst = -np.inf
    violations = 0
    vacuous = True
    for eps in eps_values:
        f_eps = proximity.inflated(bundle.F, bundle.S, eps)
        params = proximity.ellipsoid_params(w, f_eps)
        if not proximity.is_nonempty(params):
            continue
        vacuous = False
        rate = decay_rate_bound(bundle, eps)
        for zhat in proximity.sample_members(params, num_samples, rng):
            a_mat = zhat[:nx].T
            b_mat = zhat[nx:nx + nu].T
            acl = a_mat + b_mat @ bundle.K
            lhs = float(linalg.gen_eig_max(
                linalg.symmetrize(acl.T @ bundle.S @ acl), bundle.S))
            excess = (lhs - rate) / max(abs(rate), 1.0)
            worst = max(worst, excess)
            if excess > rel_tol:
                violations += 1
    return PropertyReport(
        num_samples=num_samples,
        eps_values=list(eps_values),
        max_relative_excess=(worst if np.isfinite(worst) else 0.0),
        num_violations=violations,
        vacuous=vacuous,
    )


class GainSynthesizer:
    """Estimator-style wrapper: fit on a data window, predict control inputs.

    Parameters mirror the functional interface; after a successful fit the
    attributes K_, S_, F_, a1_, a2_ and bundle_ are populated.
    """

    def __init__(self, eps_F=DEFAULT_EPS_F, strict_margin=1e-6,
                 max_newton=200):
        self.eps_F = eps_F
        self.strict_margin = strict_margin
        self.max_newton = max_newton

    def get_params(self, deep=True):
        return {
            "eps_F": self.eps_F,
            "strict_margin": self.strict_margin,
            "max_newton": self.max_newton,
        }

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise linalg.InvalidInput("unknown parameter %r" % (key,))
            setattr(self, key, value)
        return self

    def fit(self, w):
        opts = maxdet.SolverOptions(
            strict_margin=self.strict_margin, max_newton=self.max_newton
        )
        bundle = synthesize(w, eps_F=self.eps_F, opts=opts)
        if bundle is None:
            raise linalg.NotPositiveDefinite(
                "no feasible design for this window"
            )
        self.bundle_ = bundle
        self.K_ = bundle.K
        self.S_ = bundle.S
        self.F_ = bundle.F
        self.a1_ = bundle.a1
        self.a2_ = bundle.a2
        return self

    def predict(self, x):
        if not hasattr(self, "K_"):
            raise linalg.InvalidInput("fit must be called before predict")
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.K_ @ x
        return x @ self.K_.T
