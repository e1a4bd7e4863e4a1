"""Small-scale determinant maximization under LMI constraints.

Problems are affine symmetric-matrix functions of a real decision vector;
every constraint block must be positive definite. Feasibility is decided by
a phase-I max-margin barrier solve, and log-det maximization by the classic
MAXDET log-barrier path following scheme with damped Newton steps.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import linalg


class SolverBreakdown(RuntimeError):
    """Newton system remained singular after regularization."""


FEASIBLE = "Feasible"
OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
MAXITER = "MaxIter"


@dataclass
class AffineMatFn:
    """F(x) = constant + sum_i x_i * coeffs[i], all blocks symmetric."""

    constant: np.ndarray
    coeffs: np.ndarray  # shape (num_vars, dim, dim)

    def __post_init__(self):
        self.constant = linalg.symmetrize(self.constant)
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[1:] != self.constant.shape:
            raise linalg.InvalidInput("coefficient stack has wrong shape")
        self.coeffs = 0.5 * (c + np.transpose(c, (0, 2, 1)))

    @property
    def dim(self):
        return self.constant.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.constant + np.einsum("i,iab->ab", x, self.coeffs)


@dataclass
class SdpProblem:
    num_vars: int
    constraints: list
    det_block: int | None = None
    var_bounds: dict | None = None  # {var index: strict lower bound}

    def __post_init__(self):
        for f in self.constraints:
            if f.coeffs.shape[0] != self.num_vars:
                raise linalg.InvalidInput("constraint/variable count mismatch")
        if self.det_block is not None and not (
            0 <= self.det_block < len(self.constraints)
        ):
            raise linalg.InvalidInput("det_block index out of range")
        if self.var_bounds:
            for i, lb in sorted(self.var_bounds.items()):
                if not 0 <= i < self.num_vars:
                    raise linalg.InvalidInput("var_bounds index out of range")
                coeffs = np.zeros((self.num_vars, 1, 1))
                coeffs[i, 0, 0] = 1.0
                self.constraints.append(
                    AffineMatFn(np.array([[-float(lb)]]), coeffs)
                )
            self.var_bounds = dict(self.var_bounds)


@dataclass
class SdpSolution:
    x: np.ndarray
    status: str
    min_margins: np.ndarray
    logdet_value: float | None = None
    iterations: int = 0
    kkt_residual: float | None = None


@dataclass
class SolverOptions:
    strict_margin: float = 1e-6
    max_newton: int = 500
    mu_init: float = 1.0
    mu_max: float = 1e6
    mu_factor: float = 10.0
    newton_tol: float = 1e-8  # stop a stage when the Newton decrement
    # (affine-invariant residual of the barrier subproblem) drops below this
    trace_path: str | None = None


def check_point(problem, x):
    """Per-constraint lambda_min at x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != problem.num_vars:
        raise linalg.InvalidInput("decision vector has wrong length")
    out = []
    for f in problem.constraints:
        out.append(float(np.linalg.eigvalsh(f(x))[0]))
    return np.array(out)


def _chol(m):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None


def _logdet_from_chol(l):
    return 2.0 * float(np.sum(np.log(np.diag(l))))


class _Trace:
    def __init__(self, path):
        self.rows = []
        self.path = path

    def add(self, iteration, mu, margin, logdet):
        if self.path is not None:
            self.rows.append((iteration, mu, margin, logdet))

    def flush(self):
        if self.path is None or not self.rows:
            return
        with open(self.path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "mu", "min_margin", "logdet"])
            w.writerows(self.rows)


def _barrier_terms(fn, x, shift, weight):
    """Value, gradient and Hessian of -weight*logdet(F(x) - shift*I).

    Returns None when the shifted block is not positive definite.
    """
    f = fn(x) - shift * np.eye(fn.dim)
    l = _chol(f)
    if l is None:
        return None
    finv = np.linalg.inv(f)
    p = np.einsum("ab,kbc->kac", finv, fn.coeffs)
    grad = -weight * np.einsum("kaa->k", p)
    hess = weight * np.einsum("kab,lba->kl", p, p)
    val = -weight * _logdet_from_chol(l)
    return val, grad, hess


def _phi(blocks, x):
    """(value, grad, hess) of the weighted barrier sum; None if infeasible."""
    m = x.size
    val = 0.0
    grad = np.zeros(m)
    hess = np.zeros((m, m))
    for fn, shift, weight in blocks:
        terms = _barrier_terms(fn, x, shift, weight)
        if terms is None:
            return None
        v, g, h = terms
        val += v
        grad += g
        hess += h
    return val, grad, hess


def _value_only(blocks, x):
    val = 0.0
    for fn, shift, weight in blocks:
        l = _chol(fn(x) - shift * np.eye(fn.dim))
        if l is None:
            return None
        val -= weight * _logdet_from_chol(l)
    return val


def _newton_stage(blocks, x, max_steps, tol, early_stop=None):
    """Damped Newton on the barrier sum.  Returns (x, steps, decrement)."""
    steps = 0
    residual = np.inf
    while steps < max_steps:
        terms = _phi(blocks, x)
        if terms is None:
            raise SolverBreakdown("iterate left the barrier domain")
        val, grad, hess = terms
        if float(np.linalg.eigvalsh(hess)[0]) < 1e-12:
            hess = hess + 1e-10 * np.eye(hess.shape[0])
        try:
            d = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as exc:
            raise SolverBreakdown("singular Newton system") from exc
        decrement = float(-grad @ d)
        residual = np.sqrt(max(decrement, 0.0))
        if residual <= tol:
            break
        alpha = 1.0
        gd = float(grad @ d)
        while alpha > 1e-14:
            xn = x + alpha * d
            vn = _value_only(blocks, xn)
            if vn is not None and vn <= val + 1e-4 * alpha * gd:
                break
            alpha *= 0.5
        if alpha <= 1e-14:
            break
        x = x + alpha * d
        steps += 1
        if early_stop is not None and early_stop(x):
            break
        # accepted decrease at float-noise level: no further progress is
        # representable, treat the stage as converged
        if val - vn <= 4.0 * np.finfo(float).eps * (1.0 + abs(val)):
            break
    return x, steps, residual


def solve_feasibility(problem, opts=None, x0=None, interior_target=None):
    """Decide strict feasibility of all constraint blocks.

    Phase-I scheme: maximize t subject to F_i(x) - t*I > 0 (t capped above)
    and return Feasible as soon as every margin reaches the target,
    Infeasible when the barrier path converges below strict_margin.
    """
    opts = opts or SolverOptions()
    if not problem.constraints:
        raise linalg.InvalidInput("constraints must be non-empty")
    sm = opts.strict_margin
    target = interior_target if interior_target is not None else sm
    trace = _Trace(opts.trace_path)

    # exact decision for constant problems
    if problem.num_vars == 0 or all(
        np.max(np.abs(f.coeffs)) == 0.0 for f in problem.constraints
    ):
        x = np.zeros(problem.num_vars)
        margins = check_point(problem, x)
        status = FEASIBLE if np.min(margins) >= sm else INFEASIBLE
        return SdpSolution(x=x, status=status, min_margins=margins)

    m = problem.num_vars
    x = np.zeros(m) if x0 is None else np.asarray(x0, dtype=float).copy()
    margins = check_point(problem, x)
    if np.min(margins) >= target:
        return SdpSolution(x=x, status=FEASIBLE, min_margins=margins)

    t_cap = max(1.0, 10.0 * target)
    t0 = min(float(np.min(margins)) - 1.0, t_cap - 1.0)
    z = np.concatenate([x, [t0]])

    # extended blocks over (x, t): F_i(x) - t I > 0 plus the cap t < t_cap
    ext = []
    for f in problem.constraints:
        coeffs = np.concatenate(
            [f.coeffs, -np.eye(f.dim)[None, :, :]], axis=0
        )
        ext.append(AffineMatFn(f.constant, coeffs))
    cap_coeffs = np.zeros((m + 1, 1, 1))
    cap_coeffs[m, 0, 0] = -1.0
    cap = AffineMatFn(np.array([[t_cap]]), cap_coeffs)

    def margins_ok(zv):
        return float(np.min(check_point(problem, zv[:m]))) >= target

    total = 0
    mu = opts.mu_init
    found = [False]

    def early(zv):
        if margins_ok(zv):
            found[0] = True
            return True
        return False

    while mu <= opts.mu_max and total < opts.max_newton and not found[0]:
        # objective normalized by mu: minimize -t + (1/mu) * barriers, so
        # line-search decreases stay well above float rounding of the value
        blocks = [(g, 0.0, 1.0 / mu) for g in ext] + [(cap, 0.0, 1.0 / mu)]

        def phi_lin(zv):
            return -zv[m]

        z, steps, _ = _newton_linear(
            blocks, phi_lin, np.concatenate([np.zeros(m), [-1.0]]), z,
            opts.max_newton - total, opts.newton_tol, early,
        )
        total += max(steps, 1)
        trace.add(total, mu, float(np.min(check_point(problem, z[:m]))), None)
        mu *= opts.mu_factor
    trace.flush()

    x = z[:m]
    margins = check_point(problem, x)
    if float(np.min(margins)) >= target:
        return SdpSolution(x=x, status=FEASIBLE, min_margins=margins,
                           iterations=total)
    if total >= opts.max_newton:
        return SdpSolution(x=x, status=MAXITER, min_margins=margins,
                           iterations=total)
    return SdpSolution(x=x, status=INFEASIBLE, min_margins=margins,
                       iterations=total)


def _newton_linear(blocks, lin_value, lin_grad, x, max_steps, tol, early):
    """Damped Newton on lin(x) + barrier(x); lin is affine in x."""
    steps = 0
    residual = np.inf
    while steps < max_steps:
        terms = _phi(blocks, x)
        if terms is None:
            raise SolverBreakdown("iterate left the barrier domain")
        val, grad, hess = terms
        val += lin_value(x)
        grad = grad + lin_grad
        if float(np.linalg.eigvalsh(hess)[0]) < 1e-12:
            hess = hess + 1e-10 * np.eye(hess.shape[0])
        try:
            d = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as exc:
            raise SolverBreakdown("singular Newton system") from exc
        decrement = float(-grad @ d)
        residual = np.sqrt(max(decrement, 0.0))
        if residual <= tol:
            break
        alpha = 1.0
        gd = float(grad @ d)
        while alpha > 1e-14:
            xn = x + alpha * d
            vn = _value_only(blocks, xn)
            if vn is not None and vn + lin_value(xn) <= val + 1e-4 * alpha * gd:
                break
            alpha *= 0.5
        if alpha <= 1e-14:
            break
        x = x + alpha * d
        steps += 1
        if early is not None and early(x):
            break
        if (val - vn - lin_value(x)) <= 4.0 * np.finfo(float).eps * (
                1.0 + abs(val)):
            break
    return x, steps, residual


def solve_maxdet(problem, opts=None, x0=None):
    """Maximize log det of the designated block over the LMI constraints."""
    opts = opts or SolverOptions()
    if problem.det_block is None:
        raise linalg.InvalidInput("det_block must be set for solve_maxdet")
    sm = opts.strict_margin
    phase1 = solve_feasibility(problem, opts, x0=x0, interior_target=sm)
    if phase1.status != FEASIBLE:
        return phase1

    trace = _Trace(opts.trace_path)
    det_fn = problem.constraints[problem.det_block]
    x = phase1.x.copy()
    total = phase1.iterations
    mu = opts.mu_init
    residual = np.inf
    # Barrier constraints are shifted by strict_margin/2 so accepted points
    # keep at least that margin. The stage objective is normalized by mu
    # (barrier weight 1/mu, unit det term), making the returned gradient
    # norm the KKT residual directly.
    while mu <= opts.mu_max and total < opts.max_newton:
        blocks = [(f, 0.5 * sm, 1.0 / mu) for f in problem.constraints]
        blocks.append((det_fn, 0.0, 1.0))
        x, steps, residual = _newton_stage(
            blocks, x, opts.max_newton - total, opts.newton_tol
        )
        total += max(steps, 1)
        l = _chol(det_fn(x))
        logdet = _logdet_from_chol(l) if l is not None else np.nan
        trace.add(total, mu, float(np.min(check_point(problem, x))), logdet)
        mu *= opts.mu_factor
    trace.flush()

    margins = check_point(problem, x)
    l = _chol(det_fn(x))
    logdet = _logdet_from_chol(l) if l is not None else None
    kkt = residual
    finished = mu > opts.mu_max
    status = OPTIMAL if finished and kkt <= 1e-7 else MAXITER
    return SdpSolution(x=x, status=status, min_margins=margins,
                       logdet_value=logdet, iterations=total,
                       kkt_residual=kkt)
