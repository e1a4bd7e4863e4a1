"""Property suites shared by the CLI `verify` command and the test suite.

Each suite re-checks one family of guarantees on a canonical set of
seeded closed-loop runs (plus synthetic problems for the solver): data
consistency and set-membership equivalence, certified per-step decrease,
product bounds on the Lyapunov function, hybrid record structure, and
solver correctness against brute-force oracles.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import hybrid, linalg, maxdet, monitor, plants, proximity, synthesis
from .window import DataWindow

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append(CheckResult(name, bool(passed), detail))

    def lines(self):
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            line = "%s %s: %s" % (tag, self.suite, c.name)
            if c.detail:
                line += " (%s)" % c.detail
            out.append(line)
        out.append("%s suite %s: %d/%d checks passed"
                   % ("PASS" if self.passed else "FAIL", self.suite,
                      sum(c.passed for c in self.checks), len(self.checks)))
        return out


# canonical seeded scenarios exercised by the suites; the switching event
# and fixed runs come from the qualitative comparison of the closed-loop
# strategies, the sweep runs from the sinusoidal and vanishing plants
def canonical_scenarios():
    scen = [
        ("switching-event", plants.SwitchingPlant(),
         hybrid.ScenarioConfig(mode=hybrid.EVENT_TRIGGERED, horizon=100,
                               seed=53)),
        ("switching-fixed-mild", plants.SwitchingPlant(ell=1.0),
         hybrid.ScenarioConfig(mode=hybrid.FIXED_GAIN, horizon=100, seed=1)),
        ("switching-fixed-strong", plants.SwitchingPlant(ell=2.5),
         hybrid.ScenarioConfig(mode=hybrid.FIXED_GAIN, horizon=100, seed=1)),
    ]
    for p in (10, 20, 40):
        scen.append(("sinusoidal-p%d" % p,
                     plants.make_plant("sinusoidal", {"p": p}),
                     hybrid.ScenarioConfig(mode=hybrid.EVENT_TRIGGERED,
                                           horizon=100, seed=2)))
    scen.append(("vanishing",
                 plants.make_plant("vanishing", {"p": 10, "t_delta": 30}),
                 hybrid.ScenarioConfig(mode=hybrid.EVENT_TRIGGERED,
                                       horizon=100, seed=2)))
    for n_p in (8, 12, 16):
        for seed in range(3):
            scen.append(("time-np%d-s%d" % (n_p, seed),
                         plants.SwitchingPlant(),
                         hybrid.ScenarioConfig(mode=hybrid.TIME_TRIGGERED,
                                               horizon=100, seed=seed,
                                               n_p=n_p)))
    return scen


_RUN_CACHE = {}


def canonical_runs():
    """Run (and memoize) the canonical scenarios; returns
    [(name, plant, cfg, trajectory)]."""
    out = []
    for name, plant, cfg in canonical_scenarios():
        if name not in _RUN_CACHE:
            _RUN_CACHE[name] = hybrid.run(plant, cfg)
        out.append((name, plant, cfg, _RUN_CACHE[name]))
    return out


def _bundles(traj):
    """Synthesized bundles of a run, skipping the zero-gain fallback."""
    out = []
    if traj.initial_bundle is not None and \
            traj.initial_bundle.solver_status != "Fallback":
        out.append(traj.initial_bundle)
    for e in traj.episodes:
        if e.new_bundle.solver_status != "Fallback" and \
                e.new_bundle is not traj.initial_bundle:
            out.append(e.new_bundle)
    return out


# ---------------------------------------------------------------------------
# data consistency and ellipsoid equivalence


def _hand_window():
    return DataWindow(kappa=2,
                      Xhat=np.array([[1.0, 0.5]]),
                      X=np.array([[0.5, 0.25]]),
                      U=np.array([[0.0, 0.0]]))


def suite_lemma3(rng_seed=0):
    res = SuiteResult("lemma3")
    rng = np.random.default_rng(rng_seed)

    # every synthesis window must be exactly explained by the plant
    # matrices that generated it
    worst = 0.0
    n_win = 0
    for name, plant, cfg, traj in canonical_runs():
        for b in _bundles(traj):
            w = b.window
            stacked = plant.stacked(w.kappa, w.width)
            r = w.consistency_residual(stacked)
            tol = 1e-9 * (1.0 + linalg.spectral_norm(w.X))
            worst = max(worst, r / tol)
            n_win += 1
    res.add("window-consistency", worst <= 1.0,
            "%d windows, worst residual ratio %.3g" % (n_win, worst))

    # direct set test (mismatch bound) and data-based ellipsoid test must
    # agree on randomly drawn candidate plant matrices
    mism = 0
    n_samp = 0
    for name, plant, cfg, traj in canonical_runs():
        if not name.startswith(("switching-event", "sinusoidal", "vanish")):
            continue
        for b in _bundles(traj):
            w, F = b.window, b.F
            par = proximity.ellipsoid_params(w, F)
            for _ in range(500):
                if rng.uniform() < 0.5 and proximity.is_nonempty(par):
                    zh = proximity.sample_members(par, 1, rng)[0]
                    zh = zh + 0.05 * rng.standard_normal(zh.shape)
                else:
                    zh = rng.standard_normal((w.nx + w.nu, w.nx))
                ma = zh[:w.nx, :].T
                mb = zh[w.nx:, :].T
                direct = proximity.contains(w, F, ma, mb)
                quad = proximity.contains_ellipsoid(par, zh)
                mism += int(direct != quad)
                n_samp += 1
    res.add("set-equivalence", mism == 0,
            "%d samples, %d disagreements" % (n_samp, mism))

    # minimal inflation: the certified set inflated by eps contains the
    # true plant, and any deflation below eps loses it
    infl_ok = True
    for name, plant, cfg, traj in canonical_runs():
        if name != "switching-event":
            continue
        for b in _bundles(traj):
            w = b.window
            a_mat, b_mat = plant.eval(w.kappa)
            eps = proximity.min_inflation(w, b.F, b.S, a_mat, b_mat)
            f_up = proximity.inflated(b.F, b.S, eps * (1 + 1e-9) + 1e-15)
            if not proximity.contains(w, f_up, a_mat, b_mat):
                infl_ok = False
            if eps > 1e-9:
                f_dn = proximity.inflated(b.F, b.S, eps * 0.5)
                if proximity.contains(w, f_dn, a_mat, b_mat,
                                      tol=-1e-12):
                    infl_ok = False
    res.add("min-inflation-certificate", infl_ok)

    # hand-checked scalar example
    w = _hand_window()
    F = np.array([[0.01]])
    par = proximity.ellipsoid_params(w, F)
    ok = (np.max(np.abs(par.M - np.array([[1.25, 0.0], [0.0, 0.0]])))
          <= 1e-12)
    ok = ok and np.max(np.abs(par.Zc - np.array([[0.5], [0.0]]))) <= 1e-12
    ok = ok and np.max(np.abs(par.Delta - F)) <= 1e-12
    eps = proximity.min_inflation(w, F, np.array([[1.0]]),
                                  np.array([[0.3]]), np.array([[0.0]]))
    ok = ok and abs(eps - 0.04) <= 1e-12
    res.add("scalar-hand-values", ok, "eps=%.17g" % eps)
    return res


# ---------------------------------------------------------------------------
# certified per-step decrease of every synthesized design


def suite_property1(num_samples=500, rng_seed=0):
    res = SuiteResult("property1")
    n_bundles = 0
    violations = 0
    worst = 0.0
    for name, plant, cfg, traj in canonical_runs():
        for b in _bundles(traj):
            rep = synthesis.verify_property(b, num_samples=num_samples,
                                            rng_seed=rng_seed)
            n_bundles += 1
            violations += rep.num_violations
            worst = max(worst, rep.max_relative_excess)
    res.add("decrease-on-sampled-plants", violations == 0,
            "%d bundles x %d samples, %d violations, worst excess %.3g"
            % (n_bundles, num_samples, violations, worst))
    return res


# ---------------------------------------------------------------------------
# Lyapunov product bound along every run


def suite_lemma5():
    res = SuiteResult("lemma5")
    all_ok = True
    dominated = True
    n_runs = 0
    for name, plant, cfg, traj in canonical_runs():
        pi_e = monitor.pi_product(traj, plant, monitor.EXACT, cfg.c_sigma)
        pi_d = monitor.pi_product(traj, plant, monitor.DATABASED,
                                  cfg.c_sigma)
        ok_e = monitor.check_bound(traj, pi_e)
        ok_d = monitor.check_bound(traj, pi_d)
        if not (all(ok_e) and all(ok_d)):
            all_ok = False
            logger.warning("bound violated on %s", name)
        if not all(d >= e * (1.0 - 1e-9) for e, d in zip(pi_e, pi_d)):
            dominated = False
            logger.warning("databased bound below exact on %s", name)
        n_runs += 1
    res.add("product-bound-holds", all_ok, "%d runs" % n_runs)
    res.add("databased-dominates-exact", dominated)
    return res


# ---------------------------------------------------------------------------
# hybrid record structure


def suite_prop3():
    res = SuiteResult("prop3")
    no_dup = True
    tau_ok = True
    dom_ok = True
    for name, plant, cfg, traj in canonical_runs():
        ks = [r.k for r in traj.records]
        if any(a == b for a, b in zip(ks, ks[1:])):
            no_dup = False
        episode_ks = {e.k for e in traj.episodes}
        for r in traj.records:
            if (r.tau == 0) != (r.k in episode_ks):
                tau_ok = False
        pairs = [(r.k, r.j) for r in traj.records]
        for (k0, j0), (k1, j1) in zip(pairs, pairs[1:]):
            if not (k1 == k0 + 1 and j1 >= j0):
                dom_ok = False
    res.add("one-record-per-step", no_dup)
    res.add("toggle-marks-episodes", tau_ok)
    res.add("hybrid-domain-monotone", dom_ok)
    return res


# ---------------------------------------------------------------------------
# solver correctness


def _random_constant_problem(rng):
    dims = rng.integers(1, 4, size=rng.integers(1, 3))
    cons = []
    for d in dims:
        a = rng.standard_normal((d, d))
        c = linalg.symmetrize(a + a.T) + rng.uniform(-0.5, 0.5) * np.eye(d)
        cons.append(maxdet.AffineMatFn(c, np.zeros((0, d, d))))
    return maxdet.SdpProblem(num_vars=0, constraints=cons)


def _random_2var_maxdet(rng):
    """Bounded two-variable instance: box 0 < x_i < ub_i with a PD
    determinant block that degrades affinely in x."""
    ub = rng.uniform(0.5, 2.0, size=2)
    d = int(rng.integers(1, 3))
    base = rng.standard_normal((d, d))
    d0 = base @ base.T + (1.0 + rng.uniform(0, 1)) * np.eye(d)
    c1 = 0.1 * linalg.symmetrize(rng.standard_normal((d, d)))
    c2 = 0.1 * linalg.symmetrize(rng.standard_normal((d, d)))
    det = maxdet.AffineMatFn(d0, np.stack([c1, c2]))
    caps = []
    for i in range(2):
        coef = np.zeros((2, 1, 1))
        coef[i, 0, 0] = -1.0
        caps.append(maxdet.AffineMatFn(np.array([[ub[i]]]), coef))
    problem = maxdet.SdpProblem(num_vars=2, constraints=[det] + caps,
                                det_block=0, var_bounds={0: 0.0, 1: 0.0})
    return problem, ub, det


def _grid_oracle(det, ub, strict_margin, n=121):
    best = -np.inf
    best_x = None
    lo = np.array([strict_margin, strict_margin])
    hi = ub - strict_margin
    for _ in range(3):
        g1 = np.linspace(lo[0], hi[0], n)
        g2 = np.linspace(lo[1], hi[1], n)
        for x1 in g1:
            for x2 in g2:
                ev = np.linalg.eigvalsh(det(np.array([x1, x2])))
                if ev[0] <= strict_margin:
                    continue
                val = float(np.sum(np.log(ev)))
                if val > best:
                    best = val
                    best_x = np.array([x1, x2])
        if best_x is None:
            return None, None
        span = (hi - lo) / (n - 1)
        lo = np.maximum(lo, best_x - 2 * span)
        hi = np.minimum(hi, best_x + 2 * span)
    return best, best_x


def suite_solver(rng_seed=0):
    res = SuiteResult("solver")
    rng = np.random.default_rng(rng_seed)
    opts = maxdet.SolverOptions()

    # (a) constant problems have an exact feasibility answer
    agree = 0
    for _ in range(100):
        p = _random_constant_problem(rng)
        lam = min(float(np.linalg.eigvalsh(f.constant)[0])
                  for f in p.constraints)
        want = maxdet.FEASIBLE if lam >= opts.strict_margin \
            else maxdet.INFEASIBLE
        got = maxdet.solve_feasibility(p, opts).status
        agree += int(got == want)
    res.add("constant-feasibility-exact", agree == 100, "%d/100" % agree)

    # (b) two-variable determinant maximization against a grid oracle
    n_inst = 0
    worst_gap = 0.0
    ok_b = True
    while n_inst < 20:
        problem, ub, det = _random_2var_maxdet(rng)
        oracle_val, _ = _grid_oracle(det, ub, opts.strict_margin)
        if oracle_val is None:
            continue
        sol = maxdet.solve_maxdet(problem, opts)
        if sol.status != maxdet.OPTIMAL:
            ok_b = False
            n_inst += 1
            continue
        got = float(np.sum(np.log(np.linalg.eigvalsh(det(sol.x)))))
        gap = oracle_val - got
        worst_gap = max(worst_gap, gap)
        if gap > 1e-3:
            ok_b = False
        n_inst += 1
    res.add("maxdet-matches-grid-oracle", ok_b,
            "20 instances, worst gap %.3g" % worst_gap)

    # (c) accepted design solutions keep interior margins, and
    # (d) the extracted certificate identity holds exactly
    marg_ok = True
    ident_ok = True
    n_designs = 0
    for name, plant, cfg, traj in canonical_runs():
        for b in _bundles(traj):
            design = synthesis.build_design_problem(b.window)
            sol = maxdet.solve_maxdet(design.problem, opts)
            if sol.status != maxdet.OPTIMAL:
                marg_ok = False
                continue
            margins = maxdet.check_point(design.problem, sol.x)
            if float(np.min(margins)) < opts.strict_margin / 2:
                marg_ok = False
            lhs = b.H - (1.0 + 1.0 / b.varsigma) * b.F
            rhs = b.eps_F * b.H
            if np.max(np.abs(lhs - rhs)) > 1e-12 * (1.0 + np.max(np.abs(b.H))):
                ident_ok = False
            n_designs += 1
    res.add("design-margins", marg_ok, "%d designs" % n_designs)
    res.add("certificate-identity", ident_ok)
    return res


SUITES = {
    "lemma3": suite_lemma3,
    "property1": suite_property1,
    "lemma5": suite_lemma5,
    "prop3": suite_prop3,
    "solver": suite_solver,
}


def run_suite(name):
    if name not in SUITES:
        raise linalg.InvalidInput("unknown suite %r; choose from %s"
                                  % (name, sorted(SUITES)))
    return SUITES[name]()
