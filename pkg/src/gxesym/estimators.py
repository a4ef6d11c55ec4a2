"""Fitting: prospective logistic baseline, profile-likelihood estimators on
either axis, the composite likelihood, the GLS symmetric combination, plug-in
sandwich covariance and balanced (stratified) bootstrap inference."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import linalg, optimize
from scipy.special import expit

from .core import CaseControlData, OmegaVector, PrevalenceSpec, RiskSpec, as_flat
from .errors import (
    CovarianceError,
    DataError,
    ExcessiveBootstrapFailure,
    GxeError,
    NonConvergence,
    NumericError,
    SeparationError,
)
from .retrolik import LikelihoodContext, ProfileAxis, compute_grid, evaluate, influence

log = logging.getLogger(__name__)

Z975 = 1.959963984540054
MAX_ITER = 200
SCORE_TOL = 1e-8
STEP_TOL = 1e-10
BOOT_FAIL_FRACTION = 0.05


class Method(str, enum.Enum):
    LOGISTIC = "logistic"
    SPMLE_X = "spmle_x"
    SPMLE_G = "spmle_g"
    COMPOSITE = "composite"
    SYMMETRIC = "symmetric"


AXIS_OF = {Method.SPMLE_X: ProfileAxis.X, Method.SPMLE_G: ProfileAxis.G, Method.COMPOSITE: "composite"}


@dataclass
class FitResult:
    method: Method
    omega_hat: OmegaVector
    cov: np.ndarray
    cov_source: str  # "asymptotic" | "bootstrap"
    converged: bool
    iterations: int
    final_score_norm: float
    prevalence: PrevalenceSpec | None
    param_names: list[str]
    bootstrap_B: int | None = None
    seed: int | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        self.cov = (cov + cov.T) / 2.0

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @property
    def ci_lo(self) -> np.ndarray:
        return self.omega_hat.to_array() - Z975 * self.se

    @property
    def ci_hi(self) -> np.ndarray:
        return self.omega_hat.to_array() + Z975 * self.se

    def summary(self) -> str:
        lines = [f"{self.method.value} ({self.cov_source} SE, converged={self.converged})"]
        est = self.omega_hat.to_array()
        for name, e, s in zip(self.param_names, est, self.se):
            lines.append(f"  {name:<14s} {e: .5f}  ({s:.5f})")
        return "\n".join(lines)


@dataclass(frozen=True)
class StackedEstimate:
    """(Omega_X, Omega_G) stacked, with their joint covariance."""

    y: np.ndarray
    lambda_all: np.ndarray

    @property
    def p(self) -> int:
        return self.y.size // 2


# ---------------------------------------------------------------------------
# logistic regression


def fit_logistic(data: CaseControlData, spec: RiskSpec | None = None, max_iter: int = 100) -> FitResult:
    """Prospective logistic regression of d on (1, design). The intercept is kappa."""
    spec = spec or RiskSpec(data.q, data.p_x)
    z = np.hstack([np.ones((data.n, 1)), spec.design_matrix(data.g, data.x)])
    y = data.d.astype(float)
    beta = np.zeros(z.shape[1])
    beta[0] = math.log(data.n1 / data.n0)

    def nll(b):
        eta = z @ b
        return float(np.sum(np.logaddexp(0.0, eta)) - y @ eta)

    current = nll(beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(z @ beta)
        grad = z.T @ (y - mu)
        info = (z * (mu * (1.0 - mu))[:, None]).T @ z
        try:
            step = linalg.cho_solve(linalg.cho_factor(info), grad)
        except linalg.LinAlgError:
            step = linalg.lstsq(info, grad)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            val = nll(cand)
            if val <= current + 1e-12 * abs(current) or t < 1e-10:
                break
            t /= 2.0
        beta, current = cand, val
        _check_separation(z, beta)
        if np.max(np.abs(t * step)) <= 1e-10 * max(1.0, np.max(np.abs(beta))):
            converged = True
            break
    mu = expit(z @ beta)
    grad = z.T @ (y - mu)
    info = (z * (mu * (1.0 - mu))[:, None]).T @ z
    cov = _spd_inverse(info, "logistic information")
    return FitResult(
        Method.LOGISTIC,
        OmegaVector.from_array(beta),
        cov,
        "asymptotic",
        converged,
        it,
        float(np.max(np.abs(grad)) / math.sqrt(data.n)),
        None,
        spec.param_names(),
    )


def _check_separation(z, beta):
    if np.linalg.norm(beta[1:]) > 30.0:
        mu = expit(z @ beta)
        if np.any((mu < 1e-10) | (mu > 1.0 - 1e-10)):
            raise SeparationError(
                f"perfect or quasi-complete separation: |beta| = {np.linalg.norm(beta[1:]):.1f} "
                "with fitted probabilities at 0/1"
            )


def _spd_inverse(a, what="matrix"):
    a = (a + a.T) / 2.0
    try:
        c = linalg.cho_factor(a)
    except linalg.LinAlgError as exc:
        ev = np.linalg.eigvalsh(a)
        raise CovarianceError(f"{what} is not positive definite", condition=_cond(ev), min_eigenvalue=ev[0]) from exc
    inv = linalg.cho_solve(c, np.eye(a.shape[0]))
    return (inv + inv.T) / 2.0


def _cond(ev):
    ev = np.abs(ev)
    return float(ev.max() / ev.min()) if ev.min() > 0 else math.inf


# ---------------------------------------------------------------------------
# profile likelihood solver


@dataclass
class _SolveResult:
    x: np.ndarray
    iterations: int
    score_norm: float
    converged: bool


def _newton_direction(g, h):
    neg = -(h + h.T) / 2.0
    try:
        return linalg.cho_solve(linalg.cho_factor(neg), g), True
    except linalg.LinAlgError:
        ev, vec = np.linalg.eigh(neg)
        floor = max(1e-8 * np.abs(ev).max(), 1e-12)
        ev = np.maximum(np.abs(ev), floor)
        return vec @ ((vec.T @ g) / ev), False


def solve_profile(ctx: LikelihoodContext, axis, start, max_iter: int = MAX_ITER) -> _SolveResult:
    """Maximise the estimated profile loglikelihood on `axis`.

    Damped Newton on the analytic Hessian; when a line search stalls, a BFGS
    pass on the same objective and gradient takes over before Newton resumes.
    Converged when the scaled score is below 1e-8 in sup-norm and the pending
    Newton update is below 1e-10 relative to the iterate.
    """
    x = as_flat(start).copy()
    root_n = math.sqrt(ctx.n)

    def f0(v):
        try:
            return evaluate(ctx, v, axis, order=0)
        except NumericError:
            return -math.inf

    ll, g, h = evaluate(ctx, x, axis, order=2)
    snorm = float(np.max(np.abs(g))) / root_n
    for it in range(1, max_iter + 1):
        step, _ = _newton_direction(g, h)
        rel = np.max(np.abs(step)) / max(1.0, np.max(np.abs(x)))
        if snorm < SCORE_TOL and rel < STEP_TOL:
            return _SolveResult(x, it - 1, snorm, True)
        slope = float(g @ step)
        t = 1.0
        accepted = False
        full = None
        while t >= 1e-10:
            cand = x + t * step
            if t == 1.0:
                # the full step is nearly always taken, so get its derivatives now
                try:
                    full = evaluate(ctx, cand, axis, order=2)
                    val = full[0]
                except NumericError:
                    val = -math.inf
            else:
                full = None
                val = f0(cand)
            if val >= ll + 1e-4 * t * slope - 1e-12 * abs(ll):
                accepted = True
                break
            t /= 2.0
        if not accepted:
            log.debug("line search stalled at iteration %d; falling back to BFGS", it)
            res = optimize.minimize(
                lambda v: -evaluate(ctx, v, axis, order=0),
                x,
                jac=lambda v: -evaluate(ctx, v, axis, order=1)[1],
                method="BFGS",
                options={"gtol": SCORE_TOL * root_n, "maxiter": 500},
            )
            cand = res.x
            if not np.all(np.isfinite(cand)) or f0(cand) < ll - 1e-12 * abs(ll):
                raise NonConvergence("line search and BFGS fallback both stalled", OmegaVector.from_array(x), snorm, it)
            full = None
        x = cand
        ll, g, h = full if full is not None else evaluate(ctx, x, axis, order=2)
        snorm = float(np.max(np.abs(g))) / root_n
    raise NonConvergence(
        f"no convergence after {max_iter} iterations (score norm {snorm:.3g})",
        OmegaVector.from_array(x),
        snorm,
        max_iter,
    )


def _default_start(data, spec):
    return fit_logistic(data, spec).omega_hat


def fit_spmle(
    axis: ProfileAxis,
    data: CaseControlData,
    spec: RiskSpec | None = None,
    prevalence: PrevalenceSpec | None = None,
    start=None,
    with_cov: bool = True,
) -> FitResult:
    """Semiparametric profile-likelihood estimate with one covariate block profiled out."""
    spec = spec or RiskSpec(data.q, data.p_x)
    prevalence = prevalence or PrevalenceSpec.rare()
    ctx = LikelihoodContext(data, spec, prevalence)
    if start is None:
        start = _default_start(data, spec)
    sol = solve_profile(ctx, axis, start)
    om = OmegaVector.from_array(sol.x)
    cov = sandwich_cov_spmle(axis, om, ctx) if with_cov else np.full((ctx.p, ctx.p), np.nan)
    method = Method.SPMLE_X if axis is ProfileAxis.X else Method.SPMLE_G
    return FitResult(method, om, cov, "asymptotic", sol.converged, sol.iterations, sol.score_norm,
                     prevalence, spec.param_names())


def _fit_point(method: Method, data, spec, prevalence, start, ctx=None) -> np.ndarray:
    if method is Method.LOGISTIC:
        return fit_logistic(data, spec).omega_hat.to_array()
    if ctx is None:
        ctx = LikelihoodContext(data, spec, prevalence)
    return solve_profile(ctx, AXIS_OF[method], start).x


# ---------------------------------------------------------------------------
# sandwich covariance


@dataclass
class SandwichParts:
    gamma: np.ndarray
    sigma: np.ndarray
    zeta_star: np.ndarray
    cov: np.ndarray


def sandwich_parts(axis: ProfileAxis, omega_hat, ctx: LikelihoodContext) -> SandwichParts:
    grid = compute_grid(ctx, omega_hat)
    _, _, hess = evaluate(ctx, omega_hat, axis, order=2, grid=grid)
    n = ctx.n
    gamma = hess / n
    zeta = influence(axis, omega_hat, ctx, grid)
    zstar = _center_by_stratum(zeta, ctx.data.d)
    sigma = zstar.T @ zstar / n
    cov = _gamma_sandwich(gamma, sigma) / n
    return SandwichParts(gamma, sigma, zstar, cov)


def _center_by_stratum(zeta, d):
    out = zeta.copy()
    for s in (0, 1):
        m = d == s
        out[m] -= out[m].mean(axis=0)
    return out


def _gamma_sandwich(gamma, sigma):
    ev = np.linalg.eigvalsh((gamma + gamma.T) / 2.0)
    cond = _cond(ev)
    if not np.isfinite(cond) or cond > 1e12:
        raise CovarianceError(f"Gamma is singular (condition number {cond:.3g})", condition=cond, min_eigenvalue=ev[0])
    lu = linalg.lu_factor(gamma)
    a = linalg.lu_solve(lu, sigma)  # Gamma^{-1} Sigma
    cov = linalg.lu_solve(lu, a.T).T  # Gamma^{-1} Sigma Gamma^{-T}
    return (cov + cov.T) / 2.0


def sandwich_cov_spmle(axis: ProfileAxis, omega_hat, ctx: LikelihoodContext) -> np.ndarray:
    """Plug-in Gamma^{-1} Sigma Gamma^{-T} / n for the estimator on `axis`."""
    return sandwich_parts(axis, omega_hat, ctx).cov


def sandwich_cov_stacked(omega_x, omega_g, ctx: LikelihoodContext) -> np.ndarray:
    """Joint 2p x 2p covariance of (Omega_X, Omega_G) from the stacked influence terms."""
    px = sandwich_parts(ProfileAxis.X, omega_x, ctx)
    pg = sandwich_parts(ProfileAxis.G, omega_g, ctx)
    n, p = ctx.n, ctx.p
    z = np.hstack([px.zeta_star, pg.zeta_star])
    sigma = z.T @ z / n
    gamma = np.zeros((2 * p, 2 * p))
    gamma[:p, :p] = px.gamma
    gamma[p:, p:] = pg.gamma
    return _gamma_sandwich(gamma, sigma) / n


# ---------------------------------------------------------------------------
# GLS combination


def _stack_design(p):
    return np.vstack([np.eye(p), np.eye(p)])


def gls_combine(omega_x, omega_g, lambda_all, return_info: bool = False):
    """Generalised least squares combination of two estimates of the same Omega.

    Returns (omega_symm, cov) with cov = (X^T Lambda^{-1} X)^{-1}; with
    `return_info` a third element reports whether a ridge was added.
    """
    ox, og = as_flat(omega_x), as_flat(omega_g)
    p = ox.size
    lam = np.asarray(lambda_all, dtype=float)
    if lam.shape != (2 * p, 2 * p):
        raise CovarianceError(f"lambda_all must be {2 * p}x{2 * p}, got {lam.shape}")
    if not np.allclose(lam, lam.T, rtol=1e-8, atol=1e-12 * max(1.0, np.abs(lam).max())):
        raise CovarianceError("lambda_all is not symmetric")
    lam = (lam + lam.T) / 2.0
    ev = np.linalg.eigvalsh(lam)
    tr = float(np.trace(lam))
    if ev[0] < -1e-10 * abs(tr):
        raise CovarianceError("lambda_all is not positive semidefinite", min_eigenvalue=ev[0])
    cond = _cond(ev)
    ridged = False
    if cond > 1e12:
        lam = lam + 1e-8 * tr / (2 * p) * np.eye(2 * p)
        ridged = True
    xd = _stack_design(p)
    y = np.concatenate([ox, og])
    cl = linalg.cho_factor(lam)
    lx = linalg.cho_solve(cl, xd)  # Lambda^{-1} X
    m = xd.T @ lx
    cm = linalg.cho_factor((m + m.T) / 2.0)
    est = linalg.cho_solve(cm, lx.T @ y)
    cov = linalg.cho_solve(cm, np.eye(p))
    cov = (cov + cov.T) / 2.0
    out = (OmegaVector.from_array(est), cov)
    if return_info:
        return out + ({"ridge": ridged, "condition": cond},)
    return out


def gls_weights(lambda_all) -> np.ndarray:
    """Linear map K with Omega_symm = K @ (Omega_X, Omega_G)."""
    lam = np.asarray(lambda_all, dtype=float)
    p = lam.shape[0] // 2
    ev = np.linalg.eigvalsh((lam + lam.T) / 2.0)
    if _cond(ev) > 1e12:
        lam = lam + 1e-8 * np.trace(lam) / (2 * p) * np.eye(2 * p)
    xd = _stack_design(p)
    lx = linalg.cho_solve(linalg.cho_factor(lam), xd)
    m = xd.T @ lx
    return linalg.cho_solve(linalg.cho_factor((m + m.T) / 2.0), lx.T)


# ---------------------------------------------------------------------------
# balanced bootstrap


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _child(ss: np.random.SeedSequence, *keys) -> np.random.SeedSequence:
    """Counter-based child stream: depends only on (root, keys), never on call order."""
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(keys))


def balanced_indices(d: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample controls and cases separately, with replacement, keeping both counts."""
    out = []
    for s in (0, 1):
        idx = np.flatnonzero(d == s)
        out.append(rng.choice(idx, size=idx.size, replace=True))
    return np.concatenate(out)


@dataclass
class BootstrapResult:
    replicates: np.ndarray  # (B_ok, k)
    columns: list[tuple[str, str]]
    cov: np.ndarray
    B: int
    failures: list[dict]
    indices: list[int]  # replicate numbers that succeeded

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    def block(self, method) -> np.ndarray:
        name = Method(method).value
        cols = [i for i, (m, _) in enumerate(self.columns) if m == name]
        return self.replicates[:, cols]


_RECOVERABLE = (GxeError, np.linalg.LinAlgError, FloatingPointError)


def _one_replicate(args):
    b, data, spec, prevalence, root, targets, starts, estimator = args
    rng = np.random.default_rng(_child(root, b))
    idx = balanced_indices(data.d, rng)
    try:
        rep = data.subset(idx)
        if estimator is not None:
            return b, np.asarray(estimator(rep), dtype=float), None
        ctx = LikelihoodContext(rep, spec, prevalence)
        vals = [_fit_point(m, rep, spec, prevalence, starts.get(m), ctx) for m in targets]
        return b, np.concatenate(vals), None
    except _RECOVERABLE as exc:
        return b, None, {"replicate": b, "error": type(exc).__name__, "message": str(exc)}


def _map(fn, tasks, workers):
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def balanced_bootstrap(
    data: CaseControlData,
    spec: RiskSpec | None = None,
    prevalence: PrevalenceSpec | None = None,
    B: int = 200,
    seed=0,
    targets: Iterable = (Method.SPMLE_X, Method.SPMLE_G),
    starts: dict | None = None,
    estimator: Callable[[CaseControlData], np.ndarray] | None = None,
    workers: int = 1,
) -> BootstrapResult:
    """Stratified bootstrap: cases and controls resampled separately.

    Each replicate refits every target starting from its full-data estimate
    (computed here if `starts` lacks it). `estimator`, if given, replaces the
    targets with an arbitrary statistic of the resampled data. Replicate b
    draws from a stream keyed on (seed, b), so results do not depend on
    `workers`.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    spec = spec or RiskSpec(data.q, data.p_x)
    prevalence = prevalence or PrevalenceSpec.rare()
    targets = [Method(t) for t in targets]
    if estimator is None:
        bad = [t for t in targets if t not in AXIS_OF]
        if bad:
            raise ValueError(f"bootstrap targets must be profile estimators, got {bad}")
        starts = dict(starts or {})
        for t in targets:
            if t not in starts:
                ctx = LikelihoodContext(data, spec, prevalence)
                starts[t] = solve_profile(ctx, AXIS_OF[t], _default_start(data, spec)).x
            starts[t] = as_flat(starts[t])
        names = spec.param_names()
        columns = [(t.value, nm) for t in targets for nm in names]
    else:
        columns = None
    root = _seed_sequence(seed)
    tasks = [(b, data, spec, prevalence, root, targets, starts, estimator) for b in range(B)]
    results = _map(_one_replicate, tasks, workers)
    rows, ok, failures = [], [], []
    for b, val, err in results:
        if err is None:
            rows.append(val)
            ok.append(b)
        else:
            failures.append(err)
    if len(failures) > BOOT_FAIL_FRACTION * B:
        raise ExcessiveBootstrapFailure(
            f"{len(failures)} of {B} bootstrap replicates failed (limit {BOOT_FAIL_FRACTION:.0%})", failures
        )
    reps = np.vstack(rows)
    if columns is None:
        columns = [("statistic", str(i)) for i in range(reps.shape[1])]
    cov = np.atleast_2d(np.cov(reps, rowvar=False))
    return BootstrapResult(reps, columns, cov, B, failures, ok)


# ---------------------------------------------------------------------------
# orchestration


def _boot_fit(method, omega, reps, data, prevalence, names, B, seed, boot, ci):
    cov = np.atleast_2d(np.cov(reps, rowvar=False))
    notes = {"bootstrap_failures": boot.n_failed}
    if ci == "percentile":
        notes["percentile_ci"] = np.percentile(reps, [2.5, 97.5], axis=0)
    return FitResult(method, omega, cov, "bootstrap", True, 0, math.nan, prevalence, names, B, seed, notes)


def fit_methods(
    data: CaseControlData,
    spec: RiskSpec | None = None,
    prevalence: PrevalenceSpec | None = None,
    methods: Iterable = tuple(Method),
    B: int = 200,
    seed=0,
    workers: int = 1,
    lambda_source: str = "bootstrap",
    ci: str = "wald",
) -> dict[Method, FitResult]:
    """Fit several methods on one dataset, sharing full-data fits and bootstrap resamples.

    Profile estimators on a single axis get sandwich covariances; composite and
    symmetric get bootstrap covariances from one shared set of replicates.
    """
    spec = spec or RiskSpec(data.q, data.p_x)
    prevalence = prevalence or PrevalenceSpec.rare()
    methods = [Method(m) for m in methods]
    if lambda_source not in ("bootstrap", "sandwich"):
        raise ValueError("lambda_source must be 'bootstrap' or 'sandwich'")
    names = spec.param_names()
    seed_int = seed if isinstance(seed, (int, np.integer)) else None
    out: dict[Method, FitResult] = {}

    logistic = fit_logistic(data, spec)
    if Method.LOGISTIC in methods:
        out[Method.LOGISTIC] = logistic
    ctx = LikelihoodContext(data, spec, prevalence)
    start = logistic.omega_hat

    need = set()
    if Method.SYMMETRIC in methods:
        need |= {Method.SPMLE_X, Method.SPMLE_G}
    for m in (Method.SPMLE_X, Method.SPMLE_G, Method.COMPOSITE):
        if m in methods:
            need.add(m)
    sols = {}
    for m in (Method.SPMLE_X, Method.SPMLE_G, Method.COMPOSITE):
        if m in need:
            sols[m] = solve_profile(ctx, AXIS_OF[m], start)
    for m in (Method.SPMLE_X, Method.SPMLE_G):
        if m in methods:
            s = sols[m]
            om = OmegaVector.from_array(s.x)
            out[m] = FitResult(m, om, sandwich_cov_spmle(AXIS_OF[m], om, ctx), "asymptotic", s.converged,
                               s.iterations, s.score_norm, prevalence, names, seed=seed_int)

    boot_targets = []
    if Method.SYMMETRIC in methods:
        boot_targets += [Method.SPMLE_X, Method.SPMLE_G]
    if Method.COMPOSITE in methods:
        boot_targets.append(Method.COMPOSITE)
    boot = None
    if boot_targets:
        boot = balanced_bootstrap(data, spec, prevalence, B, seed, boot_targets,
                                  {m: sols[m].x for m in boot_targets}, workers=workers)

    if Method.COMPOSITE in methods:
        s = sols[Method.COMPOSITE]
        fr = _boot_fit(Method.COMPOSITE, OmegaVector.from_array(s.x), boot.block(Method.COMPOSITE), data,
                       prevalence, names, B, seed_int, boot, ci)
        fr.converged, fr.iterations, fr.final_score_norm = s.converged, s.iterations, s.score_norm
        out[Method.COMPOSITE] = fr

    if Method.SYMMETRIC in methods:
        sx, sg = sols[Method.SPMLE_X], sols[Method.SPMLE_G]
        stacked = np.hstack([boot.block(Method.SPMLE_X), boot.block(Method.SPMLE_G)])
        if lambda_source == "bootstrap":
            lam = np.cov(stacked, rowvar=False)
        else:
            lam = sandwich_cov_stacked(sx.x, sg.x, ctx)
        om, _, info = gls_combine(sx.x, sg.x, lam, return_info=True)
        k = gls_weights(lam)
        combos = stacked @ k.T
        fr = _boot_fit(Method.SYMMETRIC, om, combos, data, prevalence, names, B, seed_int, boot, ci)
        fr.converged = sx.converged and sg.converged
        fr.iterations = sx.iterations + sg.iterations
        fr.final_score_norm = max(sx.score_norm, sg.score_norm)
        fr.notes.update(
            ridge=info["ridge"],
            lambda_source=lambda_source,
            stacked=StackedEstimate(np.concatenate([sx.x, sg.x]), lam),
        )
        out[Method.SYMMETRIC] = fr
    return {m: out[m] for m in methods}


def fit_composite(data, spec=None, prevalence=None, B: int = 200, seed=0, workers: int = 1) -> FitResult:
    """Maximiser of the average of the two estimated profile loglikelihoods; bootstrap covariance."""
    return fit_methods(data, spec, prevalence, [Method.COMPOSITE], B, seed, workers)[Method.COMPOSITE]


def fit_symmetric(data, spec=None, prevalence=None, B: int = 200, seed=0, workers: int = 1,
                  lambda_source: str = "bootstrap", ci: str = "wald") -> FitResult:
    """GLS combination of the X- and G-profiled estimators.

    Lambda_all is the covariance of the stacked estimates over shared balanced
    bootstrap resamples; the reported covariance is that of the per-replicate
    GLS combinations (each using the full-data Lambda_all).
    """
    return fit_methods(data, spec, prevalence, [Method.SYMMETRIC], B, seed, workers, lambda_source, ci)[
        Method.SYMMETRIC
    ]
