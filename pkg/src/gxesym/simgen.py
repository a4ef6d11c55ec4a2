"""Scenario generators and the Monte Carlo replication harness."""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import optimize, stats
from scipy.special import expit

from .core import CaseControlData, PrevalenceSpec, RiskSpec
from .errors import GxeError, ReplicationFailure, ScenarioError
from .estimators import Method, _child, _map, _seed_sequence, fit_methods

log = logging.getLogger(__name__)

MAX_DRAWS = 10**8
CALIBRATION_DRAWS = 10**6
CALIBRATION_SEED = 20240601
REPLICATION_FAIL_FRACTION = 0.05


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(_seed_sequence(seed))


@dataclass(frozen=True)
class XComponent:
    """One environmental column: kind is "binary" (freq) or "normal" (mean, sd)."""

    kind: str = "binary"
    freq: float = 0.5
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("binary", "normal"):
            raise ScenarioError(f"unknown X component kind {self.kind!r}")
        if self.kind == "binary" and not 0.0 < self.freq < 1.0:
            raise ScenarioError("binary X frequency must lie in (0, 1)")
        if self.kind == "normal" and self.sd <= 0:
            raise ScenarioError("normal X needs sd > 0")


@dataclass(frozen=True)
class GammaComponent:
    """Continuous genetic column drawn from Gamma(shape, scale), standardised to mean 0, SD 1."""

    shape: float
    scale: float


@dataclass(frozen=True)
class Scenario:
    name: str
    snp_mafs: tuple[float, ...]
    beta_true: tuple[float, ...]
    target_pi1: float
    corr_base: float = 0.7
    g_extra: tuple[GammaComponent, ...] = ()
    x_spec: tuple[XComponent, ...] = (XComponent(),)
    alpha0: float | None = None
    # (SNP index j, alpha): X column 1 gets mean shifted by alpha * G_j
    dependence: tuple[int, float] | None = None

    def __post_init__(self):
        if any(not 0.0 < p <= 0.5 for p in self.snp_mafs):
            raise ScenarioError("minor allele frequencies must lie in (0, 0.5]")
        if not 0.0 < self.target_pi1 < 1.0:
            raise ScenarioError("target_pi1 must lie in (0, 1)")
        if abs(self.corr_base) >= 1.0:
            raise ScenarioError("corr_base must satisfy |corr_base| < 1")
        if len(self.beta_true) != self.spec.dim_beta:
            raise ScenarioError(f"beta_true has {len(self.beta_true)} entries, model needs {self.spec.dim_beta}")
        if self.dependence is not None and not 0 <= self.dependence[0] < len(self.snp_mafs):
            raise ScenarioError("dependence refers to a SNP that does not exist")

    @property
    def q(self) -> int:
        return len(self.snp_mafs) + len(self.g_extra)

    @property
    def p_x(self) -> int:
        return len(self.x_spec)

    @property
    def spec(self) -> RiskSpec:
        return RiskSpec(self.q, self.p_x)

    @property
    def alpha(self) -> float:
        """Logistic intercept: the fixed value if given, else calibrated to target_pi1."""
        return self.alpha0 if self.alpha0 is not None else calibrate_alpha0(self)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha0_effective"] = self.alpha
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        d.pop("alpha0_effective", None)
        d["snp_mafs"] = tuple(d["snp_mafs"])
        d["beta_true"] = tuple(float(b) for b in d["beta_true"])
        d["g_extra"] = tuple(GammaComponent(**c) for c in d.get("g_extra", ()))
        d["x_spec"] = tuple(XComponent(**c) for c in d.get("x_spec", ({},)))
        if d.get("dependence") is not None:
            j, a = d["dependence"]
            d["dependence"] = (int(j), float(a))
        try:
            return cls(**d)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from exc


# ---------------------------------------------------------------------------
# generators


def snp_thresholds(maf: float) -> tuple[float, float]:
    p = maf
    return stats.norm.ppf((1 - p) ** 2), stats.norm.ppf((1 - p) ** 2 + 2 * p * (1 - p))


def gen_snps(n: int, mafs, corr_base: float = 0.7, seed=None) -> np.ndarray:
    """Correlated SNPs in Hardy-Weinberg equilibrium by trichotomising a latent Gaussian.

    The latent covariance between SNPs j and k is corr_base ** |j - k|.
    """
    mafs = np.asarray(mafs, dtype=float)
    if abs(corr_base) >= 1:
        raise ScenarioError("corr_base must satisfy |corr_base| < 1")
    if np.any((mafs <= 0) | (mafs > 0.5)):
        raise ScenarioError("minor allele frequencies must lie in (0, 0.5]")
    rng = _rng(seed)
    q = mafs.size
    lag = np.abs(np.subtract.outer(np.arange(q), np.arange(q)))
    chol = np.linalg.cholesky(corr_base ** lag.astype(float))
    z = rng.standard_normal((n, q)) @ chol.T
    t = np.array([snp_thresholds(p) for p in mafs])
    return (z >= t[:, 0]).astype(np.int8) + (z >= t[:, 1]).astype(np.int8)


def draw_population(scenario: Scenario, n: int, rng, alpha0: float | None = None):
    """n population draws of (G, X, D) under the scenario's risk model."""
    rng = _rng(rng)
    g = gen_snps(n, scenario.snp_mafs, scenario.corr_base, rng).astype(float)
    if scenario.g_extra:
        extra = []
        for c in scenario.g_extra:
            v = rng.gamma(c.shape, c.scale, n)
            extra.append((v - c.shape * c.scale) / (math.sqrt(c.shape) * c.scale))
        g = np.hstack([g, np.column_stack(extra)])
    xs = []
    for j, c in enumerate(scenario.x_spec):
        if c.kind == "binary":
            xs.append(rng.random(n) < c.freq)
        else:
            mean = np.full(n, c.mean)
            if scenario.dependence is not None and j == 0:
                k, a = scenario.dependence
                mean = mean + a * g[:, k]
            xs.append(rng.normal(mean, c.sd))
    x = np.column_stack(xs).astype(float)
    a0 = scenario.alpha if alpha0 is None else alpha0
    eta = a0 + scenario.spec.design_matrix(g, x) @ np.asarray(scenario.beta_true)
    d = (rng.random(n) < expit(eta)).astype(np.int8)
    return g, x, d, eta


def population_prevalence(scenario: Scenario, alpha0: float, n: int = CALIBRATION_DRAWS, seed=CALIBRATION_SEED):
    """Monte Carlo pr(D = 1), averaging H(alpha0 + m) over n covariate draws."""
    g, x, _, eta = draw_population(scenario, n, seed, alpha0=alpha0)
    return float(np.mean(expit(eta)))


@functools.lru_cache(maxsize=64)
def calibrate_alpha0(scenario: Scenario) -> float:
    """Intercept giving population prevalence target_pi1, root-found on a fixed set of 10^6 draws."""
    g, x, _, eta0 = draw_population(scenario, CALIBRATION_DRAWS, CALIBRATION_SEED, alpha0=0.0)

    def gap(a):
        return float(np.mean(expit(a + eta0))) - scenario.target_pi1

    return float(optimize.brentq(gap, -30.0, 30.0, xtol=1e-8))


def gen_case_control(scenario: Scenario, n0: int, n1: int, seed=None) -> CaseControlData:
    """Case-control sample by rejection: draw from the population until both quotas fill."""
    rng = _rng(seed)
    alpha0 = scenario.alpha
    need = {0: n0, 1: n1}
    parts = {0: [], 1: []}
    drawn = 0
    pi = scenario.target_pi1
    while need[0] > 0 or need[1] > 0:
        if drawn >= MAX_DRAWS:
            raise ScenarioError(f"quota unreachable within {MAX_DRAWS:.0e} draws; prevalence too extreme")
        batch = int(min(MAX_DRAWS - drawn, max(4096, 1.2 * max(need[1] / pi, need[0] / (1 - pi)))))
        g, x, d, _ = draw_population(scenario, batch, rng, alpha0)
        drawn += batch
        for s in (0, 1):
            if need[s] > 0:
                idx = np.flatnonzero(d == s)[: need[s]]
                parts[s].append((g[idx], x[idx]))
                need[s] -= idx.size
    g = np.vstack([p[0] for s in (0, 1) for p in parts[s]])
    x = np.vstack([p[1] for s in (0, 1) for p in parts[s]])
    d = np.repeat([0, 1], [n0, n1])
    return CaseControlData(d, g, x)


# ---------------------------------------------------------------------------
# presets

LOG = math.log
_BASE_BETA = (LOG(1.2), LOG(1.2), 0.0, LOG(1.2), 0.0, LOG(1.5), LOG(1.3), 0.0, 0.0, LOG(1.3), 0.0)
_VIOL_BETA = (LOG(1.2), LOG(1.2), 0.0, LOG(1.2), 0.0, LOG(1.35), LOG(1.21), 0.0, 0.0, LOG(1.21), 0.0)
_MAFS = (0.1, 0.3, 0.3, 0.3, 0.1)
VIOLATION_ALPHA = 0.032


def _presets() -> dict[str, Scenario]:
    p = {"base": Scenario("base", _MAFS, _BASE_BETA, 0.03, alpha0=-4.165)}
    for rate in (0.05, 0.085, 0.12):
        p[f"misspec-{rate:g}"] = Scenario(f"misspec-{rate:g}", _MAFS, _BASE_BETA, rate)
    for j in range(3):
        p[f"viol-G{j + 1}"] = Scenario(
            f"viol-G{j + 1}", _MAFS, _VIOL_BETA, 0.03,
            x_spec=(XComponent("normal", mean=0.0, sd=1.0),),
            dependence=(j, VIOLATION_ALPHA),
        )
    alt_beta = (LOG(1.2), 0.0, LOG(1.38), LOG(1.5), LOG(1.14), LOG(1.1), 0.0, 0.0, 0.0, 0.0, 0.0)
    p["altdist"] = Scenario(
        "altdist", (0.2, 0.3), alt_beta, 0.05,
        g_extra=(GammaComponent(20.0, 20.0),),
        x_spec=(XComponent("binary", freq=0.5), XComponent("normal", mean=0.0, sd=1.0)),
    )
    return p


PRESETS = _presets()


def get_scenario(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}; presets: {', '.join(PRESETS)}") from None


def load_scenario_config(path) -> Scenario:
    """JSON scenario file: an optional "preset" name plus any Scenario fields to override."""
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ScenarioError("scenario config must be a JSON object")
    base = cfg.pop("preset", None)
    fields = get_scenario(base).to_dict() if base else {}
    fields.update(cfg)
    if "name" not in fields:
        fields["name"] = "custom"
    return Scenario.from_dict(fields)


# ---------------------------------------------------------------------------
# replication harness


@dataclass
class ReplicationReport:
    scenario: Scenario
    methods: list[str]
    param_names: list[str]  # beta parameters only; kappa is not comparable across prevalence modes
    truth: np.ndarray
    estimates: dict[str, np.ndarray]  # method -> (R_ok, p) including kappa
    ses: dict[str, np.ndarray]
    replications_requested: int
    replications_completed: list[int]
    failures: list[dict]
    config: dict
    runtime_seconds: float = math.nan
    bias: dict = field(init=False)
    coverage: dict = field(init=False)
    mse: dict = field(init=False)
    mse_eff: dict = field(init=False)

    def __post_init__(self):
        self.bias, self.coverage, self.mse, self.mse_eff = {}, {}, {}, {}
        for m in self.methods:
            est = self.estimates[m][:, 1:]
            se = self.ses[m][:, 1:]
            err = est - self.truth
            self.bias[m] = err.mean(axis=0)
            self.mse[m] = np.mean(err**2, axis=0)
            lo, hi = est - 1.959963984540054 * se, est + 1.959963984540054 * se
            self.coverage[m] = 100.0 * np.mean((lo <= self.truth) & (self.truth <= hi), axis=0)
        ref = self.mse.get(Method.LOGISTIC.value)
        for m in self.methods:
            if m == Method.LOGISTIC.value:
                self.mse_eff[m] = np.ones(len(self.param_names))
            elif ref is not None:
                self.mse_eff[m] = ref / self.mse[m]

    def interaction_index(self) -> list[int]:
        return [i for i, nm in enumerate(self.param_names) if nm.count("_") >= 2]

    def to_dict(self, include_runtime: bool = False) -> dict:
        def per_param(vals):
            return {nm: float(v) for nm, v in zip(self.param_names, vals)}

        out = {
            "schema_version": "1",
            "kind": "replication_report",
            "scenario": self.scenario.to_dict(),
            "config": self.config,
            "replications_requested": self.replications_requested,
            "replications_completed": len(self.replications_completed),
            "failures": self.failures,
            "truth": per_param(self.truth),
            "methods": {
                m: {
                    "bias": per_param(self.bias[m]),
                    "coverage_percent": per_param(self.coverage[m]),
                    "mse": per_param(self.mse[m]),
                    **({"mse_efficiency": per_param(self.mse_eff[m])} if m in self.mse_eff else {}),
                }
                for m in self.methods
            },
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime_seconds
        return out

    def estimates_table(self) -> tuple[list[str], list[list]]:
        """Long-format rows (replication, method, parameter, estimate, se) for CSV export."""
        names = ["kappa"] + self.param_names
        rows = []
        for m in self.methods:
            for k, r in enumerate(self.replications_completed):
                for j, nm in enumerate(names):
                    rows.append([r, m, nm, repr(float(self.estimates[m][k, j])), repr(float(self.ses[m][k, j]))])
        return ["replication", "method", "parameter", "estimate", "se"], rows

    def format_table(self) -> str:
        w = 8
        lines = ["".ljust(10) + "".join(nm.replace("beta_", "")[:w].rjust(w) for nm in self.param_names)]
        lines.append("True".ljust(10) + "".join(f"{v:{w}.2f}" for v in self.truth))
        for m in self.methods:
            lines.append(f"[{m}]")
            lines.append("Bias".ljust(10) + "".join(f"{v:{w}.3f}" for v in self.bias[m]))
            lines.append("CI(%)".ljust(10) + "".join(f"{v:{w}.1f}" for v in self.coverage[m]))
            if m in self.mse_eff and m != Method.LOGISTIC.value:
                lines.append("MSE Eff".ljust(10) + "".join(f"{v:{w}.2f}" for v in self.mse_eff[m]))
        return "\n".join(lines)


def _replicate_once(args):
    r, scenario, methods, n0, n1, B, root, prevalence = args
    try:
        data = gen_case_control(scenario, n0, n1, _child(root, r, 0))
        fits = fit_methods(data, scenario.spec, prevalence, methods, B, _child(root, r, 1))
    except (GxeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return r, None, {"replication": r, "error": type(exc).__name__, "message": str(exc)}
    return r, {m.value: (f.omega_hat.to_array(), f.se) for m, f in fits.items()}, None


def run_replication(
    scenario: Scenario,
    methods: Iterable = (Method.LOGISTIC, Method.SPMLE_X, Method.SYMMETRIC),
    R: int = 200,
    n0: int = 1000,
    n1: int = 1000,
    B: int = 200,
    seed: int = 0,
    prevalence_assumed: PrevalenceSpec | None = None,
    workers: int = 1,
) -> ReplicationReport:
    """Monte Carlo study: R datasets, each fitted by every requested method.

    Logistic regression is always fitted so MSE efficiencies can be formed.
    Replication r uses streams keyed on (seed, r), so the report is identical
    for any worker count.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    methods = [Method(m) for m in methods]
    if Method.LOGISTIC not in methods:
        methods = [Method.LOGISTIC] + methods
    if prevalence_assumed is None:
        prevalence_assumed = PrevalenceSpec.known(scenario.target_pi1)
    root = np.random.SeedSequence(seed)
    t0 = time.perf_counter()
    tasks = [(r, scenario, methods, n0, n1, B, root, prevalence_assumed) for r in range(R)]
    results = _map(_replicate_once, tasks, workers)
    done, failures = [], []
    est = {m.value: [] for m in methods}
    ses = {m.value: [] for m in methods}
    for r, val, err in results:
        if err is not None:
            failures.append(err)
            continue
        done.append(r)
        for m in methods:
            est[m.value].append(val[m.value][0])
            ses[m.value].append(val[m.value][1])
    if len(failures) > REPLICATION_FAIL_FRACTION * R:
        raise ReplicationFailure(f"{len(failures)} of {R} replications failed", failures)
    config = {
        "methods": [m.value for m in methods],
        "R": R, "n0": n0, "n1": n1, "B": B, "seed": seed,
        "prevalence": prevalence_assumed.label(),
    }
    return ReplicationReport(
        scenario=scenario,
        methods=[m.value for m in methods],
        param_names=scenario.spec.param_names()[1:],
        truth=np.asarray(scenario.beta_true, dtype=float),
        estimates={k: np.array(v) for k, v in est.items()},
        ses={k: np.array(v) for k, v in ses.items()},
        replications_requested=R,
        replications_completed=done,
        failures=failures,
        config=config,
        runtime_seconds=time.perf_counter() - t0,
    )
