"""Pre-analysis checks: polygenic scores and G-X independence screening on controls."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np
from scipy import stats

from .core import CaseControlData
from .errors import DataError, DegenerateScoreError, DimensionError, InsufficientData

SCHEMA_VERSION = "1"
MIN_CONTROLS_PER_LEVEL = 10
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class PrsWeights:
    """Ordered (SNP identifier, log odds ratio) pairs."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((str(k), float(v)) for k, v in self.entries)
        if not entries:
            raise ValueError("PrsWeights needs at least one entry")
        ids = [k for k, _ in entries]
        if len(set(ids)) != len(ids):
            dup = next(k for k in ids if ids.count(k) > 1)
            raise ValueError(f"duplicate SNP identifier {dup!r}")
        for k, v in entries:
            if not math.isfinite(v):
                raise ValueError(f"coefficient for {k} is not finite")
        object.__setattr__(self, "entries", entries)

    @property
    def ids(self) -> list[str]:
        return [k for k, _ in self.entries]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([v for _, v in self.entries])

    def __len__(self):
        return len(self.entries)

    @classmethod
    def bundled(cls, name: str = "plco21") -> "PrsWeights":
        """Weights shipped with the package, addressed by name."""
        try:
            text = resources.files("gxesym").joinpath("data").joinpath(f"{name}.csv").read_text(encoding="utf-8")
        except FileNotFoundError:
            raise KeyError(f"no bundled weight set named {name!r}") from None
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(tuple((r["snp"], float(r["coefficient"])) for r in rows))


def polygenic_score(genotypes, weights: PrsWeights | str = "plco21") -> np.ndarray:
    """Weighted genotype sum, standardised to sample mean 0 and SD 1 (ddof=1).

    Columns of `genotypes` must follow the identifier order of `weights`.
    """
    if isinstance(weights, str):
        weights = PrsWeights.bundled(weights)
    geno = np.asarray(genotypes, dtype=float)
    if geno.ndim == 1:
        geno = geno[:, None]
    if geno.shape[1] != len(weights):
        raise DimensionError(f"genotypes have {geno.shape[1]} columns, weights have {len(weights)}", axis="snp")
    raw = geno @ weights.coefficients
    if raw.size < 2:
        raise DegenerateScoreError("need at least two subjects to standardise")
    sd = raw.std(ddof=1)
    # rounding leaves a tiny nonzero SD on constant input
    if not np.isfinite(sd) or sd <= 1e-12 * max(1.0, np.abs(raw).max()):
        raise DegenerateScoreError("raw polygenic score has zero variance")
    return (raw - raw.mean()) / sd


def bh_qvalues(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        return p.copy()
    return stats.false_discovery_control(p, method="bh")


@dataclass
class ScreenTest:
    g_column: str
    x_column: str
    test: str  # "welch_t" or "chi2"
    statistic: float
    df: float
    p: float
    q: float = math.nan
    merged: bool = False  # genotype 2 folded into 1 for small expected counts

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ScreenReport:
    tests: list[ScreenTest] = field(default_factory=list)
    n_controls: int = 0

    def min_q(self) -> float:
        return min((t.q for t in self.tests), default=math.nan)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "screen_report",
            "n_controls": self.n_controls,
            "tests": [t.to_dict() for t in self.tests],
        }


def _binary_levels(col):
    levels = np.unique(col)
    return levels if levels.size == 2 else None


def _snp_table(g, x, levels, merge_small):
    codes = np.rint(g).astype(int)
    if not np.all(codes == g) or codes.min() < 0 or codes.max() > 2:
        raise DataError("SNP columns must be coded 0, 1, 2")
    table = np.array([[np.sum((codes == k) & (x == lv)) for lv in levels] for k in range(3)], dtype=float)
    merged = False
    if merge_small:
        expected = table.sum(1, keepdims=True) * table.sum(0, keepdims=True) / table.sum()
        if np.any(expected < MIN_EXPECTED):
            table = np.vstack([table[0], table[1] + table[2]])
            merged = True
    return table[table.sum(1) > 0], merged


def independence_screen(data: CaseControlData, g_kind: str | Sequence[str] = "snp", merge_small: bool = True) -> ScreenReport:
    """Test each G column against each binary X column among controls.

    Continuous G: Welch t-test across the two X levels. SNP G: chi-square on the
    genotype-by-level table. q-values are Benjamini-Hochberg over every test.
    """
    kinds = [g_kind] * data.q if isinstance(g_kind, str) else list(g_kind)
    if len(kinds) != data.q:
        raise DimensionError(f"g_kind has {len(kinds)} entries for {data.q} G columns", axis="g")
    for k in kinds:
        if k not in ("snp", "continuous"):
            raise ValueError(f"unknown G kind {k!r}; expected 'snp' or 'continuous'")

    ctrl = data.d == 0
    g, x = data.g[ctrl], data.x[ctrl]
    binary = [(j, lv) for j in range(data.p_x) if (lv := _binary_levels(x[:, j])) is not None]
    if not binary:
        raise DataError("no binary X column among controls to screen against")

    report = ScreenReport(n_controls=int(ctrl.sum()))
    for j, levels in binary:
        counts = [int(np.sum(x[:, j] == lv)) for lv in levels]
        if min(counts) < MIN_CONTROLS_PER_LEVEL:
            raise InsufficientData(
                f"x{j + 1}: {min(counts)} controls at one level, need at least {MIN_CONTROLS_PER_LEVEL}"
            )
        for k, kind in enumerate(kinds):
            col = g[:, k]
            if kind == "continuous":
                a, b = col[x[:, j] == levels[0]], col[x[:, j] == levels[1]]
                res = stats.ttest_ind(b, a, equal_var=False)
                report.tests.append(ScreenTest(f"g{k + 1}", f"x{j + 1}", "welch_t",
                                               float(res.statistic), float(res.df), float(res.pvalue)))
                continue
            table, merged = _snp_table(col, x[:, j], levels, merge_small)
            if table.shape[0] < 2:
                # a single observed genotype carries no information about X
                report.tests.append(ScreenTest(f"g{k + 1}", f"x{j + 1}", "chi2", 0.0, 0.0, 1.0, merged=merged))
                continue
            chi = stats.chi2_contingency(table, correction=False)
            report.tests.append(ScreenTest(f"g{k + 1}", f"x{j + 1}", "chi2",
                                           float(chi.statistic), float(chi.dof), float(chi.pvalue), merged=merged))
    q = bh_qvalues([t.p for t in report.tests])
    for t, qv in zip(report.tests, q):
        t.q = float(qv)
    return report
