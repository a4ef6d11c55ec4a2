"""Domain types: case-control sample, risk model layout, parameter vector, prevalence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, DimensionError, PrevalenceError


@dataclass(frozen=True, eq=False)
class CaseControlData:
    """A retrospective sample: disease status plus genetic and environmental covariates.

    Arrays are copied, made read-only and validated on construction.
    """

    d: np.ndarray
    g: np.ndarray
    x: np.ndarray
    n0: int = field(init=False)
    n1: int = field(init=False)

    def __post_init__(self):
        d = np.array(self.d)
        g = np.array(self.g, dtype=float)
        x = np.array(self.x, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        if x.ndim == 1:
            x = x[:, None]
        if d.ndim != 1:
            raise DataError("d must be a vector", column="d")
        n = d.shape[0]
        for name, arr in (("g", g), ("x", x)):
            if arr.ndim != 2 or arr.shape[0] != n:
                raise DataError(f"{name} must have {n} rows, got shape {arr.shape}", column=name)
            if arr.shape[1] == 0:
                raise DataError(f"{name} has no columns", column=name)
        bad = ~np.isin(d, (0, 1))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DataError(f"row {i}: d must be 0 or 1, got {d[i]!r}", row=i, column="d")
        d = d.astype(np.int8)
        for name, arr in (("g", g), ("x", x)):
            nonfinite = ~np.isfinite(arr)
            if nonfinite.any():
                i, j = map(int, np.argwhere(nonfinite)[0])
                raise DataError(f"row {i}: non-finite value in {name}{j + 1}", row=i, column=f"{name}{j + 1}")
            const = np.all(arr == arr[0], axis=0)
            if const.any():
                j = int(np.flatnonzero(const)[0])
                raise DataError(f"column {name}{j + 1} is constant", column=f"{name}{j + 1}")
        n1 = int(d.sum())
        n0 = n - n1
        if n0 < 1 or n1 < 1:
            raise DataError(f"need at least one case and one control (n0={n0}, n1={n1})", column="d")
        for arr in (d, g, x):
            arr.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n0", n0)
        object.__setattr__(self, "n1", n1)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def q(self) -> int:
        return self.g.shape[1]

    @property
    def p_x(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "CaseControlData":
        idx = np.asarray(idx)
        return CaseControlData(self.d[idx], self.g[idx], self.x[idx])


@dataclass(frozen=True)
class Term:
    """Product of selected G columns and X columns (0-based indices)."""

    g_cols: tuple[int, ...] = ()
    x_cols: tuple[int, ...] = ()

    def name(self) -> str:
        parts = [f"x{j + 1}" for j in self.x_cols] + [f"g{k + 1}" for k in self.g_cols]
        return "beta_" + "_".join(parts)


MAIN_GX = "main_gx"
MAIN_ONLY = "main"
CUSTOM = "custom"


@dataclass(frozen=True)
class RiskSpec:
    """Functional form of m(G, X, beta); linear in beta with one coefficient per term.

    Default layout: G main effects, X main effects, then every G column crossed
    with X column 1, then with X column 2, and so on.
    """

    q: int
    p_x: int
    form: str = MAIN_GX
    custom_terms: tuple[Term, ...] = ()

    def __post_init__(self):
        if self.q < 1 or self.p_x < 1:
            raise DimensionError("q and p_x must be positive", axis="spec")
        if self.form not in (MAIN_GX, MAIN_ONLY, CUSTOM):
            raise ValueError(f"unknown risk form {self.form!r}")
        if self.form == CUSTOM:
            if not self.custom_terms:
                raise ValueError("custom form needs at least one term")
            for t in self.custom_terms:
                if not (t.g_cols or t.x_cols):
                    raise ValueError("custom term must reference at least one column")
                if any(k < 0 or k >= self.q for k in t.g_cols):
                    raise DimensionError(f"term {t} references a G column outside 0..{self.q - 1}", axis="g")
                if any(j < 0 or j >= self.p_x for j in t.x_cols):
                    raise DimensionError(f"term {t} references an X column outside 0..{self.p_x - 1}", axis="x")

    @classmethod
    def custom(cls, q: int, p_x: int, terms: Sequence[Term | tuple]) -> "RiskSpec":
        ts = tuple(t if isinstance(t, Term) else Term(tuple(t[0]), tuple(t[1])) for t in terms)
        return cls(q, p_x, CUSTOM, ts)

    @property
    def terms(self) -> tuple[Term, ...]:
        if self.form == CUSTOM:
            return self.custom_terms
        ts = [Term((k,), ()) for k in range(self.q)]
        ts += [Term((), (j,)) for j in range(self.p_x)]
        if self.form == MAIN_GX:
            ts += [Term((k,), (j,)) for j in range(self.p_x) for k in range(self.q)]
        return tuple(ts)

    @property
    def dim_beta(self) -> int:
        return len(self.terms)

    @property
    def dim_omega(self) -> int:
        return 1 + self.dim_beta

    def param_names(self) -> list[str]:
        return ["kappa"] + [t.name() for t in self.terms]

    def g_features(self, g: np.ndarray) -> np.ndarray:
        """Per-term product of the G columns; shape (rows, dim_beta)."""
        g = np.atleast_2d(np.asarray(g, dtype=float))
        if g.shape[1] != self.q:
            raise DimensionError(f"g has {g.shape[1]} columns, spec expects q={self.q}", axis="g")
        return _term_products(g, [t.g_cols for t in self.terms])

    def x_features(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.p_x:
            raise DimensionError(f"x has {x.shape[1]} columns, spec expects p_x={self.p_x}", axis="x")
        return _term_products(x, [t.x_cols for t in self.terms])

    def design_matrix(self, g: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.g_features(g) * self.x_features(x)


def _term_products(a: np.ndarray, cols_per_term) -> np.ndarray:
    out = np.ones((a.shape[0], len(cols_per_term)))
    for t, cols in enumerate(cols_per_term):
        for c in cols:
            out[:, t] *= a[:, c]
    return out


@dataclass(frozen=True, eq=False)
class OmegaVector:
    """(kappa, beta); kappa is always coordinate 0 of the flat form."""

    kappa: float
    beta: np.ndarray

    def __post_init__(self):
        b = np.array(self.beta, dtype=float).ravel()
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "kappa", float(self.kappa))

    @classmethod
    def from_array(cls, a) -> "OmegaVector":
        a = np.asarray(a, dtype=float).ravel()
        return cls(a[0], a[1:])

    def to_array(self) -> np.ndarray:
        return np.concatenate(([self.kappa], self.beta))

    def __array__(self, dtype=None, copy=None):
        a = self.to_array()
        return a if dtype is None else a.astype(dtype)

    def __len__(self):
        return 1 + self.beta.size

    def __repr__(self):
        return f"OmegaVector(kappa={self.kappa:.6g}, beta={np.array2string(self.beta, precision=4)})"


def as_flat(omega) -> np.ndarray:
    if isinstance(omega, OmegaVector):
        return omega.to_array()
    return np.asarray(omega, dtype=float).ravel()


@dataclass(frozen=True)
class PrevalenceSpec:
    """Known population disease rate pi1, or the rare-disease limit (pi1 -> 0)."""

    pi1: float | None = None

    def __post_init__(self):
        if self.pi1 is not None:
            p = float(self.pi1)
            if not (0.0 < p < 1.0) or not math.isfinite(p):
                raise PrevalenceError(f"pi1 must lie in the open interval (0, 1), got {self.pi1}")
            object.__setattr__(self, "pi1", p)

    @classmethod
    def known(cls, pi1: float) -> "PrevalenceSpec":
        return cls(pi1)

    @classmethod
    def rare(cls) -> "PrevalenceSpec":
        return cls(None)

    @property
    def is_rare(self) -> bool:
        return self.pi1 is None

    @property
    def pi0(self) -> float:
        return 1.0 if self.pi1 is None else 1.0 - self.pi1

    def label(self) -> str:
        return "rare" if self.is_rare else f"known({self.pi1:g})"


def build_design(g_row, x_row, spec: RiskSpec) -> np.ndarray:
    """Covariate vector whose inner product with beta equals m(g, x, beta)."""
    g_row = np.asarray(g_row, dtype=float).ravel()
    x_row = np.asarray(x_row, dtype=float).ravel()
    if g_row.size != spec.q:
        raise DimensionError(f"g_row has length {g_row.size}, expected q={spec.q}", axis="g")
    if x_row.size != spec.p_x:
        raise DimensionError(f"x_row has length {x_row.size}, expected p_x={spec.p_x}", axis="x")
    return spec.design_matrix(g_row[None, :], x_row[None, :])[0]


def evaluate_m(g_row, x_row, beta, spec: RiskSpec) -> tuple[float, np.ndarray]:
    z = build_design(g_row, x_row, spec)
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != z.size:
        raise DimensionError(f"beta has length {beta.size}, expected {z.size}", axis="beta")
    return float(z @ beta), z


def _check_counts(n1, n0):
    if n0 < 1 or n1 < 1:
        raise DataError(f"stratum counts must be positive (n0={n0}, n1={n1})")


def kappa_from_alpha(alpha0: float, n1: int, n0: int, pi1: float) -> float:
    """Intercept that prospective logistic regression converges to under case-control sampling."""
    _check_counts(n1, n0)
    pi1 = PrevalenceSpec(pi1).pi1
    return alpha0 + math.log(n1 / n0) - math.log(pi1 / (1.0 - pi1))


def alpha_from_kappa(kappa: float, n1: int, n0: int, pi1: float) -> float:
    _check_counts(n1, n0)
    pi1 = PrevalenceSpec(pi1).pi1
    return kappa - math.log(n1 / n0) + math.log(pi1 / (1.0 - pi1))
