"""Least-squares machinery: within (fixed-effects) transforms, OLS with
heteroskedasticity-robust covariance, linear Wald tests, and 2SLS with a
first-stage partial-F diagnostic.

Estimators work on plain arrays that have already been assembled (and, for
fixed-effects models, demeaned); the panel-aware wrappers live in
``analysis``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .special import NORMAL_CRIT_95, chi2_sf_1df, normal_sf

__all__ = [
    "RankDeficiencyError",
    "ConvergenceError",
    "RegressionResult",
    "group_codes",
    "within_transform",
    "two_way_within",
    "connected_components",
    "ols_robust",
    "wald_linear",
    "two_stage_least_squares",
]

DEFAULT_WEAK_F_THRESHOLD = 10.0


class RankDeficiencyError(ValueError):
    """The design matrix is rank deficient; names the collinear columns."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__(f"collinear column(s) after demeaning: {', '.join(columns)}")


class ConvergenceError(RuntimeError):
    """Iterative demeaning failed to reach tolerance within the cap."""


@dataclass
class RegressionResult:
    """Coefficients with robust covariance and sample bookkeeping."""

    names: list[str]
    coef: np.ndarray
    cov: np.ndarray
    n_obs: int
    n_absorbed: int
    df_resid: int
    n_individuals: int | None = None
    n_weeks: int | None = None
    partial_f: float | None = None
    weak_instrument: bool | None = None
    wald_tests: dict[str, tuple[float, float]] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def tstats(self) -> np.ndarray:
        return self.coef / self.se()

    def pvalues(self) -> np.ndarray:
        return np.array([2.0 * normal_sf(abs(t)) for t in self.tstats()])

    def conf_int(self) -> np.ndarray:
        """95% confidence intervals, one (low, high) row per coefficient."""
        half = NORMAL_CRIT_95 * self.se()
        return np.column_stack([self.coef - half, self.coef + half])

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


def group_codes(labels) -> tuple[np.ndarray, int]:
    """Dense 0..G-1 codes for arbitrary group labels."""
    _, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes, int(codes.max()) + 1 if len(codes) else 0


def _demean_by(x: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    if x.ndim == 1:
        means = np.bincount(codes, weights=x, minlength=n_groups) / counts
        return x - means[codes]
    out = np.empty_like(x, dtype=float)
    for j in range(x.shape[1]):
        means = np.bincount(codes, weights=x[:, j], minlength=n_groups) / counts
        out[:, j] = x[:, j] - means[codes]
    return out


def within_transform(x, groups) -> np.ndarray:
    """Demean every column of x within the given groups."""
    x = np.asarray(x, dtype=float)
    codes, n_groups = group_codes(groups)
    if n_groups == 0:
        raise ValueError("within_transform needs at least one row")
    return _demean_by(x, codes, n_groups)


def connected_components(ids, weeks) -> int:
    """Components of the bipartite individual-week incidence graph."""
    id_codes, n_ids = group_codes(ids)
    week_codes, n_weeks = group_codes(weeks)
    parent = np.arange(n_ids + n_weeks)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, w in zip(id_codes, n_ids + week_codes):
        ra, rb = find(i), find(w)
        if ra != rb:
            parent[rb] = ra
    roots = {find(a) for a in range(n_ids + n_weeks)}
    return len(roots)


def two_way_within(x, ids, weeks, *, tol: float = 1e-10, max_iter: int = 2000):
    """Demean columns by individual and week via alternating projections.

    Iterates until the largest column change is below ``tol``; raises
    ConvergenceError at the iteration cap. Returns ``(demeaned, info)``
    where info records iterations, the absorbed parameter count
    (n_ids + n_weeks - n_components) and a disconnected-graph warning flag.
    """
    x = np.asarray(x, dtype=float)
    vec = x.ndim == 1
    work = x.reshape(-1, 1).copy() if vec else x.copy()
    id_codes, n_ids = group_codes(ids)
    week_codes, n_weeks = group_codes(weeks)
    if n_ids == 0:
        raise ValueError("two_way_within needs at least one row")

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        before = work.copy()
        work = _demean_by(work, id_codes, n_ids)
        work = _demean_by(work, week_codes, n_weeks)
        if np.max(np.abs(work - before)) < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"two-way demeaning did not converge in {max_iter} iterations (tol={tol})"
        )
    n_components = connected_components(id_codes, week_codes)
    info = {
        "iterations": iterations,
        "n_individuals": n_ids,
        "n_weeks": n_weeks,
        "n_components": n_components,
        "absorbed": n_ids + n_weeks - n_components,
        "disconnected": n_components > 1,
    }
    return (work[:, 0] if vec else work), info


def _find_collinear(x: np.ndarray, names: list[str]) -> list[str]:
    kept: list[int] = []
    collinear: list[str] = []
    for j in range(x.shape[1]):
        cand = x[:, kept + [j]]
        if np.linalg.matrix_rank(cand) == len(kept) + 1:
            kept.append(j)
        else:
            collinear.append(names[j])
    return collinear


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim == 1 else x


_GRAM_COND_LIMIT = 1e12


def _solve_normal_equations(x: np.ndarray, y: np.ndarray, names: list[str]):
    """Least squares via the normal equations (k is small here).

    Returns (coef, gram). Raises RankDeficiencyError, naming the collinear
    columns, when the gram matrix is singular or near-singular.
    """
    gram = x.T @ x
    try:
        coef = np.linalg.solve(gram, x.T @ y)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError(_find_collinear(x, names)) from None
    if not np.all(np.isfinite(coef)) or np.linalg.cond(gram) > _GRAM_COND_LIMIT:
        raise RankDeficiencyError(_find_collinear(x, names))
    return coef, gram


def _sandwich(x: np.ndarray, resid: np.ndarray, xtx_inv: np.ndarray,
              *, scale: float, cluster=None) -> np.ndarray:
    scores = x * resid[:, None]
    if cluster is None:
        meat = scores.T @ scores
    else:
        codes, n_groups = group_codes(cluster)
        sums = np.zeros((n_groups, x.shape[1]))
        np.add.at(sums, codes, scores)
        meat = sums.T @ sums
    return scale * (xtx_inv @ meat @ xtx_inv)


def ols_robust(
    y,
    x,
    names: list[str] | None = None,
    *,
    absorbed: int = 0,
    ssc: str = "hc1",
    cluster=None,
    n_individuals: int | None = None,
    n_weeks: int | None = None,
) -> RegressionResult:
    """OLS with a heteroskedasticity-robust (sandwich) covariance.

    ``absorbed`` counts fixed-effect parameters removed by demeaning; the
    HC1 small-sample rule scales the covariance by n/(n - absorbed - k).
    Pass ``cluster`` labels for a cluster-robust covariance instead
    (CR1 scaling). Raises RankDeficiencyError naming collinear columns.
    """
    y = np.asarray(y, dtype=float)
    x = _as_matrix(x)
    n, k = x.shape
    names = names if names is not None else [f"x{j}" for j in range(k)]
    if len(names) != k:
        raise ValueError("one name per design column required")
    if ssc not in ("hc1", "hc0"):
        raise ValueError(f"unknown small-sample rule {ssc!r}")

    coef, gram = _solve_normal_equations(x, y, names)

    resid = y - x @ coef
    k_total = absorbed + k
    df_resid = n - k_total
    if df_resid <= 0:
        raise ValueError(f"non-positive residual degrees of freedom ({n} obs, {k_total} parameters)")

    xtx_inv = np.linalg.inv(gram)
    if cluster is not None:
        codes, n_groups = group_codes(cluster)
        scale = (n_groups / (n_groups - 1.0)) * ((n - 1.0) / df_resid)
    else:
        scale = n / df_resid if ssc == "hc1" else 1.0
    cov = _sandwich(x, resid, xtx_inv, scale=scale, cluster=cluster)

    return RegressionResult(
        names=list(names),
        coef=coef,
        cov=cov,
        n_obs=n,
        n_absorbed=absorbed,
        df_resid=df_resid,
        n_individuals=n_individuals,
        n_weeks=n_weeks,
        extras={"ssc": ssc, "clustered": cluster is not None},
    )


def wald_linear(result: RegressionResult, r, q: float = 0.0) -> tuple[float, float]:
    """Wald test of r'beta = q; returns (statistic, chi2_1 p-value)."""
    r = np.asarray(r, dtype=float)
    delta = float(r @ result.coef - q)
    var = float(r @ result.cov @ r)
    if var <= 0:
        raise ValueError("restriction variance is not positive")
    stat = delta * delta / var
    return stat, chi2_sf_1df(stat)


def two_stage_least_squares(
    y,
    x_endog,
    instrument,
    controls=None,
    names: list[str] | None = None,
    *,
    absorbed: int = 0,
    weak_f_threshold: float = DEFAULT_WEAK_F_THRESHOLD,
    n_individuals: int | None = None,
    n_weeks: int | None = None,
) -> RegressionResult:
    """2SLS for one endogenous regressor and one excluded instrument.

    Inputs are assumed already demeaned if fixed effects are absorbed
    (pass their parameter count via ``absorbed``). The first stage
    regresses the endogenous variable on instrument plus controls and
    reports the robust partial F of the excluded instrument; the second
    stage uses fitted values, while the covariance uses residuals computed
    at the original endogenous variable. A partial F below
    ``weak_f_threshold`` flags the result as weak, it is not an error.
    """
    y = np.asarray(y, dtype=float)
    xe = np.asarray(x_endog, dtype=float).reshape(-1)
    z = np.asarray(instrument, dtype=float).reshape(-1)
    w = _as_matrix(controls) if controls is not None else np.empty((len(y), 0))
    n = len(y)
    k = 1 + w.shape[1]
    names = names if names is not None else ["endogenous"] + [f"w{j}" for j in range(w.shape[1])]

    # First stage: endogenous on instrument + controls, robust partial F.
    z1 = np.column_stack([z, w])
    first = ols_robust(
        xe, z1, ["instrument"] + list(names[1:]), absorbed=absorbed, ssc="hc1"
    )
    partial_f = float(first.tstats()[0] ** 2)
    fitted = z1 @ first.coef

    x2 = np.column_stack([fitted, w])
    coef, gram2 = _solve_normal_equations(x2, y, list(names))

    # Structural residuals at the original endogenous variable.
    x_orig = np.column_stack([xe, w])
    resid = y - x_orig @ coef

    k_total = absorbed + k
    df_resid = n - k_total
    if df_resid <= 0:
        raise ValueError("non-positive residual degrees of freedom in 2SLS")
    xtx_inv = np.linalg.inv(gram2)
    cov = _sandwich(x2, resid, xtx_inv, scale=n / df_resid)

    return RegressionResult(
        names=list(names),
        coef=coef,
        cov=cov,
        n_obs=n,
        n_absorbed=absorbed,
        df_resid=df_resid,
        n_individuals=n_individuals,
        n_weeks=n_weeks,
        partial_f=partial_f,
        weak_instrument=partial_f < weak_f_threshold,
        extras={"first_stage": first},
    )
