"""Goodness of fit, odds ratios, decompositions and model comparison."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.stats import chi2

from . import likelihood as lk
from .estimators import BOUNDARY, FitResult, fit
from .models import MCAR, ModelSpec, degrees_of_freedom, enumerate_models, \
    model_index
from .table import MISSING, OBSERVED, IncompleteTable


def chi2_survival(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if df <= 0:
        raise ValueError("df must be a positive integer")
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    return float(chi2.sf(x, df))


@dataclass
class GoodnessOfFit:
    g2: float
    df: int
    p: float
    degenerate: bool = False    # a fitted margin vanished on a observed count


def g_squared(table: IncompleteTable, result: FitResult) -> GoodnessOfFit:
    """Likelihood-ratio statistic against the saturated (perfect) fit."""
    value = -2.0 * (result.loglik - lk.perfect_fit_loglik(table))
    df = degrees_of_freedom(result.spec, table)
    if not np.isfinite(value):
        return GoodnessOfFit(float("inf"), df, 0.0, degenerate=True)
    value = max(value, 0.0)
    return GoodnessOfFit(value, df, chi2_survival(value, df))


def joint_probabilities(result: FitResult) -> np.ndarray:
    """Cell probabilities over the fully classified table.

    Each cell aggregates the expected mass of every response pattern,
    so the array sums to one by construction.
    """
    total = np.zeros(result.table.dims)
    for mu in result.expected.values():
        total += mu
    return total / total.sum()


def conditional_missing_prob(result: FitResult, var, levels=None) -> float:
    """Probability that ``var`` is missing, given the cell levels.

    ``levels`` maps variable names to 1-based levels and must include
    the level of the variable the mechanism depends on (for NMAR, the
    variable itself).  MCAR mechanisms need no levels.
    """
    table = result.table
    index = var if isinstance(var, int) else table.var_index(var)
    pos = result.spec.missing_vars.index(index)
    mech = result.spec.mechanisms[pos]
    odds = result.params.odds[index]
    if mech.kind == MCAR:
        value = odds[0]
    else:
        dep = index if mech.target is None else mech.target
        name = table.variables[dep].name
        if levels is None or name not in levels:
            raise ValueError(f"level of {name!r} is required: the mechanism "
                             f"for {table.variables[index].name!r} depends "
                             "on it")
        value = odds[levels[name] - 1]
    return float(value / (1.0 + value))


@dataclass
class OddsRatioEstimate:
    value: float
    variance: float
    invariant_equal_to_observed: bool


def _or_from_array(arr: np.ndarray, i, i2, j, j2, fixed_idx) -> float:
    def cell(a, b):
        return arr[(a, b) + fixed_idx]
    denom = cell(i - 1, j2 - 1) * cell(i2 - 1, j - 1)
    if denom == 0:
        raise ZeroDivisionError("odds ratio undefined: zero denominator "
                                "cell")
    return float(cell(i - 1, j - 1) * cell(i2 - 1, j2 - 1) / denom)


def _fixed_index(table: IncompleteTable, fixed: dict) -> tuple[int, ...]:
    idx = []
    for variable in table.variables[2:]:
        if variable.name not in fixed:
            raise ValueError(f"level of {variable.name!r} must be fixed")
        idx.append(fixed[variable.name] - 1)
    return tuple(idx)


# Two-missing-variable model indices whose marginal odds ratio equals
# the fully observed cross ratio: the first set identically, the second
# only away from the boundary.
_OR_INVARIANT_ALWAYS = {2, 4, 9, 13, 16}
_OR_INVARIANT_INTERIOR = {3, 5, 6, 11}

# Model groups sharing a closed-form variance; the key is the variable
# position (0 or 1) holding the MCAR mechanism, None for neither.
_VARIANCE_GROUPS = {0: {2, 3, 4}, 1: {5, 9, 13}, None: {6, 11, 16}}


def marginal_odds_ratio(result: FitResult, i=1, i2=2, j=1, j2=2,
                        fixed=None) -> OddsRatioEstimate:
    """Odds ratio between the first two variables from the fitted joint
    distribution, with the remaining variables held fixed.

    ``fixed`` maps the names of the remaining variables to 1-based
    levels.  The variance comes from :func:`odds_ratio_variance`.
    """
    if not (i < i2 and j < j2):
        raise ValueError("require i < i2 and j < j2")
    table = result.table
    fixed = dict(fixed or {})
    fixed_idx = _fixed_index(table, fixed)
    value = _or_from_array(joint_probabilities(result), i, i2, j, j2,
                           fixed_idx)
    observed = _or_from_array(table.full_block, i, i2, j, j2, fixed_idx)
    invariant = False
    if result.spec.k == 2 and result.method != BOUNDARY:
        index = model_index(result.spec, table)
        invariant = index in _OR_INVARIANT_ALWAYS \
            or index in _OR_INVARIANT_INTERIOR
    if not invariant and observed > 0:
        invariant = abs(value - observed) <= 1e-10 * observed
    variance = odds_ratio_variance(result, i, i2, j, j2, fixed)
    return OddsRatioEstimate(value, variance, invariant)


def _group_variance(result: FitResult, i, i2, j, j2, fixed_idx,
                    value: float, mcar_pos) -> float:
    """Printed closed-form variances for the two-missing-variable
    models, at a fixed level of the remaining variables."""
    table = result.table
    y = table.full_block

    def cell(a, b):
        return y[(a, b) + fixed_idx]

    reciprocal = {(a, b): 1.0 / cell(a, b)
                  for a, b in product((i - 1, i2 - 1), (j - 1, j2 - 1))}
    if mcar_pos is None:
        return value ** 2 * sum(reciprocal.values())
    var_c = result.spec.missing_vars[mcar_pos]
    var_o = result.spec.missing_vars[1 - mcar_pos]
    supp = table.blocks[tuple(MISSING if v == var_c else OBSERVED
                              for v in result.spec.missing_vars)]
    # Margin of the fully observed block and of the MCAR variable's
    # supplementary block, by level of the other missing variable.
    full_by_o = y.sum(axis=var_c)[(slice(None),) + fixed_idx]
    supp_by_o = supp[(slice(None),) + fixed_idx]
    slab_full = full_by_o.sum()
    slab_lift = slab_full + supp_by_o.sum()
    o_levels = (j - 1, j2 - 1) if var_o == 1 else (i - 1, i2 - 1)
    total = 0.0
    for lvl in o_levels:
        lift = (full_by_o[lvl] + supp_by_o[lvl]) / full_by_o[lvl]
        pair = [reciprocal[a, b] for a, b in reciprocal
                if (b if var_o == 1 else a) == lvl]
        total += lift * sum(pair)
    return value ** 2 * (slab_full / slab_lift) * total


def _numeric_delta_variance(result: FitResult, i, i2, j, j2,
                            fixed: dict) -> float:
    """Generic delta-method variance: numerically differentiate the
    odds ratio with respect to every observed count and weight the
    squared derivatives by the fitted expected counts."""
    table = result.table
    fixed_idx = _fixed_index(table, fixed)
    margins = result.expected_margins()

    def odds_ratio_of(blocks):
        perturbed = IncompleteTable(table.variables, blocks)
        refit = fit(perturbed, result.spec)
        return _or_from_array(joint_probabilities(refit), i, i2, j, j2,
                              fixed_idx)

    variance = 0.0
    for pattern, block in table.blocks.items():
        for idx in np.ndindex(block.shape):
            step = 1e-5 * max(1.0, block[idx])
            signs = (1.0, -1.0) if block[idx] >= step else (1.0, 0.0)
            values = []
            for sign in signs:
                blocks = {p: b.copy() for p, b in table.blocks.items()}
                blocks[pattern][idx] += sign * step
                values.append(odds_ratio_of(blocks))
            derivative = (values[0] - values[1]) \
                / (step * (signs[0] - signs[1]))
            variance += derivative ** 2 * margins[pattern][idx]
    return variance


def odds_ratio_variance(result: FitResult, i=1, i2=2, j=1, j2=2,
                        fixed=None) -> float:
    """Delta-method variance of the marginal odds ratio.

    Uses the closed-form expressions where they exist (two missing
    2-level variables, interior estimates, at most one MCAR mechanism)
    and otherwise differentiates the refitted odds ratio numerically.
    """
    table = result.table
    fixed = dict(fixed or {})
    if result.method == BOUNDARY:
        warnings.warn("variance at a boundary fit is conditional on the "
                      "pinned levels", stacklevel=2)
    fixed_idx = _fixed_index(table, fixed)
    value = _or_from_array(joint_probabilities(result), i, i2, j, j2,
                           fixed_idx)
    if result.spec.k == 2 and result.spec.missing_vars == (0, 1) \
            and table.dims[0] == table.dims[1] == 2 \
            and result.method != BOUNDARY:
        index = model_index(result.spec, table)
        for mcar_pos, members in _VARIANCE_GROUPS.items():
            if index in members:
                return _group_variance(result, i, i2, j, j2, fixed_idx,
                                       value, mcar_pos)
    return _numeric_delta_variance(result, i, i2, j, j2, fixed)


# ----------------------------------------------------------------------
# log-linear decomposition

@dataclass
class LogLinearDecomposition:
    """Full-factorial effects of log expected counts.

    Axes cover the classification variables followed by one response
    indicator per missing variable; ``effects`` maps tuples of axis
    names to sum-to-zero arrays, with the empty tuple holding the
    grand mean.
    """

    axis_names: tuple[str, ...]
    effects: dict[tuple[str, ...], np.ndarray]

    def reconstruct(self) -> np.ndarray:
        shape = tuple(self.effects[self.axis_names].shape)
        total = np.zeros(shape)
        for names, effect in self.effects.items():
            axes = tuple(i for i, n in enumerate(self.axis_names)
                         if n not in names)
            total += np.expand_dims(effect, axes) if axes else effect
        return total


def decompose_loglinear(result: FitResult) -> LogLinearDecomposition:
    """ANOVA-style decomposition of the fitted log expected counts over
    cells and response patterns."""
    table = result.table
    expected = result.expected
    shape = tuple(table.dims) + (2,) * result.spec.k
    extended = np.empty(shape)
    for pattern, mu in expected.items():
        extended[(Ellipsis,) + pattern] = mu
    if np.any(extended <= 0):
        raise ValueError("decomposition unavailable: a fitted expected "
                         "count is zero")
    log_mu = np.log(extended)
    names = tuple(v.name for v in table.variables) \
        + tuple(f"R{pos + 1}" for pos in range(result.spec.k))
    n_axes = len(names)
    effects: dict[tuple[str, ...], np.ndarray] = {}
    for size in range(n_axes + 1):
        for axes in combinations(range(n_axes), size):
            other = tuple(a for a in range(n_axes) if a not in axes)
            term = log_mu.mean(axis=other) if other else log_mu.copy()
            for sub_size in range(size):
                for sub in combinations(axes, sub_size):
                    sub_names = tuple(names[a] for a in sub)
                    expand = tuple(i for i, a in enumerate(axes)
                                   if a not in sub)
                    term -= np.expand_dims(effects[sub_names], expand) \
                        if expand else effects[sub_names]
            effects[tuple(names[a] for a in axes)] = term
    return LogLinearDecomposition(names, effects)


# ----------------------------------------------------------------------
# model comparison

@dataclass
class ModelRow:
    spec: ModelSpec
    label: str
    boundary: bool
    loglik: float | None
    g2: float | None
    df: int | None
    p: float | None
    error: str | None = None


@dataclass
class ComparisonReport:
    rows: list[ModelRow]
    best: ModelSpec | None
    fits: dict[str, FitResult] = field(default_factory=dict)

    def to_json(self, table: IncompleteTable) -> dict:
        rows = []
        for row in self.rows:
            entry = {"model": row.spec.to_text(table),
                     "boundary": row.boundary,
                     "loglik": row.loglik, "g2": row.g2,
                     "df": row.df, "p": row.p}
            if row.error is not None:
                entry["error"] = row.error
            rows.append(entry)
        return {"rows": rows,
                "best": None if self.best is None
                else self.best.to_text(table)}


def compare_models(table: IncompleteTable) -> ComparisonReport:
    """Fit every mechanism model for the table's missing variables and
    rank them by the likelihood-ratio statistic.

    Ties are broken by fewer free parameters, then by label.  A model
    whose fit fails contributes an error row and is excluded from the
    ranking.
    """
    rows = []
    fits: dict[str, FitResult] = {}
    for spec in enumerate_models(table):
        label = spec.label(table)
        try:
            result = fit(table, spec)
        except Exception as exc:       # recorded per row, never fatal
            rows.append(ModelRow(spec, label, False, None, None, None,
                                 None, error=str(exc)))
            continue
        fits[label] = result
        gof = g_squared(table, result)
        rows.append(ModelRow(spec, label, result.method == BOUNDARY,
                             result.loglik, gof.g2, gof.df, gof.p))
    rows.sort(key=lambda r: r.label)
    ranked = [r for r in rows if r.g2 is not None]
    best = None
    if ranked:
        from .models import free_parameter_count
        best = min(ranked,
                   key=lambda r: (r.g2, free_parameter_count(r.spec, table),
                                  r.label)).spec
    return ComparisonReport(rows, best, fits)
