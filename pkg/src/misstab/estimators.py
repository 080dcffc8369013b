"""Maximum-likelihood fitting of missing-data-mechanism models.

For one missing variable, and for two missing variables with at most
one MCAR mechanism, the estimators are closed-form: the baseline
redistributes the supplementary mass of each MCAR/MAR block, NMAR odds
solve a small linear system, and association parameters come from
margin ratios.  The all-MCAR model with two or more missing variables
has no closed-form baseline and is fitted by EM, as are mixed specs
beyond the catalogued cases.  Negative NMAR odds trigger boundary
resolution: the offending component is pinned to zero and the model is
refitted with the constrained closed forms, choosing the pinned level
with the smallest deviance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import likelihood as lk
from .linsolve import solve_odds_system
from .models import MAR, MCAR, NMAR, ModelSpec
from .table import MISSING, OBSERVED, IncompleteTable

CLOSED_FORM = "closed-form"
EM = "EM"
BOUNDARY = "boundary"

_NEG_TOL = 1e-12


class FitError(ValueError):
    """The model cannot be fitted to this table."""


@dataclass
class BoundaryReport:
    """Outcome of pinning negative NMAR odds to zero."""

    variable: int
    zero_levels: tuple[int, ...]
    candidates: dict[tuple[int, ...], float]  # pinned levels -> G^2


@dataclass
class FitResult:
    table: IncompleteTable
    spec: ModelSpec
    params: lk.Params
    loglik: float
    method: str
    boundary: BoundaryReport | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def baseline(self) -> np.ndarray:
        return self.params.m

    @property
    def expected(self) -> dict[tuple[int, ...], np.ndarray]:
        """Full mu array per response pattern."""
        return lk.expected_blocks(self.table, self.spec, self.params)

    def expected_margins(self) -> dict[tuple[int, ...], np.ndarray]:
        """Fitted counterpart of each observed block."""
        return {pattern: lk.block_margin(self.table, pattern, mu)
                for pattern, mu in self.expected.items()}

    def g2(self) -> float:
        return -2.0 * (self.loglik - lk.perfect_fit_loglik(self.table))


# ----------------------------------------------------------------------
# helpers

def _single_pattern(spec: ModelSpec, var: int) -> tuple[int, ...]:
    pos = spec.missing_vars.index(var)
    return tuple(MISSING if i == pos else OBSERVED for i in range(spec.k))


def _odds_matrix(m: np.ndarray, var: int) -> np.ndarray:
    """System matrix for variable ``var``'s own-level odds: one row per
    cell of the single-missing margin, one column per level."""
    return np.moveaxis(m, var, -1).reshape(-1, m.shape[var])


def _solve_nmar(table: IncompleteTable, spec: ModelSpec, var: int,
                m: np.ndarray) -> np.ndarray:
    rhs = table.blocks[_single_pattern(spec, var)].ravel()
    solution, _ = solve_odds_system(_odds_matrix(m, var), rhs)
    return solution


def _mar_odds(table: IncompleteTable, spec: ModelSpec, var: int, dep: int,
              reference: np.ndarray) -> np.ndarray:
    """Ratio of supplementary to reference margin along the dependency
    axis.  ``reference`` is the observed full block for interior models
    and the fitted baseline when an MCAR redistribution precedes it."""
    supp = table.blocks[_single_pattern(spec, var)]
    axes_supp = tuple(a for a in range(supp.ndim)
                      if table.observed_axes(_single_pattern(spec, var))[a]
                      != dep)
    other = tuple(a for a in range(reference.ndim) if a != dep)
    denom = reference.sum(axis=other)
    if np.any(denom == 0):
        raise FitError("degenerate margin: zero fully observed slice along "
                       "the dependency axis")
    return supp.sum(axis=axes_supp) / denom


def _assoc_from_margins(table: IncompleteTable, spec: ModelSpec,
                        params: lk.Params) -> None:
    """Association parameters by mass matching, given baseline and odds."""
    ndim = len(table.dims)
    for pattern in table.blocks:
        miss = table.missing_axes(pattern)
        if len(miss) == 2:
            denom = (params.m * lk.odds_field(params, spec, miss[0], ndim)
                     * lk.odds_field(params, spec, miss[1], ndim)).sum()
            if denom == 0:
                raise FitError("degenerate margin: zero mass for the "
                               f"pattern missing {miss}")
            params.pair[miss] = table.blocks[pattern].sum() / denom
        elif len(miss) >= 3:
            params.higher[miss] = (table.blocks[pattern].sum()
                                   / params.m.sum())


# ----------------------------------------------------------------------
# closed forms

def _fit_one_missing(table: IncompleteTable, spec: ModelSpec) -> lk.Params:
    """Closed forms for a single missing variable."""
    var = spec.missing_vars[0]
    mech = spec.mechanisms[0]
    y = table.full_block
    supp = table.blocks[(MISSING,)]
    coll = y.sum(axis=var)
    if np.any(coll == 0):
        raise FitError("degenerate margin: an entire fully observed slice "
                       "is zero")
    if mech.kind == NMAR:
        return lk.Params(y.astype(float).copy(),
                         {var: _solve_nmar(table, spec, var, y)})
    completion = (coll + supp) / coll          # lift by the supplementary mass
    lifted = y * np.expand_dims(completion, var)
    if mech.kind == MCAR:
        shrink = y.sum() / (y.sum() + supp.sum())
        return lk.Params(lifted * shrink,
                         {var: np.array([supp.sum() / y.sum()])})
    dep = mech.target
    full_margin = y.sum(axis=tuple(a for a in range(y.ndim) if a != dep))
    dep_in_supp = dep - 1 if dep > var else dep
    supp_margin = supp.sum(axis=tuple(a for a in range(supp.ndim)
                                      if a != dep_in_supp))
    if np.any(full_margin == 0):
        raise FitError("degenerate margin along the dependency axis")
    shrink = full_margin / (full_margin + supp_margin)
    shape = [1] * y.ndim
    shape[dep] = len(shrink)
    return lk.Params(lifted * shrink.reshape(shape),
                     {var: supp_margin / full_margin})


def _fit_interior(table: IncompleteTable, spec: ModelSpec) -> lk.Params:
    """No MCAR mechanism, k >= 2: the baseline is the observed block."""
    y = table.full_block.astype(float)
    params = lk.Params(y.copy(), {})
    for var, mech in zip(spec.missing_vars, spec.mechanisms):
        if mech.kind == NMAR:
            params.odds[var] = _solve_nmar(table, spec, var, y)
        else:
            params.odds[var] = _mar_odds(table, spec, var, mech.target, y)
    _assoc_from_margins(table, spec, params)
    return params


def _fit_two_one_mcar(table: IncompleteTable, spec: ModelSpec) -> lk.Params:
    """k = 2 with exactly one MCAR mechanism: redistribute the MCAR
    variable's supplementary block into the baseline, then estimate the
    other mechanism against the redistributed baseline."""
    (pos_c,) = [i for i, m in enumerate(spec.mechanisms) if m.kind == MCAR]
    pos_o = 1 - pos_c
    var_c = spec.missing_vars[pos_c]
    var_o = spec.missing_vars[pos_o]
    y = table.full_block
    supp_c = table.blocks[_single_pattern(spec, var_c)]
    supp_o = table.blocks[_single_pattern(spec, var_o)]
    both = table.blocks[(MISSING, MISSING)]
    coll = y.sum(axis=var_c)
    if np.any(coll == 0):
        raise FitError("degenerate margin: an entire fully observed slice "
                       "is zero")
    completion = (coll + supp_c) / coll
    m = (y * np.expand_dims(completion, var_c)
         * (y.sum() / (y.sum() + supp_c.sum())))
    params = lk.Params(m, {var_c: np.array([supp_c.sum() / y.sum()])})
    mech_o = spec.mechanisms[pos_o]
    if mech_o.kind == NMAR:
        params.odds[var_o] = _solve_nmar(table, spec, var_o, m)
    else:
        params.odds[var_o] = _mar_odds(table, spec, var_o, mech_o.target, m)
    key = tuple(sorted((var_c, var_o)))
    params.pair[key] = (y.sum() * both.sum()
                        / (supp_c.sum() * supp_o.sum()))
    return params


# ----------------------------------------------------------------------
# boundary resolution

def _negative_nmar_vars(spec: ModelSpec, params: lk.Params) -> list[int]:
    out = []
    for var, mech in zip(spec.missing_vars, spec.mechanisms):
        if mech.kind == NMAR and np.any(params.odds[var] < -_NEG_TOL):
            out.append(var)
    # Most negative first.
    out.sort(key=lambda v: params.odds[v].min())
    return out


def _clamp_tiny(params: lk.Params) -> None:
    for vec in params.odds.values():
        vec[(vec < 0) & (vec >= -_NEG_TOL)] = 0.0


def _pinned_candidate_k1(table: IncompleteTable, spec: ModelSpec,
                         pin: int) -> lk.Params:
    """Constrained closed form, one missing 2-level NMAR variable with
    level ``pin`` held at zero odds."""
    var = spec.missing_vars[0]
    keep = 1 - pin
    y = table.full_block
    supp = table.blocks[(MISSING,)]
    m = y.astype(float).copy()
    keep_slice = [slice(None)] * y.ndim
    keep_slice[var] = keep
    keep_slice = tuple(keep_slice)
    keep_total = y[keep_slice].sum()
    if keep_total == 0:
        raise FitError("infeasible boundary: no mass at the unpinned level")
    m[keep_slice] = ((y[keep_slice] + supp) * keep_total
                     / (keep_total + supp.sum()))
    odds = np.zeros(2)
    odds[keep] = supp.sum() / keep_total
    return lk.Params(m, {var: odds})


def _pinned_candidate_k2(table: IncompleteTable, spec: ModelSpec,
                         var: int, pin: int) -> lk.Params:
    """Constrained closed form, k = 2, pinning one level of a 2-level
    NMAR variable.  The shape of the refit depends on whether the other
    variable's mechanism is MCAR."""
    pos = spec.missing_vars.index(var)
    var_o = spec.missing_vars[1 - pos]
    mech_o = spec.mechanisms[1 - pos]
    keep = 1 - pin
    y = table.full_block
    supp_p = table.blocks[_single_pattern(spec, var)]
    supp_o = table.blocks[_single_pattern(spec, var_o)]
    both = table.blocks[(MISSING, MISSING)]

    def level_slice(level):
        index = [slice(None)] * y.ndim
        index[var] = level
        return tuple(index)

    # Margin of the other variable's supplementary block over levels of
    # the pinned variable (that block observes the pinned variable).
    axes_o = table.observed_axes(_single_pattern(spec, var_o))
    o_by_level = supp_o.sum(axis=tuple(a for a in range(supp_o.ndim)
                                       if axes_o[a] != var))
    m = np.empty_like(y, dtype=float)
    odds = np.zeros(2)
    if mech_o.kind == MCAR:
        level_tot = y.sum(axis=tuple(a for a in range(y.ndim) if a != var))
        lifted = level_tot + o_by_level       # full plus other-missing mass
        grand = y.sum() + supp_o.sum()
        odds[keep] = supp_p.sum() * grand / (y.sum() * lifted[keep])
        for lvl in range(2):
            base = y[level_slice(lvl)] * lifted[lvl] * y.sum() \
                / (level_tot[lvl] * grand)
            if lvl == keep:
                base = (y.sum() * lifted[keep]
                        * (y[level_slice(keep)] + supp_p)
                        / (grand * (level_tot[keep] + supp_p.sum())))
            m[level_slice(lvl)] = base
        params = lk.Params(m, {var: odds,
                               var_o: np.array([supp_o.sum() / y.sum()])})
        key = tuple(sorted((var, var_o)))
        params.pair[key] = (y.sum() * both.sum()
                            / (supp_p.sum() * supp_o.sum()))
        return params

    keep_total = y[level_slice(keep)].sum()
    if keep_total == 0:
        raise FitError("infeasible boundary: no mass at the unpinned level")
    m[level_slice(pin)] = y[level_slice(pin)]
    m[level_slice(keep)] = ((y[level_slice(keep)] + supp_p) * keep_total
                            / (keep_total + supp_p.sum()))
    odds[keep] = supp_p.sum() / keep_total
    params = lk.Params(m, {var: odds})
    if mech_o.kind == NMAR:
        params.odds[var_o] = _solve_nmar(table, spec, var_o, m)
        if np.any(params.odds[var_o] < -_NEG_TOL):
            raise FitError("second boundary variable after pinning; "
                           "use the EM fallback")
    else:
        params.odds[var_o] = _mar_odds(table, spec, var_o, mech_o.target, y)
    key = tuple(sorted((var, var_o)))
    params.pair[key] = (keep_total * both.sum()
                        / (o_by_level[keep] * supp_p.sum()))
    return params


def _reduced_system_candidate(table: IncompleteTable, spec: ModelSpec,
                              var: int, params: lk.Params) -> lk.Params:
    """Greedy active-set refit for NMAR variables with > 2 levels: pin
    the most negative component and re-solve the reduced system until
    every remaining component is nonnegative."""
    params = params.copy()
    matrix = _odds_matrix(params.m, var)
    rhs = table.blocks[_single_pattern(spec, var)].ravel()
    levels = params.m.shape[var]
    pinned: set[int] = set()
    while True:
        free = [lvl for lvl in range(levels) if lvl not in pinned]
        if not free:
            raise FitError("infeasible boundary: every level pinned")
        solution, _ = solve_odds_system(matrix[:, free], rhs)
        if np.all(solution >= -_NEG_TOL):
            break
        pinned.add(free[int(np.argmin(solution))])
    odds = np.zeros(levels)
    odds[free] = np.clip(solution, 0.0, None)
    params.odds[var] = odds
    if spec.k >= 2 and all(m.kind != MCAR for m in spec.mechanisms):
        _assoc_from_margins(table, spec, params)
    return params


def resolve_boundary(table: IncompleteTable, spec: ModelSpec,
                     interior: lk.Params) -> FitResult:
    """Refit with negative NMAR odds pinned to zero.

    Two-level variables try both pinned levels through the constrained
    closed forms and keep the candidate with minimal deviance; larger
    variables use a greedy reduced-system refit.  Tables driving more
    than one variable to the boundary fall back to constrained EM.
    """
    negatives = _negative_nmar_vars(spec, interior)
    var = negatives[0]
    levels = table.dims[var]
    l1 = lk.perfect_fit_loglik(table)
    candidates: dict[tuple[int, ...], tuple[lk.Params, float]] = {}
    if levels == 2:
        for pin in (0, 1):
            try:
                if spec.k == 1:
                    cand = _pinned_candidate_k1(table, spec, pin)
                elif spec.k == 2:
                    cand = _pinned_candidate_k2(table, spec, var, pin)
                else:
                    cand = lk.em_fit(table, spec,
                                     pinned={var: {pin}}).params
            except FitError:
                continue
            candidates[(pin,)] = (cand, lk.loglik(table, spec, cand))
    else:
        cand = _reduced_system_candidate(table, spec, var, interior)
        zero = tuple(np.flatnonzero(cand.odds[var] == 0.0))
        candidates[zero] = (cand, lk.loglik(table, spec, cand))
    if not candidates:
        raise FitError("infeasible boundary: no pinned candidate is "
                       "estimable")
    report = BoundaryReport(
        variable=var,
        zero_levels=(),
        candidates={pins: -2.0 * (ll - l1)
                    for pins, (_, ll) in candidates.items()})
    best_pins = min(report.candidates, key=report.candidates.get)
    params, ll = candidates[best_pins]
    report.zero_levels = best_pins
    remaining = _negative_nmar_vars(spec, params)
    if remaining:
        # A second variable hit the boundary: constrained EM over the
        # joint pinning, keeping the already chosen pins fixed.
        pinned = {var: set(best_pins)}
        for other in remaining:
            pinned[other] = {int(np.argmin(params.odds[other]))}
        result = lk.em_fit(table, spec, pinned=pinned)
        params, ll = result.params, result.loglik
    return FitResult(table, spec, params, ll, BOUNDARY, boundary=report)


# ----------------------------------------------------------------------
# dispatch

def fit(table: IncompleteTable, spec: ModelSpec) -> FitResult:
    """Maximum-likelihood fit of ``spec`` on ``table``.

    Routes to the closed forms where they exist, to EM for the
    all-MCAR baseline with several missing variables and for
    uncatalogued MCAR mixtures, and to boundary resolution when an
    own-level odds estimate comes out negative.
    """
    if set(spec.missing_vars) != set(table.missing_vars):
        raise FitError("model spec does not match the table's missing set")
    kinds = [m.kind for m in spec.mechanisms]
    k = spec.k
    if k == 1:
        params = _fit_one_missing(table, spec)
        method = CLOSED_FORM
    elif all(kind == MCAR for kind in kinds) or \
            (MCAR in kinds and not (k == 2 and kinds.count(MCAR) == 1)):
        # All-MCAR baselines, and MCAR mixtures beyond the catalogued
        # two-variable case, have no closed form.
        result = lk.em_fit(table, spec)
        return FitResult(table, spec, result.params, result.loglik, EM,
                         diagnostics={"iterations": result.iterations,
                                      "converged": result.converged})
    elif kinds.count(MCAR) == 1 and k == 2:
        params = _fit_two_one_mcar(table, spec)
        method = CLOSED_FORM
    else:
        params = _fit_interior(table, spec)
        method = CLOSED_FORM
    _clamp_tiny(params)
    if _negative_nmar_vars(spec, params):
        return resolve_boundary(table, spec, params)
    result = FitResult(table, spec, params,
                       lk.loglik(table, spec, params), method)
    if k >= 3:
        # Diagnostic: how far the closed-form convention sits from the
        # EM stationary point.  The closed forms are kept either way so
        # that the perfect-fit and odds-ratio identities hold exactly.
        polish = lk.em_fit(table, spec, start=params, max_iter=2000)
        result.diagnostics["em_improvement"] = polish.loglik - result.loglik
    return result
