"""Poisson likelihood kernel and EM maximization.

The model factorizes the expected counts of every response pattern
around the fully observed pattern: with baseline counts m over the full
cross-classification, per-variable missingness odds phi^p, pairwise
association odds ratios theta_pq and joint higher-order odds theta_A,

    mu(cell, no variable missing)     = m
    mu(cell, only p missing)          = phi^p * m
    mu(cell, exactly {p,q} missing)   = phi^p * phi^q * theta_pq * m
    mu(cell, A missing, |A| >= 3)     = theta_A * m

The observed-data kernel sums y * log(margin of mu) over blocks minus
the total expected mass.  ``em_fit`` maximizes it by an
expectation/conditional-maximization sweep whose M-step updates each
parameter group in closed form from the completed table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .models import ModelSpec
from .table import MISSING, OBSERVED, IncompleteTable


@dataclass
class Params:
    """Parameter point: baseline counts, odds vectors, associations.

    ``odds[p]`` is a vector over the levels of the variable that
    variable p's missingness odds depend on (length 1 for MCAR).
    ``pair[(p, q)]`` and ``higher[A]`` are keyed by sorted variable
    index tuples.
    """

    m: np.ndarray
    odds: dict[int, np.ndarray]
    pair: dict[tuple[int, int], float] = field(default_factory=dict)
    higher: dict[tuple[int, ...], float] = field(default_factory=dict)

    def copy(self) -> "Params":
        return Params(self.m.copy(),
                      {p: v.copy() for p, v in self.odds.items()},
                      dict(self.pair), dict(self.higher))


def odds_field(params: Params, spec: ModelSpec, var: int,
               ndim: int) -> np.ndarray:
    """Broadcast variable ``var``'s odds vector over the full cell array."""
    vec = np.asarray(params.odds[var], dtype=float)
    dep = spec.dependency(var)
    if dep is None:
        return vec.reshape((1,) * ndim)
    shape = [1] * ndim
    shape[dep] = vec.size
    return vec.reshape(shape)


def pattern_factor(params: Params, spec: ModelSpec,
                   pattern: tuple[int, ...], ndim: int) -> np.ndarray:
    """Multiplier turning m into mu for one response pattern."""
    miss = tuple(v for v, r in zip(spec.missing_vars, pattern)
                 if r == MISSING)
    if len(miss) == 0:
        return np.ones((1,) * ndim)
    if len(miss) == 1:
        return odds_field(params, spec, miss[0], ndim)
    if len(miss) == 2:
        return (odds_field(params, spec, miss[0], ndim)
                * odds_field(params, spec, miss[1], ndim)
                * params.pair[miss])
    return np.full((1,) * ndim, params.higher[miss])


def expected_blocks(table: IncompleteTable, spec: ModelSpec,
                    params: Params) -> dict[tuple[int, ...], np.ndarray]:
    """Full-dimensional mu array for every response pattern."""
    ndim = len(table.dims)
    return {pattern: params.m * pattern_factor(params, spec, pattern, ndim)
            for pattern in table.blocks}


def block_margin(table: IncompleteTable, pattern: tuple[int, ...],
                 mu_full: np.ndarray) -> np.ndarray:
    """Collapse a full mu array onto the block's observed axes."""
    axes = table.missing_axes(pattern)
    return mu_full.sum(axis=axes) if axes else mu_full


def loglik(table: IncompleteTable, spec: ModelSpec, params: Params) -> float:
    """Observed-data Poisson kernel at ``params``.

    Zero observed counts contribute only through the -sum(mu) term; a
    zero expected margin facing a positive count yields -inf.
    """
    total = 0.0
    mass = 0.0
    for pattern, y in table.blocks.items():
        mu = params.m * pattern_factor(params, spec, pattern,
                                       len(table.dims))
        mass += mu.sum()
        margin = block_margin(table, pattern, mu)
        if np.any((margin <= 0) & (y > 0)):
            return -np.inf
        total += xlogy(y, margin).sum()
    return float(total - mass)


def perfect_fit_loglik(table: IncompleteTable) -> float:
    """Kernel of the saturated model reproducing every observed count."""
    return float(sum(xlogy(y, y).sum() for y in table.blocks.values())
                 - table.total)


def default_start(table: IncompleteTable, spec: ModelSpec) -> Params:
    """Neutral starting point: observed counts (zeros lifted), flat odds."""
    m = table.full_block.astype(float).copy()
    m[m == 0] = 0.5
    full_total = table.full_block.sum()
    odds = {}
    for pos, var in enumerate(spec.missing_vars):
        pattern = tuple(MISSING if i == pos else OBSERVED
                        for i in range(spec.k))
        ratio = table.blocks[pattern].sum() / full_total
        dep = spec.dependency(var)
        size = 1 if dep is None else table.dims[dep]
        odds[var] = np.full(size, ratio)
    pair = {}
    higher = {}
    for pattern in table.blocks:
        miss = table.missing_axes(pattern)
        if len(miss) == 2:
            pair[miss] = 1.0
        elif len(miss) >= 3:
            higher[miss] = table.blocks[pattern].sum() / full_total
    return Params(m, odds, pair, higher)


@dataclass
class EMResult:
    params: Params
    loglik: float
    iterations: int
    converged: bool


def _distribute(table: IncompleteTable, spec: ModelSpec, params: Params
                ) -> dict[tuple[int, ...], np.ndarray]:
    """E-step: allocate each block's counts over its compatible cells."""
    ndim = len(table.dims)
    completed = {}
    for pattern, y in table.blocks.items():
        mu = params.m * pattern_factor(params, spec, pattern, ndim)
        axes = table.missing_axes(pattern)
        if not axes:
            completed[pattern] = np.broadcast_to(y, mu.shape).astype(float)
            continue
        margin = mu.sum(axis=axes, keepdims=True)
        y_up = np.expand_dims(y, axes)
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(margin > 0, mu / np.where(margin > 0, margin, 1),
                             0.0)
        completed[pattern] = np.broadcast_to(y_up, mu.shape) * share
    return completed


def em_fit(table: IncompleteTable, spec: ModelSpec,
           start: Params | None = None, tol: float = 1e-10,
           max_iter: int = 10_000,
           pinned: dict[int, set[int]] | None = None) -> EMResult:
    """Maximize the kernel by monotone EM with conditional M-steps.

    The E-step distributes supplementary counts proportionally to the
    current expected cells; the M-step then updates the baseline, each
    odds vector, and each association parameter in turn, each update
    being the exact maximizer of the completed-data likelihood given
    the others.  ``pinned`` maps a variable index to dependency levels
    whose odds are held at zero (boundary fits).
    """
    pinned = pinned or {}
    params = (start.copy() if start is not None
              else default_start(table, spec))
    for var, levels in pinned.items():
        params.odds[var][list(levels)] = 0.0
    ndim = len(table.dims)
    previous = loglik(table, spec, params)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        completed = _distribute(table, spec, params)

        # Baseline: every pattern's completed counts over its factor sum.
        factor_total = np.zeros(table.dims)
        for pattern in table.blocks:
            factor_total = factor_total + pattern_factor(
                params, spec, pattern, ndim)
        n_total = sum(completed.values())
        params.m = n_total / factor_total

        # Odds vectors: patterns with <= 2 variables missing carry phi.
        for pos, var in enumerate(spec.missing_vars):
            dep = spec.dependency(var)
            coeff = np.ones((1,) * ndim)
            numer = completed[tuple(MISSING if i == pos else OBSERVED
                                    for i in range(spec.k))].copy()
            for qpos, qvar in enumerate(spec.missing_vars):
                if qvar == var:
                    continue
                pat = tuple(MISSING if i in (pos, qpos) else OBSERVED
                            for i in range(spec.k))
                key = tuple(sorted((var, qvar)))
                coeff = coeff + (odds_field(params, spec, qvar, ndim)
                                 * params.pair[key])
                numer = numer + completed[pat]
            denom = params.m * coeff
            if dep is None:
                params.odds[var][0] = numer.sum() / denom.sum()
            else:
                axes = tuple(a for a in range(ndim) if a != dep)
                params.odds[var] = numer.sum(axis=axes) / denom.sum(axis=axes)
            if var in pinned:
                params.odds[var][list(pinned[var])] = 0.0

        # Pairwise association odds ratios.
        for key in params.pair:
            ppos = spec.missing_vars.index(key[0])
            qpos = spec.missing_vars.index(key[1])
            pat = tuple(MISSING if i in (ppos, qpos) else OBSERVED
                        for i in range(spec.k))
            denom = (params.m * odds_field(params, spec, key[0], ndim)
                     * odds_field(params, spec, key[1], ndim)).sum()
            params.pair[key] = completed[pat].sum() / denom

        # Higher-order joint odds: mu = m * theta_A directly.
        for key in params.higher:
            pat = tuple(MISSING if spec.missing_vars[i] in key else OBSERVED
                        for i in range(spec.k))
            params.higher[key] = completed[pat].sum() / params.m.sum()

        current = loglik(table, spec, params)
        if current < previous - 1e-8:
            raise RuntimeError(
                f"EM log-likelihood decreased ({previous} -> {current})")
        if abs(current - previous) <= tol * (abs(previous) + 1.0):
            previous = current
            converged = True
            break
        previous = current
    return EMResult(params, previous, iterations, converged)
