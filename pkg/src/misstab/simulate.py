"""Synthetic incomplete tables drawn from a specified model."""

from __future__ import annotations

from itertools import product

import numpy as np

from . import likelihood as lk
from .models import ModelSpec
from .table import IncompleteTable, Variable


def params_from_json(variables: tuple[Variable, ...], spec: ModelSpec,
                     document: dict) -> lk.Params:
    """Parameter values from a JSON document.

    Expected keys: ``m`` (nested list over all cells), ``odds`` mapping
    variable names to level vectors (a single value for MCAR), and
    optional ``pair``/``higher`` mapping comma-joined variable names to
    scalars.  Unstated association terms default to 1.
    """
    names = [v.name for v in variables]
    m = np.asarray(document["m"], dtype=float)
    if m.shape != tuple(v.levels for v in variables):
        raise ValueError("baseline array shape does not match the declared "
                         "variables")
    odds: dict[int, np.ndarray] = {}
    for name, values in document.get("odds", {}).items():
        odds[names.index(name)] = np.atleast_1d(
            np.asarray(values, dtype=float))
    for var in spec.missing_vars:
        if var not in odds:
            raise ValueError(f"missing odds for variable {names[var]!r}")
        dep = spec.dependency(var)
        want = 1 if dep is None else variables[dep].levels
        if odds[var].size != want:
            raise ValueError(f"odds for {names[var]!r}: expected {want} "
                             f"values, got {odds[var].size}")
    params = lk.Params(m, odds)
    for key, store in (("pair", params.pair), ("higher", params.higher)):
        for joined, value in document.get(key, {}).items():
            idx = tuple(sorted(names.index(n) for n in joined.split(",")))
            store[idx] = float(value)
    # Default every absent association term to independence.
    for pattern in product((0, 1), repeat=spec.k):
        miss = tuple(v for v, bit in zip(spec.missing_vars, pattern) if bit)
        if len(miss) == 2:
            params.pair.setdefault(miss, 1.0)
        elif len(miss) >= 3:
            params.higher.setdefault(miss, 1.0)
    return params


def expected_margins(variables: tuple[Variable, ...], spec: ModelSpec,
                     params: lk.Params) -> dict[tuple[int, ...], np.ndarray]:
    """Expected count of every observable cell, block by block."""
    ndim = len(variables)
    out = {}
    for pattern in product((0, 1), repeat=spec.k):
        mu = params.m * lk.pattern_factor(params, spec, pattern, ndim)
        axes = tuple(v for v, bit in zip(spec.missing_vars, pattern) if bit)
        out[pattern] = mu.sum(axis=axes) if axes else mu
    return out


def simulate_table(variables: tuple[Variable, ...], spec: ModelSpec,
                   params: lk.Params, n: float | None = None,
                   seed: int | None = None) -> IncompleteTable:
    """Sample an incomplete table with independent Poisson counts.

    ``n`` rescales the baseline so the grand expected total equals it;
    the draw is deterministic for a fixed ``seed``.
    """
    if n is not None and n <= 0:
        raise ValueError("n must be positive")
    margins = expected_margins(variables, spec, params)
    total = sum(m.sum() for m in margins.values())
    scale = 1.0 if n is None else n / total
    rng = np.random.default_rng(seed)
    blocks = {pattern: np.asarray(rng.poisson(margin * scale), dtype=float)
              for pattern, margin in margins.items()}
    return IncompleteTable(tuple(variables), blocks)
