"""Missing-data-mechanism model space.

A model assigns each missing-capable variable one mechanism: the odds
of it being missing are constant (MCAR), depend on another variable's
level (MAR), or depend on its own level (NMAR).  With n variables and
k of them missing-capable there are (n+1)^k identifiable models.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .table import IncompleteTable, TableError

MCAR = "mcar"
MAR = "mar"
NMAR = "nmar"

# Canonical category labels, keyed by the set of mechanism kinds present.
_CATEGORIES = {
    frozenset({MCAR}): "MCAR",
    frozenset({NMAR}): "NMAR",
    frozenset({MAR}): "MAR",
    frozenset({MCAR, NMAR}): "MCAR+NMAR",
    frozenset({MCAR, MAR}): "MCAR+MAR",
    frozenset({NMAR, MAR}): "NMAR+MAR",
    frozenset({MCAR, NMAR, MAR}): "NMAR+MAR+MCAR",
}


@dataclass(frozen=True)
class Mechanism:
    """Mechanism for one variable: MCAR, NMAR, or MAR(target)."""

    kind: str
    target: int | None = None  # variable index, MAR only

    def __post_init__(self):
        if self.kind not in (MCAR, MAR, NMAR):
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        if (self.target is not None) != (self.kind == MAR):
            raise ValueError("target is required for MAR and only for MAR")


@dataclass(frozen=True)
class ModelSpec:
    """One mechanism per missing-capable variable.

    ``missing_vars`` lists the variable indices; ``mechanisms`` aligns
    with it.  ``dependency(p)`` gives the variable index the odds for
    variable ``p`` depend on, or None for MCAR.
    """

    missing_vars: tuple[int, ...]
    mechanisms: tuple[Mechanism, ...]

    def __post_init__(self):
        if len(self.missing_vars) != len(self.mechanisms):
            raise ValueError("one mechanism per missing variable")
        for var, mech in zip(self.missing_vars, self.mechanisms):
            if mech.kind == MAR and mech.target == var:
                raise ValueError("MAR target must differ from the variable")

    @property
    def k(self) -> int:
        return len(self.missing_vars)

    def mechanism(self, var: int) -> Mechanism:
        return self.mechanisms[self.missing_vars.index(var)]

    def dependency(self, var: int) -> int | None:
        mech = self.mechanism(var)
        if mech.kind == NMAR:
            return var
        if mech.kind == MAR:
            return mech.target
        return None

    @property
    def category(self) -> str:
        return _CATEGORIES[frozenset(m.kind for m in self.mechanisms)]

    # ------------------------------------------------------------------
    def label(self, table: IncompleteTable) -> str:
        """Paper-style display label, e.g. ``(a.j.,b.j.)``."""
        n = len(table.variables)
        letters = "abcdefgh"
        subs = "ijklmnpq"
        parts = []
        for pos, var in enumerate(self.missing_vars):
            dep = self.dependency(var)
            dots = ["."] * n
            if dep is not None:
                dots[dep] = subs[dep]
            parts.append(letters[pos] + "".join(dots))
        return "(" + ",".join(parts) + ")"

    def to_text(self, table: IncompleteTable) -> str:
        """CLI syntax, e.g. ``Y1:Y3`` or ``Y1:self,Y2:const``."""
        tokens = []
        for var, mech in zip(self.missing_vars, self.mechanisms):
            name = table.variables[var].name
            if mech.kind == NMAR:
                tokens.append(f"{name}:self")
            elif mech.kind == MCAR:
                tokens.append(f"{name}:const")
            else:
                tokens.append(f"{name}:{table.variables[mech.target].name}")
        return ",".join(tokens)


class _VariableView:
    """Adapter exposing a bare variable tuple like a table."""

    def __init__(self, variables):
        self.variables = tuple(variables)

    @property
    def missing_vars(self):
        return tuple(i for i, v in enumerate(self.variables) if v.missing)

    def var_index(self, name):
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise TableError(f"unknown variable {name!r}")


def parse_model_text(text: str, table) -> ModelSpec:
    """Parse the CLI model syntax (``Y1:self,Y2:const,Y3:Y1``).

    ``table`` may be an :class:`IncompleteTable` or a sequence of
    :class:`Variable` declarations.
    """
    if not hasattr(table, "var_index"):
        table = _VariableView(table)
    assigned: dict[int, Mechanism] = {}
    for token in text.split(","):
        token = token.strip()
        if ":" not in token:
            raise TableError(f"bad model token {token!r}; expected VAR:DEP")
        name, dep = (part.strip() for part in token.split(":", 1))
        var = table.var_index(name)
        if var not in table.missing_vars:
            raise TableError(f"{name!r} is not missing-capable")
        if var in assigned:
            raise TableError(f"{name!r} assigned twice")
        if dep == "self":
            assigned[var] = Mechanism(NMAR)
        elif dep == "const":
            assigned[var] = Mechanism(MCAR)
        else:
            target = table.var_index(dep)
            if target == var:
                raise TableError(
                    f"{name!r}: use 'self' for an own-level dependence")
            assigned[var] = Mechanism(MAR, target)
    if set(assigned) != set(table.missing_vars):
        missing = [table.variables[v].name
                   for v in table.missing_vars if v not in assigned]
        raise TableError(f"no mechanism given for {missing}")
    return ModelSpec(table.missing_vars,
                     tuple(assigned[v] for v in table.missing_vars))


def enumerate_models(table: IncompleteTable) -> list[ModelSpec]:
    """All (n+1)^k mechanism assignments in a fixed order.

    Per variable the options run: MCAR, then dependence on Y1, Y2, ...
    in declaration order (own index meaning NMAR).  This matches the
    paper-style model numbering for small tables.
    """
    n = len(table.variables)
    options_per_var = []
    for var in table.missing_vars:
        options = [Mechanism(MCAR)]
        for target in range(n):
            options.append(Mechanism(NMAR) if target == var
                           else Mechanism(MAR, target))
        options_per_var.append(options)
    return [ModelSpec(table.missing_vars, combo)
            for combo in itertools.product(*options_per_var)]


def model_index(spec: ModelSpec, table: IncompleteTable) -> int:
    """1-based position of ``spec`` in the enumeration order."""
    return enumerate_models(table).index(spec) + 1


def category_counts(n: int, k: int) -> dict[str, int]:
    """Closed-form number of models per category."""
    return {
        "MCAR": 1,
        "NMAR": 1,
        "MAR": (n - 1) ** k,
        "MCAR+NMAR": 2 ** k - 2,
        "MCAR+MAR": n ** k - (n - 1) ** k - 1,
        "NMAR+MAR": n ** k - (n - 1) ** k - 1,
        "NMAR+MAR+MCAR": ((n + 1) ** k + (n - 1) ** k
                          - 2 * (n ** k - 1) - 2 ** k),
    }


def free_parameter_count(spec: ModelSpec, table: IncompleteTable) -> int:
    """Free estimable parameters: baseline cells, odds, associations."""
    dims = table.dims
    count = math.prod(dims)
    for var in spec.missing_vars:
        dep = spec.dependency(var)
        count += 1 if dep is None else dims[dep]
    k = spec.k
    count += math.comb(k, 2)            # pairwise association odds ratios
    count += 2 ** k - k - 1 - math.comb(k, 2)   # higher-order terms
    return count


def degrees_of_freedom(spec: ModelSpec, table: IncompleteTable) -> int:
    """Observed-count dimension minus free parameters.

    The observed data comprise prod(I_p) full cells plus one margin per
    nonempty response pattern, which totals
    (prod over always-observed I_p) * (prod over missing-capable (1+I_p)).
    """
    miss = set(spec.missing_vars)
    obs_cells = math.prod(v.levels for i, v in enumerate(table.variables)
                          if i not in miss)
    obs_cells *= math.prod(1 + table.variables[i].levels for i in miss)
    return obs_cells - free_parameter_count(spec, table)
