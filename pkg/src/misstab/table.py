"""Data model for incomplete contingency tables.

An incomplete contingency table cross-classifies subjects by several
categorical variables, some of which may be missing on a per-subject
basis.  Subjects sharing a response pattern (which variables were
observed) form a block: the fully observed block is a dense array over
every variable's levels, while each other block is a supplementary
margin, summed over the levels of its missing variables.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

OBSERVED = 0
MISSING = 1

# JSON spellings for pattern entries.
_PATTERN_WORDS = {OBSERVED: "obs", MISSING: "missing"}
_WORD_PATTERN = {"obs": OBSERVED, "observed": OBSERVED,
                 "missing": MISSING, "mis": MISSING}


class TableError(ValueError):
    """Malformed or inconsistent table input."""


@dataclass(frozen=True)
class Variable:
    """One categorical variable.

    Parameters
    ----------
    name : str
        Unique label.
    levels : int
        Number of categories, at least 2.
    missing : bool
        Whether this variable can be missing (has a response indicator).
    """

    name: str
    levels: int
    missing: bool = False

    def __post_init__(self):
        if self.levels < 2:
            raise TableError(f"variable {self.name!r} needs >= 2 levels")


@dataclass(frozen=True)
class IncompleteTable:
    """An incomplete multiway contingency table.

    ``blocks`` maps each response pattern -- a tuple over the
    missing-capable variables with 0 = observed, 1 = missing -- to a
    dense count array over the levels of the variables observed under
    that pattern, in declaration order.  Counts are stored as
    nonnegative reals so that raw and fitted tables share one type.
    """

    variables: tuple[Variable, ...]
    blocks: dict[tuple[int, ...], np.ndarray] = field(compare=False)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise TableError("duplicate variable names")
        k = self.k
        if k == 0:
            raise TableError("table has no missing-capable variable")
        patterns = set(itertools.product((OBSERVED, MISSING), repeat=k))
        if set(self.blocks) != patterns:
            raise TableError(
                f"expected {2 ** k} blocks (one per response pattern), "
                f"got {sorted(self.blocks)}")
        for pattern, counts in self.blocks.items():
            counts = np.asarray(counts, dtype=float)
            want = tuple(self.variables[a].levels
                         for a in self.observed_axes(pattern))
            if counts.shape != want:
                raise TableError(
                    f"block {pattern}: shape {counts.shape} != {want}")
            if np.any(counts < 0):
                raise TableError(f"block {pattern}: negative count")
            counts.setflags(write=False)
            self.blocks[pattern] = counts
            if any(pattern) and counts.sum() <= 0:
                raise TableError(
                    f"supplementary block {pattern} has zero total; "
                    "supplementary margins must be positive")
        if np.any(self.full_block == 0):
            warnings.warn("fully observed block contains zero cells; "
                          "they contribute nothing to the likelihood",
                          stacklevel=2)

    # ------------------------------------------------------------------
    @property
    def missing_vars(self) -> tuple[int, ...]:
        """Indices of the missing-capable variables, declaration order."""
        return tuple(i for i, v in enumerate(self.variables) if v.missing)

    @property
    def k(self) -> int:
        return len(self.missing_vars)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.levels for v in self.variables)

    @property
    def full_block(self) -> np.ndarray:
        return self.blocks[(OBSERVED,) * self.k]

    @property
    def total(self) -> float:
        return float(sum(b.sum() for b in self.blocks.values()))

    def observed_axes(self, pattern: tuple[int, ...]) -> tuple[int, ...]:
        """Variable indices carrying data in the block for ``pattern``."""
        gone = {v for v, r in zip(self.missing_vars, pattern) if r == MISSING}
        return tuple(i for i in range(len(self.variables)) if i not in gone)

    def missing_axes(self, pattern: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(v for v, r in zip(self.missing_vars, pattern)
                     if r == MISSING)

    def var_index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise TableError(f"unknown variable {name!r}")

    # ------------------------------------------------------------------
    def margin_sum(self, pattern: tuple[int, ...],
                   fixed: dict[str, int] | None = None) -> float:
        """Sum a block over all axes not pinned by ``fixed``.

        ``fixed`` maps variable names to 1-based levels and may only
        reference variables observed under ``pattern``.
        """
        counts = self.blocks[tuple(pattern)]
        axes = self.observed_axes(tuple(pattern))
        index: list = [slice(None)] * counts.ndim
        for name, level in (fixed or {}).items():
            var = self.var_index(name)
            if var not in axes:
                raise TableError(
                    f"{name!r} is summed out under pattern {pattern}")
            index[axes.index(var)] = level - 1
        return float(np.sum(counts[tuple(index)]))

    def subtable(self, keep: list[str]) -> "IncompleteTable":
        """Restrict missingness to the variables in ``keep``.

        Only blocks where every dropped indicator is observed are
        retained; the dropped variables become always-observed.
        """
        if not keep:
            raise TableError("keep must be nonempty")
        keep_idx = {self.var_index(name) for name in keep}
        if not keep_idx <= set(self.missing_vars):
            raise TableError("keep must be a subset of the missing-capable "
                             "variables")
        variables = tuple(
            Variable(v.name, v.levels, v.missing and i in keep_idx)
            for i, v in enumerate(self.variables))
        blocks = {}
        for pattern, counts in self.blocks.items():
            sub = tuple(r for v, r in zip(self.missing_vars, pattern)
                        if v in keep_idx)
            dropped = [r for v, r in zip(self.missing_vars, pattern)
                       if v not in keep_idx]
            if any(r == MISSING for r in dropped):
                continue
            blocks[sub] = counts
        return IncompleteTable(variables, blocks)

    # ------------------------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "variables": [{"name": v.name, "levels": v.levels,
                           "missing": v.missing} for v in self.variables],
            "blocks": [
                {"pattern": [_PATTERN_WORDS[r] for r in pattern],
                 "counts": self.blocks[pattern].tolist()}
                for pattern in sorted(self.blocks)],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "IncompleteTable":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TableError(f"invalid JSON: {exc}") from exc
        try:
            variables = tuple(Variable(v["name"], int(v["levels"]),
                                       bool(v.get("missing", False)))
                              for v in doc["variables"])
            raw = {tuple(_WORD_PATTERN[w] for w in b["pattern"]):
                   np.asarray(b["counts"], dtype=float)
                   for b in doc["blocks"]}
        except (KeyError, TypeError) as exc:
            raise TableError(f"malformed table document: {exc}") from exc
        return IncompleteTable(variables, raw)

    @staticmethod
    def from_csv(text: str, variables: tuple[Variable, ...] | None = None
                 ) -> "IncompleteTable":
        """Parse the long format: one column per variable (1-based level
        or NA), final column the count.  Rows with identical keys sum.
        """
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if not header or len(header) < 2:
            raise TableError("CSV needs variable columns plus a count column")
        names = [h.strip() for h in header[:-1]]
        rows = []
        for row in reader:
            if not row:
                continue
            key = tuple(None if cell.strip().upper() == "NA"
                        else int(cell) for cell in row[:-1])
            rows.append((key, float(row[-1])))
        if variables is None:
            levels = [max(key[i] for key, _ in rows if key[i] is not None)
                      for i in range(len(names))]
            miss = [any(key[i] is None for key, _ in rows)
                    for i in range(len(names))]
            variables = tuple(Variable(n, l, m)
                              for n, l, m in zip(names, levels, miss))
        missing_vars = tuple(i for i, v in enumerate(variables) if v.missing)
        k = len(missing_vars)
        blocks = {
            pattern: np.zeros(tuple(
                variables[a].levels for a in range(len(variables))
                if a not in {v for v, r in zip(missing_vars, pattern)
                             if r == MISSING}))
            for pattern in itertools.product((OBSERVED, MISSING), repeat=k)}
        for key, count in rows:
            pattern = tuple(MISSING if key[v] is None else OBSERVED
                            for v in missing_vars)
            gone = {v for v, r in zip(missing_vars, pattern) if r == MISSING}
            idx = tuple(key[a] - 1 for a in range(len(variables))
                        if a not in gone)
            blocks[pattern][idx] += count
        return IncompleteTable(variables, blocks)


def load_table(path: str) -> IncompleteTable:
    """Load a table document, dispatching on file extension."""
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".csv"):
        return IncompleteTable.from_csv(text)
    return IncompleteTable.from_json(text)
