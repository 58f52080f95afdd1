"""Two-row lazily materialized value table.

Row 1 holds the values the staged solver actually commits; row 2 exists so
swap events (an event re-evaluated with some owners' values re-drawn) have
well-defined second samples. Each cell is a pure function of
(seed, var_id, row), so materialization order never matters and concurrent
lazy fills are idempotent.
"""

from __future__ import annotations

import random

from .errors import InputError

ROWS = (1, 2)


class RandomnessTable:
    def __init__(self, variables, seed: int):
        self.variables = tuple(variables)
        self.seed = int(seed)
        self._cells = {}

    def _draw(self, var_id: int, row: int) -> int:
        # str-seeded Random hashes via SHA-512 internally, so cell values are
        # stable across platforms and materialization orders.
        rng = random.Random(f"{self.seed}/{var_id}/{row}")
        return self.variables[var_id].sample(rng)

    def value(self, var_id: int, row: int) -> int:
        if row not in ROWS:
            raise InputError(f"row must be 1 or 2, got {row}")
        if not 0 <= var_id < len(self.variables):
            raise InputError(f"variable {var_id} out of range")
        key = (var_id, row)
        cell = self._cells.get(key)
        if cell is None:
            cell = self._draw(var_id, row)
            self._cells[key] = cell
        return cell

    def row1(self, var_id: int) -> int:
        return self.value(var_id, 1)

    def row2(self, var_id: int) -> int:
        return self.value(var_id, 2)

    def materialized(self, var_id: int, row: int) -> bool:
        return (var_id, row) in self._cells

    def snapshot(self) -> dict:
        """Copy of all materialized cells, keyed (var_id, row)."""
        return dict(self._cells)
