"""Incremental fraction-free elimination for sparse rational systems.

Rows are scaled to primitive integer vectors on entry and every combination
step divides out the content again, so entries stay small without any
rational arithmetic until the final back substitution.
"""

from __future__ import annotations

from math import gcd, lcm
from typing import Callable

from gmpy2 import mpq

from .errors import Inconsistent


def _primitive(row: dict, const: int) -> tuple[dict, int]:
    g = 0
    for v in row.values():
        g = gcd(g, v)
    g = gcd(g, const)
    if g > 1:
        row = {k: v // g for k, v in row.items()}
        const //= g
    return row, const


def _integer_row(row: dict, const) -> tuple[dict, int]:
    den = 1
    for v in row.values():
        den = lcm(den, int(mpq(v).denominator))
    den = lcm(den, int(mpq(const).denominator))
    out = {k: int(mpq(v) * den) for k, v in row.items() if v}
    return _primitive(out, int(mpq(const) * den))


class EliminationSystem:
    """Accumulates equations ``sum(row[j] * x[j]) + const == 0`` one at a time.

    Pivot columns are chosen as the smallest remaining index, so the result
    only depends on the order in which equations are added.
    """

    def __init__(self, n_unknowns: int):
        self.n = n_unknowns
        self._pivots: dict[int, tuple[dict, int]] = {}
        self._order: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._order)

    def add(self, row: dict, const=0, tag=None) -> bool:
        """Add one equation; returns True if it raised the rank.

        Raises :class:`Inconsistent` when the row reduces to ``0 == c != 0``.
        """
        r, c = _integer_row(row, const)
        while True:
            hits = [j for j in r if j in self._pivots]
            if not hits:
                break
            j = min(hits)
            prow, pc = self._pivots[j]
            a, b = prow[j], r[j]
            g = gcd(a, b)
            fa, fb = a // g, b // g
            new = {k: v * fa for k, v in r.items()}
            for k, v in prow.items():
                nv = new.get(k, 0) - fb * v
                if nv:
                    new[k] = nv
                else:
                    new.pop(k, None)
            r, c = _primitive(new, c * fa - fb * pc)
        if not r:
            if c:
                raise Inconsistent(order=None, block=tag)
            return False
        j = min(r)
        if r[j] < 0:
            r = {k: -v for k, v in r.items()}
            c = -c
        self._pivots[j] = (r, c)
        self._order.append(j)
        return True

    def free_columns(self) -> list[int]:
        return [j for j in range(self.n) if j not in self._pivots]

    def solve(self, free_value: Callable[[int], mpq]) -> list[mpq]:
        """Back substitution with ``free_value(j)`` for every non-pivot column."""
        x: list = [None] * self.n
        for j in self.free_columns():
            x[j] = mpq(free_value(j))
        # rows added later never contain earlier pivots, so go backwards
        for j in reversed(self._order):
            row, c = self._pivots[j]
            acc = mpq(c)
            for k, v in row.items():
                if k != j:
                    acc += v * x[k]
            x[j] = -acc / row[j]
        return x
