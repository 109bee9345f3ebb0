"""Charge vectors and the sign function attached to charge shifts."""

from __future__ import annotations

from itertools import permutations, product
from typing import Callable, Iterator

from .errors import IndexOutOfRange, IndicesNotDistinct


class ChargeVector(tuple):
    """Integer N-tuple with zero sum."""

    def __new__(cls, entries):
        entries = tuple(int(x) for x in entries)
        if not entries:
            raise ValueError("a charge vector needs at least one entry")
        if sum(entries) != 0:
            raise ValueError(f"charges {entries} do not sum to zero")
        return super().__new__(cls, entries)

    @property
    def n(self) -> int:
        return len(self)

    def radius(self) -> int:
        return max(abs(x) for x in self)

    def __repr__(self) -> str:
        return f"ChargeVector({tuple(self)})"


def _check_index(s, *indices):
    for a in indices:
        if not 1 <= a <= len(s):
            raise IndexOutOfRange(f"index {a} outside 1..{len(s)}")


def epsilon(s, a: int, g: int) -> int:
    """Sign attached to moving a unit of charge between components ``a`` and ``g``."""
    _check_index(s, a, g)
    if a == g:
        return 1
    if a < g:
        return -1 if sum(s[a:g]) % 2 else 1
    return 1 if sum(s[g:a]) % 2 else -1


def shift_charge(s, a: int, b: int) -> ChargeVector:
    """``s + e_a - e_b``."""
    _check_index(s, a, b)
    if a == b:
        raise IndicesNotDistinct("shift_charge needs a != b")
    out = list(s)
    out[a - 1] += 1
    out[b - 1] -= 1
    return ChargeVector(out)


def add_units(s, plus=(), minus=()) -> ChargeVector:
    """``s + sum(e_i for i in plus) - sum(e_i for i in minus)``."""
    out = list(s)
    _check_index(s, *plus, *minus)
    for i in plus:
        out[i - 1] += 1
    for i in minus:
        out[i - 1] -= 1
    return ChargeVector(out)


def shift_rules_hold(s, a: int, b: int, g: int | None = None) -> tuple[bool, bool | None]:
    """Truth of the two shift rules for the sign function.

    (i)  eps_ab(s + e_a - e_b) == eps_ba(s)
    (ii) eps_ag(s + e_a - e_b) == eps_bg(s) * eps_ba(s)   (needs a, b, g distinct)
    """
    if a == b:
        raise IndicesNotDistinct("a and b must differ")
    shifted = shift_charge(s, a, b)
    first = epsilon(shifted, a, b) == epsilon(s, b, a)
    if g is None:
        return first, None
    if g in (a, b):
        raise IndicesNotDistinct("a, b, g must be distinct")
    second = epsilon(shifted, a, g) == epsilon(s, b, g) * epsilon(s, b, a)
    return first, second


def antisymmetry_check(s, a: int, b: int) -> bool:
    if a == b:
        raise IndicesNotDistinct("antisymmetry needs a != b")
    return epsilon(s, b, a) == -epsilon(s, a, b)


# Sign quotients used when matching the charge-sector linear equations to the
# difference identities.  Each takes (eps, s, a, b, l[, g]) and returns a bool.


def quotient_rule_single(eps: Callable, s, a, b, l) -> bool:
    """eps_ba(s) / eps_lb(s) == 1 / eps_la(s + e_a - e_b)."""
    sab = shift_charge(s, a, b)
    return eps(s, b, a) * eps(sab, l, a) == eps(s, l, b)


def quotient_rule_pair(eps: Callable, s, a, b, l) -> tuple[bool, bool]:
    """The two rules relating signs at s, s + e_a - e_b and s + e_l - e_b."""
    sab = shift_charge(s, a, b)
    slb = shift_charge(s, l, b)
    first = eps(sab, l, a) * eps(s, a, b) == -eps(s, l, b)
    second = eps(sab, l, b) * eps(slb, l, a) == eps(s, l, b) * eps(slb, a, b) * eps(slb, l, b)
    return first, second


def quotient_rule_quad(eps: Callable, s, a, b, l, g) -> tuple[bool, bool]:
    """The two rules involving four distinct components."""
    sab = shift_charge(s, a, b)
    slg = shift_charge(s, l, g)
    first = eps(sab, l, a) * eps(slg, b, a) == -eps(slg, b, g) * eps(sab, l, g)
    second = eps(s, l, g) * eps(slg, b, a) == -eps(s, a, b) * eps(sab, l, g)
    return first, second


def difference_rules(eps: Callable, s, a, b, l, k) -> tuple[bool, bool]:
    """Sign rules used when deriving the four-index difference identity."""
    slk = shift_charge(s, l, k)
    first = eps(slk, k, a) * eps(slk, b, k) == eps(s, b, l) * eps(s, l, a)
    second = eps(s, a, k) * eps(slk, l, a) == -eps(slk, l, k)
    return first, second


def charges_in_box(n: int, radius: int) -> Iterator[ChargeVector]:
    """All zero-sum charge vectors with entries in ``[-radius, radius]``, sorted."""
    for head in product(range(-radius, radius + 1), repeat=n - 1):
        last = -sum(head)
        if abs(last) <= radius:
            yield ChargeVector(head + (last,))


def sweep(n: int, radius: int, eps: Callable = epsilon) -> dict[str, tuple[int, int]]:
    """Exhaustive check of every sign rule on a box; returns ``{rule: (passed, total)}``."""
    tally: dict[str, list[int]] = {}

    def record(name, ok):
        entry = tally.setdefault(name, [0, 0])
        entry[0] += bool(ok)
        entry[1] += 1

    comps = range(1, n + 1)
    for s in charges_in_box(n, radius):
        for a in comps:
            for g in comps:
                record("range", eps(s, a, g) in (1, -1))
        for a, b in permutations(comps, 2):
            record("antisymmetry", eps(s, b, a) == -eps(s, a, b))
            record("shift_i", eps(shift_charge(s, a, b), a, b) == eps(s, b, a))
        for a, b, g in permutations(comps, 3):
            sab = shift_charge(s, a, b)
            record("shift_ii", eps(sab, a, g) == eps(s, b, g) * eps(s, b, a))
            record("quotient_single", quotient_rule_single(eps, s, a, b, g))
            first, second = quotient_rule_pair(eps, s, a, b, g)
            record("quotient_pair_1", first)
            record("quotient_pair_2", second)
        for a, b, l, g in permutations(comps, 4):
            first, second = quotient_rule_quad(eps, s, a, b, l, g)
            record("quotient_quad_1", first)
            record("quotient_quad_2", second)
            first, second = difference_rules(eps, s, a, b, l, g)
            record("difference_1", first)
            record("difference_2", second)
    return {k: (v[0], v[1]) for k, v in tally.items()}
