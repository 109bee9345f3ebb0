"""Direct residue evaluation of the bilinear relation for Miwa-shifted t'."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

from .errors import IndexOutOfRange, OutsideWindow, RangeTooNarrow
from .series import FormalSeries, geometric_coefficients, residue_with_factor
from .signs import add_units, epsilon
from .tau import TauFunction

SHIFT_VARS = ("mu", "nu")


@dataclass(frozen=True)
class ShiftSpec:
    """``t' = t - sum([var^-1]_comp)`` plus an optional ``d/dt[deriv,1]`` on the t side.

    The second spectral variable nests inside the first (``mu`` outer, ``nu``
    inner) when both are present.
    """

    shifts: tuple = ()  # ((comp, var), ...), at most two, vars distinct
    deriv: int = 0

    def __post_init__(self):
        if len(self.shifts) > 2:
            raise ValueError("at most two Miwa shifts")
        names = [v for _, v in self.shifts]
        if len(set(names)) != len(names) or any(v not in SHIFT_VARS for v in names):
            raise ValueError("shift variables must be distinct names among mu, nu")

    def describe(self) -> str:
        parts = [f"-[{v}^-1]_{c}" for c, v in self.shifts]
        text = "t'=t" + "".join(parts)
        return text + (f", d/dt{self.deriv}_1" if self.deriv else "")


def all_shift_specs(n: int, with_derivatives: bool = False) -> list[ShiftSpec]:
    """No shift, one mu shift, and mu/nu pairs with ``comp_mu <= comp_nu``."""
    bases = [()]
    bases += [((g, "mu"),) for g in range(1, n + 1)]
    bases += [((g, "mu"), (h, "nu")) for g, h in combinations_with_replacement(range(1, n + 1), 2)]
    derivs = range(0, n + 1) if with_derivatives else (0,)
    return [ShiftSpec(b, k) for b in bases for k in derivs]


def bilinear_residue(tau: TauFunction, s, s2, a: int, b: int, spec: ShiftSpec) -> FormalSeries:
    """Residue in z of the bilinear integrand, summed over the inner index."""
    n = tau.n
    for i in (a, b, spec.deriv or 1, *(c for c, _ in spec.shifts)):
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"index {i} outside 1..{n}")
    ring = tau.ring
    t2_shifts = tuple((c, v, -1) for c, v in spec.shifts)
    total = None
    for g in range(1, n + 1):
        c1 = add_units(s, plus=(a,), minus=(g,))
        c2 = add_units(s2, plus=(g,), minus=(b,))
        for c in (c1, c2):
            if not tau.in_window(c):
                raise OutsideWindow(c)
        left = tau.miwa(c1, ((g, "z", -1),))
        if spec.deriv:
            dleft = left.derive(spec.deriv, 1)
            if spec.deriv == g:
                dleft = dleft + left * ring.aux("z", 1)
            left = dleft
        right = tau.miwa(c2, t2_shifts + ((g, "z", 1),))
        power = s[g - 1] - s2[g - 1] + (a == g) + (b == g) - 2
        product = left * right
        rng = product.aux_range("z")
        # exp(xi(t_g - t'_g, z)) = prod over shifts on g of (1 - z/var)^-1
        big = [v for c, v in spec.shifts if c == g]
        depth = 0 if rng is None else max(0, -1 - power - rng[0])
        factor = geometric_coefficients(ring, big, depth) if big else None
        try:
            res = residue_with_factor(product, "z", factor, shift=power)
        except RangeTooNarrow:
            res = ring.zero(product.trusted - power - 1)
        sign = epsilon(s, a, g) * epsilon(s2, b, g)
        term = res * sign
        total = term if total is None else total + term
    if total.trusted < 0:
        raise RangeTooNarrow("no coefficient of the residue is trusted")
    return total
