"""Concrete tau functions: constants, the scalar one-soliton, and jet-solved tau."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import permutations

from gmpy2 import mpq

from .errors import BadParams, BudgetExceeded, Inconsistent, InternalMismatch
from .linsolve import EliminationSystem
from .series import EXACT, FIELD, FormalSeries, Ring, as_rational
from .signs import add_units, charges_in_box, epsilon, shift_charge
from .tau import TauFunction, constant_tau


@dataclass(frozen=True)
class SolutionSpec:
    kind: str  # "vacuum", "soliton_n1" or "jet"
    n: int = 1
    d: int = 4
    J: int = 4
    radius: int = 1
    p: object = 2
    q: object = 3
    a: object = 1
    seed: int = 1
    policy: str = "random"  # free parameters: "random" or "zero"
    margin: int = 0  # extra charge shells solved and then discarded
    max_unknowns: int = 20000
    extra: dict = field(default_factory=dict, compare=False)


def vacuum_tau(spec: SolutionSpec) -> TauFunction:
    """tau = 1 on every charge of the box."""
    return constant_tau(Ring(spec.n, spec.J, spec.d), spec.radius, label="vacuum")


def soliton_tau_n1(spec: SolutionSpec) -> TauFunction:
    """Scalar one-soliton ``(1 + a exp(sum t_j (p^j - q^j))) / (1 + a)``."""
    if spec.n != 1:
        raise BadParams("the one-soliton family is scalar (n = 1)")
    p, q, a = as_rational(spec.p), as_rational(spec.q), as_rational(spec.a)
    if p == q:
        raise BadParams("p and q must differ")
    if 1 + a == 0:
        raise BadParams("1 + a must be nonzero for unit normalization")
    ring = Ring(1, spec.J, spec.d)
    phase = ring.zero(ring.d)
    for j in range(1, spec.J + 1):
        phase = phase + ring.t(1, j) * (p**j - q**j)
    tau = (ring.one() + phase.exp_jet() * a) * (1 / (1 + a))
    return TauFunction(ring, 0, {(0,): tau}, label=f"soliton p={p} q={q} a={a}")


# ------------------------------------------------------------------ jet solver
#
# Each differential identity is a table of bilinear terms
#     coef * aux * D1[tau(c1)] * D2[tau(c2)]
# where D applies Miwa shifts (all with sign -1) and optionally one t[k,1]
# derivative.  The table is written out independently of the checkers.

Factor = tuple  # (charge, shifts, deriv) with shifts ((comp, var), ...), deriv 0 = none


def _f(charge, shifts=(), deriv=0) -> Factor:
    return (tuple(charge), tuple(shifts), deriv)


def _dfi_terms(s, a):
    mu, nu, both = ((a, "mu"),), ((a, "nu"),), ((a, "mu"), (a, "nu"))
    return [
        (1, (("mu", 1),), _f(s, mu), _f(s, nu)),
        (1, (), _f(s, mu, a), _f(s, nu)),
        (-1, (("mu", 1),), _f(s), _f(s, both)),
        (-1, (("nu", 1),), _f(s, nu), _f(s, mu)),
        (-1, (), _f(s, nu, a), _f(s, mu)),
        (1, (("nu", 1),), _f(s), _f(s, both)),
    ]


def _dfii_terms(s, a, b):
    mu, nu, both = ((a, "mu"),), ((a, "nu"),), ((a, "mu"), (a, "nu"))
    up, down = shift_charge(s, a, b), shift_charge(s, b, a)
    return [
        (1, (), _f(s, mu, b), _f(s, nu)),
        (-1, (), _f(s, nu, b), _f(s, mu)),
        (1, (("mu", -1),), _f(up), _f(down, both)),
        (-1, (("nu", -1),), _f(up), _f(down, both)),
    ]


def _dfiii_terms(s, a, b):
    mu, nu, both = ((a, "mu"),), ((b, "nu"),), ((a, "mu"), (b, "nu"))
    up = shift_charge(s, a, b)
    return [
        (1, (("mu", 1),), _f(s, mu), _f(up, nu)),
        (1, (), _f(s, mu, a), _f(up, nu)),
        (-1, (("mu", 1),), _f(s), _f(up, both)),
        (-1, (), _f(up, nu, a), _f(s, mu)),
    ]


def _dfiv_terms(s, a, b, k):
    mu, nu, both = ((a, "mu"),), ((b, "nu"),), ((a, "mu"), (b, "nu"))
    up = shift_charge(s, a, b)
    sign = epsilon(s, a, k) * epsilon(s, b, k) * epsilon(s, b, a)
    return [
        (1, (), _f(s, mu, k), _f(up, nu)),
        (-1, (), _f(up, nu, k), _f(s, mu)),
        (sign, (), _f(shift_charge(s, a, k)), _f(add_units(s, plus=(k,), minus=(b,)), both)),
    ]


def differential_instances(n: int, window) -> list[tuple[str, list]]:
    """Every differential identity instance whose charges all lie in ``window``."""
    window = set(map(tuple, window))
    out = []
    comps = range(1, n + 1)
    for s in sorted(window):
        for a in comps:
            out.append((f"DFI s={s} a={a}", _dfi_terms(s, a)))
        for a, b in permutations(comps, 2):
            out.append((f"DFII s={s} a={a} b={b}", _dfii_terms(s, a, b)))
            out.append((f"DFIII s={s} a={a} b={b}", _dfiii_terms(s, a, b)))
        for a, b, k in permutations(comps, 3):
            out.append((f"DFIV s={s} a={a} b={b} k={k}", _dfiv_terms(s, a, b, k)))
    return [
        (name, terms)
        for name, terms in out
        if all(f[0] in window for t in terms for f in (t[2], t[3]))
    ]


def _monomial_keys(ring: Ring, weight: int) -> list[int]:
    """Packed keys of all time monomials of exact weight ``weight``, sorted."""
    slots = [(ring.t_slot(a, j), j) for a in range(1, ring.n + 1) for j in range(1, ring.J + 1)]
    out = []

    def rec(i, left, key):
        if left == 0:
            out.append(key)
            return
        if i == len(slots):
            return
        slot, j = slots[i]
        for e in range(left // j + 1):
            rec(i + 1, left - e * j, key + (e << (FIELD * slot)))

    rec(0, weight, ring.one_key)
    return sorted(out)


class _Evaluator:
    """Applies factor operators to series, with a per-step cache."""

    def __init__(self, ring: Ring):
        self.ring = ring
        self.aux_cache: dict = {}

    def aux(self, coef, aux):
        key = (coef, aux)
        hit = self.aux_cache.get(key)
        if hit is None:
            hit = self.ring.const(coef)
            for var, e in aux:
                hit = hit * self.ring.aux(var, e)
            self.aux_cache[key] = hit
        return hit

    @staticmethod
    def apply(series: FormalSeries, shifts, deriv) -> FormalSeries:
        for comp, var in shifts:
            series = series.miwa_shift(comp, var, -1)
        if deriv:
            series = series.derive(deriv, 1)
        return series


def jet_solve(spec: SolutionSpec, log=None) -> TauFunction:
    """Solve the differential identities order by order in weight.

    Weight-0 data is ``tau(s, 0) = 1``.  At step ``k`` the weight-``k - 1``
    component of every identity instance is affine in the weight-``k``
    coefficients; the resulting exact linear system is reduced incrementally
    and its free directions are filled from ``random.Random(seed)`` (or zero).
    """
    if spec.n < 2:
        raise BadParams("jet_solve needs n >= 2")
    ring = Ring(spec.n, spec.J, spec.d)
    outer = spec.radius + spec.margin
    window = list(charges_in_box(spec.n, outer))
    instances = differential_instances(spec.n, window)
    rng = random.Random(spec.seed)
    ev = _Evaluator(ring)
    # coeffs[s][w] = {key: value}
    coeffs = {s: {0: {ring.one_key: mpq(1)}} for s in window}

    for k in range(1, spec.d + 1):
        keys = _monomial_keys(ring, k)
        index = {}
        for s in window:
            for key in keys:
                index[(s, key)] = len(index)
        if len(index) > spec.max_unknowns:
            raise BudgetExceeded(f"{len(index)} unknowns at weight {k}")
        partial = {s: FormalSeries(ring, dict(coeffs[s]), k) for s in window}
        unit_cache: dict = {}

        def unit_image(key, shifts, deriv):
            hit = unit_cache.get((key, shifts, deriv))
            if hit is None:
                mono = FormalSeries(ring, {k: {key: mpq(1)}}, EXACT)
                hit = ev.apply(mono, shifts, deriv)
                unit_cache[(key, shifts, deriv)] = hit
            return hit

        system = EliminationSystem(len(index))
        for name, terms in instances:
            cache: dict = {}

            def value(f):
                hit = cache.get(f)
                if hit is None:
                    hit = ev.apply(partial[f[0]], f[1], f[2])
                    cache[f] = hit
                return hit

            total = ring.zero()
            rows: dict = {}
            for coef, aux, f1, f2 in terms:
                pre = ev.aux(coef, aux)
                total = total + pre * value(f1) * value(f2)
                for mine, other in ((f1, f2), (f2, f1)):
                    if other[2]:
                        continue  # derivative of the constant part vanishes
                    for key in keys:
                        img = (pre * unit_image(key, mine[1], mine[2])).graded_part(k - 1)
                        col = index[(mine[0], key)]
                        for mk, c in img.items():
                            row = rows.setdefault(mk, {})
                            row[col] = row.get(col, 0) + c
            for w in total.weights():
                if w < k - 1:
                    raise InternalMismatch(f"{name}: weight {w} component survived")
            const = total.graded_part(k - 1)
            for mk in sorted(set(rows) | set(const)):
                row = {c: v for c, v in rows.get(mk, {}).items() if v}
                try:
                    system.add(row, const.get(mk, 0), tag=f"{name} at {ring.decode(mk)}")
                except Inconsistent as exc:
                    raise Inconsistent(k, exc.block) from None

        if spec.policy == "zero":
            values = system.solve(lambda j: 0)
        else:
            values = system.solve(lambda j: mpq(rng.randint(-4, 4), rng.randint(1, 3)))
        for (s, key), j in index.items():
            if values[j]:
                coeffs[s].setdefault(k, {})[key] = values[j]
        if log:
            log(f"weight {k}: {len(index)} unknowns, rank {system.rank}")

    inner = set(charges_in_box(spec.n, spec.radius))
    values = {
        s: FormalSeries(ring, {w: b for w, b in coeffs[s].items() if b}, ring.d)
        for s in window
        if s in inner
    }
    label = f"jet n={spec.n} d={spec.d} seed={spec.seed} policy={spec.policy}"
    return TauFunction(ring, spec.radius, values, label=label)


def build(spec: SolutionSpec) -> TauFunction:
    if spec.kind == "vacuum":
        return vacuum_tau(spec)
    if spec.kind == "soliton_n1":
        return soliton_tau_n1(spec)
    if spec.kind == "jet":
        return jet_solve(spec)
    raise BadParams(f"unknown solution kind {spec.kind!r}")
