"""Exact truncated formal series in the time variables and spectral variables.

A series lives in a :class:`Ring` fixed by ``(n, J, d)``: time variables
``t[a, j]`` for ``1 <= a <= n``, ``1 <= j <= J`` carry weight ``j``, and the
four spectral variables ``z, lam, mu, nu`` carry weight ``-e`` on ``var**e``
(so ``mu**-1`` has weight 1 and ``mu`` has weight -1).  Every operation is
filtered for this grading, and a series records a single *trusted weight*
``T``: every term of total weight ``<= T`` is exact, nothing above it is
stored.  The coefficient of ``var**e`` is then a time series trusted up to
t-weight ``T + e``; a Laurent polynomial in one spectral variable with
per-coefficient trust is a view on the same object (see :meth:`coeff`).

Monomials are packed into a single integer, one 8-bit field per variable,
spectral exponents stored with a bias of 64, so monomial multiplication is
integer addition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Iterator

from gmpy2 import mpq

from .errors import BadConstantTerm, NonUnit, RangeTooNarrow

AUX_NAMES = ("z", "lam", "mu", "nu")
_ALIASES = {"λ": "lam", "lambda": "lam", "μ": "mu", "ν": "nu"}

FIELD = 8
MASK = (1 << FIELD) - 1
BIAS = 64
# trust of exact polynomials (constants, spectral monomials): never limits a product
EXACT = 1 << 30


def as_rational(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(x)
    return mpq(x)


def aux_name(var: str) -> str:
    var = _ALIASES.get(var, var)
    if var not in AUX_NAMES:
        raise ValueError(f"unknown spectral variable {var!r}")
    return var


@dataclass(frozen=True)
class Monomial:
    """Decoded monomial: time exponents keyed by (a, j), spectral exponents by name."""

    t: tuple = ()
    aux: tuple = ()

    @property
    def wdeg(self) -> int:
        return sum(j * e for (_, j), e in self.t)

    @property
    def weight(self) -> int:
        return self.wdeg - sum(e for _, e in self.aux)

    def __str__(self) -> str:
        parts = []
        for (a, j), e in self.t:
            parts.append(f"t{a}_{j}" + (f"^{e}" if e != 1 else ""))
        for name, e in self.aux:
            parts.append(name + (f"^{e}" if e != 1 else ""))
        return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class Ring:
    """Variable universe and global cutoff ``d`` shared by a family of series."""

    n: int
    J: int
    d: int
    _aux_slot: dict = field(init=False, repr=False, compare=False)
    _bias_word: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.J < 1 or self.d < 0:
            raise ValueError("need n >= 1, J >= 1, d >= 0")
        nt = self.n * self.J
        object.__setattr__(self, "_aux_slot", {a: nt + i for i, a in enumerate(AUX_NAMES)})
        object.__setattr__(
            self, "_bias_word", sum(BIAS << (FIELD * s) for s in self._aux_slot.values())
        )

    # slot helpers

    def t_slot(self, a: int, j: int) -> int:
        if not (1 <= a <= self.n and 1 <= j <= self.J):
            raise ValueError(f"t[{a},{j}] is outside the variable universe")
        return (a - 1) * self.J + (j - 1)

    def aux_slot(self, var: str) -> int:
        return self._aux_slot[aux_name(var)]

    @property
    def one_key(self) -> int:
        return self._bias_word

    def decode(self, key: int) -> Monomial:
        t = []
        for a in range(1, self.n + 1):
            for j in range(1, self.J + 1):
                e = (key >> (FIELD * self.t_slot(a, j))) & MASK
                if e:
                    t.append(((a, j), e))
        aux = []
        for name in AUX_NAMES:
            e = ((key >> (FIELD * self._aux_slot[name])) & MASK) - BIAS
            if e:
                aux.append((name, e))
        return Monomial(tuple(t), tuple(aux))

    def encode(self, mono: Monomial) -> int:
        key = self._bias_word
        for (a, j), e in mono.t:
            key += e << (FIELD * self.t_slot(a, j))
        for name, e in mono.aux:
            key += e << (FIELD * self.aux_slot(name))
        return key

    # constructors

    def zero(self, trusted: int | None = None) -> "FormalSeries":
        return FormalSeries(self, {}, EXACT if trusted is None else trusted)

    def const(self, c) -> "FormalSeries":
        c = as_rational(c)
        return FormalSeries(self, {0: {self.one_key: c}} if c else {}, EXACT)

    def one(self) -> "FormalSeries":
        return self.const(1)

    def t(self, a: int, j: int, power: int = 1) -> "FormalSeries":
        w = j * power
        if w > self.d:
            return self.zero(self.d)
        key = self.one_key + (power << (FIELD * self.t_slot(a, j)))
        return FormalSeries(self, {w: {key: mpq(1)}}, self.d)

    def aux(self, var: str, power: int) -> "FormalSeries":
        key = self.one_key + (power << (FIELD * self.aux_slot(var)))
        return FormalSeries(self, {-power: {key: mpq(1)}}, EXACT)

    def from_terms(self, terms: dict, trusted: int | None = None) -> "FormalSeries":
        """Build from ``{Monomial: coefficient}``; terms above the trust are dropped."""
        T = self.d if trusted is None else trusted
        graded: dict = {}
        for mono, c in terms.items():
            c = as_rational(c)
            if not c or mono.weight > T:
                continue
            bucket = graded.setdefault(mono.weight, {})
            k = self.encode(mono)
            bucket[k] = bucket.get(k, 0) + c
        return FormalSeries(self, _clean(graded), T)


def _clean(graded: dict) -> dict:
    out = {}
    for w, bucket in graded.items():
        b = {k: c for k, c in bucket.items() if c}
        if b:
            out[w] = b
    return out


class FormalSeries:
    """Immutable truncated series; see the module docstring for the grading."""

    __slots__ = ("ring", "_w", "trusted")

    def __init__(self, ring: Ring, graded: dict, trusted: int):
        self.ring = ring
        self._w = graded
        self.trusted = trusted

    # inspection

    def __repr__(self) -> str:
        return f"FormalSeries({self}, trusted={self.trusted})"

    def __str__(self) -> str:
        items = list(self.items())
        if not items:
            return "0"
        return " + ".join(f"{c}*{m}" if str(m) != "1" else f"{c}" for m, c in items)

    @property
    def trusted_order(self) -> int:
        """Trusted weight as seen from the time variables alone (capped at ``d``)."""
        return min(self.trusted, self.ring.d)

    def is_exact(self) -> bool:
        return self.trusted >= EXACT

    def is_zero(self) -> bool:
        return not self._w

    def __bool__(self) -> bool:
        return bool(self._w)

    def __len__(self) -> int:
        return sum(len(b) for b in self._w.values())

    def items(self) -> Iterator[tuple[Monomial, mpq]]:
        """Terms in deterministic order: by weight, then by packed key."""
        for w in sorted(self._w):
            bucket = self._w[w]
            for k in sorted(bucket):
                yield self.ring.decode(k), bucket[k]

    def graded_part(self, w: int) -> dict:
        """Raw ``{packed key: coefficient}`` of the weight-``w`` component."""
        return dict(self._w.get(w, {}))

    def weights(self) -> list[int]:
        return sorted(self._w)

    def constant(self) -> mpq:
        return self._w.get(0, {}).get(self.ring.one_key, mpq(0))

    def min_weight(self) -> int:
        """Lowest weight any term of the exact series can have."""
        lo = self.trusted + 1
        if self._w:
            lo = min(lo, min(self._w))
        return lo

    def uses(self, var: str) -> bool:
        shift = FIELD * self.ring.aux_slot(var)
        return any(((k >> shift) & MASK) != BIAS for b in self._w.values() for k in b)

    def aux_range(self, var: str) -> tuple[int, int] | None:
        shift = FIELD * self.ring.aux_slot(var)
        exps = {((k >> shift) & MASK) - BIAS for b in self._w.values() for k in b}
        return (min(exps), max(exps)) if exps else None

    # arithmetic

    def _coerce(self, other) -> "FormalSeries":
        if isinstance(other, FormalSeries):
            if other.ring != self.ring:
                raise ValueError("series belong to different rings")
            return other
        return self.ring.const(other)

    def truncate(self, trusted: int) -> "FormalSeries":
        """Lower the trusted weight to ``trusted`` (never raises it)."""
        T = min(trusted, self.trusted)
        if T == self.trusted:
            return self
        return FormalSeries(self.ring, {w: b for w, b in self._w.items() if w <= T}, T)

    def __add__(self, other) -> "FormalSeries":
        other = self._coerce(other)
        T = min(self.trusted, other.trusted)
        out = {w: dict(b) for w, b in self._w.items() if w <= T}
        for w, b in other._w.items():
            if w > T:
                continue
            tgt = out.setdefault(w, {})
            for k, c in b.items():
                tgt[k] = tgt.get(k, 0) + c
        return FormalSeries(self.ring, _clean(out), T)

    __radd__ = __add__

    def __neg__(self) -> "FormalSeries":
        return FormalSeries(
            self.ring, {w: {k: -c for k, c in b.items()} for w, b in self._w.items()}, self.trusted
        )

    def __sub__(self, other) -> "FormalSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FormalSeries":
        return self._coerce(other) - self

    def scale(self, c) -> "FormalSeries":
        c = as_rational(c)
        if not c:
            return self.ring.zero(self.trusted)
        return FormalSeries(
            self.ring, {w: {k: c * v for k, v in b.items()} for w, b in self._w.items()}, self.trusted
        )

    def __mul__(self, other) -> "FormalSeries":
        if not isinstance(other, FormalSeries):
            return self.scale(other)
        other = self._coerce(other)
        T = min(self.trusted + other.min_weight(), other.trusted + self.min_weight())
        # jets never claim more than the global cutoff
        T = min(T, EXACT if self.is_exact() and other.is_exact() else self.ring.d)
        bias = self.ring.one_key
        out: dict = {}
        for wa, da in self._w.items():
            for wb, db in other._w.items():
                w = wa + wb
                if w > T:
                    continue
                tgt = out.setdefault(w, {})
                get = tgt.get
                for ka, ca in da.items():
                    base = ka - bias
                    for kb, cb in db.items():
                        k = base + kb
                        tgt[k] = get(k, 0) + ca * cb
        return FormalSeries(self.ring, _clean(out), T)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "FormalSeries":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormalSeries):
            if isinstance(other, (int, Fraction)) or type(other) is type(mpq(0)):
                other = self.ring.const(other)
            else:
                return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # calculus

    def derive(self, a: int, j: int) -> "FormalSeries":
        """Partial derivative in ``t[a, j]``; trust drops by ``j``."""
        shift = FIELD * self.ring.t_slot(a, j)
        unit = 1 << shift
        out: dict = {}
        for w, b in self._w.items():
            tgt = {}
            for k, c in b.items():
                e = (k >> shift) & MASK
                if e:
                    tgt[k - unit] = c * e
            if tgt:
                out[w - j] = tgt
        return FormalSeries(self.ring, out, self.trusted - j)

    def _unit_part(self) -> mpq:
        """Constant term, after checking the series is constant plus higher weight."""
        if self._w and min(self._w) < 0:
            raise NonUnit("series has terms of negative weight")
        zero = self._w.get(0, {})
        c0 = zero.get(self.ring.one_key, mpq(0))
        if len(zero) > (1 if c0 else 0):
            raise NonUnit("weight-0 part is not a constant")
        return c0

    def _jet_trust(self) -> int:
        """Trust of an infinite series built from this one (capped at ``d``)."""
        return min(self.trusted, self.ring.d)

    def _nilpotent(self) -> "FormalSeries":
        return FormalSeries(self.ring, {w: b for w, b in self._w.items() if w > 0}, self.trusted)

    def inverse(self) -> "FormalSeries":
        c0 = self._unit_part()
        if not c0:
            raise NonUnit("constant term is zero")
        inv0 = 1 / c0
        T = self._jet_trust()
        x = -(self._nilpotent().truncate(T) * inv0)
        result = self.ring.one().truncate(T)
        power = result
        for _ in range(max(T, 0)):
            power = power * x
            if power.is_zero():
                break
            result = result + power
        return result * inv0

    def exp_jet(self) -> "FormalSeries":
        try:
            c0 = self._unit_part()
        except NonUnit as exc:
            raise BadConstantTerm(str(exc)) from None
        if c0:
            raise BadConstantTerm("exp_jet needs a zero constant term")
        T = self._jet_trust()
        base = self.truncate(T)
        result = self.ring.one().truncate(T)
        power = result
        for n in range(1, max(T, 0) + 1):
            power = power * base
            if power.is_zero():
                break
            result = result + power * mpq(1, factorial(n))
        return result

    def log_jet(self) -> "FormalSeries":
        try:
            c0 = self._unit_part()
        except NonUnit as exc:
            raise BadConstantTerm(str(exc)) from None
        if c0 != 1:
            raise BadConstantTerm("log_jet needs constant term 1")
        T = self._jet_trust()
        x = self._nilpotent().truncate(T)
        result = self.ring.zero(T)
        power = self.ring.one().truncate(T)
        for n in range(1, max(T, 0) + 1):
            power = power * x
            if power.is_zero():
                break
            result = result + power * mpq((-1) ** (n + 1), n)
        return result

    # spectral variables

    def miwa_shift(self, gamma: int, var: str, sign: int = -1) -> "FormalSeries":
        """Substitute ``t[gamma, j] -> t[gamma, j] + sign * var**-j / j`` for all j.

        ``sign=-1`` realises ``t - [var^-1]_gamma``; the map is a ring
        homomorphism that preserves weight, so the trust is unchanged.
        """
        ring = self.ring
        var = aux_name(var)
        if self.uses(var):
            raise ValueError(f"{var} already occurs in the series")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        aux_shift = FIELD * ring.aux_slot(var)
        slots = [FIELD * ring.t_slot(gamma, j) for j in range(1, ring.J + 1)]
        clear_mask = sum(MASK << s for s in slots)
        cache: dict = {}

        def expansion(exps):
            hit = cache.get(exps)
            if hit is not None:
                return hit
            terms = [(0, mpq(1))]
            for j, e in enumerate(exps, start=1):
                if not e:
                    continue
                step = mpq(sign, j)
                factor = []
                for i in range(e + 1):
                    dkey = ((e - i) << slots[j - 1]) - ((j * i) << aux_shift)
                    factor.append((dkey, comb(e, i) * step**i))
                terms = [(k1 + k2, c1 * c2) for k1, c1 in terms for k2, c2 in factor]
            cache[exps] = terms
            return terms

        out: dict = {}
        for w, b in self._w.items():
            tgt = out.setdefault(w, {})
            for k, c in b.items():
                exps = tuple((k >> s) & MASK for s in slots)
                if not any(exps):
                    tgt[k] = tgt.get(k, 0) + c
                    continue
                base = k & ~clear_mask
                for dk, dc in expansion(exps):
                    nk = base + dk
                    tgt[nk] = tgt.get(nk, 0) + c * dc
        return FormalSeries(ring, _clean(out), self.trusted)

    def coeff(self, var: str, e: int) -> "FormalSeries":
        """Coefficient of ``var**e``; trusted to weight ``T + e``."""
        shift = FIELD * self.ring.aux_slot(var)
        want = BIAS + e
        delta = e << shift
        out: dict = {}
        for w, b in self._w.items():
            tgt = {k - delta: c for k, c in b.items() if ((k >> shift) & MASK) == want}
            if tgt:
                out[w + e] = tgt
        return FormalSeries(self.ring, out, self.trusted + e)

    def residue(self, var: str = "z") -> "FormalSeries":
        """Formal residue: the coefficient of ``var**-1``."""
        if self.trusted < 1:
            raise RangeTooNarrow(f"trusted weight {self.trusted} cannot reach {var}^-1")
        return self.coeff(var, -1)

    def drop_aux(self, var: str) -> "FormalSeries":
        """The limit ``var -> infinity``: keep the ``var**0`` part.

        Only defined when no positive power of ``var`` survives.
        """
        rng = self.aux_range(var)
        if rng is not None and rng[1] > 0:
            raise ValueError(f"positive powers of {var} present; limit undefined")
        return self.coeff(var, 0)

    def at_origin(self) -> "FormalSeries":
        """Set every time variable to zero, keeping spectral variables."""
        ring = self.ring
        tmask = (1 << (FIELD * ring.n * ring.J)) - 1
        out: dict = {}
        for w, b in self._w.items():
            tgt = {k: c for k, c in b.items() if not (k & tmask)}
            if tgt:
                out[w] = tgt
        return FormalSeries(ring, out, self.trusted)

    def mul_aux(self, var: str, power: int) -> "FormalSeries":
        """Multiply by ``var**power`` (cheaper than building the monomial)."""
        return self * self.ring.aux(var, power)

    def terms_over(self, limit: int) -> list:
        """Nonzero terms as ``(Monomial, coefficient)``, at most ``limit`` of them."""
        out = []
        for item in self.items():
            out.append(item)
            if len(out) >= limit:
                break
        return out


AuxLaurent = FormalSeries


def binomial_expand(small: FormalSeries, big_var: str, power: int, K: int) -> FormalSeries:
    """``(1 - small/big)**power`` for ``power`` in ``{+1, -1}``.

    ``small`` is usually ``ring.aux('z', 1)``.  For ``power=-1`` the geometric
    series is cut after ``small**K``; the result is exact as a polynomial but
    only stands in for the full series when every product it meets needs no
    term beyond ``small**K`` (see :func:`residue_with_factor`).
    """
    ring = small.ring
    ratio = small * ring.aux(big_var, -1)
    if power == 1:
        return ring.one() - ratio
    if power != -1:
        raise ValueError("power must be +1 or -1")
    if K < 0:
        raise ValueError("K must be >= 0")
    result = ring.one()
    term = ring.one()
    for _ in range(K):
        term = term * ratio
        result = result + term
    return result


def geometric_coefficients(ring: Ring, big_vars: Iterable[str], K: int) -> list[FormalSeries]:
    """Coefficients ``h_k`` of ``z**k`` in ``prod_v (1 - z/v)**-1`` for ``k <= K``.

    ``h_k`` is the complete homogeneous polynomial of degree ``k`` in the
    inverses of ``big_vars``.
    """
    big_vars = list(big_vars)
    coeffs = [ring.one()] + [ring.zero() for _ in range(K)]
    for v in big_vars:
        inv = ring.aux(v, -1)
        new = []
        for k in range(K + 1):
            acc = coeffs[k]
            if k:
                acc = acc + new[k - 1] * inv
            new.append(acc)
        coeffs = new
    return coeffs


def residue_with_factor(
    f: FormalSeries, var: str, factor_coeffs: list[FormalSeries] | None = None, shift: int = 0
) -> FormalSeries:
    """Residue in ``var`` of ``var**shift * f * sum_k factor_coeffs[k] var**k``.

    ``f`` is a Laurent polynomial in ``var``.  The factor is consumed term by
    term, so the caller must supply enough ``factor_coeffs`` to reach the
    deepest power of ``var`` in ``f``.  Trust of the result is
    ``f.trusted - shift - 1``.
    """
    ring = f.ring
    rng = f.aux_range(var)
    if factor_coeffs is None:
        factor_coeffs = [ring.one()]
    if f.trusted - shift < 1:
        raise RangeTooNarrow(f"trusted weight {f.trusted} cannot reach the residue")
    total = ring.zero(f.trusted - shift - 1)
    if rng is None:
        return total
    lo, hi = rng
    for k, h in enumerate(factor_coeffs):
        e = -1 - k - shift
        if e < lo:
            break
        if e > hi:
            continue
        part = f.coeff(var, e)
        if part.is_zero() or h.is_zero():
            continue
        total = total + part * h
    return total.truncate(f.trusted - shift - 1)
