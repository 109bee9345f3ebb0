import os
from fractions import Fraction

import pytest
import sympy
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kpfay import Monomial, Ring, SolutionSpec, jet_solve, soliton_tau_n1, vacuum_tau

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# ------------------------------------------------------------ shared tau functions


@pytest.fixture(scope="session")
def jet2():
    """Two components, d = 5, radius 2, seed 1."""
    return jet_solve(SolutionSpec("jet", n=2, d=5, J=5, radius=2, seed=1))


@pytest.fixture(scope="session")
def jet3():
    return jet_solve(SolutionSpec("jet", n=3, d=4, J=4, radius=1, seed=1))


@pytest.fixture(scope="session")
def soliton():
    return soliton_tau_n1(SolutionSpec("soliton_n1", n=1, d=8, J=8, p=2, q=3, a=1))


@pytest.fixture(scope="session")
def vacuum2():
    return vacuum_tau(SolutionSpec("vacuum", n=2, d=4, J=4, radius=2))


@pytest.fixture(scope="session")
def vacuum3():
    return vacuum_tau(SolutionSpec("vacuum", n=3, d=4, J=4, radius=2))


# ------------------------------------------------------------ sympy oracle


AUX = ("z", "lam", "mu", "nu")


def tsym(a, j):
    return sympy.Symbol(f"t{a}_{j}")


def asym(name):
    return sympy.Symbol(name)


def to_sympy(f):
    expr = sympy.Integer(0)
    for mono, c in f.items():
        term = sympy.Rational(int(c.numerator), int(c.denominator))
        for (a, j), e in mono.t:
            term *= tsym(a, j) ** e
        for v, e in mono.aux:
            term *= asym(v) ** e
        expr += term
    return sympy.expand(expr)


def weight_of(term, ring):
    w = 0
    for a in range(1, ring.n + 1):
        for j in range(1, ring.J + 1):
            w += j * sympy.degree(term, tsym(a, j))
    for v in AUX:
        p = term.as_powers_dict().get(asym(v), 0)
        w -= int(p)
    return w


def truncate_sympy(expr, ring, T):
    expr = sympy.expand(expr)
    if expr == 0:
        return sympy.Integer(0)
    out = sympy.Integer(0)
    for term in sympy.Add.make_args(expr):
        if weight_of(term, ring) <= T:
            out += term
    return out


def same(f, expr):
    """``f`` agrees with the sympy expression on every trusted weight."""
    return sympy.expand(to_sympy(f) - truncate_sympy(expr, f.ring, f.trusted_order)) == 0


# ------------------------------------------------------------ strategies

SMALL_RING = Ring(2, 3, 4)

rationals = st.builds(
    lambda p, q: Fraction(p, q), st.integers(-5, 5), st.integers(1, 4)
)


def _monomials(ring, max_w):
    out = [Monomial()]
    slots = [(a, j) for a in range(1, ring.n + 1) for j in range(1, ring.J + 1)]

    def rec(i, left, acc):
        if i == len(slots):
            if acc:
                out.append(Monomial(tuple(acc), ()))
            return
        a, j = slots[i]
        for e in range(left // j + 1):
            rec(i + 1, left - e * j, acc + ([((a, j), e)] if e else []))

    rec(0, max_w, [])
    return out


_MONOS = _monomials(SMALL_RING, SMALL_RING.d)


@st.composite
def jets(draw, ring=SMALL_RING, unit=None):
    """Random jets in ``ring``; ``unit`` forces the constant term."""
    picks = draw(st.lists(st.sampled_from(_MONOS), max_size=6))
    terms = {m: draw(rationals) for m in picks}
    if unit is not None:
        terms[Monomial()] = unit
    return ring.from_terms(terms)


# ------------------------------------------------------------ acceptance summary

CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records one acceptance verdict for the summary."""

    def record(k, ok, detail=""):
        CRITERIA[k] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
