from fractions import Fraction

import pytest
import sympy
from conftest import asym, same, to_sympy, tsym
from hypothesis import given
from hypothesis import strategies as st

from kpfay import Monomial, OutsideWindow, ParseError, Ring, TauFunction, dumps, loads
from kpfay.tau import constant_tau


def single(series, radius=0):
    n = series.ring.n
    return TauFunction(series.ring, radius, {(0,) * n: series})


def test_vacuum_is_one_everywhere(vacuum3):
    assert all(vacuum3.at(s) == 1 for s in vacuum3.charges())


def test_outside_the_box_raises(vacuum2):
    with pytest.raises(OutsideWindow):
        vacuum2.at((3, -3))


def test_jet_tau_is_unit_normalised(jet2):
    assert jet2.at((0, 0)).constant() == 1


def test_vacuum_miwa_is_one(vacuum2):
    assert vacuum2.miwa((1, -1), ((1, "z", -1), (2, "mu", 1))) == 1


def test_miwa_of_a_linear_tau():
    ring = Ring(1, 3, 3)
    tau = single(ring.one() + ring.t(1, 1))
    assert same(tau.miwa((0,), ((1, "z", -1),)), 1 + tsym(1, 1) - asym("z") ** -1)


def test_miwa_of_a_product_is_the_product_of_miwas():
    ring = Ring(2, 3, 3)
    f = ring.one() + ring.t(1, 1) + ring.t(2, 2).scale(3)
    g = ring.one() - ring.t(1, 2) + ring.t(1, 1) * ring.t(2, 1)
    shifts = ((1, "z", -1), (2, "mu", 1))
    lhs = single(f * g).miwa((0, 0), shifts)
    rhs = single(f).miwa((0, 0), shifts) * single(g).miwa((0, 0), shifts)
    assert lhs == rhs


def test_vacuum_log_derivative_is_zero(vacuum2):
    assert vacuum2.dlog((0, 0), 1).is_zero()


def test_log_derivative_of_an_exponential():
    ring = Ring(2, 3, 4)
    tau = single(ring.t(1, 1).exp_jet())
    assert tau.dlog((0, 0), 1) == 1
    assert tau.dlog((0, 0), 2).is_zero()


def test_log_derivative_matches_derivative_of_log(jet2):
    f = jet2.at((1, -1))
    assert jet2.dlog((1, -1), 2) == f.log_jet().derive(2, 1)


def test_round_trip_of_a_jet_tau(jet2):
    assert loads(dumps(jet2)) == jet2
    assert dumps(loads(dumps(jet2))) == dumps(jet2)


def test_truncated_file_is_a_parse_error(jet2):
    text = dumps(jet2)
    cut = text[: len(text) // 2]
    with pytest.raises(ParseError) as info:
        loads(cut)
    assert info.value.line > 0


def test_bad_rational_reports_its_column():
    text = "kpfay-tau 1\nN 1\nJ 2\nd 2\nS_box 0\ncharge 0\n  1 : 1\n  t1_1 : x/2\nend\n"
    with pytest.raises(ParseError) as info:
        loads(text)
    assert info.value.line == 8
    assert info.value.column == 9


def test_wrong_header_is_rejected():
    with pytest.raises(ParseError):
        loads("tau 1\n")


def test_zero_constant_term_is_rejected():
    text = "kpfay-tau 1\nN 1\nJ 2\nd 2\nS_box 0\ncharge 0\n  t1_1 : 1\nend\n"
    with pytest.raises(ParseError):
        loads(text)


def test_non_zero_sum_charge_is_rejected():
    text = "kpfay-tau 1\nN 2\nJ 2\nd 2\nS_box 1\ncharge 1 0\n  1 : 1\nend\n"
    with pytest.raises(ParseError):
        loads(text)


def test_fault_moves_exactly_one_coefficient(jet2):
    mono = Monomial((((1, 1), 1),), ())
    bad = jet2.with_fault((0, 0), mono, 1)
    diff = bad.at((0, 0)) - jet2.at((0, 0))
    assert list(diff.items()) == [(mono, 1)]
    assert bad.at((1, -1)) == jet2.at((1, -1))


def test_restriction_keeps_the_inner_box(jet2):
    inner = jet2.restricted(1)
    assert len(inner.charges()) == 3
    assert inner.at((1, -1)) == jet2.at((1, -1))


@given(
    st.dictionaries(
        st.sampled_from(
            [Monomial((((1, 1), 1),), ()), Monomial((((2, 1), 2),), ()), Monomial((((1, 2), 1), ((2, 1), 1)), ())]
        ),
        st.fractions(min_value=-5, max_value=5, max_denominator=7),
    ),
    st.integers(1, 9),
)
def test_serialisation_round_trip(terms, c0):
    ring = Ring(2, 2, 3)
    values = {}
    for s in ((0, 0), (1, -1), (-1, 1)):
        values[s] = ring.from_terms({**terms, Monomial(): Fraction(c0, 2)})
    tau = TauFunction(ring, 1, values, label="random")
    back = loads(dumps(tau))
    assert back == tau
    assert back.label == "random"


def test_constant_model_has_every_box_charge():
    tau = constant_tau(Ring(3, 2, 2), 1)
    assert len(tau.charges()) == 7
