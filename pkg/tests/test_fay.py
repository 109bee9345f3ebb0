import itertools

import pytest
import sympy
from gmpy2 import mpq

from kpfay import Monomial
from kpfay.fay import (
    check_cfi,
    check_cfii,
    check_dfi,
    check_dfii,
    check_dfiii,
    check_dfiv,
    check_division_agreement,
    check_limits,
    derive_cf_from_df,
    dfi_residual,
)
from kpfay.report import ERROR, FAIL, PASS, SKIPPED_N
from kpfay.signs import epsilon

ORIGIN2 = (0, 0)
ORIGIN3 = (0, 0, 0)


def test_closed_form_soliton_satisfies_the_scalar_identity():
    # tau(t - [1/mu]) = 1 + E (mu - q)/(mu - p) with E = a exp((q - p) x)
    x, mu, nu, p, q, a = sympy.symbols("x mu nu p q a")
    E = a * sympy.exp((q - p) * x)
    r = lambda v: (v - q) / (v - p)
    A, B, C, AB = 1 + E * r(mu), 1 + E * r(nu), 1 + E, 1 + E * r(mu) * r(nu)
    residual = sympy.diff(A, x) * B - sympy.diff(B, x) * A - (mu - nu) * (C * AB - A * B)
    assert sympy.simplify(residual) == 0


def test_soliton_first_identity(soliton):
    assert check_dfi(soliton, (0,), 1).status == PASS


def test_soliton_residual_is_exactly_zero(soliton):
    assert dfi_residual(soliton, (0,), 1).is_zero()


@pytest.mark.parametrize("a,b", [(1, 2), (2, 1)])
@pytest.mark.parametrize("s", [ORIGIN2, (1, -1), (-1, 1)])
def test_jet_second_and_third_identities(jet2, s, a, b):
    assert check_dfii(jet2, s, a, b).status == PASS
    assert check_dfiii(jet2, s, a, b).status == PASS


@pytest.mark.parametrize("a,b,k", list(itertools.permutations((1, 2, 3))))
def test_three_component_identities(jet3, a, b, k):
    s = ORIGIN3
    assert check_dfi(jet3, s, a).status == PASS
    assert check_dfii(jet3, s, a, b).status == PASS
    assert check_dfiii(jet3, s, a, b).status == PASS
    assert check_dfiv(jet3, s, a, b, k).status == PASS
    assert check_cfii(jet3, s, a, b, k).status == PASS
    assert derive_cf_from_df(jet3, s, (a, b, k)).status == PASS
    assert all(r.status == PASS for r in check_limits(jet3, s, (a, b, k)))


def test_two_components_skip_the_four_index_identity(jet2):
    rep = check_cfi(jet2, ORIGIN2, 1, 2, 1, 2)
    assert rep.status == SKIPPED_N
    assert check_dfiv(jet2, ORIGIN2, 1, 2, 1).status == SKIPPED_N


def test_repeated_indices_are_an_error(jet3):
    rep = check_dfii(jet3, ORIGIN3, 2, 2)
    assert rep.status == ERROR
    assert "IndicesNotDistinct" in rep.message


def test_index_out_of_range_is_an_error(jet2):
    rep = check_dfii(jet2, ORIGIN2, 1, 3)
    assert rep.status == ERROR
    assert "IndexOutOfRange" in rep.message


def test_charge_outside_the_window(jet3):
    rep = check_dfii(jet3, (1, -1, 0), 1, 2)
    assert rep.status == "OutsideWindow"


def test_fault_breaks_the_identities(jet3):
    bad = jet3.with_fault(ORIGIN3, Monomial((((1, 1), 1),), ()), 1)
    reps = [check_dfii(bad, ORIGIN3, a, b) for a, b in itertools.permutations((1, 2, 3), 2)]
    assert any(r.status == FAIL for r in reps)


def test_flipped_sign_breaks_the_chain(jet3):
    def flipped(s, a, b):
        return -epsilon(s, a, b)

    rep = derive_cf_from_df(jet3, ORIGIN3, (1, 2, 3), eps=flipped)
    assert rep.status == FAIL
    failed = [step.identity for step in rep.steps if step.status == FAIL]
    assert failed


def test_chain_steps_are_recorded(jet3):
    rep = derive_cf_from_df(jet3, ORIGIN3, (1, 2, 3))
    assert len(rep.steps) == 5
    assert all(step.status == PASS for step in rep.steps)


@pytest.mark.parametrize("idx", [(1,), (1, 2), (2, 1), (1, 2, 3), (3, 1, 2)])
def test_division_form_agrees(jet3, idx):
    assert check_division_agreement(jet3, ORIGIN3, idx).status == PASS


def test_division_form_agrees_on_a_fault(jet3):
    bad = jet3.with_fault(ORIGIN3, Monomial((((2, 1), 1),), ()), 1)
    assert check_division_agreement(bad, ORIGIN3, (1, 2, 3)).status == PASS


@pytest.mark.parametrize("c", [2, mpq(-3, 7)])
def test_checks_are_blind_to_a_global_scale(jet3, c):
    scaled = jet3.scaled(c)
    for a, b, k in itertools.permutations((1, 2, 3)):
        before = check_dfiv(jet3, ORIGIN3, a, b, k)
        after = check_dfiv(scaled, ORIGIN3, a, b, k)
        assert before.status == after.status == PASS


def test_scale_keeps_a_failure_a_failure(jet3):
    bad = jet3.with_fault(ORIGIN3, Monomial((((1, 1), 1),), ()), 1)
    for a, b in itertools.permutations((1, 2, 3), 2):
        assert check_dfii(bad, ORIGIN3, a, b).status == check_dfii(bad.scaled(5), ORIGIN3, a, b).status


def test_constant_three_component_tau_fails_the_second_identity(vacuum3):
    # with tau = 1 the shifted term survives alone: no cancelling derivative
    rep = check_dfii(vacuum3, ORIGIN3, 1, 2)
    assert rep.status == FAIL
    assert rep.count > 0


def test_constant_tau_passes_the_first_identity(vacuum3):
    assert check_dfi(vacuum3, ORIGIN3, 1).status == PASS
