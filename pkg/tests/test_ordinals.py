import pytest
from hypothesis import given, strategies as st

from treelap.ordinals import (
    OMEGA,
    ZERO,
    ExponentCapError,
    Ordinal,
    OrdinalError,
    RankValue,
    decrement_once,
    omega_times,
    omega_times_succ,
    one_plus,
    parse,
    render,
)

from oracles import cnf_multiply


def o(text):
    return parse(text)


def test_compare_examples():
    assert ZERO == ZERO
    assert OMEGA < o("w*1+1")  # successor dominates
    assert o("w*3+2") < o("w^2*1")  # higher exponent dominates


def test_succ_examples():
    assert ZERO.succ() == o("1")
    assert OMEGA.succ() == o("w*1+1")
    assert o("w*2+5").succ() == o("w*2+6")


def test_omega_times_succ_examples():
    assert omega_times_succ(ZERO) == OMEGA  # w*1
    assert omega_times_succ(Ordinal.from_int(2)) == o("w*3")
    # the multiplication oracle fixes the expected value of w*(w+1)
    expected = cnf_multiply(OMEGA, OMEGA.succ())
    assert expected == o("w^2*1+w*1")
    assert omega_times_succ(OMEGA) == expected


def test_left_multiplication_against_oracle():
    samples = [ZERO, o("1"), o("5"), OMEGA, o("w*2"), o("w*2+3"), o("w^2*1+4")]
    for a in samples:
        if a.is_zero:
            assert omega_times(a) == ZERO
        else:
            assert omega_times(a) == cnf_multiply(OMEGA, a)


def test_exponent_cap():
    with pytest.raises(ExponentCapError):
        omega_times(o("w^3*1"))
    assert omega_times(o("w^3*1"), cap=4) == o("w^4*1")


@st.composite
def ordinals(draw, max_exp=3, max_coeff=9):
    exps = draw(st.lists(st.integers(0, max_exp), unique=True, max_size=max_exp + 1))
    exps.sort(reverse=True)
    terms = tuple((e, draw(st.integers(1, max_coeff))) for e in exps)
    return Ordinal(terms)


@given(ordinals())
def test_render_parse_round_trip(a):
    assert parse(render(a)) == a


@given(ordinals(), ordinals())
def test_compare_total(a, b):
    assert (a < b) + (b < a) + (a == b) == 1


@given(ordinals(), ordinals(), ordinals())
def test_compare_transitive(a, b, c):
    if a < b and b < c:
        assert a < c


@given(ordinals())
def test_succ_strictly_increasing(a):
    assert a < a.succ()


@given(ordinals(max_exp=2))
def test_omega_times_succ_monotone(a):
    assert omega_times_succ(a) < omega_times_succ(a.succ())


@given(ordinals())
def test_one_plus_absorbs(a):
    if a.is_finite:
        assert one_plus(a) == a.succ()
    else:
        assert one_plus(a) == a


@given(ordinals())
def test_decrement_below(a):
    if not a.is_zero:
        assert decrement_once(a) < a


def test_bad_cnf_rejected():
    with pytest.raises(OrdinalError):
        Ordinal(((1, 1), (1, 2)))
    with pytest.raises(OrdinalError):
        Ordinal(((0, 0),))
    with pytest.raises(OrdinalError):
        parse("w^x*1")


def test_rank_value_order():
    vals = [RankValue.minus_one(), RankValue.of(0), RankValue.of(OMEGA), RankValue.infinity()]
    for i in range(len(vals)):
        for j in range(len(vals)):
            assert (vals[i] < vals[j]) == (i < j)
    assert str(RankValue.minus_one()) == "-1"
    assert str(RankValue.infinity()) == "inf"
    assert str(RankValue.of(OMEGA)) == "w*1"
