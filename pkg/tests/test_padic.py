"""Scalar and extension arithmetic: precision tracking, valuations, lifts."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fglab.errors import (
    BadModulus,
    DivisionByZero,
    ImpreciseValuation,
    MixedContext,
    PrecisionExhausted,
)
from fglab.padic import (
    INFINITE,
    ExtensionModulus,
    ExtScalar,
    PadicScalar,
    PointTuple,
    PrecisionContext,
    ext_construct,
    field_arith,
    teichmuller,
)

from conftest import cyclotomic_modulus


def test_context_validation():
    with pytest.raises(ValueError):
        PrecisionContext(4, 6, 8)
    with pytest.raises(ValueError):
        PrecisionContext(5, 0, 8)
    with pytest.raises(ValueError):
        PrecisionContext(5, 6, 1)


def test_inverse_pair(ctx5):
    one = PadicScalar.exact(ctx5, 1)
    p = PadicScalar.exact(ctx5, 5)
    assert ((one / p) * p).same_at_working_precision(1)


def test_geometric_series_oracle():
    # 1/(1-5) = 1 + 5 + ... + 5^5 (mod 5^6), checked by multiplying back
    ctx = PrecisionContext(5, 6, 8)
    g = PadicScalar.exact(ctx, 1) / PadicScalar.exact(ctx, 1 - 5)
    expected = sum(5 ** k for k in range(6))
    assert (expected * (1 - 5)) % 5 ** 6 == 1 % 5 ** 6
    assert g.residue(6) == expected


def test_division_by_zero(ctx5):
    with pytest.raises(DivisionByZero):
        PadicScalar.exact(ctx5, 1) / PadicScalar.zero(ctx5)
    near_zero = PadicScalar.exact(ctx5, 7) - PadicScalar.exact(ctx5, 7)
    with pytest.raises(DivisionByZero):
        PadicScalar.exact(ctx5, 1) / near_zero


def test_field_arith_dispatch(ctx5):
    a = PadicScalar.exact(ctx5, 6)
    b = PadicScalar.exact(ctx5, 2)
    assert field_arith(a, b, "add").same_at_working_precision(8)
    assert field_arith(a, b, "sub").same_at_working_precision(4)
    assert field_arith(a, b, "mul").same_at_working_precision(12)
    assert field_arith(a, b, "div").same_at_working_precision(3)
    with pytest.raises(ValueError):
        field_arith(a, b, "pow")


def test_mixed_context_rejected():
    a = PadicScalar.exact(PrecisionContext(5, 6, 8), 1)
    b = PadicScalar.exact(PrecisionContext(5, 7, 8), 1)
    with pytest.raises(MixedContext):
        a + b


def test_division_by_p_power_consumes_precision(ctx5):
    x = PadicScalar.exact(ctx5, 7)
    assert x.known_precision == ctx5.abs_precision
    y = x / PadicScalar.exact(ctx5, 5 ** 3)
    assert y.known_precision == ctx5.abs_precision - 3


def test_precision_exhausted_is_loud():
    ctx = PrecisionContext(5, 3, 8)
    x = PadicScalar.exact(ctx, 1)
    with pytest.raises(PrecisionExhausted):
        x / PadicScalar.exact(ctx, 5 ** 3)


def test_valuation_basics(ctx5):
    assert PadicScalar.exact(ctx5, 5).valuation() == 1
    assert PadicScalar.exact(ctx5, Fraction(1, 5)).valuation() == -1
    assert PadicScalar.zero(ctx5).valuation() is INFINITE


def test_imprecise_valuation(ctx5):
    a = PadicScalar.exact(ctx5, 7)
    diff = a - a
    assert diff.is_zero and not diff.is_exact_zero
    with pytest.raises(ImpreciseValuation):
        diff.valuation()


def test_point_tuple_valuation_min_rule(ctx5):
    base = ExtensionModulus.base(ctx5)
    pt = PointTuple([ExtScalar.from_poly(base, [25]),
                     ExtScalar.from_poly(base, [5])])
    assert pt.valuation() == 1


def test_teichmuller_examples():
    ctx = PrecisionContext(5, 6, 8)
    w = teichmuller(2, ctx)
    # independent oracle: iterate x -> x^5 mod 5^6 from 2
    x = 2
    for _ in range(10):
        x = pow(x, 5, 5 ** 6)
    assert w.residue(6) == x
    assert w.residue(2) == 7
    assert (w ** 4).same_at_working_precision(1)
    assert teichmuller(1, ctx).same_at_working_precision(1)
    assert teichmuller(0, ctx).is_exact_zero


@pytest.mark.parametrize("p", [3, 5, 7])
def test_teichmuller_properties(p):
    ctx = PrecisionContext(p, 8, 8)
    for r in range(1, p):
        w = teichmuller(r, ctx)
        assert (w ** (p - 1)).same_at_working_precision(1)
        assert w.residue(1) == r


def test_ext_construct_trivial_embedding(ctx5):
    x = ext_construct([-1, 1], [1], ctx5, "unramified")
    assert x.same_at_working_precision(1)


def test_ext_construct_cyclotomic(ctx5):
    # Phi_5(1+t) = t^4 + 5t^3 + 10t^2 + 10t + 5, Eisenstein at 5
    pi = ext_construct([5, 10, 10, 5, 1], [0, 1], ctx5, "eisenstein")
    assert pi.valuation() == Fraction(1, 4)


def test_ext_construct_bad_modulus(ctx5):
    with pytest.raises(BadModulus):
        ext_construct([-1, 1], [1], ctx5, "eisenstein")
    with pytest.raises(BadModulus):
        # t^2 - 1 = (t-1)(t+1) is reducible mod 5
        ext_construct([-1, 0, 1], [1], ctx5, "unramified")
    with pytest.raises(BadModulus):
        ext_construct([5, 2, 1], [1], ctx5, "bogus-tag")


def test_eisenstein_valuation_rule():
    # v(pi) = 1/(p-1) for the p-th cyclotomic uniformizer
    for p in (2, 3, 5):
        ctx = PrecisionContext(p, 10, 8)
        mod = cyclotomic_modulus(ctx, 1)
        pi = ExtScalar.uniformizer(mod)
        assert pi.valuation() == Fraction(1, p - 1)


def test_unramified_arithmetic():
    ctx = PrecisionContext(2, 10, 8)
    mod = ExtensionModulus(ctx, [1, 1, 1], "unramified")
    a = ExtScalar.from_poly(mod, [1, 1])
    b = ExtScalar.from_poly(mod, [2, 6])
    assert a.valuation() == 0
    assert b.valuation() == 1
    assert (a * a.inverse()).same_at_working_precision(1)
    assert (b * b.inverse()).same_at_working_precision(1)
    assert ((a + b) - b).same_at_working_precision(a)


def test_unramified_inverse_of_embedded_rational():
    # residue polynomial with trailing zeros (an embedded base scalar)
    ctx = PrecisionContext(2, 14, 8)
    mod = ExtensionModulus(ctx, [1, 1, 1], "unramified")
    x = ExtScalar.from_poly(mod, [6])
    inv = x.inverse()
    assert (x * inv).same_at_working_precision(1)
    assert inv.same_at_working_precision(
        ExtScalar.from_poly(mod, [Fraction(1, 6)]))


def test_unramified_quintic_teichmuller_order():
    # the (p^5 - 1)-th roots of unity live in the unramified quintic;
    # the modulus is accepted and its uniformizer is p itself
    ctx = PrecisionContext(2, 10, 8)
    mod = ExtensionModulus(ctx, [1, 0, 1, 0, 0, 1], "unramified")
    assert mod.res_degree == 5 and mod.ram_index == 1
    t = ExtScalar.from_poly(mod, [0, 1])
    # t is a unit (nonzero residue), and t^(2^5 - 1) = 1 in the residue field
    power = t ** 31
    assert (power - 1).valuation_lower_bound() >= 1


def test_eisenstein_inverse_round_trip(ctx5):
    mod = cyclotomic_modulus(ctx5, 1)
    pi = ExtScalar.uniformizer(mod)
    x = pi ** 3 + ExtScalar.from_poly(mod, [5])
    assert (x * x.inverse()).same_at_working_precision(1)
    assert (x / x).same_at_working_precision(1)


def test_ext_cap_precision(ctx5):
    mod = cyclotomic_modulus(ctx5, 1)
    pi = ExtScalar.uniformizer(mod)
    capped = pi.cap_precision(Fraction(3, 2))
    assert capped.same_at_working_precision(pi)
    assert capped.precision_floor() <= Fraction(3, 2) + 1


units = st.integers(min_value=1, max_value=5 ** 6 - 1).filter(
    lambda n: n % 5)
vals = st.integers(min_value=-2, max_value=3)


@st.composite
def scalars(draw):
    ctx = PrecisionContext(5, 8, 8)
    return PadicScalar.exact(
        ctx, Fraction(draw(units)) * Fraction(5) ** draw(vals))


@given(scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_valuation_multiplicative(a, b):
    assert (a * b).valuation() == a.valuation() + b.valuation()


@given(scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_ultrametric_inequality(a, b):
    s = a + b
    lower = min(a.valuation(), b.valuation())
    if s.is_zero:
        assert s.rel >= lower
    else:
        assert s.valuation() >= lower
        if a.valuation() != b.valuation():
            assert s.valuation() == lower


@given(scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_round_trips(a, b):
    assert ((a + b) - b).same_at_working_precision(a)
    assert ((a * b) / b).same_at_working_precision(a)


def test_digits_little_endian(ctx5):
    x = PadicScalar.exact(ctx5, 2 + 3 * 5 + 4 * 25)
    assert x.digits()[:3] == [2, 3, 4]
