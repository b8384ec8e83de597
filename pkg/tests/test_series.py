"""Series ring operations, composition, Jacobians, inversion, evaluation."""

import random
from fractions import Fraction

import pytest

from fglab.errors import (
    DivergentPoint,
    MixedContext,
    NonzeroConstantTerm,
    NotInvertible,
)
from fglab.padic import ExtScalar, PadicScalar, PointTuple, PrecisionContext
from fglab.series import (
    MultiSeries,
    TupleSeries,
    coeff_extract,
    compositional_inverse,
    jacobian,
    linear_part_matrix,
    mat_det,
    ms_eval,
    tuple_compose,
)

from conftest import (
    assert_series_matches,
    cyclotomic_modulus,
    poly_compose,
    series_to_fractions,
)


def test_add_zero_is_identity(ctx5):
    f = MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (1, 1): 3})
    assert (f + MultiSeries.zero(ctx5, 2)).same_at_working_precision(f)


def test_difference_of_squares(ctx5):
    f = MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (0, 1): 1})
    g = MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (0, 1): -1})
    assert_series_matches(f * g, {(2, 0): 1, (0, 2): -1})


def test_truncation_drops_high_degree():
    ctx = PrecisionContext(5, 12, 2)
    a = MultiSeries.from_terms(ctx, 2, {(1, 0): 1, (0, 1): 1})
    b = MultiSeries.from_terms(ctx, 2, {(1, 1): 1})
    assert (a * b).is_zero


def test_compose_with_identity(ctx5):
    F = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (0, 1): 1}),
                     MultiSeries.from_terms(ctx5, 2, {(1, 1): 1})])
    assert tuple_compose(F, TupleSeries.identity(ctx5, 2)) \
        .same_at_working_precision(F)


def test_compose_variable_swap(ctx5):
    F = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (0, 1): 1}),
                     MultiSeries.from_terms(ctx5, 2, {(1, 1): 1})])
    G = TupleSeries([MultiSeries.variable(ctx5, 2, 1),
                     MultiSeries.variable(ctx5, 2, 0)])
    H = tuple_compose(F, G)
    assert_series_matches(H[0], {(1, 0): 1, (0, 1): 1})
    assert_series_matches(H[1], {(1, 1): 1})


def test_compose_truncates():
    ctx = PrecisionContext(5, 12, 3)
    f = MultiSeries.from_terms(ctx, 1, {(2,): 1})
    g = TupleSeries([MultiSeries.from_terms(ctx, 1, {(1,): 1, (2,): 1})])
    assert_series_matches(tuple_compose(f, g), {(2,): 1, (3,): 2})


def test_compose_rejects_constant_term(ctx5):
    f = MultiSeries.variable(ctx5, 1, 0)
    g = TupleSeries([MultiSeries.from_terms(ctx5, 1, {(0,): 1, (1,): 1})])
    with pytest.raises(NonzeroConstantTerm):
        tuple_compose(f, g)


def test_compose_arity_checked(ctx5):
    f = MultiSeries.variable(ctx5, 2, 0)
    g = TupleSeries([MultiSeries.variable(ctx5, 2, 0)])
    with pytest.raises(MixedContext):
        tuple_compose(f, g)


def _random_tuple(ctx, d, m, rng, density=0.5, zero_const=True):
    comps = []
    for _ in range(d):
        terms = {}
        for _ in range(int(density * 8) + 2):
            exps = tuple(rng.randint(0, 2) for _ in range(m))
            if sum(exps) > ctx.degree_cap or (zero_const and sum(exps) == 0):
                continue
            terms[exps] = rng.randint(-4, 4)
        comps.append(MultiSeries.from_terms(ctx, m, terms))
    return TupleSeries(comps)


def test_compose_matches_fraction_oracle(ctx5):
    rng = random.Random(7)
    for _ in range(10):
        f = _random_tuple(ctx5, 2, 2, rng)
        g = _random_tuple(ctx5, 2, 2, rng)
        got = tuple_compose(f, g)
        for t in range(2):
            oracle = poly_compose(
                series_to_fractions(f[t]),
                [series_to_fractions(g[0]), series_to_fractions(g[1])],
                ctx5.degree_cap)
            assert_series_matches(got[t], oracle)


def test_compose_associative_up_to_truncation(ctx5):
    rng = random.Random(11)
    for _ in range(6):
        f = _random_tuple(ctx5, 2, 2, rng)
        g = _random_tuple(ctx5, 2, 2, rng)
        h = _random_tuple(ctx5, 2, 2, rng)
        left = tuple_compose(tuple_compose(f, g), h)
        right = tuple_compose(f, tuple_compose(g, h))
        assert left.same_at_working_precision(right)


def test_chain_rule_at_zero(ctx5):
    rng = random.Random(13)
    for _ in range(6):
        f = _random_tuple(ctx5, 2, 2, rng)
        g = _random_tuple(ctx5, 2, 2, rng)
        j_fg = linear_part_matrix(tuple_compose(f, g))
        jf = linear_part_matrix(f)
        jg = linear_part_matrix(g)
        prod = [[jf[i][0] * jg[0][j] + jf[i][1] * jg[1][j]
                 for j in range(2)] for i in range(2)]
        for i in range(2):
            for j in range(2):
                assert j_fg[i][j].same_at_working_precision(prod[i][j])


def test_jacobian_examples(ctx5):
    ident = TupleSeries.identity(ctx5, 2)
    J = jacobian(ident)
    assert J[0, 0].same_at_working_precision(1)
    assert J[0, 1].is_zero
    # linear part (p x1, p x2) has Jacobian diag(p, p)
    u = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 0): 5}),
                     MultiSeries.from_terms(ctx5, 2, {(0, 1): 5})])
    Ju = jacobian(u)
    assert Ju[0, 0].same_at_working_precision(5)
    assert Ju[1, 1].same_at_working_precision(5)
    assert Ju[0, 1].is_zero and Ju[1, 0].is_zero
    # h = (x1 + x2^2, x2 + x1 x2) -> identity at 0
    h = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (0, 2): 1}),
                     MultiSeries.from_terms(ctx5, 2, {(0, 1): 1, (1, 1): 1})])
    Jh = jacobian(h)
    for i in range(2):
        for j in range(2):
            if i == j:
                assert Jh[i, j].same_at_working_precision(1)
            else:
                assert Jh[i, j].is_zero


def test_jacobian_symbolic_blocks(ctx5):
    # two-block partial Jacobians are extractable from the symbolic matrix
    F = TupleSeries([
        MultiSeries.from_terms(ctx5, 4, {(1, 0, 0, 0): 1, (0, 0, 1, 0): 1,
                                         (0, 1, 0, 1): 1}),
        MultiSeries.from_terms(ctx5, 4, {(0, 1, 0, 0): 1, (0, 0, 0, 1): 1})])
    J = jacobian(F, at_zero=False)
    assert J.shape == (2, 4)
    bx = jacobian(F).block(0, 2)
    by = jacobian(F).block(2, 4)
    for i in range(2):
        for j in range(2):
            want = 1 if i == j else 0
            assert bx[i, j].same_at_working_precision(want)
            assert by[i, j].same_at_working_precision(want)


def test_compositional_inverse_identity(ctx5):
    ident = TupleSeries.identity(ctx5, 2)
    assert compositional_inverse(ident).same_at_working_precision(ident)


def test_compositional_inverse_signed_catalan():
    ctx = PrecisionContext(5, 16, 8)
    h = TupleSeries([MultiSeries.from_terms(ctx, 1, {(1,): 1, (2,): 1})])
    hinv = compositional_inverse(h)
    catalan = [1, 1, 2, 5, 14, 42, 132, 429]
    expected = {(k + 1,): Fraction((-1) ** k * catalan[k])
                for k in range(8)}
    assert_series_matches(hinv[0], expected)
    # independent verification: h(hinv) = x by the Fraction oracle
    oracle = poly_compose({(1,): Fraction(1), (2,): Fraction(1)},
                          [expected], 8)
    assert oracle == {(1,): Fraction(1)}


def test_compositional_inverse_round_trip_random(ctx5):
    rng = random.Random(17)
    ident = TupleSeries.identity(ctx5, 2)
    for _ in range(5):
        h = _random_tuple(ctx5, 2, 2, rng)
        # force an invertible linear part
        h = h + ident - TupleSeries(
            [c.truncate(1) for c in h.components])
        hinv = compositional_inverse(h)
        assert tuple_compose(h, hinv).same_at_working_precision(ident)
        assert tuple_compose(hinv, h).same_at_working_precision(ident)


def test_not_invertible_on_p_valuation_determinant(ctx5):
    h = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 0): 5}),
                     MultiSeries.from_terms(ctx5, 2, {(0, 1): 1})])
    with pytest.raises(NotInvertible):
        compositional_inverse(h)


def test_coeff_extract_basics(ctx5):
    f = TupleSeries([MultiSeries.from_terms(ctx5, 2, {(1, 1): 1})])
    assert coeff_extract(f, (1, 1)).same_at_working_precision(1)
    assert coeff_extract(f, (2, 0)).is_zero


def test_coeff_extract_path_independence():
    # (x + x^2) o (x + x^2) built by composition vs direct expansion
    ctx = PrecisionContext(5, 14, 6)
    h = TupleSeries([MultiSeries.from_terms(ctx, 1, {(1,): 1, (2,): 1})])
    composed = tuple_compose(h, h)
    direct = poly_compose({(1,): Fraction(1), (2,): Fraction(1)},
                          [{(1,): Fraction(1), (2,): Fraction(1)}], 6)
    assert_series_matches(composed[0], direct)
    again = tuple_compose(h, h)
    assert composed.identical(again)


def test_eval_at_zero(ctx5):
    f = MultiSeries.from_terms(ctx5, 2, {(1, 0): 1, (1, 1): 2})
    mod = cyclotomic_modulus(ctx5, 1)
    zero = PointTuple([ExtScalar.zero(mod), ExtScalar.zero(mod)])
    assert ms_eval(f, zero).value.is_zero


def test_eval_cyclotomic_identity():
    # (1+x)^p - 1 vanishes at pi = zeta_p - 1
    import math as _math
    for p in (3, 5):
        ctx = PrecisionContext(p, 12, 8)
        terms = {(k,): _math.comb(p, k) for k in range(1, p + 1)}
        f = MultiSeries.from_terms(ctx, 1, terms)
        mod = cyclotomic_modulus(ctx, 1)
        pi = ExtScalar.uniformizer(mod)
        out = ms_eval(f, PointTuple([pi]), polynomial=True)
        assert out.value.is_zero


def test_eval_divergent_point(ctx5):
    f = MultiSeries.variable(ctx5, 1, 0)
    base = cyclotomic_modulus(ctx5, 1)
    unit_pt = PointTuple([ExtScalar.one(base)])
    with pytest.raises(DivergentPoint):
        ms_eval(f, unit_pt)


def test_eval_is_multiplicative(ctx5):
    rng = random.Random(23)
    mod = cyclotomic_modulus(ctx5, 1)
    pi = ExtScalar.uniformizer(mod)
    theta = PointTuple([pi, pi ** 2])
    for _ in range(4):
        f = _random_tuple(ctx5, 1, 2, rng, zero_const=False)[0]
        g = _random_tuple(ctx5, 1, 2, rng, zero_const=False)[0]
        lhs = ms_eval(f * g, theta).value
        rhs = ms_eval(f, theta).value * ms_eval(g, theta).value
        assert (lhs - rhs).is_zero or \
            (lhs - rhs).valuation() >= ms_eval(f * g, theta).tail_valuation


def test_eval_compose_compatibility(ctx5):
    rng = random.Random(29)
    mod = cyclotomic_modulus(ctx5, 1)
    pi = ExtScalar.uniformizer(mod)
    theta = PointTuple([pi, pi ** 3])
    for _ in range(4):
        f = _random_tuple(ctx5, 2, 2, rng)
        g = _random_tuple(ctx5, 2, 2, rng)
        comp_val = ms_eval(tuple_compose(f, g), theta)
        inner = ms_eval(g, theta).point()
        direct = ms_eval(f, inner)
        for a, b in zip(comp_val.values, direct.values):
            diff = a - b
            assert diff.is_zero or \
                diff.valuation() >= min(comp_val.tail_valuation,
                                        direct.tail_valuation)


def test_mat_det_pivoting(ctx5):
    one = PadicScalar.exact(ctx5, 1)
    p = PadicScalar.exact(ctx5, 5)
    zero = PadicScalar.zero(ctx5)
    det = mat_det([[p, one], [one, zero]])
    assert det.same_at_working_precision(-1)


def test_positive_valuation_fraction_coefficient_digits():
    # coefficients with v > 0 claim precision beyond N; every claimed digit
    # must match the independent modular residue
    ctx = PrecisionContext(5, 8, 6)
    f = MultiSeries.from_terms(ctx, 1, {(1,): Fraction(5, 3)})
    c = f.coefficient((1,))
    assert c.known_precision == 9
    want = 5 * pow(3, -1, 5 ** 9) % 5 ** 9
    assert c.unit * 5 % 5 ** 9 == want
    g = MultiSeries.from_terms(ctx, 1, {(1,): Fraction(1, 3)}).scale(5)
    c2 = g.coefficient((1,))
    assert c2.unit * 5 % 5 ** c2.known_precision == \
        want % 5 ** c2.known_precision
