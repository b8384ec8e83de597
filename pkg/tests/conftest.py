"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately naive (plain Fraction arithmetic on
exponent dictionaries) so they share no code with the library paths they
check.
"""

import math
from fractions import Fraction

import pytest

from fglab.padic import ExtensionModulus, PrecisionContext


def cyclotomic_modulus(ctx: PrecisionContext, k: int) -> ExtensionModulus:
    """Phi_(p^k)(1 + t): Eisenstein of degree p^(k-1) (p - 1)."""
    p = ctx.p
    pk1 = p ** (k - 1)
    coeffs = [0] * (pk1 * (p - 1) + 1)
    for i in range(p):
        e = i * pk1
        for j in range(e + 1):
            coeffs[j] += math.comb(e, j)
    return ExtensionModulus(ctx, coeffs, "eisenstein")


# ---------------------------------------------------------------------------
# Fraction-dict polynomial oracle (independent of the series layer)
# ---------------------------------------------------------------------------

def poly_mul(a: dict, b: dict, cap: int) -> dict:
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) > cap:
                continue
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + c
        if v:
            out[e] = v
        elif e in out:
            del out[e]
    return out


def poly_scale(a: dict, s) -> dict:
    return {e: c * s for e, c in a.items()} if s else {}


def poly_compose(outer: dict, inners: list, cap: int) -> dict:
    """Substitute inners[i] for variable i of outer, truncating at cap."""
    m = len(inners)
    target = len(next(iter(inners[0])))
    one = {(0,) * target: Fraction(1)}
    out = {}
    for exps, c in outer.items():
        term = dict(one)
        for i in range(m):
            for _ in range(exps[i]):
                term = poly_mul(term, inners[i], cap)
        out = poly_add(out, poly_scale(term, c))
    return out


def series_to_fractions(ms) -> dict:
    """Canonical rational representatives of a series' stored coefficients."""
    return {tuple(e): c.lift() for e, c in ms.terms()}


def assert_series_matches(ms, expected: dict):
    """Every stored and expected coefficient agrees at working precision."""
    seen = set()
    for exps, coeff in ms.terms():
        want = expected.get(tuple(exps), 0)
        assert coeff.same_at_working_precision(want), \
            f"coefficient at {tuple(exps)}: got {coeff!r}, want {want}"
        seen.add(tuple(exps))
    for exps, want in expected.items():
        if exps in seen:
            continue
        got = ms.coefficient(exps)
        assert got.same_at_working_precision(want), \
            f"coefficient at {exps}: absent, want {want}"


@pytest.fixture
def ctx5():
    return PrecisionContext(5, 12, 8)


@pytest.fixture
def ctx2():
    return PrecisionContext(2, 14, 8)


@pytest.fixture
def ctx3():
    return PrecisionContext(3, 14, 9)
