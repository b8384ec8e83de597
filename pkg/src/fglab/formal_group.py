"""Formal group laws: validation, negation, multiplication maps, and the
two-dimensional Lubin-Tate construction.

The Lubin-Tate logarithm and everything derived from it purely in two
variables ([p]_F in particular) are computed in exact rational arithmetic:
the logarithm's coefficients are rationals with pure p-power denominators,
and keeping that stage exact avoids spending p-adic precision on the
degree-by-degree inversion.  The expensive 2d- and 3d-variable compositions
(the group law itself, axiom checks) run on the p-adic series layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    AxiomViolation,
    MixedContext,
    NotEndomorphism,
    PrecisionExhausted,
    StabilizationFailure,
    UnsupportedShape,
)
from .padic import INFINITE, PadicScalar, PrecisionContext, _vp
from .series import (
    MultiSeries,
    Profile,
    TupleSeries,
    tuple_compose,
)


@dataclass(frozen=True)
class AxiomCertificate:
    """Record of which axioms were verified, and to which degree."""

    degree: int
    axioms: tuple
    commutative: bool | None = None


class FormalGroupLaw:
    """A certified d-dimensional group law F(X, Y) in 2d variables."""

    __slots__ = ("dimension", "law", "certificate", "_negation")

    def __init__(self, dimension, law, certificate):
        self.dimension = dimension
        self.law = law
        self.certificate = certificate
        self._negation = None

    @property
    def ctx(self):
        return self.law.ctx

    def __repr__(self):
        return (f"FormalGroupLaw(dim={self.dimension}, "
                f"certified to degree {self.certificate.degree})")


class EndoSeries:
    """A d-in-d series attached to a group law, optionally certified."""

    __slots__ = ("series", "group", "certified")

    def __init__(self, series, group, certified=False):
        self.series = series
        self.group = group
        self.certified = certified


def block_embed(t: TupleSeries, total_vars: int, offset: int) -> TupleSeries:
    """Re-embed a d-in-d tuple into a wider variable set at ``offset``."""
    d = t.num_vars
    return t.map_variables(total_vars, [offset + i for i in range(d)])


def group_add(F: TupleSeries, s: TupleSeries, t: TupleSeries) -> TupleSeries:
    """F(s, t) for tuples s, t over a common variable set."""
    return tuple_compose(F, TupleSeries(list(s.components) + list(t.components)))


def _first_difference(a: TupleSeries, b: TupleSeries):
    """(component, exponent tuple) of the lowest-degree disagreement."""
    for i, (ca, cb) in enumerate(zip(a.components, b.components)):
        diff = ca - cb
        if not diff.is_zero:
            key = min(diff.coeffs)
            return i, diff.unpack(key)
    return None


def fg_validate(candidate: TupleSeries, check_commutative: bool = True) -> FormalGroupLaw:
    """Check the group-law axioms and return a certified law.

    Verifies, modulo degree D+1: the linear part X + Y, the unit laws
    F(X,0) = F(0,X) = X, associativity, and existence of the negation
    series; raises AxiomViolation naming the first failure.
    """
    d = candidate.dim
    if candidate.num_vars != 2 * d:
        raise MixedContext(
            f"law must have {d} components in {2 * d} variables")
    ctx = candidate.ctx
    D = ctx.degree_cap

    # (i) F = X + Y mod deg 2
    for i, comp in enumerate(candidate.components):
        low = comp.truncate(1)
        want = MultiSeries.variable(ctx, 2 * d, i) + \
            MultiSeries.variable(ctx, 2 * d, d + i)
        diff = low - want
        if not diff.is_zero:
            key = min(diff.coeffs)
            deg = sum(diff.unpack(key))
            raise AxiomViolation("linear-part", deg, (i, diff.unpack(key)))

    # (iii) unit laws by substituting zero blocks
    ident_x = TupleSeries.identity(ctx, d, num_vars=2 * d, offset=0)
    ident_y = TupleSeries.identity(ctx, d, num_vars=2 * d, offset=d)
    FX0 = TupleSeries([c.substitute_zero(range(d, 2 * d))
                       for c in candidate.components])
    F0Y = TupleSeries([c.substitute_zero(range(d))
                       for c in candidate.components])
    w = _first_difference(FX0, ident_x)
    if w is not None:
        raise AxiomViolation("unit", sum(w[1]), w)
    w = _first_difference(F0Y, ident_y)
    if w is not None:
        raise AxiomViolation("unit", sum(w[1]), w)

    # (ii) associativity in 3d variables
    m3 = 3 * d
    FXY = candidate.map_variables(m3, list(range(2 * d)))
    FYZ = candidate.map_variables(m3, list(range(d, 3 * d)))
    X3 = TupleSeries.identity(ctx, d, num_vars=m3, offset=0)
    Z3 = TupleSeries.identity(ctx, d, num_vars=m3, offset=2 * d)
    left = group_add(candidate, FXY, Z3)
    right = group_add(candidate, X3, FYZ)
    w = _first_difference(left, right)
    if w is not None:
        raise AxiomViolation("associativity", sum(w[1]), w)

    # (iv) negation exists: solve and verify
    iota = _solve_negation(candidate)
    zero_d = TupleSeries.zero(ctx, d, d)
    probe = group_add(candidate, TupleSeries.identity(ctx, d), iota)
    w = _first_difference(probe, zero_d)
    if w is not None:
        raise AxiomViolation("inverse", sum(w[1]), w)

    commutative = None
    if check_commutative:
        perm = list(range(d, 2 * d)) + list(range(d))
        swapped = candidate.map_variables(2 * d, perm)
        commutative = _first_difference(candidate, swapped) is None

    cert = AxiomCertificate(
        degree=D,
        axioms=("linear-part", "unit", "associativity", "inverse"),
        commutative=commutative)
    law = FormalGroupLaw(d, candidate, cert)
    law._negation = iota
    return law


def _solve_negation(F: TupleSeries) -> TupleSeries:
    """The unique iota with F(X, iota(X)) = 0, solved degree by degree."""
    ctx = F.ctx
    d = F.dim
    D = ctx.degree_cap
    iota = -TupleSeries.identity(ctx, d)
    for m in range(1, D):
        resid = group_add_capped(F, TupleSeries.identity(ctx, d), iota, m + 1)
        r = TupleSeries([c.homogeneous_part(m + 1) for c in resid.components])
        if r.is_zero:
            continue
        iota = iota - r
    return iota


def group_add_capped(F, s, t, cap) -> TupleSeries:
    return tuple_compose(
        F, TupleSeries(list(s.components) + list(t.components)), cap=cap)


def fg_negation(F: FormalGroupLaw) -> TupleSeries:
    """iota(X) with F(X, iota(X)) = 0 mod deg D+1 (cached by fg_validate)."""
    if F._negation is None:
        F._negation = _solve_negation(F.law)
    return F._negation


# ---------------------------------------------------------------------------
# multiplication maps
# ---------------------------------------------------------------------------

def fg_multiplication_map(F: FormalGroupLaw, a) -> EndoSeries:
    """[a]_F for an integer or a p-adic integer multiplier.

    Integers go through binary add/compose chains.  A p-adic multiplier a
    is handled by digit truncation [a mod p^M]_F with an explicit
    stabilization check on successive approximants.
    """
    if isinstance(a, int):
        return EndoSeries(_int_multiple(F, a), F)
    if isinstance(a, Fraction):
        av = _vp(a.denominator, F.ctx.p)
        if av:
            raise ValueError("multiplier must lie in Z_p")
        a = PadicScalar.exact(F.ctx, a)
    if not isinstance(a, PadicScalar):
        raise TypeError("multiplier must be int, Fraction, or PadicScalar")
    F.ctx.require_same(a.ctx)
    if a.is_zero:
        return EndoSeries(TupleSeries.zero(F.ctx, F.dimension, F.dimension), F)
    if a.valuation() < 0:
        raise ValueError("multiplier must lie in Z_p")
    p = F.ctx.p
    D = F.ctx.degree_cap
    known = int(min(a.known_precision, a.ctx.abs_precision))
    # unknown digits of a perturb coefficient k of [a]_F by p^(known - v_p(k!));
    # the result is honest only to this floor, and approximants are compared at it
    target = known - _vp_factorial(D, p)
    if target < 1:
        raise PrecisionExhausted(
            f"multiplier precision p^{known} cannot certify one digit of "
            f"[a]_F at degree cap {D}")
    prev = None
    agreements = 0
    for digits in range(1, known + 3):
        cur = _int_multiple(F, a.residue(min(digits, known)))
        cur = TupleSeries([c._with_profile(Profile.const(target))
                           for c in cur.components])
        if prev is not None and cur.same_at_working_precision(prev):
            agreements += 1
            if agreements >= 2:
                return EndoSeries(cur, F)
        else:
            agreements = 0
        prev = cur
    raise StabilizationFailure(
        "digit approximants of the multiplier never stabilized within the "
        "precision budget; raise abs_precision or lower degree_cap")


def _vp_factorial(n: int, p: int) -> int:
    total = 0
    q = p
    while q <= n:
        total += n // q
        q *= p
    return total


def _int_multiple(F: FormalGroupLaw, n: int) -> TupleSeries:
    ctx = F.ctx
    d = F.dimension
    ident = TupleSeries.identity(ctx, d)
    if n == 0:
        return TupleSeries.zero(ctx, d, d)
    if n < 0:
        base = fg_negation(F)
        n = -n
    else:
        base = ident
    # binary: [2k+b] = F([2][k], [b]); composition realizes products
    result = None
    doubled = base
    while n:
        if n & 1:
            result = doubled if result is None else \
                group_add(F.law, result, doubled)
        n >>= 1
        if n:
            doubled = group_add(F.law, doubled, doubled)
    return result


# ---------------------------------------------------------------------------
# endomorphism verification
# ---------------------------------------------------------------------------

def endo_verify(F: FormalGroupLaw, f: TupleSeries) -> EndoSeries:
    """Certify f(F(X,Y)) = F(f(X), f(Y)) mod deg D+1 or raise a witness."""
    d = F.dimension
    if f.dim != d or f.num_vars != d:
        raise MixedContext("endomorphism candidate must be d-in-d")
    if not f.constant_is_zero():
        raise NotEndomorphism("nonzero constant term")
    lhs = tuple_compose(f, F.law)
    fX = block_embed(f, 2 * d, 0)
    fY = block_embed(f, 2 * d, d)
    rhs = group_add(F.law, fX, fY)
    w = _first_difference(lhs, rhs)
    if w is not None:
        raise NotEndomorphism(w)
    return EndoSeries(f, F, certified=True)


# ---------------------------------------------------------------------------
# exact rational kernel for the 2-variable Lubin-Tate stage
# ---------------------------------------------------------------------------

def _rmul(a: dict, b: dict, D: int) -> dict:
    out = {}
    for (i1, j1), ca in a.items():
        for (i2, j2), cb in b.items():
            if i1 + i2 + j1 + j2 > D:
                continue
            k = (i1 + i2, j1 + j2)
            v = out.get(k)
            out[k] = ca * cb if v is None else v + ca * cb
    return {k: c for k, c in out.items() if c}


def _radd(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, c in b.items():
        v = out.get(k, 0) + c
        if v:
            out[k] = v
        elif k in out:
            del out[k]
    return out


def _rscale(a: dict, s: Fraction) -> dict:
    return {} if s == 0 else {k: c * s for k, c in a.items()}


def _rcompose(outer: dict, g1: dict, g2: dict, D: int) -> dict:
    """outer(g1, g2) for rational sparse 2-variable polys, degree-capped."""
    pow1, pow2 = {0: {(0, 0): Fraction(1)}}, {0: {(0, 0): Fraction(1)}}

    def power(cache, base, e):
        while e not in cache:
            top = max(cache)
            cache[top + 1] = _rmul(cache[top], base, D)
        return cache[e]

    acc = {}
    for (i, j), c in sorted(outer.items()):
        term = _rscale(_rmul(power(pow1, g1, i), power(pow2, g2, j), D), c)
        acc = _radd(acc, term)
    return acc


def _rinverse(L1: dict, L2: dict, D: int) -> tuple:
    """Compositional inverse of (L1, L2) with identity linear part."""
    f1, f2 = {(1, 0): Fraction(1)}, {(0, 1): Fraction(1)}
    for n in range(1, D):
        c1 = _rcompose(L1, f1, f2, min(n + 1, D))
        c2 = _rcompose(L2, f1, f2, min(n + 1, D))
        r1 = {k: -c for k, c in c1.items() if sum(k) == n + 1}
        r2 = {k: -c for k, c in c2.items() if sum(k) == n + 1}
        f1 = _radd(f1, r1)
        f2 = _radd(f2, r2)
    return f1, f2


# ---------------------------------------------------------------------------
# the 2-dimensional Lubin-Tate construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LubinTate2Params:
    """Frobenius exponents (h1, h2) with gcd 1, plus the ambient context."""

    h1: int
    h2: int
    ctx: PrecisionContext

    def __post_init__(self):
        if self.h1 < 1 or self.h2 < 1:
            raise ValueError("h1, h2 must be positive")
        if math.gcd(self.h1, self.h2) != 1:
            raise ValueError("gcd(h1, h2) must be 1")
        if self.ctx.degree_cap < self.ctx.p ** min(self.h1, self.h2):
            raise ValueError(
                "degree cap too small to expose the first logarithm term "
                f"(need >= p^min(h1,h2) = {self.ctx.p ** min(self.h1, self.h2)})")


@dataclass
class Lt2Result:
    """Logarithm, certified group law, [p]_F, and the checked congruences."""

    log: TupleSeries
    group: FormalGroupLaw
    mul_p: EndoSeries
    congruences: dict


def lt2_logarithm_terms(params: LubinTate2Params):
    """Unroll the mutual logarithm recursion until terms exceed the cap.

    L1 = x1 + (1/p) L2(x1^q1, x2^q1) with q1 = p^h1, and symmetrically for
    L2; iterating the pair to its fixed point below the degree cap yields
    one monomial per unrolling step.
    """
    p = params.ctx.p
    D = params.ctx.degree_cap
    q1 = p ** params.h1
    q2 = p ** params.h2
    t1 = {(1, 0): Fraction(1)}
    t2 = {(0, 1): Fraction(1)}
    changed = True
    while changed:
        n1 = _radd({(1, 0): Fraction(1)},
                   _rscale(_rfrobenius(t2, q1, D), Fraction(1, p)))
        n2 = _radd({(0, 1): Fraction(1)},
                   _rscale(_rfrobenius(t1, q2, D), Fraction(1, p)))
        changed = (n1 != t1) or (n2 != t2)
        t1, t2 = n1, n2
    return t1, t2


def _rfrobenius(poly: dict, q: int, D: int) -> dict:
    """Substitute x_i -> x_i^q, dropping terms past the degree cap."""
    out = {}
    for (i, j), c in poly.items():
        if (i + j) * q <= D:
            out[(i * q, j * q)] = c
    return out


def lt2_build(params: LubinTate2Params) -> Lt2Result:
    """Logarithm, group law F = L^{-1}(L(X) + L(Y)), and [p]_F.

    The 2-variable stage (logarithm, its inverse, [p]_F) is exact rational;
    F is composed in p-adic arithmetic and certified by fg_validate, and
    both multiplication-by-p congruences are checked.
    """
    ctx = params.ctx
    p, D = ctx.p, ctx.degree_cap
    t1, t2 = lt2_logarithm_terms(params)
    inv1, inv2 = _rinverse(t1, t2, D)

    _check_lt2_budget(ctx, (t1, t2), (inv1, inv2))

    L = TupleSeries([MultiSeries.from_terms(ctx, 2, t1),
                     MultiSeries.from_terms(ctx, 2, t2)])
    Linv = TupleSeries([MultiSeries.from_terms(ctx, 2, inv1),
                        MultiSeries.from_terms(ctx, 2, inv2)])

    # [p]_F = L^{-1}(p L), exact in the rational kernel
    pt1, pt2 = _rscale(t1, Fraction(p)), _rscale(t2, Fraction(p))
    mp1 = _rcompose(inv1, pt1, pt2, D)
    mp2 = _rcompose(inv2, pt1, pt2, D)
    for poly in (mp1, mp2):
        for k, c in poly.items():
            if _vp(c.denominator, p) != 0:
                raise PrecisionExhausted(
                    f"[p]_F coefficient at {k} is not p-integral: {c}")
    mulp = TupleSeries([MultiSeries.from_terms(ctx, 2, mp1),
                        MultiSeries.from_terms(ctx, 2, mp2)])

    gx = L.map_variables(4, [0, 1])
    gy = L.map_variables(4, [2, 3])
    F_raw = tuple_compose(Linv, gx + gy)
    group = fg_validate(F_raw)

    congruences = _check_lt2_congruences(mulp, params, (mp1, mp2))
    return Lt2Result(log=L, group=group,
                     mul_p=EndoSeries(mulp, group), congruences=congruences)


def _lt2_budget(p, D, log_pair, inv_pair) -> int:
    """Smallest abs_precision that survives the denominator exposure."""
    worst_v = 0
    worst_rho = Fraction(0)
    for poly in (*log_pair, *inv_pair):
        for (i, j), c in poly.items():
            v = -_vp(c.denominator, p)
            worst_v = min(worst_v, v)
            if i + j:
                worst_rho = min(worst_rho, Fraction(v, i + j))
    return 2 - worst_v + 2 * math.ceil(-worst_rho * D)


def lt2_min_precision(h1: int, h2: int, p: int, D: int) -> int:
    """Precision budget for lt2_build(h1, h2) at prime p and degree cap D."""
    probe = LubinTate2Params(h1, h2, PrecisionContext(p, 1, D))
    t1, t2 = lt2_logarithm_terms(probe)
    inv1, inv2 = _rinverse(t1, t2, D)
    return _lt2_budget(p, D, (t1, t2), (inv1, inv2))


def _check_lt2_budget(ctx, log_pair, inv_pair):
    """Fail fast when abs_precision cannot absorb the denominator exposure."""
    need = _lt2_budget(ctx.p, ctx.degree_cap, log_pair, inv_pair)
    if ctx.abs_precision < need:
        raise PrecisionExhausted(
            f"abs_precision {ctx.abs_precision} too small for the 1/p budget "
            f"of this configuration; need at least {need}")


def _check_lt2_congruences(mulp: TupleSeries, params, raw_pair) -> dict:
    """Eq-style congruence report: deg-2 linear shape and the mod-p shape."""
    ctx = params.ctx
    p = ctx.p
    lin_ok = True
    for i, comp in enumerate(mulp.components):
        low = comp.truncate(1)
        want = MultiSeries.variable(ctx, 2, i).scale(p)
        if not (low - want).is_zero:
            lin_ok = False
    wanted = [(0, p ** params.h1), (p ** params.h2, 0)]
    modp_ok = True
    for raw, want_exp in zip(raw_pair, wanted):
        seen = {}
        for exps, c in raw.items():
            r = (c.numerator * pow(c.denominator, -1, p)) % p
            if r:
                seen[exps] = r
        if seen != {want_exp: 1}:
            modp_ok = False
    return {
        "linear_part_is_p_times_identity": lin_ok,
        "frobenius_shape_mod_p": modp_ok,
        "frobenius_exponents": (p ** params.h1, p ** params.h2),
    }


# ---------------------------------------------------------------------------
# heights and kernel counting at desk scale
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightReport:
    height: object          # int or INFINITE
    level: int
    kernel_order: object    # p^(h n), or INFINITE

    @property
    def is_finite(self):
        return self.height is not INFINITE


def height_and_kernel_count(F: FormalGroupLaw, level: int = 1,
                            mul_p: TupleSeries | None = None) -> HeightReport:
    """Height via [p]_F mod p, and the kernel order p^(h * level).

    Dimension 1 uses the Weierstrass degree (index of the first unit
    coefficient); dimension 2 requires the monomial shape (u1 x_a^e1,
    u2 x_b^e2) mod p and counts the monomial basis of the residue ring over
    the image subring.  Anything else is UnsupportedShape.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    d = F.dimension
    p = F.ctx.p
    series = mul_p if mul_p is not None else \
        fg_multiplication_map(F, p).series
    residues = []
    for comp in series.components:
        entries = {}
        for exps, c in comp.terms():
            try:
                r = c.residue(1)
            except ValueError:
                raise UnsupportedShape(
                    "[p]_F has a non-integral coefficient") from None
            if r:
                entries[tuple(exps)] = r
        residues.append(entries)
    if d == 1:
        entries = residues[0]
        if not entries:
            return HeightReport(INFINITE, level, INFINITE)
        wdeg = min(e[0] for e in entries)
        h = _exact_p_log(wdeg, p)
        if h is None:
            raise UnsupportedShape(
                f"Weierstrass degree {wdeg} is not a p-power")
        return HeightReport(h, level, p ** (h * level))
    if d == 2:
        if not residues[0] or not residues[1]:
            return HeightReport(INFINITE, level, INFINITE)
        if any(len(r) != 1 for r in residues):
            raise UnsupportedShape(
                "[p]_F mod p is not a monomial tuple")
        (e1,), (e2,) = (list(r) for r in residues)
        mat = [list(e1), list(e2)]
        det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
        if det == 0:
            raise UnsupportedShape("mod-p exponent matrix is singular")
        if not ((mat[0][1] == 0 and mat[1][0] == 0)
                or (mat[0][0] == 0 and mat[1][1] == 0)):
            raise UnsupportedShape(
                "only axis-aligned monomial shapes are counted")
        if mat[0][0]:
            a_bound, b_bound = mat[0][0], mat[1][1]
        else:
            a_bound, b_bound = mat[1][0], mat[0][1]
        # literal monomial-basis count of F_p[[x1,x2]] over the image
        count = sum(1 for i in range(a_bound) for j in range(b_bound))
        if count != abs(det):
            raise UnsupportedShape("basis count disagrees with the lattice index")
        h = _exact_p_log(count, p)
        if h is None:
            raise UnsupportedShape(f"rank {count} is not a p-power")
        return HeightReport(h, level, p ** (h * level))
    raise UnsupportedShape("height computation supports dimensions 1 and 2")


def _exact_p_log(n: int, p: int):
    h = 0
    while n > 1:
        if n % p:
            return None
        n //= p
        h += 1
    return h


# ---------------------------------------------------------------------------
# stock laws used across tests and the CLI
# ---------------------------------------------------------------------------

def multiplicative_law(ctx: PrecisionContext) -> FormalGroupLaw:
    """M(X, Y) = X + Y + XY."""
    m = MultiSeries.from_terms(ctx, 2, {(1, 0): 1, (0, 1): 1, (1, 1): 1})
    return fg_validate(TupleSeries([m]))


def additive_law(ctx: PrecisionContext, d: int = 1) -> FormalGroupLaw:
    comps = []
    for i in range(d):
        comps.append(MultiSeries.variable(ctx, 2 * d, i)
                     + MultiSeries.variable(ctx, 2 * d, d + i))
    return fg_validate(TupleSeries(comps))
