"""Truncated multivariate power series over p-adic scalars.

A series is a sparse map from exponent vectors to coefficients, truncated
beyond a global total degree cap D.  Internally the exponent vector and its
total degree are packed into a single integer key (degree in the top bits,
so ascending key order is the canonical degree-then-lex order), and the
coefficient is held as a p-shifted integer:

    stored value c  represents  c * p^(-shift).

Certified precision is tracked per series as a degree-weighted profile

    prof(d) = max(flat, p0 + floor(slope * d)),   slope <= 0:

the coefficient of any total-degree-d monomial is certified to absolute
precision prof(d).  The sloped line absorbs denominators that ride on
high-degree terms (a Lubin-Tate logarithm has 1/p^k only at degree p^k),
while the flat floor keeps follow-up compositions from compounding the
slope.  Every profile update below is conservative: a bound is never
reported higher than what the contributing scalars justify.  Scalar-level
arithmetic keeps sharper per-element tracking; this layer trades that for
a multiplication loop on plain machine integers.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction

from .errors import (
    DivergentPoint,
    MixedContext,
    NonzeroConstantTerm,
    NotInvertible,
    PrecisionExhausted,
)
from .padic import (
    INFINITE,
    ExtScalar,
    PadicScalar,
    PointTuple,
    _vp,
)

_ZERO = Fraction(0)


class Exponent(tuple):
    """A multi-index; total_degree is the sum of the entries."""

    @property
    def total_degree(self) -> int:
        return sum(self)


class Profile:
    """Concave two-line certified-precision profile over total degree."""

    __slots__ = ("p0", "slope", "flat")

    def __init__(self, p0: int, slope: Fraction, flat: int):
        self.p0 = p0
        self.slope = slope
        self.flat = flat

    @classmethod
    def line(cls, p0: int, slope, horizon: int) -> "Profile":
        slope = Fraction(slope)
        return cls(p0, slope, p0 + math.floor(slope * horizon))

    @classmethod
    def const(cls, value: int) -> "Profile":
        return cls(value, _ZERO, value)

    def at(self, d: int) -> int:
        if self.slope == 0:
            return max(self.flat, self.p0)
        return max(self.flat, self.p0 + math.floor(self.slope * d))

    def shifted(self, k: int) -> "Profile":
        return Profile(self.p0 + k, self.slope, self.flat + k)

    def min_with(self, other: "Profile") -> "Profile":
        return Profile(min(self.p0, other.p0),
                       min(self.slope, other.slope),
                       min(self.flat, other.flat))

    def __repr__(self):
        return f"Profile(p0={self.p0}, slope={self.slope}, flat={self.flat})"


def _combine_channels(channels, horizon: int) -> Profile:
    """Combine channels, each a list of lower-bound lines (p0, slope).

    Within a channel every variant line is a valid lower bound, so their
    pointwise max is; across channels (independent error sources) the min
    applies.  The summary keeps the exact combined values at degree 0 and
    at the horizon, plus the globally safe slope.
    """
    p0 = min(max(v0 for v0, _ in ch) for ch in channels)
    flat = min(max(v0 + math.floor(s * horizon) for v0, s in ch)
               for ch in channels)
    slope = min(s for ch in channels for _, s in ch)
    return Profile(p0, slope, flat)


def _scaled_from_fraction(q: Fraction, shift: int, modexp: int, p: int) -> int:
    """Integer congruent to q * p^shift modulo p^modexp (p-integral after shift)."""
    q2 = q * Fraction(p) ** shift
    mod = p ** modexp
    return q2.numerator * pow(q2.denominator, -1, mod) % mod


class MultiSeries:
    """Sparse truncated power series in ``num_vars`` variables."""

    __slots__ = ("ctx", "num_vars", "shift", "profile", "coeffs",
                 "_vmin_cache", "_rho_cache")

    def __init__(self, ctx, num_vars, shift, profile, coeffs):
        self.ctx = ctx
        self.num_vars = num_vars
        self.shift = shift
        self.profile = profile    # Profile, or None for the exact zero series
        self.coeffs = coeffs      # dict[packed key, scaled int]
        self._vmin_cache = None
        self._rho_cache = None

    # -- packing helpers -----------------------------------------------------

    @property
    def kbits(self) -> int:
        return self.ctx.degree_cap.bit_length()

    @property
    def degshift(self) -> int:
        return self.kbits * self.num_vars

    def pack(self, exps) -> int:
        k = self.kbits
        key = sum(exps)
        for e in exps:
            key = (key << k) | e
        return key

    def unpack(self, key) -> tuple:
        k, m = self.kbits, self.num_vars
        mask = (1 << k) - 1
        out = [0] * m
        for i in range(m - 1, -1, -1):
            out[i] = key & mask
            key >>= k
        return tuple(out)

    def prof(self, d: int):
        """Certified absolute precision for degree-d coefficients."""
        if self.profile is None:
            return INFINITE
        return self.profile.at(d)

    @property
    def floor(self):
        """Weakest certified precision over the whole degree range."""
        return self.prof(self.ctx.degree_cap)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def zero(cls, ctx, num_vars) -> "MultiSeries":
        return cls(ctx, num_vars, 0, None, {})

    @classmethod
    def from_terms(cls, ctx, num_vars, terms) -> "MultiSeries":
        """Series from {exponent tuple: coefficient}.

        Coefficients may be ints, Fractions, or PadicScalars; the certified
        profile is the steepest line needed so that every entry's absolute
        precision is honored.
        """
        D = ctx.degree_cap
        entries = []
        anchor = None     # precision available at degree 0
        vmin = 0
        for exps, c in terms.items():
            exps = tuple(exps)
            if len(exps) != num_vars:
                raise ValueError("exponent arity mismatch")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            if sum(exps) > D:
                continue
            if isinstance(c, PadicScalar):
                ctx.require_same(c.ctx)
                if c.is_exact_zero:
                    continue
                if c.v is None:
                    anchor = c.rel if anchor is None else min(anchor, c.rel)
                    continue
                q = c.lift()
                v = c.v
                absprec = c.known_precision
            else:
                q = Fraction(c)
                if q == 0:
                    continue
                v = _vp(q.numerator, ctx.p) - _vp(q.denominator, ctx.p)
                absprec = v + ctx.abs_precision
            entries.append((exps, q, absprec))
            vmin = min(vmin, v)
            if sum(exps) == 0:
                anchor = absprec if anchor is None else min(anchor, absprec)
        if not entries:
            if anchor is None:
                return cls(ctx, num_vars, 0, None, {})
            return cls(ctx, num_vars, 0, Profile.const(anchor), {})
        N = ctx.abs_precision
        p0 = N if anchor is None else min(N, anchor)
        slope = _ZERO
        flat = p0 if anchor is not None else None
        for exps, q, absprec in entries:
            d = sum(exps)
            if d:
                slope = min(slope, Fraction(absprec - p0, d))
            flat = absprec if flat is None else min(flat, absprec)
        profile = Profile(p0, slope, flat)
        shift = max(0, -vmin)
        modexp = max(p0, flat) + shift   # flat may exceed p0 when all v > 0
        coeffs = {}
        tmp = cls(ctx, num_vars, shift, profile, {})
        for exps, q, _ in entries:
            c = _scaled_from_fraction(q, shift, modexp, ctx.p)
            if c:
                coeffs[tmp.pack(exps)] = c
        return cls(ctx, num_vars, shift, profile, coeffs)._normalized()

    @classmethod
    def variable(cls, ctx, num_vars, index) -> "MultiSeries":
        exps = tuple(1 if i == index else 0 for i in range(num_vars))
        return cls.from_terms(ctx, num_vars, {exps: 1})

    @classmethod
    def constant(cls, ctx, num_vars, value) -> "MultiSeries":
        return cls.from_terms(ctx, num_vars, {(0,) * num_vars: value})

    def _normalized(self) -> "MultiSeries":
        """Reduce per-degree, drop certified zeros, minimize the shift."""
        if not self.coeffs:
            return MultiSeries(self.ctx, self.num_vars, 0, self.profile, {})
        p = self.ctx.p
        ds = self.degshift
        if self.profile is not None:
            mods = {}
            out = {}
            for k, c in self.coeffs.items():
                d = k >> ds
                m = mods.get(d)
                if m is None:
                    pf = self.profile.at(d)
                    if pf < 1:
                        raise PrecisionExhausted(
                            f"degree-{d} coefficients certified only to p^{pf}")
                    m = p ** (pf + self.shift)
                    mods[d] = m
                c %= m
                if c:
                    out[k] = c
            self.coeffs = out
            if not out:
                return MultiSeries(self.ctx, self.num_vars, 0, self.profile,
                                   {})
        if self.shift > 0:
            g = min(_vp(c, p) for c in self.coeffs.values())
            j = min(self.shift, g)
            if j > 0:
                pj = p ** j
                self.coeffs = {k: c // pj for k, c in self.coeffs.items()}
                self.shift -= j
        return self

    # -- inspection -------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        """Zero at the certified profile (empty support)."""
        return not self.coeffs

    @property
    def vmin(self):
        """Smallest coefficient valuation (0 for empty series)."""
        if self._vmin_cache is None:
            p = self.ctx.p
            self._vmin_cache = min(
                (_vp(c, p) - self.shift for c in self.coeffs.values()),
                default=0)
        return self._vmin_cache

    @property
    def rho(self):
        """min over positive-degree terms of v(coeff)/degree, capped at 0."""
        if self._rho_cache is None:
            p = self.ctx.p
            best = _ZERO
            ds = self.degshift
            for key, c in self.coeffs.items():
                d = key >> ds
                if d == 0:
                    continue
                r = Fraction(_vp(c, p) - self.shift, d)
                if r < best:
                    best = r
            self._rho_cache = best
        return self._rho_cache

    @property
    def mindeg(self) -> int:
        """Smallest total degree in the support (0 for the empty series)."""
        ds = self.degshift
        return min((k >> ds for k in self.coeffs), default=0)

    def _const_valuation(self):
        c = self.coeffs.get(0)
        if c is None:
            return None
        return _vp(c, self.ctx.p) - self.shift

    def _const_vhat(self) -> int:
        """min(0, valuation of constant term); 0 when absent."""
        v0 = self._const_valuation()
        return 0 if v0 is None else min(0, v0)

    def support(self) -> list:
        """Exponent tuples in canonical (degree, lex) order."""
        return [Exponent(self.unpack(k)) for k in sorted(self.coeffs)]

    def coefficient(self, exps) -> PadicScalar:
        """Materialize one coefficient; absent means zero at the profile."""
        exps = tuple(exps)
        d = sum(exps)
        if d > self.ctx.degree_cap:
            raise ValueError("exponent beyond degree cap")
        key = self.pack(exps)
        c = self.coeffs.get(key)
        pf = self.prof(d)
        if c is None:
            if pf is INFINITE:
                return PadicScalar.zero(self.ctx)
            return PadicScalar.zero_at(self.ctx, pf)
        p = self.ctx.p
        w = _vp(c, p)
        v = w - self.shift
        rel = min(pf - v, self.ctx.abs_precision)
        return PadicScalar._build(self.ctx, v, c // p ** w, rel)

    def terms(self):
        """(exponent tuple, PadicScalar) pairs in canonical order."""
        return [(Exponent(self.unpack(k)), self.coefficient(self.unpack(k)))
                for k in sorted(self.coeffs)]

    def degree(self) -> int:
        ds = self.degshift
        return max((k >> ds for k in self.coeffs), default=0)

    def constant_term(self) -> PadicScalar:
        return self.coefficient((0,) * self.num_vars)

    # -- ring operations ---------------------------------------------------------

    def _require_compatible(self, other: "MultiSeries"):
        if self.ctx != other.ctx:
            raise MixedContext("series contexts differ")
        if self.num_vars != other.num_vars:
            raise MixedContext("variable counts differ")

    def _with_profile(self, extra: Profile) -> "MultiSeries":
        """Weaken to the pointwise min with ``extra``."""
        prof = extra if self.profile is None else self.profile.min_with(extra)
        return MultiSeries(self.ctx, self.num_vars, self.shift, prof,
                           dict(self.coeffs))._normalized()

    def __add__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            other = MultiSeries.from_terms(
                self.ctx, self.num_vars, {(0,) * self.num_vars: other})
        if not isinstance(other, MultiSeries):
            return NotImplemented
        self._require_compatible(other)
        a, b = self, other
        if a.profile is None and not a.coeffs:
            return b
        if b.profile is None and not b.coeffs:
            return a
        if a.profile is None:
            profile = b.profile
        elif b.profile is None:
            profile = a.profile
        else:
            profile = a.profile.min_with(b.profile)
        shift = max(a.shift, b.shift)
        p = self.ctx.p
        fa = p ** (shift - a.shift)
        fb = p ** (shift - b.shift)
        out = dict(a.coeffs) if fa == 1 else \
            {k: c * fa for k, c in a.coeffs.items()}
        if fb == 1:
            for k, c in b.coeffs.items():
                r = out.get(k, 0) + c
                if r:
                    out[k] = r
                elif k in out:
                    del out[k]
        else:
            for k, c in b.coeffs.items():
                r = out.get(k, 0) + c * fb
                if r:
                    out[k] = r
                elif k in out:
                    del out[k]
        return MultiSeries(self.ctx, self.num_vars, shift, profile,
                           out)._normalized()

    __radd__ = __add__

    def __neg__(self):
        if not self.coeffs:
            return self
        return MultiSeries(self.ctx, self.num_vars, self.shift, self.profile,
                           {k: -c for k, c in self.coeffs.items()})._normalized()

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            other = MultiSeries.from_terms(
                self.ctx, self.num_vars, {(0,) * self.num_vars: other})
        if not isinstance(other, MultiSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            return self.scale(other)
        if not isinstance(other, MultiSeries):
            return NotImplemented
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other: "MultiSeries", cap=None) -> "MultiSeries":
        """Product truncated at total degree ``cap`` (default: the ctx cap).

        With cap below the context cap, the certified claims of the result
        are meaningful through degree cap only; internal degree-by-degree
        recursions use this and never read beyond their cap.
        """
        self._require_compatible(other)
        D = self.ctx.degree_cap if cap is None else min(cap,
                                                        self.ctx.degree_cap)
        a, b = self, other
        if a.profile is None and not a.coeffs:
            return a
        if b.profile is None and not b.coeffs:
            return b
        profile = _mul_profile(a, b, D)
        if not a.coeffs or not b.coeffs:
            return MultiSeries(self.ctx, self.num_vars, 0, profile,
                               {})._normalized()
        if len(a.coeffs) < len(b.coeffs):
            a, b = b, a
        bkeys = sorted(b.coeffs)
        bds = b.degshift
        bdegs = [k >> bds for k in bkeys]
        bvals = [b.coeffs[k] for k in bkeys]
        ds = a.degshift
        out = {}
        get = out.get
        for ea, ca in a.coeffs.items():
            limit = D - (ea >> ds)
            if limit < 0:
                continue
            hi = bisect_right(bdegs, limit)
            for i in range(hi):
                e = ea + bkeys[i]
                out[e] = get(e, 0) + ca * bvals[i]
        shift = a.shift + b.shift
        p = self.ctx.p
        target_shift = max(0, -(a.vmin + b.vmin))
        drop = shift - target_shift
        res = {}
        if drop:
            pd = p ** drop
            for k, c in out.items():
                if c:
                    res[k] = c // pd
        else:
            res = {k: c for k, c in out.items() if c}
        return MultiSeries(self.ctx, self.num_vars, target_shift, profile,
                           res)._normalized()

    def scale(self, s) -> "MultiSeries":
        """Multiply by a scalar (int, Fraction, or PadicScalar)."""
        if self.profile is None and not self.coeffs:
            return self
        N = self.ctx.abs_precision
        D = self.ctx.degree_cap
        if isinstance(s, PadicScalar):
            self.ctx.require_same(s.ctx)
            if s.is_exact_zero:
                return MultiSeries.zero(self.ctx, self.num_vars)
            if s.v is None:
                vhat = self._const_vhat()
                lbD = min(vhat, math.floor(D * self.rho))
                prof = Profile(s.rel + vhat, self.rho, s.rel + lbD)
                return MultiSeries(self.ctx, self.num_vars, 0, prof,
                                   {})._normalized()
            q = s.lift()
            s_abs = s.known_precision
        else:
            q = Fraction(s)
            if q == 0:
                return MultiSeries.zero(self.ctx, self.num_vars)
            vq0 = _vp(q.numerator, self.ctx.p) - _vp(q.denominator, self.ctx.p)
            s_abs = vq0 + N
        p = self.ctx.p
        vq = _vp(q.numerator, p) - _vp(q.denominator, p)
        vhat = self._const_vhat()
        rho = self.rho
        vmin = self.vmin
        pr = self.profile
        channels = [
            [(pr.p0 + vq, pr.slope), (pr.flat + vq, _ZERO)],
            [(s_abs + vhat, rho), (s_abs + vmin, _ZERO)],
            [(vhat + vq + N, rho), (vmin + vq + N, _ZERO)],
        ]
        profile = _combine_channels(channels, D)
        target_shift = max(0, -(self.vmin + vq))
        # headroom covers every per-degree modulus (flat may exceed p0)
        mod = p ** max(1, profile.p0 + target_shift,
                       profile.flat + target_shift)
        a = vq + target_shift - self.shift
        q_unit = q * Fraction(p) ** (-vq)
        u = q_unit.numerator * pow(q_unit.denominator, -1, mod) % mod
        out = {}
        if a >= 0:
            pa = p ** a
            for k, c in self.coeffs.items():
                r = c * u * pa % mod
                if r:
                    out[k] = r
        else:
            pa = p ** (-a)
            for k, c in self.coeffs.items():
                r = (c // pa) * u % mod
                if r:
                    out[k] = r
        return MultiSeries(self.ctx, self.num_vars, target_shift, profile,
                           out)._normalized()

    def truncate(self, cap: int) -> "MultiSeries":
        """Drop terms of total degree above cap."""
        ds = self.degshift
        out = {k: c for k, c in self.coeffs.items() if (k >> ds) <= cap}
        return MultiSeries(self.ctx, self.num_vars, self.shift, self.profile,
                           out)._normalized()

    def homogeneous_part(self, d: int) -> "MultiSeries":
        ds = self.degshift
        out = {k: c for k, c in self.coeffs.items() if (k >> ds) == d}
        return MultiSeries(self.ctx, self.num_vars, self.shift, self.profile,
                           out)._normalized()

    def derivative(self, var: int) -> "MultiSeries":
        """Partial derivative with respect to variable ``var``.

        A degree-d output coefficient comes from degree d+1, so the line is
        re-anchored one step down while the flat floor carries over.
        """
        k = self.kbits
        m = self.num_vars
        pos = k * (m - 1 - var)
        mask = (1 << k) - 1
        dec = (1 << pos) + (1 << (k * m))
        out = {}
        for key, c in self.coeffs.items():
            e = (key >> pos) & mask
            if e == 0:
                continue
            out[key - dec] = c * e
        profile = self.profile
        if profile is not None and profile.slope != 0:
            profile = Profile(profile.p0 + math.floor(profile.slope),
                              profile.slope, profile.flat)
        return MultiSeries(self.ctx, self.num_vars, self.shift, profile,
                           out)._normalized()

    def map_variables(self, new_num_vars: int, positions) -> "MultiSeries":
        """Re-embed into ``new_num_vars`` variables, variable i -> positions[i]."""
        if len(positions) != self.num_vars:
            raise ValueError("positions arity mismatch")
        out = {}
        tmp = MultiSeries(self.ctx, new_num_vars, 0, None, {})
        for key, c in self.coeffs.items():
            exps = self.unpack(key)
            nexps = [0] * new_num_vars
            for i, e in enumerate(exps):
                nexps[positions[i]] += e
            nk = tmp.pack(nexps)
            out[nk] = out.get(nk, 0) + c
        return MultiSeries(self.ctx, new_num_vars, self.shift, self.profile,
                           out)._normalized()

    def substitute_zero(self, positions) -> "MultiSeries":
        """Set the listed variables to zero (same ambient variable count)."""
        pos = set(positions)
        out = {}
        for key, c in self.coeffs.items():
            exps = self.unpack(key)
            if all(exps[i] == 0 for i in pos):
                out[key] = c
        return MultiSeries(self.ctx, self.num_vars, self.shift, self.profile,
                           out)._normalized()

    # -- comparisons ------------------------------------------------------------

    def same_at_working_precision(self, other: "MultiSeries") -> bool:
        return (self - other).is_zero

    def identical(self, other: "MultiSeries") -> bool:
        pa, pb = self.profile, other.profile
        prof_same = (pa is None and pb is None) or (
            pa is not None and pb is not None and pa.p0 == pb.p0
            and pa.slope == pb.slope and pa.flat == pb.flat)
        return (self.ctx == other.ctx and self.num_vars == other.num_vars
                and self.shift == other.shift and prof_same
                and self.coeffs == other.coeffs)

    def __repr__(self):
        parts = []
        for exps, c in self.terms()[:8]:
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(exps) if e) or "1"
            parts.append(f"({c!r})*{mono}")
        more = "" if len(self.coeffs) <= 8 else f" + ... ({len(self.coeffs)} terms)"
        body = " + ".join(parts) if parts else "0"
        return f"MultiSeries[{body}{more}]"


def _mul_profile(a: MultiSeries, b: MultiSeries, cap: int) -> Profile:
    """Profile of a truncated product from three uncertainty channels.

    Channel 1: a's uncertainty times b's data; channel 2 symmetric;
    channel 3: the relative-digit cap N on top of the data valuations.
    Each channel yields a sloped line and a flat bound (its value at the
    cap); within a channel the max of the two is sound, across channels
    the min.
    """
    if a.profile is None and b.profile is None:
        return None
    N = a.ctx.abs_precision
    vha, vhb = a._const_vhat(), b._const_vhat()
    ra, rb = a.rho, b.rho
    # the other factor's minimum degree caps how much room denominators have
    room_a = max(0, cap - b.mindeg)
    room_b = max(0, cap - a.mindeg)
    lb_a = max(a.vmin, min(vha, math.floor(room_a * ra)))
    lb_b = max(b.vmin, min(vhb, math.floor(room_b * rb)))
    channels = []
    if a.profile is not None:
        pa = a.profile
        channels.append([(pa.p0 + vhb, min(pa.slope, rb)),
                         (pa.p0 + b.vmin, pa.slope),
                         (pa.flat + lb_b, _ZERO)])
    if b.profile is not None:
        pb = b.profile
        channels.append([(pb.p0 + vha, min(pb.slope, ra)),
                         (pb.p0 + a.vmin, pb.slope),
                         (pb.flat + lb_a, _ZERO)])
    joint = min(vha + vhb, vha + math.floor(room_b * rb),
                vhb + math.floor(room_a * ra), math.floor(cap * min(ra, rb)))
    channels.append([(vha + vhb + N, min(ra, rb)),
                     (a.vmin + b.vmin + N, _ZERO),
                     (joint + N, _ZERO)])
    return _combine_channels(channels, cap)


class TupleSeries:
    """An n-tuple of series sharing variables, context, and cap."""

    __slots__ = ("components",)

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("empty tuple series")
        for c in components[1:]:
            components[0]._require_compatible(c)
        self.components = components

    @property
    def ctx(self):
        return self.components[0].ctx

    @property
    def num_vars(self):
        return self.components[0].num_vars

    @property
    def dim(self):
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @classmethod
    def identity(cls, ctx, d, num_vars=None, offset=0) -> "TupleSeries":
        m = num_vars if num_vars is not None else d
        return cls([MultiSeries.variable(ctx, m, offset + i)
                    for i in range(d)])

    @classmethod
    def zero(cls, ctx, d, num_vars) -> "TupleSeries":
        return cls([MultiSeries.zero(ctx, num_vars) for _ in range(d)])

    def __add__(self, other):
        if not isinstance(other, TupleSeries):
            return NotImplemented
        if self.dim != other.dim:
            raise MixedContext("tuple dimensions differ")
        return TupleSeries([a + b for a, b in
                            zip(self.components, other.components)])

    def __sub__(self, other):
        if not isinstance(other, TupleSeries):
            return NotImplemented
        if self.dim != other.dim:
            raise MixedContext("tuple dimensions differ")
        return TupleSeries([a - b for a, b in
                            zip(self.components, other.components)])

    def __neg__(self):
        return TupleSeries([-a for a in self.components])

    def scale(self, s) -> "TupleSeries":
        return TupleSeries([a.scale(s) for a in self.components])

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    def constant_is_zero(self) -> bool:
        return all(0 not in c.coeffs for c in self.components)

    def map_variables(self, new_num_vars, positions) -> "TupleSeries":
        return TupleSeries([c.map_variables(new_num_vars, positions)
                            for c in self.components])

    def truncate(self, cap) -> "TupleSeries":
        return TupleSeries([c.truncate(cap) for c in self.components])

    def same_at_working_precision(self, other: "TupleSeries") -> bool:
        return self.dim == other.dim and all(
            a.same_at_working_precision(b)
            for a, b in zip(self.components, other.components))

    def identical(self, other: "TupleSeries") -> bool:
        return self.dim == other.dim and all(
            a.identical(b) for a, b in zip(self.components, other.components))

    def floor(self):
        return min(c.floor for c in self.components)

    def __repr__(self):
        return "TupleSeries(" + ", ".join(repr(c) for c in self.components) + ")"


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

class _PowerCache:
    """Cached powers of one inner series, truncated at the composition cap."""

    __slots__ = ("base", "cap", "powers")

    def __init__(self, base: MultiSeries, cap: int):
        self.base = base
        self.cap = cap
        one = MultiSeries.constant(base.ctx, base.num_vars, 1)
        self.powers = [one, base.truncate(cap)]

    def get(self, e: int) -> MultiSeries:
        while len(self.powers) <= e:
            self.powers.append(
                self.powers[-1].mul(self.powers[1], cap=self.cap))
        return self.powers[e]


def tuple_compose(f, g, cap=None):
    """Composition f(g_1, ..., g_m), truncated at the degree cap.

    ``f`` is a TupleSeries (or a single MultiSeries) in m variables, ``g``
    a TupleSeries with m components over some other variable set; every
    component of g must have certified-zero constant term.
    """
    single = isinstance(f, MultiSeries)
    fs = [f] if single else list(f.components)
    gs = list(g.components) if isinstance(g, TupleSeries) else list(g)
    ctx = fs[0].ctx
    if any(c.ctx != ctx for c in gs):
        raise MixedContext("composition contexts differ")
    m = fs[0].num_vars
    if len(gs) != m:
        raise MixedContext(
            f"outer series in {m} variables, {len(gs)} inner components")
    for comp in gs:
        if 0 in comp.coeffs:
            raise NonzeroConstantTerm(
                "inner component has nonzero constant term")
    D = ctx.degree_cap if cap is None else min(cap, ctx.degree_cap)
    target_vars = gs[0].num_vars
    caches = [_PowerCache(comp, D) for comp in gs]
    rho_g = min((comp.rho for comp in gs), default=_ZERO)
    vmin_g = min((comp.vmin for comp in gs), default=0)
    amp = max(math.floor(D * rho_g), D * min(0, vmin_g))
    out = []
    for ft in fs:
        res = _compose_one(ft, caches, D, target_vars)
        if ft.profile is not None:
            # f's unstored tail at degree k, amplified by inner monomials
            pf = ft.profile
            tail = Profile(pf.p0, pf.slope + rho_g, pf.flat + amp)
            res = res._with_profile(tail)
        out.append(res)
    return out[0] if single else TupleSeries(out)


def _compose_one(f: MultiSeries, caches, cap, target_vars) -> MultiSeries:
    ctx = f.ctx
    zero = MultiSeries.zero(ctx, target_vars)
    if not f.coeffs:
        return MultiSeries(ctx, target_vars, 0, f.profile, {})
    items = [(f.unpack(k), c) for k, c in f.coeffs.items()]
    m = f.num_vars

    def rec(entries, var):
        if var == m:
            # a single fully-consumed monomial: its coefficient as a
            # constant certified at its own degree's precision
            deg = sum(entries[0][0])
            total = MultiSeries(ctx, target_vars, f.shift,
                                Profile.const(f.prof(deg)),
                                {0: sum(c for _, c in entries)})
            return total._normalized()
        groups = {}
        for exps, c in entries:
            groups.setdefault(exps[var], []).append((exps, c))
        acc = None
        for e in sorted(groups, reverse=True):
            part = rec(groups[e], var + 1)
            if e and not part.is_zero:
                part = part.mul(caches[var].get(e), cap=cap)
            acc = part if acc is None else acc + part
        return acc if acc is not None else zero

    return rec(items, 0)


# ---------------------------------------------------------------------------
# Jacobians and linear algebra over scalars
# ---------------------------------------------------------------------------

class JacobianMatrix:
    """d1 x d2 matrix of partials; entries are scalars (at 0) or series."""

    __slots__ = ("entries", "at_zero")

    def __init__(self, entries, at_zero):
        self.entries = [list(row) for row in entries]
        self.at_zero = at_zero

    @property
    def shape(self):
        return (len(self.entries), len(self.entries[0]))

    def block(self, col_start, col_stop) -> "JacobianMatrix":
        return JacobianMatrix(
            [row[col_start:col_stop] for row in self.entries], self.at_zero)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def to_rows(self):
        return [list(row) for row in self.entries]


def jacobian(h: TupleSeries, at_zero: bool = True) -> JacobianMatrix:
    """J(h) = [d h_i / d x_j], symbolic or evaluated at the origin."""
    rows = []
    for comp in h.components:
        row = []
        for j in range(h.num_vars):
            d = comp.derivative(j)
            row.append(d.constant_term() if at_zero else d)
        rows.append(row)
    return JacobianMatrix(rows, at_zero)


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = a[i][0] * b[0][j]
            for t in range(1, k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_identity(ctx, d):
    one = PadicScalar.exact(ctx, 1)
    zero = PadicScalar.zero(ctx)
    return [[one if i == j else zero for j in range(d)] for i in range(d)]


def mat_det(rows) -> PadicScalar:
    """Determinant by Gaussian elimination with min-valuation pivoting."""
    m = [list(r) for r in rows]
    n = len(m)
    ctx = m[0][0].ctx
    det = PadicScalar.exact(ctx, 1)
    for col in range(n):
        piv, pivval = None, None
        for r in range(col, n):
            x = m[r][col]
            if x.is_zero:
                continue
            v = x.valuation()
            if pivval is None or v < pivval:
                piv, pivval = r, v
        if piv is None:
            column = [m[r][col] for r in range(col, n)]
            if any(not x.is_exact_zero for x in column):
                prec = min(x.rel for x in column if not x.is_exact_zero)
                return PadicScalar.zero_at(ctx, prec)
            return PadicScalar.zero(ctx)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        pivot = m[col][col]
        det = det * pivot
        inv = pivot.inverse()
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f.is_zero:
                continue
            for c in range(col, n):
                m[r][c] = m[r][c] - f * m[col][c]
    return det


def mat_inverse(rows):
    """Gauss-Jordan inverse; raises NotInvertible on certified singularity."""
    n = len(rows)
    m = [list(r) for r in rows]
    ctx = m[0][0].ctx
    aug = [row + [PadicScalar.exact(ctx, 1) if i == j else
                  PadicScalar.zero(ctx) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        piv, pivval = None, None
        for r in range(col, n):
            x = aug[r][col]
            if x.is_zero:
                continue
            v = x.valuation()
            if pivval is None or v < pivval:
                piv, pivval = r, v
        if piv is None:
            raise NotInvertible(f"no usable pivot in column {col}")
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r == col:
                continue
            f = aug[r][col]
            if f.is_zero:
                continue
            aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def apply_matrix(mat, t: TupleSeries) -> TupleSeries:
    """Matrix (scalars) times tuple-of-series, componentwise linear combo."""
    comps = []
    for row in mat:
        acc = None
        for coeff, comp in zip(row, t.components):
            part = comp.scale(coeff)
            acc = part if acc is None else acc + part
        comps.append(acc)
    return TupleSeries(comps)


def linear_part_matrix(h: TupleSeries):
    """J_0(h) as a plain list-of-lists of scalars."""
    return jacobian(h, at_zero=True).to_rows()


# ---------------------------------------------------------------------------
# compositional inverse
# ---------------------------------------------------------------------------

def compositional_inverse(h: TupleSeries, cap=None) -> TupleSeries:
    """Inverse under composition, built degree-by-degree.

    Starts from the inverted linear part and solves each homogeneous
    correction R so that h(f(X)) matches X one degree further; requires the
    linear part to be invertible over Z_p (unit determinant).
    """
    d = h.dim
    if h.num_vars != d:
        raise MixedContext("compositional inverse needs a d-in-d tuple")
    if not h.constant_is_zero():
        raise NonzeroConstantTerm("h(0) != 0")
    D = h.ctx.degree_cap if cap is None else min(cap, h.ctx.degree_cap)
    j0 = linear_part_matrix(h)
    det = mat_det(j0)
    if det.is_zero:
        raise NotInvertible("linear part has zero determinant at precision")
    if det.valuation() > 0:
        raise NotInvertible(
            f"det J0 has valuation {det.valuation()} > 0: not a unit")
    j0inv = mat_inverse(j0)
    ident = TupleSeries.identity(h.ctx, d)
    f = apply_matrix(j0inv, ident)
    for n in range(1, D):
        resid = ident - tuple_compose(h, f, cap=n + 1)
        r = TupleSeries([c.homogeneous_part(n + 1) for c in resid.components])
        if r.is_zero:
            continue
        f = f + apply_matrix(j0inv, r)
    return f


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

class EvalResult:
    """Evaluation value(s) plus the certified truncation-tail valuation."""

    __slots__ = ("values", "tail_valuation")

    def __init__(self, values, tail_valuation):
        self.values = values
        self.tail_valuation = tail_valuation

    @property
    def value(self):
        return self.values[0]

    def point(self) -> PointTuple:
        return PointTuple(self.values)


def ms_eval(f, theta: PointTuple, require_positive=True,
            polynomial=False) -> EvalResult:
    """Evaluate a series (or tuple) at a point with positive-valuation coords.

    The returned elements are capped at the certified precision
    min(series floor, (D+1) * min v(theta_i)), which bounds both the
    truncated tail and the unstored-coefficient uncertainty.  With
    ``polynomial=True`` the caller asserts the input is the exact, complete
    polynomial (no truncated tail), waiving the (D+1)-tail cap.
    """
    single = isinstance(f, MultiSeries)
    fs = [f] if single else list(f.components)
    m = fs[0].num_vars
    if len(theta) != m:
        raise MixedContext("point arity does not match variable count")
    minv = theta.valuation_lower_bound()
    if require_positive and not minv > 0:
        raise DivergentPoint(f"coordinate valuation {minv} not > 0")
    D = fs[0].ctx.degree_cap
    tail = INFINITE if (minv is INFINITE or polynomial) \
        else Fraction(D + 1) * Fraction(minv)
    caches = [[ExtScalar.one(theta.modulus), theta[i]] for i in range(m)]

    def power(i, e):
        cache = caches[i]
        while len(cache) <= e:
            cache.append(cache[-1] * cache[1])
        return cache[e]

    values = []
    for ft in fs:
        acc = ExtScalar.zero(theta.modulus)
        for exps, coeff in ft.terms():
            term = ExtScalar.from_base(theta.modulus, coeff)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            acc = acc + term
        cap = tail
        fl = ft.floor
        if fl is not INFINITE:
            cap = fl if cap is INFINITE else min(cap, Fraction(fl))
        if cap is not INFINITE:
            acc = acc.cap_precision(cap)
        values.append(acc)
    return EvalResult(values, tail)


def coeff_extract(f: TupleSeries, exps, component: int = 0) -> PadicScalar:
    """Coefficient of the monomial ``exps`` in the chosen component."""
    return f.components[component].coefficient(exps)
