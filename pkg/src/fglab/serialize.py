"""Canonical text documents for series, group laws, and extensions.

Documents are plain text with base-p digit strings, no floating point
anywhere.  Entries are emitted in (total degree, lexicographic exponent)
order and every field is rendered deterministically, so two equal series
serialize to identical bytes and a parse/serialize round trip is stable.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParseError, VersionMismatch
from .formal_group import AxiomCertificate, FormalGroupLaw
from .padic import ExtensionModulus, PrecisionContext
from .series import MultiSeries, Profile, TupleSeries

FORMAT_VERSION = "v1"
SERIES_MAGIC = "fglab-series"
EXTENSION_MAGIC = "fglab-extension"

_KINDS = ("series", "tuple", "group-law", "endo")


def _fmt_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else \
        f"{q.numerator}/{q.denominator}"


def _profile_header(comp: MultiSeries) -> str:
    pr = comp.profile
    if pr is None:
        return "exact"
    return f"{pr.p0} {_fmt_fraction(pr.slope)} {pr.flat}"


def serialize(obj, kind: str | None = None) -> str:
    """Render a series, tuple, or group law as a canonical document."""
    if isinstance(obj, FormalGroupLaw):
        kind = kind or "group-law"
        tup = obj.law
    elif isinstance(obj, TupleSeries):
        kind = kind or "tuple"
        tup = obj
    elif isinstance(obj, MultiSeries):
        kind = kind or "series"
        tup = TupleSeries([obj])
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    if kind not in _KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    ctx = tup.ctx
    lines = [f"{SERIES_MAGIC} {FORMAT_VERSION}",
             f"kind: {kind}",
             f"p: {ctx.p}",
             f"abs-precision: {ctx.abs_precision}",
             f"degree-cap: {ctx.degree_cap}",
             f"num-vars: {tup.num_vars}",
             f"components: {tup.dim}"]
    if isinstance(obj, FormalGroupLaw):
        cert = obj.certificate
        lines.append(f"dimension: {obj.dimension}")
        lines.append(f"certified-degree: {cert.degree}")
        lines.append(f"axioms: {' '.join(cert.axioms)}")
        if cert.commutative is not None:
            lines.append(f"commutative: {'yes' if cert.commutative else 'no'}")
    for idx, comp in enumerate(tup.components):
        lines.append(f"component {idx} profile {_profile_header(comp)}")
        for exps, coeff in comp.terms():
            digits = " ".join(str(d) for d in coeff.digits())
            expstr = " ".join(str(e) for e in exps)
            lines.append(f"{expstr} | {coeff.v} | {digits}")
        lines.append("end component")
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line, self.pos
        raise ParseError(self.pos, "unexpected end of document")


def _parse_fraction(tok: str, lineno: int) -> Fraction:
    try:
        if "/" in tok:
            a, b = tok.split("/")
            return Fraction(int(a), int(b))
        return Fraction(int(tok))
    except (ValueError, ZeroDivisionError):
        raise ParseError(lineno, f"bad rational {tok!r}") from None


def _expect_field(line, lineno, name):
    prefix = name + ":"
    if not line.startswith(prefix):
        raise ParseError(lineno, f"expected {name!r} field, got {line!r}")
    return line[len(prefix):].strip()


def parse(text: str):
    """Parse a canonical document back into its object.

    Returns a MultiSeries, TupleSeries, or FormalGroupLaw depending on the
    document kind; parsing then serializing reproduces the bytes.
    """
    r = _Reader(text)
    line, ln = r.next()
    parts = line.split()
    if len(parts) != 2 or parts[0] != SERIES_MAGIC:
        raise ParseError(ln, f"not a {SERIES_MAGIC} document")
    if parts[1] != FORMAT_VERSION:
        raise VersionMismatch(
            f"unsupported format version {parts[1]!r} (expected {FORMAT_VERSION})")
    line, ln = r.next()
    kind = _expect_field(line, ln, "kind")
    if kind not in _KINDS:
        raise ParseError(ln, f"unknown kind {kind!r}")
    line, ln = r.next()
    p = int(_expect_field(line, ln, "p"))
    line, ln = r.next()
    absprec = int(_expect_field(line, ln, "abs-precision"))
    line, ln = r.next()
    degcap = int(_expect_field(line, ln, "degree-cap"))
    line, ln = r.next()
    num_vars = int(_expect_field(line, ln, "num-vars"))
    line, ln = r.next()
    ncomp = int(_expect_field(line, ln, "components"))
    try:
        ctx = PrecisionContext(p, absprec, degcap)
    except ValueError as exc:
        raise ParseError(ln, str(exc)) from None
    dimension = None
    cert_degree = None
    axioms = None
    commutative = None
    line, ln = r.next()
    while not line.startswith("component"):
        if line.startswith("dimension:"):
            dimension = int(_expect_field(line, ln, "dimension"))
        elif line.startswith("certified-degree:"):
            cert_degree = int(_expect_field(line, ln, "certified-degree"))
        elif line.startswith("axioms:"):
            axioms = tuple(_expect_field(line, ln, "axioms").split())
        elif line.startswith("commutative:"):
            commutative = _expect_field(line, ln, "commutative") == "yes"
        else:
            raise ParseError(ln, f"unexpected header line {line!r}")
        line, ln = r.next()
    comps = []
    for idx in range(ncomp):
        parts = line.split()
        if len(parts) < 4 or parts[0] != "component" or int(parts[1]) != idx \
                or parts[2] != "profile":
            raise ParseError(ln, f"expected 'component {idx} profile ...'")
        if parts[3] == "exact":
            profile = None
        else:
            if len(parts) != 6:
                raise ParseError(ln, "profile needs p0, slope, flat")
            profile = Profile(int(parts[3]), _parse_fraction(parts[4], ln),
                              int(parts[5]))
        entries = {}
        vmin = 0
        while True:
            line, ln = r.next()
            if line == "end component":
                break
            fields = line.split("|")
            if len(fields) != 3:
                raise ParseError(ln, "entry needs 'exps | valuation | digits'")
            try:
                exps = tuple(int(t) for t in fields[0].split())
                v = int(fields[1].strip())
                digits = [int(t) for t in fields[2].split()]
            except ValueError:
                raise ParseError(ln, f"malformed entry {line!r}") from None
            if len(exps) != num_vars:
                raise ParseError(ln, f"expected {num_vars} exponents")
            if sum(exps) > degcap:
                raise ParseError(ln, "exponent beyond degree cap")
            if not digits or any(not 0 <= d < p for d in digits):
                raise ParseError(ln, "digits out of range")
            unit = 0
            for d in reversed(digits):
                unit = unit * p + d
            if unit % p == 0:
                raise ParseError(ln, "unit part divisible by p")
            entries[exps] = (v, unit, len(digits))
            vmin = min(vmin, v)
        shift = max(0, -vmin)
        tmp = MultiSeries(ctx, num_vars, shift, profile, {})
        coeffs = {}
        for exps, (v, unit, rel) in entries.items():
            coeffs[tmp.pack(exps)] = unit * p ** (v + shift)
        comps.append(MultiSeries(ctx, num_vars, shift, profile, coeffs))
        if idx + 1 < ncomp:
            line, ln = r.next()
    line, ln = r.next()
    if line != "end":
        raise ParseError(ln, f"expected 'end', got {line!r}")
    tup = TupleSeries(comps)
    if kind == "series":
        return tup.components[0]
    if kind == "tuple" or kind == "endo":
        return tup
    if dimension is None or cert_degree is None or axioms is None:
        raise ParseError(ln, "group-law document missing certificate fields")
    cert = AxiomCertificate(degree=cert_degree, axioms=axioms,
                            commutative=commutative)
    return FormalGroupLaw(dimension, tup, cert)


# ---------------------------------------------------------------------------
# extension documents
# ---------------------------------------------------------------------------

def serialize_extension(modulus: ExtensionModulus) -> str:
    coeffs = " ".join(_fmt_fraction(c.lift()) for c in modulus.coeffs)
    return (f"{EXTENSION_MAGIC} {FORMAT_VERSION}\n"
            f"tag: {modulus.tag}\n"
            f"coeffs: {coeffs}\n")


def parse_extension(text: str, ctx: PrecisionContext) -> ExtensionModulus:
    r = _Reader(text)
    line, ln = r.next()
    parts = line.split()
    if len(parts) != 2 or parts[0] != EXTENSION_MAGIC:
        raise ParseError(ln, f"not a {EXTENSION_MAGIC} document")
    if parts[1] != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported format version {parts[1]!r}")
    line, ln = r.next()
    tag = _expect_field(line, ln, "tag")
    line, ln = r.next()
    coeffs = [_parse_fraction(t, ln)
              for t in _expect_field(line, ln, "coeffs").split()]
    return ExtensionModulus(ctx, coeffs, tag)
