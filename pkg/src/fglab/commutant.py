"""Reconstruction of commuting series from their Jacobian at zero.

Given a stable u (linear part neither zero nor of finite multiplicative
order), the series h commuting with u is determined degree by degree: the
homogeneous correction D of degree m+1 solves the linear equation

    D(J0(u) X) - J0(u) D(X)  =  (u o g_m - g_m o u)_(m+1).

For diagonal J0(u) the operator is diagonal with per-monomial factors
lambda^I - lambda_i (the scalar case reduces to lambda^(m+1) - lambda); for
general linear parts the homogeneous-degree operator is assembled and
inverted explicitly.  A singular operator at some degree is exactly the
failure mode of the root-of-unity counterexample and raises SingularStep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    MixedContext,
    NonCommutingTarget,
    PrecisionExhausted,
    SingularStep,
    VerificationFailure,
)
from .padic import INFINITE, PadicScalar
from .series import (
    MultiSeries,
    TupleSeries,
    apply_matrix,
    linear_part_matrix,
    mat_mul,
    tuple_compose,
)


@dataclass(frozen=True)
class StabilityVerdict:
    """Stable, or a diagnosis of why the reconstruction must fail."""

    stable: bool
    reason: str | None = None          # zero-jacobian | root-of-unity | singular-difference
    order: int | None = None           # for root-of-unity
    degree: int | None = None          # first singular degree m+1

    def __bool__(self):
        return self.stable


@dataclass
class ReconstructionTrace:
    """Per-degree solve record plus the reconstructed series."""

    series: TupleSeries
    steps: list = field(default_factory=list)   # (degree, det valuation, terms)


def _is_diagonal(mat) -> bool:
    d = len(mat)
    return all(mat[i][j].is_zero for i in range(d) for j in range(d) if i != j)


def _matrix_is_zero(mat) -> bool:
    return all(x.is_zero for row in mat for x in row)


def _matrix_is_identity(mat) -> bool:
    d = len(mat)
    for i in range(d):
        for j in range(d):
            want_one = i == j
            x = mat[i][j]
            if want_one:
                if x.is_zero or not x.same_at_working_precision(1):
                    return False
            elif not x.is_zero:
                return False
    return True


def _monomials_of_degree(m_vars: int, degree: int):
    """Exponent tuples of the given total degree, lexicographic."""
    if m_vars == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _monomials_of_degree(m_vars - 1, degree - first):
            yield (first,) + rest


def _diag_factor(lams, exps, i):
    """lambda^I - lambda_i for a diagonal linear part."""
    prod = None
    for lam, e in zip(lams, exps):
        if e == 0:
            continue
        term = lam ** e
        prod = term if prod is None else prod * term
    if prod is None:
        prod = PadicScalar.exact(lams[0].ctx, 1)
    return prod - lams[i % len(lams)]


class _DegreeSolver:
    """Solves D(Lambda_in X) - Lambda_out D(X) = r on homogeneous space.

    ``lam_in`` acts on the (possibly wider) input variables, ``lam_out`` on
    the d output components; reconstruction uses lam_in = lam_out = J0(u),
    the two-block variant uses lam_in = diag(J0, J0).
    """

    def __init__(self, ctx, lam_in, lam_out, num_vars, dim):
        self.ctx = ctx
        self.lam_in = lam_in
        self.lam_out = lam_out
        self.num_vars = num_vars
        self.dim = dim
        self.diagonal = _is_diagonal(lam_in) and _is_diagonal(lam_out)
        if self.diagonal:
            self.lams_in = [lam_in[j][j] for j in range(num_vars)]
            self.lams_out = [lam_out[i][i] for i in range(dim)]
        self._inverse_cache = {}

    def det_valuation(self, degree: int):
        """Valuation of the operator determinant; INFINITE when singular."""
        total = 0
        if self.diagonal:
            for exps in _monomials_of_degree(self.num_vars, degree):
                for i in range(self.dim):
                    f = self.lams_in_factor(exps, i)
                    if f.is_zero:
                        return INFINITE
                    total += f.valuation()
            return total
        mat = self._operator_matrix(degree)
        from .series import mat_det
        det = mat_det(mat)
        if det.is_zero:
            return INFINITE
        return det.valuation()

    def solve_loss(self, degree: int):
        """Worst precision loss of one degree solve; INFINITE when singular.

        Diagonal case: the largest per-monomial factor valuation.  General
        case: the inverse operator is computed (and cached for the solve),
        and the loss is the most negative entry valuation.
        """
        if self.diagonal:
            worst = 0
            for exps in _monomials_of_degree(self.num_vars, degree):
                for i in range(self.dim):
                    f = self.lams_in_factor(exps, i)
                    if f.is_zero:
                        return INFINITE
                    worst = max(worst, f.valuation())
            return worst
        inv = self._inverse_cache.get(degree)
        if inv is None:
            from .errors import NotInvertible
            from .series import mat_inverse
            try:
                inv = mat_inverse(self._operator_matrix(degree))
            except NotInvertible:
                return INFINITE
            self._inverse_cache[degree] = inv
        worst = 0
        for row in inv:
            for x in row:
                if not x.is_zero:
                    worst = max(worst, -min(0, x.valuation()))
        return worst

    def lams_in_factor(self, exps, i):
        prod = None
        for lam, e in zip(self.lams_in, exps):
            if e == 0:
                continue
            term = lam ** e
            prod = term if prod is None else prod * term
        if prod is None:
            prod = PadicScalar.exact(self.ctx, 1)
        return prod - self.lams_out[i]

    def _operator_matrix(self, degree: int):
        """Explicit matrix of the operator on the monomial basis."""
        monos = list(_monomials_of_degree(self.num_vars, degree))
        index = {(i, mono): k for k, (i, mono) in enumerate(
            (i, m) for i in range(self.dim) for m in monos)}
        n = len(index)
        ctx = self.ctx
        zero = PadicScalar.zero(ctx)
        cols = []
        lam_rows = [TupleSeries([
            _linear_form(ctx, self.num_vars, self.lam_in, j)
            for j in range(self.num_vars)])]
        lam_tuple = lam_rows[0]
        for i in range(self.dim):
            for mono in monos:
                basis = TupleSeries(
                    [MultiSeries.from_terms(ctx, self.num_vars,
                                            {mono: 1}) if t == i else
                     MultiSeries.zero(ctx, self.num_vars)
                     for t in range(self.dim)])
                # D(Lambda X)
                subst = tuple_compose(basis, lam_tuple, cap=degree)
                # Lambda_out * D
                lout = apply_matrix(self.lam_out, basis)
                img = subst - lout
                col = [zero] * n
                for t in range(self.dim):
                    for exps, c in img.components[t].terms():
                        col[index[(t, tuple(exps))]] = c
                cols.append(col)
        return [[cols[j][i] for j in range(n)] for i in range(n)]

    def solve(self, degree: int, rhs: TupleSeries) -> TupleSeries:
        """Solve for the homogeneous degree-``degree`` correction."""
        ctx = self.ctx
        if self.diagonal:
            comps = []
            for i in range(self.dim):
                terms = {}
                for exps, c in rhs.components[i].terms():
                    f = self.lams_in_factor(tuple(exps), i)
                    if f.is_zero:
                        raise SingularStep(degree)
                    terms[tuple(exps)] = c / f
                comps.append(MultiSeries.from_terms(ctx, self.num_vars, terms))
            return TupleSeries(comps)
        monos = list(_monomials_of_degree(self.num_vars, degree))
        order = [(i, m) for i in range(self.dim) for m in monos]
        index = {key: k for k, key in enumerate(order)}
        vec = [PadicScalar.zero(ctx)] * len(order)
        for i in range(self.dim):
            for exps, c in rhs.components[i].terms():
                vec[index[(i, tuple(exps))]] = c
        inv = self._inverse_cache.get(degree)
        if inv is None:
            from .errors import NotInvertible
            from .series import mat_inverse
            try:
                inv = mat_inverse(self._operator_matrix(degree))
            except NotInvertible:
                raise SingularStep(degree) from None
            self._inverse_cache[degree] = inv
        sol = [None] * len(order)
        for r in range(len(order)):
            acc = PadicScalar.zero(ctx)
            for cidx in range(len(order)):
                if vec[cidx].is_exact_zero:
                    continue
                acc = acc + inv[r][cidx] * vec[cidx]
            sol[r] = acc
        comps = []
        for i in range(self.dim):
            terms = {}
            for m in monos:
                val = sol[index[(i, m)]]
                if not val.is_exact_zero:
                    terms[m] = val
            comps.append(MultiSeries.from_terms(ctx, self.num_vars, terms)
                         if terms else MultiSeries.zero(ctx, self.num_vars))
        return TupleSeries(comps)


def _linear_form(ctx, num_vars, mat, row):
    """Row ``row`` of mat applied to the variable vector, as a series."""
    acc = None
    for j in range(num_vars):
        c = mat[row][j]
        if c.is_zero:
            continue
        part = MultiSeries.variable(ctx, num_vars, j).scale(c)
        acc = part if acc is None else acc + part
    return acc if acc is not None else MultiSeries.zero(ctx, num_vars)


def stability_classify(u: TupleSeries, degree: int | None = None,
                       root_order_bound: int | None = None) -> StabilityVerdict:
    """Operational stability test for the reconstruction recursion.

    Stable means: J0(u) is nonzero and the per-degree difference operator
    is invertible at every degree up to the cap -- exactly what the
    recursion needs.  Root-of-unity linear parts are reported as such.
    """
    if not u.constant_is_zero():
        raise MixedContext("u(0) must be 0")
    ctx = u.ctx
    D = ctx.degree_cap if degree is None else min(degree, ctx.degree_cap)
    lam = linear_part_matrix(u)
    if _matrix_is_zero(lam):
        return StabilityVerdict(False, reason="zero-jacobian")
    bound = root_order_bound if root_order_bound is not None \
        else max(D, ctx.p ** min(4, u.dim * 2))
    power = lam
    order = None
    for k in range(1, bound + 1):
        if _matrix_is_identity(power):
            order = k
            break
        power = mat_mul(power, lam)
    solver = _DegreeSolver(ctx, lam, lam, u.num_vars, u.dim)
    for m in range(1, D):
        if solver.det_valuation(m + 1) is INFINITE:
            if order is not None:
                return StabilityVerdict(False, reason="root-of-unity",
                                        order=order, degree=m + 1)
            return StabilityVerdict(False, reason="singular-difference",
                                    degree=m + 1)
    if order is not None:
        # linear part of finite order whose resonances sit past the cap
        return StabilityVerdict(False, reason="root-of-unity", order=order)
    return StabilityVerdict(True)


def _normalize_matrix(ctx, mat, d):
    rows = []
    for row in mat:
        rows.append([x if isinstance(x, PadicScalar)
                     else PadicScalar.exact(ctx, x) for x in row])
    if len(rows) != d or any(len(r) != d for r in rows):
        raise MixedContext(f"expected a {d}x{d} matrix")
    return rows


def _matrices_commute(a, b) -> bool:
    ab = mat_mul(a, b)
    ba = mat_mul(b, a)
    return all((x - y).is_zero for ra, rb in zip(ab, ba)
               for x, y in zip(ra, rb))


def _budget_check(solver, D, ctx):
    """Accumulated per-degree solve losses must fit inside the precision."""
    total = 0
    for m in range(1, D):
        loss = solver.solve_loss(m + 1)
        if loss is INFINITE:
            raise SingularStep(m + 1)
        total += loss
    if total >= ctx.abs_precision - 1:
        raise PrecisionExhausted(
            f"difference-operator solves consume {total} digits; "
            f"abs_precision {ctx.abs_precision} cannot absorb that")
    return total


def commutant_reconstruct(u: TupleSeries, j0_target,
                          degree: int | None = None,
                          verify: bool = True) -> ReconstructionTrace:
    """The unique h with h(0)=0, J0(h) = target, and u o h = h o u.

    Built degree-by-degree; raises SingularStep at the first degree where
    the difference operator degenerates (the root-of-unity counterexample
    mechanism), NonCommutingTarget when the degree-1 equation is already
    unsolvable, and VerificationFailure if the post-hoc commutation check
    fails.
    """
    if not u.constant_is_zero():
        raise MixedContext("u(0) must be 0")
    d = u.dim
    if u.num_vars != d:
        raise MixedContext("u must be d-in-d")
    ctx = u.ctx
    D = ctx.degree_cap if degree is None else min(degree, ctx.degree_cap)
    lam = linear_part_matrix(u)
    target = _normalize_matrix(ctx, j0_target, d)
    identity_like = _is_diagonal(lam) and all(
        lam[i][i].same_at_working_precision(lam[0][0]) for i in range(d))
    if not identity_like and not _matrices_commute(lam, target):
        raise NonCommutingTarget(
            "Jacobian target must commute with J0(u) when J0(u) is not scalar")
    solver = _DegreeSolver(ctx, lam, lam, d, d)
    _budget_check(solver, D, ctx)
    h = apply_matrix(target, TupleSeries.identity(ctx, d))
    trace = ReconstructionTrace(series=h)
    for m in range(1, D):
        resid = tuple_compose(u, h, cap=m + 1) - tuple_compose(h, u, cap=m + 1)
        r = TupleSeries([c.homogeneous_part(m + 1) for c in resid.components])
        detv = solver.det_valuation(m + 1)
        if r.is_zero:
            trace.steps.append((m + 1, detv, None))
            continue
        delta = solver.solve(m + 1, r)
        h = h + delta
        corr_norm = min((c.vmin for c in delta.components
                         if not c.is_zero), default=None)
        trace.steps.append((m + 1, detv, corr_norm))
    if verify:
        lhs = tuple_compose(u, h)
        rhs = tuple_compose(h, u)
        if not lhs.same_at_working_precision(rhs):
            raise VerificationFailure(
                "reconstructed series fails the commutation check; "
                "this signals precision exhaustion")
    trace.series = h
    return trace


def group_from_jacobian(u: TupleSeries, block_x, block_y,
                        degree: int | None = None,
                        verify: bool = True) -> TupleSeries:
    """The two-block series H with given partial Jacobians commuting with u.

    H has d components in 2d variables and satisfies
    u(H(X1, X2)) = H(u(X1), u(X2)) mod deg D+1; with identity blocks this
    reconstructs the group law F from its stable endomorphism u alone.
    """
    if not u.constant_is_zero():
        raise MixedContext("u(0) must be 0")
    d = u.dim
    if u.num_vars != d:
        raise MixedContext("u must be d-in-d")
    ctx = u.ctx
    D = ctx.degree_cap if degree is None else min(degree, ctx.degree_cap)
    lam = linear_part_matrix(u)
    bx = _normalize_matrix(ctx, block_x, d)
    by = _normalize_matrix(ctx, block_y, d)
    zero = PadicScalar.zero(ctx)
    lam2 = [[lam[i % d][j % d] if (i < d) == (j < d) else zero
             for j in range(2 * d)] for i in range(2 * d)]
    solver = _DegreeSolver(ctx, lam2, lam, 2 * d, d)
    _budget_check(solver, D, ctx)
    ident_x = TupleSeries.identity(ctx, d, num_vars=2 * d, offset=0)
    ident_y = TupleSeries.identity(ctx, d, num_vars=2 * d, offset=d)
    H = apply_matrix(bx, ident_x) + apply_matrix(by, ident_y)
    u_blocks = TupleSeries(
        list(u.map_variables(2 * d, list(range(d))).components)
        + list(u.map_variables(2 * d, list(range(d, 2 * d))).components))
    for m in range(1, D):
        left = tuple_compose(u, H, cap=m + 1)
        right = tuple_compose(H, u_blocks, cap=m + 1)
        resid = left - right
        r = TupleSeries([c.homogeneous_part(m + 1) for c in resid.components])
        if r.is_zero:
            continue
        H = H + solver.solve(m + 1, r)
    if verify:
        lhs = tuple_compose(u, H)
        rhs = tuple_compose(H, u_blocks)
        if not lhs.same_at_working_precision(rhs):
            raise VerificationFailure(
                "two-block reconstruction fails the commutation check")
    return H
