"""Order-by-order construction of the near-identity transform and separated normal form.

The state at order ``p`` is ``(xi, F, R)`` with ``R = O(p)``. One step reads the
degree-``p`` part of ``R``, splits every ``(q, j)`` coefficient into an
eliminated part (absorbed into ``xi`` via :func:`solve_update`) or a kept part
(added to ``F``), and recomputes the residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .algebra import (
    ModalSeries,
    MultiIndex,
    TimePoly,
    compose,
    directional_derivative,
    identity_series,
    linear_series,
    series_combine,
    time_derivative,
)
from .errors import (
    ModelInvariantViolation,
    NotQuadraticConvolution,
    OrderViolation,
    ResidualOrderViolation,
    SmallDivisor,
    ZeroDivisor,
)
from .scalars import ONE, ZERO, CRational, as_crational
from .spectral import CENTRE, STABLE, SpectralModel

__all__ = [
    "TransformState",
    "UpdatePair",
    "LedgerEntry",
    "NormalFormResult",
    "residual",
    "extract_a",
    "solve_update",
    "step",
    "run",
    "verify_separation",
    "direct_oracle_xi3",
    "QuadraticConvolution",
    "POLICIES",
    "eliminates",
]

# "csu": eliminate exactly the (q, j) with j in J^q, which is what makes F separate
# the centre/stable/unstable subspaces. "nonresonant": eliminate every term whose
# divisor has |Re mu| > mu_tilde and keep only small divisors (a subset of what
# "csu" keeps, so F still separates).
POLICIES = ("csu", "nonresonant")


def eliminates(model: SpectralModel, q: MultiIndex, j: int, policy: str = "csu") -> bool:
    if policy == "csu":
        return model.in_Jq(q, j)
    if policy == "nonresonant":
        return abs(model.mu_qj(q, j).re) > model.gap.mu_tilde
    raise ValueError(f"unknown elimination policy {policy!r}; expected one of {POLICIES}")


@dataclass(frozen=True)
class UpdatePair:
    xi_hat: TimePoly
    F_hat: TimePoly


@dataclass(frozen=True)
class LedgerEntry:
    order: int
    q: MultiIndex
    j: int
    mu: CRational
    eliminated: bool
    re_margin: object
    a: TimePoly
    update: UpdatePair
    boundary: bool = False


@dataclass
class TransformState:
    p: int
    xi: ModalSeries
    F: ModalSeries
    R: ModalSeries


@dataclass
class NormalFormResult:
    state: TransformState
    model: SpectralModel
    f: ModalSeries
    ledger: List[LedgerEntry] = field(default_factory=list)
    history: List[TransformState] = field(default_factory=list)
    R_full: Optional[ModalSeries] = None
    policy: str = "csu"

    @property
    def xi(self):
        return self.state.xi

    @property
    def F(self):
        return self.state.F

    @property
    def R(self):
        return self.state.R

    @property
    def p(self):
        return self.state.p

    def entries(self, order: Optional[int] = None, eliminated: Optional[bool] = None):
        return [
            e
            for e in self.ledger
            if (order is None or e.order == order) and (eliminated is None or e.eliminated == eliminated)
        ]

    def boundary_flags(self) -> Dict[Tuple[int, MultiIndex], bool]:
        return {(e.j, e.q): e.boundary for e in self.ledger}


def _linear_A(model: SpectralModel) -> ModalSeries:
    return linear_series(model.alpha, model.modes)


def _on(model: SpectralModel, S: ModalSeries) -> ModalSeries:
    return S if S.modes == model.modes else S.with_modes(model.modes)


def _scale_modes(S: ModalSeries, alpha) -> ModalSeries:
    out = {}
    for (j, q), c in S.terms.items():
        a = alpha[j]
        if a:
            out[(j, q)] = c.scale(a)
    return ModalSeries._build(out, S.max_degree, S.modes)


def residual(model: SpectralModel, f: ModalSeries, xi: ModalSeries, F: ModalSeries, keep_deg: int) -> ModalSeries:
    """``d_t xi + D xi . (A + F) - A xi - f o xi`` truncated at ``keep_deg``."""
    A = _linear_A(model)
    f, xi, F = (_on(model, S) for S in (f, xi, F))
    field_ = series_combine(ONE, A, ONE, F)
    phi = series_combine(
        ONE, time_derivative(xi), ONE, directional_derivative(xi, field_, keep_deg)
    )
    lin = _scale_modes(xi, model.alpha)
    out = series_combine(ONE, phi, -ONE, lin)
    out = series_combine(ONE, out, -ONE, compose(f, xi, keep_deg))
    return ModalSeries._build(
        {k: c for k, c in out.terms.items() if k[1].degree <= keep_deg}, keep_deg, model.modes
    )


def extract_a(R: ModalSeries, p: int) -> Dict[MultiIndex, Dict[int, TimePoly]]:
    """``a[q][j] = -(coefficient of v^q e_j in R)`` for ``|q| = p``."""
    low = [(j, q) for (j, q) in R.terms if q.degree < p]
    if low:
        j, q = min(low, key=lambda k: (k[1].degree, k[0], k[1].entries))
        raise OrderViolation(f"residual has a surviving degree-{q.degree} term at (j={j}, q={q}) below order {p}")
    out: Dict[MultiIndex, Dict[int, TimePoly]] = {}
    for (j, q), c in R.items():
        if q.degree == p:
            out.setdefault(q, {})[j] = -c
    return out


def solve_update(mu, a: TimePoly) -> TimePoly:
    """Unique polynomial ``x`` with ``x' + mu x = a``.

    Back-substitution from the top coefficient: ``x_m = (a_m - (m+1) x_{m+1}) / mu``.
    """
    mu = as_crational(mu)
    if not mu:
        raise ZeroDivisor("solve_update needs mu != 0")
    n = len(a.coeffs)
    x = [ZERO] * n
    nxt = ZERO
    for m in range(n - 1, -1, -1):
        nxt = (a.coeffs[m] - nxt * (m + 1)) / mu
        x[m] = nxt
    return TimePoly(x)


def _boundary(model: SpectralModel, j: int, q: MultiIndex) -> bool:
    """Coefficient may feel the mode cut-off: some mode it could couple through lies outside ``|label| <= N``."""
    reach = max(abs(j), sum(abs(m) * e for m, e in q.entries))
    return reach > model.N


def _base_state(model: SpectralModel, f: ModalSeries) -> TransformState:
    xi = identity_series(model.modes, 1)
    F = ModalSeries._build({}, 2, model.modes)
    R = residual(model, f, xi, F, 2)
    return TransformState(2, xi, F, R)


def _check_f(model: SpectralModel, f: ModalSeries) -> ModalSeries:
    f = _on(model, f)
    bad = [(j, q) for (j, q) in f.terms if q.degree < 2]
    if bad:
        raise ModelInvariantViolation(f"nonlinearity must be O(2); degree-1 term at {bad[0]}")
    return f


def step(
    model: SpectralModel,
    f: ModalSeries,
    state: TransformState,
    ledger: Optional[list] = None,
    policy: str = "csu",
) -> TransformState:
    p = state.p
    gc = model.gap_check(p + 1)
    if not gc:
        raise ModelInvariantViolation(f"gap condition for order {p + 1}: {gc.detail}")
    a = extract_a(state.R, p)
    xi_terms = dict(state.xi.terms)
    F_terms = dict(state.F.terms)
    mu_t = model.gap.mu_tilde
    for q in sorted(a, key=lambda q: q.entries):
        for j in sorted(a[q]):
            aqj = a[q][j]
            mu = model.mu_qj(q, j)
            elim = eliminates(model, q, j, policy)
            if elim:
                if not abs(mu.re) > mu_t:
                    raise SmallDivisor(q, j, mu, mu_t)
                upd = UpdatePair(solve_update(mu, aqj), TimePoly())
                xi_terms[(j, q)] = upd.xi_hat
            else:
                upd = UpdatePair(TimePoly(), aqj)
                F_terms[(j, q)] = aqj
            # F_hat + xi_hat' + mu xi_hat = a, exactly
            lhs = upd.F_hat + upd.xi_hat.derivative() + upd.xi_hat.scale(mu)
            if lhs != aqj:
                raise ResidualOrderViolation(f"update identity fails at (j={j}, q={q})")
            if ledger is not None:
                ledger.append(
                    LedgerEntry(p, q, j, mu, elim, abs(mu.re) - mu_t, aqj, upd, _boundary(model, j, q))
                )
    xi = ModalSeries._build(xi_terms, max(p, 1), model.modes)
    F = ModalSeries._build(F_terms, max(p, 2), model.modes)
    R = residual(model, f, xi, F, p + 1)
    low = [k for k in R.terms if k[1].degree <= p]
    if low:
        raise ResidualOrderViolation(f"residual keeps {len(low)} term(s) of degree <= {p}, e.g. {low[0]}")
    return TransformState(p + 1, xi, F, R)


def full_residual_degree(f: ModalSeries, state: TransformState) -> int:
    """Degree bound of the untruncated residual for polynomial ``f``."""
    dxi = max(state.xi.degrees or [1])
    dF = max(state.F.degrees or [1])
    df = max(f.degrees or [1])
    return max(df * dxi, dxi + dF - 1, dxi)


def run(
    model: SpectralModel,
    f: ModalSeries,
    p_target: int,
    *,
    policy: str = "csu",
    full_residual: bool = True,
) -> NormalFormResult:
    if policy not in POLICIES:
        raise ValueError(f"unknown elimination policy {policy!r}")
    if p_target < 2:
        raise ValueError("p_target must be >= 2")
    gc = model.gap_check(p_target)
    if not gc:
        raise ModelInvariantViolation(f"gap condition for order {p_target}: {gc.detail}")
    f = _check_f(model, f)
    state = _base_state(model, f)
    result = NormalFormResult(state, model, f, history=[state], policy=policy)
    while state.p < p_target:
        state = step(model, f, state, result.ledger, policy)
        result.history.append(state)
    result.state = state
    if full_residual:
        result.R_full = residual(model, f, state.xi, state.F, full_residual_degree(f, state))
    return result


def verify_separation(F: ModalSeries, model: SpectralModel) -> bool:
    for (j, q) in F.terms:
        _, qs, qu = model.split_multiindex(q)
        cls = model.classify_mode(j)
        if cls == CENTRE:
            ok = (not qs and not qu) or (bool(qs) and bool(qu))
        elif cls == STABLE:
            ok = bool(qs)
        else:
            ok = bool(qu)
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class QuadraticConvolution:
    """``f_j = time_factor(t) * sum_k b(j, k) x_{j-k} x_k`` over ordered ``k``."""

    b: Callable[[int, int], object]
    time_factor: TimePoly


def direct_oracle_xi3(model: SpectralModel, f, policy: str = "csu") -> ModalSeries:
    """Degree-2 transform from the closed divisor formula, independent of :func:`run`.

    For each target ``j`` and ordered ``k`` the divisor is
    ``1/d = -alpha_j + alpha_k + alpha_{j-k}``; a time factor ``c0 + c1 t``
    yields ``b (c1 (d t - d^2) + c0 d)``. Pairs the policy keeps emit nothing;
    for ``"nonresonant"`` that is the restriction ``|1/d| > mu_tilde``.
    """
    if not isinstance(f, QuadraticConvolution):
        raise NotQuadraticConvolution("direct oracle needs a QuadraticConvolution description")
    tf = f.time_factor.coeffs
    if len(tf) > 2:
        raise NotQuadraticConvolution("time factor must be affine in t")
    c0 = tf[0] if len(tf) > 0 else ZERO
    c1 = tf[1] if len(tf) > 1 else ZERO
    modes = set(model.modes)
    terms: Dict[Tuple[int, MultiIndex], TimePoly] = {}
    for j in model.modes:
        for k in model.modes:
            if j - k not in modes:
                continue
            b = as_crational(f.b(j, k))
            if not b:
                continue
            q = MultiIndex([(k, 1), (j - k, 1)])
            inv_d = -model.alpha[j] + model.alpha[k] + model.alpha[j - k]
            if policy == "nonresonant":
                if not abs(inv_d.re) > model.gap.mu_tilde:
                    continue
            elif not model.in_Jq(q, j):
                continue
            d = ONE / inv_d
            poly = TimePoly([c1 * (-(d * d)) + c0 * d, c1 * d]).scale(b)
            key = (j, q)
            terms[key] = terms[key] + poly if key in terms else poly
    terms.update({(j, MultiIndex.unit(j)): TimePoly([1]) for j in model.modes})
    return ModalSeries._build(terms, 2, model.modes)
