"""Spectral data of the linear part and the resonance bookkeeping built on it."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple, Union

from .algebra import MultiIndex
from .errors import MissingMode, ModelInvariantViolation, UnclassifiableMode
from .scalars import ZERO, CRational, as_crational


class _Infinity:
    """Larger than every rational; used for beta or gamma = infinity."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __sub__(self, other):
        return self

    def __neg__(self):
        return _NegInfinity()

    def __float__(self):
        return float("inf")

    def __repr__(self):
        return "INF"

    __str__ = lambda self: "inf"


class _NegInfinity:
    def __lt__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __le__(self, other):
        return True

    def __ge__(self, other):
        return False

    def __float__(self):
        return float("-inf")


INF = _Infinity()
Bound = Union[Fraction, _Infinity]

CENTRE, STABLE, UNSTABLE = "c", "s", "u"


def _bound(x) -> Bound:
    if x is INF:
        return INF
    if isinstance(x, float) and x == float("inf"):
        return INF
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "+inf"):
        return INF
    return as_crational(x).re if not isinstance(x, Fraction) else x


@dataclass(frozen=True)
class GapParams:
    """Trichotomy bounds: centre ``|Re| <= alpha``, stable ``Re <= -beta``, unstable ``Re >= gamma``."""

    alpha: Fraction
    beta: Bound
    gamma: Bound
    mu_tilde: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", _bound(self.alpha))
        object.__setattr__(self, "beta", _bound(self.beta))
        object.__setattr__(self, "gamma", _bound(self.gamma))
        object.__setattr__(self, "mu_tilde", _bound(self.mu_tilde))
        if self.alpha is INF or self.mu_tilde is INF:
            raise ModelInvariantViolation("alpha and mu_tilde must be finite")
        if not (0 <= self.alpha < self.mu_tilde):
            raise ModelInvariantViolation(
                f"0 <= alpha < mu_tilde < min(beta, gamma) fails: alpha={self.alpha}, mu_tilde={self.mu_tilde}"
            )
        if not (self.mu_tilde < self.beta and self.mu_tilde < self.gamma):
            raise ModelInvariantViolation(
                f"0 <= alpha < mu_tilde < min(beta, gamma) fails: mu_tilde={self.mu_tilde}, "
                f"beta={self.beta}, gamma={self.gamma}"
            )


@dataclass(frozen=True)
class GapCheck:
    ok: bool
    p: int
    stable_slack: Bound
    unstable_slack: Bound
    detail: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ResonanceEntry:
    q: MultiIndex
    j: int
    mu: CRational
    in_Jq: bool
    re_margin: Fraction  # |Re mu| - mu_tilde


@dataclass
class SpectralModel:
    """Mode window, exact eigenvalues and gap parameters; validated on construction."""

    modes: Tuple[int, ...]
    alpha: Dict[int, CRational]
    gap: GapParams
    N: Optional[int] = None
    _classes: Dict[int, str] = field(init=False, repr=False)

    def __post_init__(self):
        self.modes = tuple(sorted(int(m) for m in self.modes))
        if len(set(self.modes)) != len(self.modes):
            raise ModelInvariantViolation("duplicate mode labels")
        self.alpha = {int(j): as_crational(a) for j, a in self.alpha.items()}
        missing = [j for j in self.modes if j not in self.alpha]
        if missing:
            raise ModelInvariantViolation(f"no eigenvalue given for modes {missing}")
        if self.N is None:
            self.N = max((abs(m) for m in self.modes), default=0)
        self._classes = {j: self._classify(j) for j in self.modes}
        self.J_c = frozenset(j for j, c in self._classes.items() if c == CENTRE)
        self.J_s = frozenset(j for j, c in self._classes.items() if c == STABLE)
        self.J_u = frozenset(j for j, c in self._classes.items() if c == UNSTABLE)

    def _classify(self, j: int) -> str:
        re_a = self.alpha[j].re
        g = self.gap
        if abs(re_a) <= g.alpha:
            return CENTRE
        if g.beta is not INF and re_a <= -g.beta:
            return STABLE
        if g.gamma is not INF and re_a >= g.gamma:
            return UNSTABLE
        raise UnclassifiableMode(
            f"eigenvalue of mode {j} has real part {re_a} inside a forbidden band "
            f"(-beta, -alpha) or (alpha, gamma)"
        )

    # -- queries -----------------------------------------------------------

    def classify_mode(self, j: int) -> str:
        try:
            return self._classes[j]
        except KeyError:
            raise MissingMode(f"mode {j} is not in the model") from None

    def split_multiindex(self, q: MultiIndex) -> Tuple[MultiIndex, MultiIndex, MultiIndex]:
        parts = {CENTRE: [], STABLE: [], UNSTABLE: []}
        for m, e in q.entries:
            parts[self.classify_mode(m)].append((m, e))
        return tuple(MultiIndex._raw(tuple(parts[k])) for k in (CENTRE, STABLE, UNSTABLE))

    def mu_q(self, q: MultiIndex) -> CRational:
        out = ZERO
        for m, e in q.entries:
            try:
                out = out + self.alpha[m] * e
            except KeyError:
                raise MissingMode(f"mode {m} is not in the model") from None
        return out

    def mu_qj(self, q: MultiIndex, j: int) -> CRational:
        return self.mu_q(q) - self.alpha[j]

    def in_Jq(self, q: MultiIndex, j: int) -> bool:
        """True when the ``(q, j)`` term is eliminated rather than kept in the normal form."""
        _, qs, qu = self.split_multiindex(q)
        cls = self.classify_mode(j)
        if cls == CENTRE:
            return (not qs and bool(qu)) or (not qu and bool(qs))
        if cls == STABLE:
            return not qs
        return not qu

    def resonance(self, q: MultiIndex, j: int) -> ResonanceEntry:
        mu = self.mu_qj(q, j)
        return ResonanceEntry(q, j, mu, self.in_Jq(q, j), abs(mu.re) - self.gap.mu_tilde)

    def gap_check(self, p: int) -> GapCheck:
        g = self.gap
        return gap_inequalities(g.alpha, g.beta, g.gamma, g.mu_tilde, p)

    def eigen_map(self) -> Mapping[int, CRational]:
        return dict(self.alpha)


def gap_inequalities(alpha, beta, gamma, mu_tilde, p: int) -> GapCheck:
    """``beta - (p+1) alpha > mu_tilde`` and ``gamma - (p+1) alpha > mu_tilde``, exactly.

    Pure arithmetic on the four bounds; it does not insist on the
    ``alpha < mu_tilde`` ordering that :class:`GapParams` enforces.
    """
    if p < 2:
        raise ValueError("gap_check needs p >= 2")
    alpha, beta, gamma, mu_tilde = (_bound(x) for x in (alpha, beta, gamma, mu_tilde))
    lhs = (p + 1) * alpha
    s_slack = INF if beta is INF else beta - lhs - mu_tilde
    u_slack = INF if gamma is INF else gamma - lhs - mu_tilde
    fails = []
    if s_slack is not INF and s_slack <= 0:
        fails.append(f"beta - (p+1)*alpha > mu_tilde fails with slack {s_slack}")
    if u_slack is not INF and u_slack <= 0:
        fails.append(f"gamma - (p+1)*alpha > mu_tilde fails with slack {u_slack}")
    return GapCheck(not fails, p, s_slack, u_slack, "; ".join(fails))


def subspace_modes(model: SpectralModel, which: str) -> frozenset:
    """Mode set of ``V_a`` for ``which`` in ``c, s, u, cs, cu``."""
    table = {CENTRE: model.J_c, STABLE: model.J_s, UNSTABLE: model.J_u}
    out = frozenset()
    for ch in which:
        if ch not in table:
            raise ValueError(f"unknown subspace {which!r}")
        out |= table[ch]
    return out
