"""Sparse polynomial algebra over modal coordinates.

A :class:`ModalSeries` is a finite sum ``sum_{j,q} c_{j,q}(t) v^q e_j`` where
``q`` is a :class:`MultiIndex` over signed integer mode labels and every
``c_{j,q}`` is a :class:`TimePoly` with exact complex-rational coefficients.
All symbolic operations are exact; only the ``*_eval`` helpers touch floats.
"""
from __future__ import annotations

from collections import defaultdict
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

from .errors import MissingMode, ModelMismatch
from .scalars import ONE, ZERO, CRational, as_crational

__all__ = [
    "TimePoly",
    "MultiIndex",
    "ModalSeries",
    "mono_eval",
    "series_eval",
    "series_combine",
    "time_derivative",
    "directional_derivative",
    "compose",
    "homogeneous_part",
    "truncate",
    "identity_series",
    "linear_series",
]


class TimePoly:
    """Dense univariate polynomial in ``t``; ``coeffs[m]`` multiplies ``t**m``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_crational(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs: Tuple[CRational, ...] = tuple(cs)

    @classmethod
    def constant(cls, c) -> "TimePoly":
        return cls([c])

    @classmethod
    def _canon(cls, cs: list) -> "TimePoly":
        while cs and not cs[-1]:
            cs.pop()
        obj = object.__new__(cls)
        obj.coeffs = tuple(cs)
        return obj

    def __bool__(self):
        return bool(self.coeffs)

    @property
    def degree(self) -> int:
        """Degree in ``t``; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __eq__(self, other):
        if isinstance(other, TimePoly):
            return self.coeffs == other.coeffs
        if other == 0:
            return not self.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "TimePoly") -> "TimePoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return TimePoly._canon(out)

    def __neg__(self):
        return TimePoly._canon([-c for c in self.coeffs])

    def __sub__(self, other: "TimePoly") -> "TimePoly":
        return self + (-other)

    def scale(self, c) -> "TimePoly":
        c = as_crational(c)
        if not c:
            return TimePoly._canon([])
        return TimePoly._canon([c * x for x in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, TimePoly):
            return self.scale(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return TimePoly._canon([])
        out = [ZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if not x:
                continue
            for k, y in enumerate(b):
                out[i + k] = out[i + k] + x * y
        return TimePoly._canon(out)

    __rmul__ = __mul__

    def derivative(self) -> "TimePoly":
        return TimePoly._canon([c * m for m, c in enumerate(self.coeffs) if m > 0])

    def __call__(self, t) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * t + complex(c)
        return acc

    def exact_at(self, t) -> CRational:
        t = as_crational(t)
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def __repr__(self):
        return f"TimePoly({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for m, c in enumerate(self.coeffs):
            if not c:
                continue
            cs = f"({c})" if c.im else str(c)
            parts.append(cs if m == 0 else f"{cs}*t" if m == 1 else f"{cs}*t^{m}")
        return " + ".join(parts)


T = TimePoly([0, 1])


class MultiIndex:
    """Sparse exponent vector: sorted ``(mode, exponent)`` pairs, exponents >= 1."""

    __slots__ = ("entries", "_hash")

    def __init__(self, exps=()):
        if isinstance(exps, MultiIndex):
            entries = exps.entries
        else:
            items = exps.items() if isinstance(exps, Mapping) else exps
            acc: Dict[int, int] = defaultdict(int)
            for mode, e in items:
                if int(e) != e or e < 0:
                    raise ValueError(f"exponent must be a non-negative integer, got {e!r}")
                acc[int(mode)] += int(e)
            entries = tuple(sorted((m, e) for m, e in acc.items() if e))
        self.entries: Tuple[Tuple[int, int], ...] = entries
        self._hash = hash(entries)

    @classmethod
    def _raw(cls, entries):
        obj = object.__new__(cls)
        obj.entries = entries
        obj._hash = hash(entries)
        return obj

    @classmethod
    def unit(cls, mode: int, power: int = 1) -> "MultiIndex":
        return cls._raw(((int(mode), power),))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.entries)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(m for m, _ in self.entries)

    def get(self, mode: int) -> int:
        for m, e in self.entries:
            if m == mode:
                return e
        return 0

    def as_dict(self) -> Dict[int, int]:
        return dict(self.entries)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        acc = dict(self.entries)
        for m, e in other.entries:
            acc[m] = acc.get(m, 0) + e
        return MultiIndex._raw(tuple(sorted(acc.items())))

    def minus_unit(self, mode: int) -> "MultiIndex":
        out = []
        for m, e in self.entries:
            if m == mode:
                if e > 1:
                    out.append((m, e - 1))
            else:
                out.append((m, e))
        return MultiIndex._raw(tuple(out))

    def restrict(self, modes) -> "MultiIndex":
        return MultiIndex._raw(tuple((m, e) for m, e in self.entries if m in modes))

    def __bool__(self):
        return bool(self.entries)

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __lt__(self, other):
        return self.entries < other.entries

    def __hash__(self):
        return self._hash

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.entries)

    def __repr__(self):
        return "{" + ", ".join(f"{m}:{e}" for m, e in self.entries) + "}"


Key = Tuple[int, MultiIndex]
# scalar polynomial in v with TimePoly coefficients: MultiIndex -> TimePoly
_Poly = Dict[MultiIndex, TimePoly]


class ModalSeries:
    """Immutable map ``(target mode, MultiIndex) -> TimePoly``.

    ``modes`` is the mode window the series lives on (``None`` leaves it
    unchecked); ``max_degree`` bounds ``|q|`` of every stored term. The empty
    multi-index is not allowed, so constant terms cannot be represented.
    """

    __slots__ = ("_terms", "max_degree", "modes")

    def __init__(self, terms=None, max_degree: Optional[int] = None, modes=None):
        clean: Dict[Key, TimePoly] = {}
        for (j, q), c in (terms or {}).items():
            q = q if isinstance(q, MultiIndex) else MultiIndex(q)
            if not isinstance(c, TimePoly):
                c = TimePoly([c]) if not isinstance(c, (list, tuple)) else TimePoly(c)
            if not c:
                continue
            if q.degree < 1:
                raise ValueError("multi-index of degree 0 is not a valid series term")
            key = (int(j), q)
            clean[key] = clean[key] + c if key in clean else c
            if not clean[key]:
                del clean[key]
        top = max((q.degree for _, q in clean), default=1)
        if max_degree is None:
            max_degree = top
        if top > max_degree:
            raise ValueError(f"term of degree {top} exceeds max_degree {max_degree}")
        self._terms = clean
        self.max_degree = int(max_degree)
        self.modes = tuple(sorted(modes)) if modes is not None else None
        if self.modes is not None:
            allowed = set(self.modes)
            for j, q in clean:
                if j not in allowed or not set(q.support) <= allowed:
                    raise ModelMismatch(f"term ({j}, {q}) uses a mode outside the window")

    @classmethod
    def _build(cls, terms: Dict[Key, TimePoly], max_degree: int, modes) -> "ModalSeries":
        obj = object.__new__(cls)
        obj._terms = {k: v for k, v in terms.items() if v}
        obj.max_degree = int(max_degree)
        obj.modes = modes
        return obj

    @property
    def terms(self) -> Mapping[Key, TimePoly]:
        return MappingProxyType(self._terms)

    def items(self):
        """Terms in canonical ``(target, multi-index)`` order."""
        return sorted(self._terms.items(), key=lambda kv: (kv[0][0], kv[0][1].entries))

    def __getitem__(self, key) -> TimePoly:
        j, q = key
        q = q if isinstance(q, MultiIndex) else MultiIndex(q)
        return self._terms.get((j, q), TimePoly())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, ModalSeries) and self._terms == other._terms

    def __repr__(self):
        body = ", ".join(f"({j}, {q}) -> {c}" for (j, q), c in self.items())
        return f"ModalSeries({{{body}}}, max_degree={self.max_degree})"

    @property
    def degrees(self):
        return sorted({q.degree for _, q in self._terms})

    def targets(self):
        return sorted({j for j, _ in self._terms})

    def component(self, j: int) -> _Poly:
        return {q: c for (jj, q), c in self._terms.items() if jj == j}

    def with_modes(self, modes) -> "ModalSeries":
        return ModalSeries(self._terms, self.max_degree, modes)

    def __add__(self, other):
        return series_combine(ONE, self, ONE, other)

    def __sub__(self, other):
        return series_combine(ONE, self, -ONE, other)

    def __neg__(self):
        return ModalSeries._build({k: -c for k, c in self._terms.items()}, self.max_degree, self.modes)


def _merge_modes(*series: ModalSeries):
    modes = None
    for s in series:
        if s.modes is None:
            continue
        if modes is None:
            modes = s.modes
        elif modes != s.modes:
            raise ModelMismatch("series live on different mode windows")
    return modes


def identity_series(modes, max_degree: int = 1) -> ModalSeries:
    modes = tuple(sorted(modes))
    return ModalSeries._build(
        {(j, MultiIndex.unit(j)): TimePoly([1]) for j in modes}, max_degree, modes
    )


def linear_series(diag: Mapping[int, CRational], modes=None, max_degree: int = 1) -> ModalSeries:
    """Diagonal linear map ``v -> sum_j diag[j] v_j e_j``."""
    modes = tuple(sorted(modes if modes is not None else diag))
    return ModalSeries._build(
        {(j, MultiIndex.unit(j)): TimePoly([diag[j]]) for j in diag if diag[j]}, max_degree, modes
    )


# -- evaluation --------------------------------------------------------------


def mono_eval(q: MultiIndex, v: Mapping[int, complex]) -> complex:
    out = 1 + 0j
    for m, e in q.entries:
        try:
            x = v[m]
        except KeyError:
            raise MissingMode(f"mode {m} is not present in the state vector") from None
        out *= complex(x) ** e
    return out


def series_eval(S: ModalSeries, t: float, v: Mapping[int, complex]) -> Dict[int, complex]:
    out: Dict[int, complex] = {}
    for (j, q), c in S.terms.items():
        out[j] = out.get(j, 0j) + c(t) * mono_eval(q, v)
    return out


# -- linear structure ---------------------------------------------------------


def series_combine(a, S1: ModalSeries, b, S2: ModalSeries) -> ModalSeries:
    modes = _merge_modes(S1, S2)
    a, b = as_crational(a), as_crational(b)
    out: Dict[Key, TimePoly] = {}
    if a:
        for k, c in S1.terms.items():
            out[k] = c.scale(a)
    if b:
        for k, c in S2.terms.items():
            out[k] = out[k] + c.scale(b) if k in out else c.scale(b)
    return ModalSeries._build(out, max(S1.max_degree, S2.max_degree), modes)


def homogeneous_part(S: ModalSeries, d: int) -> ModalSeries:
    return ModalSeries._build(
        {k: c for k, c in S.terms.items() if k[1].degree == d}, max(d, 1), S.modes
    )


def truncate(S: ModalSeries, max_deg: int) -> ModalSeries:
    return ModalSeries._build(
        {k: c for k, c in S.terms.items() if k[1].degree <= max_deg}, max_deg, S.modes
    )


def time_derivative(S: ModalSeries) -> ModalSeries:
    return ModalSeries._build(
        {k: c.derivative() for k, c in S.terms.items()}, S.max_degree, S.modes
    )


# -- products of scalar polynomials ------------------------------------------


def _poly_add_into(acc: _Poly, q: MultiIndex, c: TimePoly):
    if q in acc:
        s = acc[q] + c
        if s:
            acc[q] = s
        else:
            del acc[q]
    elif c:
        acc[q] = c


def _poly_mul(a: _Poly, b: _Poly, max_deg: int) -> _Poly:
    """Product of two scalar polynomials in v, dropping degree > max_deg at once."""
    out: _Poly = {}
    for qa, ca in a.items():
        da = qa.degree
        for qb, cb in b.items():
            if da + qb.degree > max_deg:
                continue
            _poly_add_into(out, qa + qb, ca * cb)
    return out


def _components(S: ModalSeries) -> Dict[int, _Poly]:
    comps: Dict[int, _Poly] = defaultdict(dict)
    for (j, q), c in S.terms.items():
        comps[j][q] = c
    return comps


def directional_derivative(S: ModalSeries, G: ModalSeries, max_deg: int) -> ModalSeries:
    """``sum_k (dS/dv_k) G_k``, expanded exactly and truncated at ``max_deg``."""
    modes = _merge_modes(S, G)
    g = _components(G)
    out: Dict[Key, TimePoly] = {}
    for (j, q), c in S.terms.items():
        for k, e in q.entries:
            gk = g.get(k)
            if not gk:
                continue
            rest = q.minus_unit(k)
            dr = rest.degree
            base = c.scale(e)
            for qg, cg in gk.items():
                if dr + qg.degree > max_deg:
                    continue
                key = (j, rest + qg)
                val = base * cg
                if key in out:
                    val = out[key] + val
                out[key] = val
    return ModalSeries._build(out, max_deg, modes)


def compose(f: ModalSeries, xi: ModalSeries, max_deg: int) -> ModalSeries:
    """``(t, v) -> f(t, xi(t, v))`` with every product truncated at ``max_deg``.

    ``xi`` must contain its identity part explicitly. Modes missing from ``xi``
    substitute as zero.
    """
    modes = _merge_modes(f, xi)
    comps = _components(xi)
    # xi has no constant term, so a factor of degree e contributes at least e
    powers: Dict[Tuple[int, int], _Poly] = {}

    def power(k: int, e: int) -> _Poly:
        if (k, e) not in powers:
            if e == 1:
                powers[(k, e)] = {q: c for q, c in comps.get(k, {}).items() if q.degree <= max_deg}
            else:
                powers[(k, e)] = _poly_mul(power(k, e - 1), power(k, 1), max_deg)
        return powers[(k, e)]

    out: Dict[Key, TimePoly] = {}
    for (j, q), c in f.terms.items():
        if q.degree > max_deg:
            continue
        prod: _Poly = {MultiIndex._raw(()): c}
        for k, e in q.entries:
            prod = _poly_mul(prod, power(k, e), max_deg)
            if not prod:
                break
        for qq, cc in prod.items():
            key = (j, qq)
            out[key] = out[key] + cc if key in out else cc
    return ModalSeries._build(out, max_deg, modes)
