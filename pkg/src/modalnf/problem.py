"""Problem files, nonlinearity generators and canonical (de)serialization.

Problem files are INI-style::

    [model]
    modes = -5..5
    eigenvalues = 1 - j^2        # polynomial in j, exact rationals
    eigenvalue.0 = 1             # optional per-mode override, "re", "re+imi"
    alpha = 0
    beta = 3
    gamma = 1                    # or inf
    mu_tilde = 1/20

    [nonlinearity]
    kind = convolution           # or explicit
    b = j*k - k^2
    time_factor = 0, 1/2         # t-coefficients, ascending powers
    # kind = explicit:
    # terms =
    #     2 ; 1:2 ; -1/18, 1/6
    #     0 ; 1:1 -1:1 ; 1, 1

    [run]
    order = 4

Model data must be exact; only ``[run]`` simulation options accept floats.
"""
from __future__ import annotations

import configparser
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .algebra import ModalSeries, MultiIndex, TimePoly
from .engine import POLICIES, NormalFormResult, QuadraticConvolution
from .errors import InputError, ModelInvariantViolation, ParseError
from .scalars import CRational, as_crational, parse_crational, parse_rational
from .spectral import INF, GapParams, SpectralModel

SERIES_FORMAT = "modalnf-series/1"
LEDGER_FORMAT = "modalnf-ledger/1"

_RUN_INT = {"order", "samples", "seed"}
_RUN_FLOAT = {"t0", "t1", "dt", "horizon", "radius", "x0_norm"}
_RUN_STR = {"policy", "which", "x0_support"}


class BPoly:
    """Bivariate polynomial ``sum c_{ab} j^a k^b`` with rational coefficients."""

    _TERM = re.compile(r"(\d+(?:/\d+)?)|([jk])(?:\^(\d+))?|(\*)")

    def __init__(self, coeffs: Dict[Tuple[int, int], Fraction]):
        self.coeffs = {k: Fraction(v) for k, v in coeffs.items() if v}

    @classmethod
    def parse(cls, text: str) -> "BPoly":
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty polynomial")
        if s[0] not in "+-":
            s = "+" + s
        coeffs: Dict[Tuple[int, int], Fraction] = {}
        for sign, body in re.findall(r"([+-])([^+-]+)", s):
            pos, c, a, b = 0, Fraction(1), 0, 0
            prev_star = True  # a term may not open with '*'
            for m in cls._TERM.finditer(body):
                if m.start() != pos:
                    break
                num, var, power, star = m.groups()
                if star and prev_star:
                    break
                pos, prev_star = m.end(), bool(star)
                if num:
                    c *= Fraction(num)
                elif var:
                    e = int(power) if power else 1
                    if var == "j":
                        a += e
                    else:
                        b += e
            if pos != len(body) or prev_star:
                raise ValueError(f"cannot parse polynomial term {body!r}")
            c = -c if sign == "-" else c
            coeffs[(a, b)] = coeffs.get((a, b), Fraction(0)) + c
        if "".join(sign + body for sign, body in re.findall(r"([+-])([^+-]+)", s)) != s:
            raise ValueError(f"cannot parse polynomial {text!r}")
        return cls(coeffs)

    def __call__(self, j: int, k: int = 0) -> Fraction:
        return sum((c * j**a * k**b for (a, b), c in self.coeffs.items()), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, BPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __str__(self):
        if not self.coeffs:
            return "0"
        out = []
        for (a, b), c in sorted(self.coeffs.items()):
            factors = [f"j^{a}" if a > 1 else "j"] if a else []
            factors += [f"k^{b}" if b > 1 else "k"] if b else []
            mag = abs(c)
            lead = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
            out.append(("- " if c < 0 else "+ ") + lead)
        s = " ".join(out)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __repr__(self):
        return f"BPoly({self})"


def generate_quadratic_convolution(b, time_factor: TimePoly, model: SpectralModel) -> ModalSeries:
    """``f_j = time_factor * sum_k b(j, k) x_{j-k} x_k`` over the mode window.

    Both orderings of a pair land on the same multi-index, so a distinct pair
    ``{k, j-k}`` carries ``b(j, k) + b(j, j-k)`` and a square ``{k: 2}`` carries ``b(j, k)``.
    """
    modes = set(model.modes)
    terms: Dict[Tuple[int, MultiIndex], TimePoly] = {}
    for j in model.modes:
        for k in model.modes:
            if j - k not in modes:
                continue
            c = as_crational(b(j, k))
            if not c:
                continue
            key = (j, MultiIndex([(k, 1), (j - k, 1)]))
            val = time_factor.scale(c)
            terms[key] = terms[key] + val if key in terms else val
    return ModalSeries(terms, 2, model.modes)


@dataclass
class ProblemSpec:
    model: SpectralModel
    nonlinearity: ModalSeries
    convolution: Optional[QuadraticConvolution] = None
    order: int = 2
    policy: str = "csu"
    options: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        bad = [(j, q) for (j, q) in self.nonlinearity.terms if q.degree < 2]
        if bad:
            raise ModelInvariantViolation(f"nonlinearity must be O(2); degree-1 term at {bad[0]}")


# -- parsing ---------------------------------------------------------------


def _modes(text: str) -> List[int]:
    text = text.strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return list(range(lo, hi + 1))
    return [int(tok) for tok in re.split(r"[,\s]+", text) if tok]


def _timepoly(text: str) -> TimePoly:
    toks = [tok for tok in text.split(",") if tok.strip()]
    return TimePoly([parse_crational(tok) for tok in toks])


def _bound_or_inf(text: str):
    if text.strip().lower() in ("inf", "infinity", "+inf"):
        return INF
    return parse_rational(text)


def _parse_term_line(line: str) -> Tuple[int, MultiIndex, TimePoly]:
    parts = [p.strip() for p in line.split(";")]
    if len(parts) != 3:
        raise ValueError("expected 'target ; mode:exp ... ; c0, c1, ...'")
    j = int(parts[0])
    q = MultiIndex([tuple(int(x) for x in tok.split(":")) for tok in parts[1].split()])
    return j, q, _timepoly(parts[2])


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    in_sec = False
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("["):
            in_sec = s.strip("[] ").lower() == section
        elif in_sec and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return n
    return None


def parse_problem(text: str) -> ProblemSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc), line=getattr(exc, "lineno", None)) from None

    def field_error(section, key, exc):
        return ParseError(str(exc), line=_line_of(text, section, key), field=f"{section}.{key}")

    for sec in ("model", "nonlinearity"):
        if not cp.has_section(sec):
            raise ParseError(f"missing section [{sec}]")
    m = cp["model"]

    def get(section, key, conv, default=None, required=True):
        if key not in cp[section]:
            if required:
                raise ParseError("missing key", field=f"{section}.{key}")
            return default
        try:
            return conv(cp[section][key])
        except (ValueError, TypeError) as exc:
            raise field_error(section, key, exc) from None

    modes = get("model", "modes", _modes)
    eig: Dict[int, CRational] = {}
    if "eigenvalues" in m:
        poly = get("model", "eigenvalues", BPoly.parse)
        if any(b for (_, b) in poly.coeffs):
            raise field_error("model", "eigenvalues", ValueError("eigenvalue polynomial may only use j"))
        eig = {j: as_crational(poly(j)) for j in modes}
    for key in m:
        if key.startswith("eigenvalue."):
            try:
                eig[int(key.split(".", 1)[1])] = parse_crational(m[key])
            except ValueError as exc:
                raise field_error("model", key, exc) from None
    gap = GapParams(
        get("model", "alpha", parse_rational),
        get("model", "beta", _bound_or_inf),
        get("model", "gamma", _bound_or_inf),
        get("model", "mu_tilde", parse_rational),
    )
    N = get("model", "N", int, required=False)
    model = SpectralModel(modes, eig, gap, N)

    kind = get("nonlinearity", "kind", str.strip, "explicit", required=False)
    conv = None
    if kind == "convolution":
        b = get("nonlinearity", "b", BPoly.parse)
        tf = get("nonlinearity", "time_factor", _timepoly)
        conv = QuadraticConvolution(b, tf)
        f = generate_quadratic_convolution(b, tf, model)
    elif kind == "explicit":
        terms = {}
        raw = cp["nonlinearity"].get("terms", "")
        for n, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            try:
                j, q, c = _parse_term_line(line)
            except ValueError as exc:
                raise field_error("nonlinearity", "terms", exc) from None
            if q.degree < 2:
                raise ModelInvariantViolation(f"nonlinearity must be O(2); degree-{q.degree} term at ({j}, {q})")
            terms[(j, q)] = terms[(j, q)] + c if (j, q) in terms else c
        try:
            f = ModalSeries(terms, max((q.degree for _, q in terms), default=2), model.modes)
        except InputError:
            raise
        except ValueError as exc:
            raise field_error("nonlinearity", "terms", exc) from None
    else:
        raise field_error("nonlinearity", "kind", ValueError(f"unknown kind {kind!r}"))

    options: Dict[str, object] = {}
    order, policy = 2, "csu"
    if cp.has_section("run"):
        for key, val in cp["run"].items():
            try:
                if key in _RUN_INT:
                    options[key] = int(val)
                elif key in _RUN_FLOAT:
                    options[key] = float(val)
                elif key in _RUN_STR:
                    options[key] = val.strip()
                elif key == "x0":
                    options[key] = {
                        int(a): complex(b.strip())
                        for a, b in (tok.split(":", 1) for tok in val.split(",") if tok.strip())
                    }
                else:
                    raise ValueError(f"unknown run option {key!r}")
            except ValueError as exc:
                raise field_error("run", key, exc) from None
        order = int(options.pop("order", 2))
        policy = str(options.pop("policy", "csu"))
        if policy not in POLICIES:
            raise field_error("run", "policy", ValueError(f"policy must be one of {POLICIES}"))
    return ProblemSpec(model, f, conv, order, policy, options)


def serialize_problem(spec: ProblemSpec) -> str:
    model = spec.model
    g = model.gap
    lines = ["[model]", "modes = " + ", ".join(str(j) for j in model.modes)]
    for j in model.modes:
        lines.append(f"eigenvalue.{j} = {model.alpha[j]}")
    lines += [f"alpha = {g.alpha}", f"beta = {g.beta}", f"gamma = {g.gamma}", f"mu_tilde = {g.mu_tilde}", f"N = {model.N}"]
    lines += ["", "[nonlinearity]"]
    if spec.convolution is not None and isinstance(spec.convolution.b, BPoly):
        lines += [
            "kind = convolution",
            f"b = {spec.convolution.b}",
            "time_factor = " + ", ".join(str(c) for c in spec.convolution.time_factor.coeffs),
        ]
    else:
        lines += ["kind = explicit", "terms ="]
        for (j, q), c in spec.nonlinearity.items():
            mono = " ".join(f"{m}:{e}" for m, e in q.entries)
            lines.append(f"    {j} ; {mono} ; " + ", ".join(str(x) for x in c.coeffs))
    lines += ["", "[run]", f"order = {spec.order}", f"policy = {spec.policy}"]
    for key in sorted(spec.options):
        val = spec.options[key]
        if key == "x0":
            val = ", ".join(f"{m}:{complex(z)!r}" for m, z in sorted(val.items()))
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


# -- series fixtures ---------------------------------------------------------


def _crat_record(c: CRational) -> List[str]:
    return [str(c.re), str(c.im)]


def series_to_records(S: ModalSeries) -> list:
    return [
        [j, [[m, e] for m, e in q.entries], [[p, *_crat_record(c)] for p, c in enumerate(poly.coeffs) if c]]
        for (j, q), poly in S.items()
    ]


def dump_series(S: ModalSeries) -> str:
    """Canonical text: header line then one sorted record per line."""
    head = {"format": SERIES_FORMAT, "max_degree": S.max_degree, "modes": list(S.modes) if S.modes else None}
    rows = [json.dumps(r, separators=(",", ":")) for r in series_to_records(S)]
    body = ",\n  ".join(rows)
    return (
        "{\n"
        + f' "header": {json.dumps(head, sort_keys=True)},\n'
        + ' "terms": [\n  '
        + body
        + ("\n ]\n}\n" if rows else "]\n}\n")
    )


def load_series(text: str) -> ModalSeries:
    try:
        doc = json.loads(text)
        head = doc["header"]
        if head.get("format") != SERIES_FORMAT:
            raise ValueError(f"unsupported series format {head.get('format')!r}")
        terms = {}
        for j, q, cs in doc["terms"]:
            top = max((p for p, *_ in cs), default=-1)
            coeffs = [CRational(0)] * (top + 1)
            for p, re_s, im_s in cs:
                coeffs[p] = CRational(parse_rational(re_s), parse_rational(im_s))
            terms[(int(j), MultiIndex([tuple(x) for x in q]))] = TimePoly(coeffs)
        return ModalSeries(terms, head["max_degree"], head.get("modes"))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad series fixture: {exc}") from None


def ledger_to_json(result: NormalFormResult) -> str:
    orders: Dict[str, Dict[str, list]] = {}
    for e in result.ledger:
        rec = {
            "j": e.j,
            "q": [[m, x] for m, x in e.q.entries],
            "mu": _crat_record(e.mu),
            "re_margin": str(e.re_margin),
            "a": [_crat_record(c) for c in e.a.coeffs],
            "xi_hat": [_crat_record(c) for c in e.update.xi_hat.coeffs],
            "F_hat": [_crat_record(c) for c in e.update.F_hat.coeffs],
            "truncation_sensitive": e.boundary,
        }
        slot = orders.setdefault(str(e.order), {"eliminated": [], "kept": []})
        slot["eliminated" if e.eliminated else "kept"].append(rec)
    doc = {"format": LEDGER_FORMAT, "policy": result.policy, "p": result.p, "orders": orders}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def burgers_problem(r, N: int, gap: GapParams, order: int = 4, policy: str = "csu") -> ProblemSpec:
    """Galerkin modes ``-N..N`` of ``u_t = u_xx + r u - (t/2) u_x^2`` on the circle.

    Eigenvalues ``r - j^2``; the quadratic term is ``(t/2) sum_k k (j - k) x_{j-k} x_k``.
    """
    modes = list(range(-N, N + 1))
    model = SpectralModel(modes, {j: as_crational(r) - j * j for j in modes}, gap, N)
    b = BPoly({(1, 1): 1, (0, 2): -1})
    tf = TimePoly([0, Fraction(1, 2)])
    return ProblemSpec(model, generate_quadratic_convolution(b, tf, model), QuadraticConvolution(b, tf), order, policy)
