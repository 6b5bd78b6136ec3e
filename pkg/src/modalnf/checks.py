"""Named verification checks over stored or freshly computed transforms."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .algebra import ModalSeries, TimePoly
from .engine import direct_oracle_xi3, full_residual_degree, residual, TransformState, verify_separation
from .errors import ParseError
from .lab import DEGENERATE, residual_scaling
from .problem import LEDGER_FORMAT, ProblemSpec
from .scalars import CRational, parse_rational


@dataclass
class CheckRecord:
    name: str
    passed: bool
    margin: Optional[float] = None
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def _crat(rec) -> CRational:
    return CRational(parse_rational(rec[0]), parse_rational(rec[1]))


def _poly(recs) -> TimePoly:
    return TimePoly([_crat(r) for r in recs])


def check_update_identities(ledger_doc: dict, mu_tilde) -> List[CheckRecord]:
    if ledger_doc.get("format") != LEDGER_FORMAT:
        raise ParseError("ledger has an unknown format")
    bad, small, n = [], [], 0
    for order, slot in ledger_doc["orders"].items():
        for kind in ("eliminated", "kept"):
            for rec in slot[kind]:
                n += 1
                mu = _crat(rec["mu"])
                xi_hat, F_hat, a = _poly(rec["xi_hat"]), _poly(rec["F_hat"]), _poly(rec["a"])
                if F_hat + xi_hat.derivative() + xi_hat.scale(mu) != a:
                    bad.append((order, rec["j"], rec["q"]))
                if kind == "eliminated" and not abs(mu.re) > mu_tilde:
                    small.append((order, rec["j"], rec["q"]))
    return [
        CheckRecord("update-identity", not bad, None, f"{n} pairs; failing: {bad[:3]}" if bad else f"{n} pairs"),
        CheckRecord("elimination-divisor", not small, None, f"small divisors: {small[:3]}" if small else ""),
    ]


def verify_suite(
    spec: ProblemSpec,
    xi: ModalSeries,
    F: ModalSeries,
    p: int,
    *,
    R_stored: Optional[ModalSeries] = None,
    ledger_doc: Optional[dict] = None,
    policy: Optional[str] = None,
    n_directions: int = 5,
    seed: int = 0,
) -> List[CheckRecord]:
    model, f = spec.model, spec.nonlinearity
    policy = policy or spec.policy
    out: List[CheckRecord] = []

    out.append(CheckRecord("separation", verify_separation(F, model)))

    state = TransformState(p, xi, F, R_stored)
    R = residual(model, f, xi, F, full_residual_degree(f, state))
    low = [(j, q) for (j, q) in R.terms if q.degree < p]
    out.append(
        CheckRecord(
            "residual-order",
            not low,
            None,
            f"{len(low)} surviving term(s) below degree {p}, e.g. {low[0]}" if low else "",
        )
    )
    if R_stored is not None:
        cut = R_stored.max_degree
        same = homogeneous_part_upto(R, cut) == R_stored
        out.append(CheckRecord("residual-consistency", same, None, "" if same else "stored R differs from recomputed"))

    if ledger_doc is not None:
        out.extend(check_update_identities(ledger_doc, model.gap.mu_tilde))

    rng = np.random.default_rng(seed)
    worst = np.inf
    for t in (0.0, 1.0):
        for _ in range(n_directions):
            d = rng.normal(size=len(model.modes)) + 1j * rng.normal(size=len(model.modes))
            d /= np.linalg.norm(d)
            s = residual_scaling(model, R, dict(zip(model.modes, d)), t)
            worst = min(worst, s)
    ok = worst >= p - 0.1
    out.append(CheckRecord("residual-scaling", bool(ok), float(worst - (p - 0.1)) if worst != DEGENERATE else None,
                           f"min slope {worst:.4f} vs required {p - 0.1}"))

    if spec.convolution is not None and p >= 3:
        oracle = direct_oracle_xi3(model, spec.convolution, policy)
        quad = ModalSeries._build(
            {k: c for k, c in xi.terms.items() if k[1].degree <= 2}, 2, model.modes
        )
        same = quad == oracle
        out.append(CheckRecord("oracle-agreement", same, None, "" if same else "degree-2 transform differs from closed formula"))
    return out


def homogeneous_part_upto(S: ModalSeries, d: int) -> ModalSeries:
    return ModalSeries._build({k: c for k, c in S.terms.items() if k[1].degree <= d}, d, S.modes)


def records_json(records: List[CheckRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=1)
