"""Command-line entry point: ``modalnf {transform,verify,simulate,manifold,report}``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 internal
consistency failure. Errors are also written to stderr as one JSON record.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .checks import records_json, verify_suite
from .engine import NormalFormResult, run
from .errors import InputError, ModalNFError, ParseError
from .lab import (
    check_conjugacy,
    decay_check,
    integrate,
    invariant_subset_sample,
)
from .problem import ProblemSpec, dump_series, ledger_to_json, load_series, parse_problem, serialize_problem

FIXTURES = ("xi", "F", "R", "R_full")


def _load_problem(path: str) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read problem file: {exc}") from None
    return parse_problem(text)


def _run(spec: ProblemSpec, args) -> NormalFormResult:
    order = args.order if getattr(args, "order", None) else spec.order
    policy = getattr(args, "policy", None) or spec.policy
    return run(spec.model, spec.nonlinearity, order, policy=policy)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _x0(spec: ProblemSpec, args) -> dict:
    if spec.options.get("x0"):
        return dict(spec.options["x0"])
    model = spec.model
    support = spec.options.get("x0_support", "c")
    from .spectral import subspace_modes

    modes = sorted(subspace_modes(model, support))
    rng = np.random.default_rng(int(spec.options.get("seed", 0)))
    z = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    z *= float(spec.options.get("x0_norm", 1e-3)) / np.linalg.norm(z) if len(modes) else 0
    return dict(zip(modes, z))


def cmd_transform(args) -> int:
    spec = _load_problem(args.problem)
    res = _run(spec, args)
    out = Path(args.out)
    _write(out / "xi.json", dump_series(res.xi))
    _write(out / "F.json", dump_series(res.F))
    _write(out / "R.json", dump_series(res.R))
    _write(out / "R_full.json", dump_series(res.R_full))
    _write(out / "ledger.json", ledger_to_json(res))
    print(json.dumps({"p": res.p, "policy": res.policy, "xi_terms": len(res.xi), "F_terms": len(res.F), "out": str(out)}))
    return 0


def _read_fixture(d: Path, name: str):
    p = d / f"{name}.json"
    return load_series(p.read_text()) if p.exists() else None


def cmd_verify(args) -> int:
    spec = _load_problem(args.problem)
    d = Path(args.fixtures)
    xi, F = _read_fixture(d, "xi"), _read_fixture(d, "F")
    if xi is None or F is None:
        raise InputError(f"fixtures directory {d} needs xi.json and F.json")
    ledger_doc = None
    if (d / "ledger.json").exists():
        try:
            ledger_doc = json.loads((d / "ledger.json").read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad ledger: {exc}") from None
    p = args.order or (ledger_doc or {}).get("p") or spec.order
    policy = (ledger_doc or {}).get("policy", spec.policy)
    recs = verify_suite(spec, xi, F, int(p), R_stored=_read_fixture(d, "R_full"), ledger_doc=ledger_doc, policy=policy)
    print(records_json(recs))
    failed = [r.name for r in recs if not r.passed]
    if failed:
        print(json.dumps({"failed": failed}), file=sys.stderr)
        return 1
    return 0


def _simulate(spec: ProblemSpec, res: NormalFormResult, args) -> dict:
    o = spec.options
    t0, t1 = float(o.get("t0", 0.0)), float(o.get("t1", 1.0))
    dt = float(args.dt or o.get("dt", 1e-3))
    x0 = _x0(spec, args)
    traj = integrate(spec.model, res.F, x0, t0, t1, dt)
    d1 = check_conjugacy(spec.model, spec.nonlinearity, res, x0, t0, t1, dt)
    d2 = check_conjugacy(spec.model, spec.nonlinearity, res, x0, t0, t1, dt / 2)
    horizon = float(o.get("horizon", 2.0))
    decay = decay_check(res, spec.model, x0, horizon, dt)
    summary = {
        "dt": dt,
        "conjugacy_defect": d1,
        "conjugacy_defect_half_dt": d2,
        "defect_ratio": d1 / d2 if d2 else None,
        "decay": {
            "ok": decay.ok,
            "max_tilde_norm": decay.max_tilde_norm,
            "bounds": [c.__dict__ for c in decay.checks],
        },
    }
    return {"trajectory": traj, "summary": summary}


def cmd_simulate(args) -> int:
    spec = _load_problem(args.problem)
    res = _run(spec, args)
    sim = _simulate(spec, res, args)
    if args.out:
        _write(Path(args.out) / "trajectory.csv", sim["trajectory"].to_text())
        _write(Path(args.out) / "simulation.json", json.dumps(sim["summary"], indent=1, sort_keys=True) + "\n")
    print(json.dumps(sim["summary"], indent=1, sort_keys=True))
    return 0 if sim["summary"]["decay"]["ok"] else 1


def cmd_manifold(args) -> int:
    spec = _load_problem(args.problem)
    res = _run(spec, args)
    pts = invariant_subset_sample(
        res, spec.model, args.which, args.samples, args.radius, t=args.t, rng=np.random.default_rng(args.seed)
    )
    modes = spec.model.modes
    lines = ["t," + ",".join(f"re[{m}],im[{m}]" for m in modes)]
    for t, _, x in pts:
        lines.append(repr(t) + "," + ",".join(f"{x[m].real!r},{x[m].imag!r}" for m in modes))
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    spec = _load_problem(args.problem)
    start = time.perf_counter()
    res = _run(spec, args)
    build_s = time.perf_counter() - start
    recs = verify_suite(spec, res.xi, res.F, res.p, R_stored=res.R_full, ledger_doc=json.loads(ledger_to_json(res)), policy=res.policy)
    sim = _simulate(spec, res, args)
    report = {
        "inputs": serialize_problem(spec),
        "p": res.p,
        "policy": res.policy,
        "fixtures": {name: json.loads(dump_series(getattr(res, name))) for name in FIXTURES},
        "checks": [r.to_dict() for r in recs],
        "simulation": sim["summary"],
        "timing_s": {"construction": build_s, "total": time.perf_counter() - start},
    }
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    ok = all(r.passed for r in recs) and sim["summary"]["decay"]["ok"]
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modalnf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, order=True):
        p.add_argument("--problem", required=True, help="problem config file")
        if order:
            p.add_argument("--order", type=int, default=None, help="target residual order p")
            p.add_argument("--policy", choices=("csu", "nonresonant"), default=None)

    p = sub.add_parser("transform", help="construct xi_p, F_p, R_p and write fixtures + ledger")
    common(p)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="check stored fixtures against the invariant suite")
    p.add_argument("--problem", required=True)
    p.add_argument("--fixtures", required=True)
    p.add_argument("--order", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="integrate the normal form, conjugacy defect and decay bounds")
    common(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("manifold", help="sample an invariant subset through xi_p")
    common(p)
    p.add_argument("--which", choices=("c", "s", "u", "cs", "cu"), default="c")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--radius", type=float, default=0.01)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_manifold)

    p = sub.add_parser("report", help="everything above bundled into one JSON report")
    common(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ModalNFError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
