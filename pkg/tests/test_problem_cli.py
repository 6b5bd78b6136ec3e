import json
import shutil
import subprocess
import sys
from fractions import Fraction as Fr
from pathlib import Path

import pytest

from modalnf.algebra import ModalSeries, MultiIndex, TimePoly
from modalnf.cli import main
from modalnf.errors import ModelInvariantViolation, ParseError
from modalnf.problem import (
    BPoly,
    burgers_problem,
    dump_series,
    generate_quadratic_convolution,
    load_series,
    parse_problem,
    serialize_problem,
)

from conftest import BURGERS_GAP

GOLDEN = Path(__file__).resolve().parent / "golden" / "burgers_r1_p4"

EXPLICIT = """
[model]
modes = -1, 0, 1
eigenvalue.-1 = 0
eigenvalue.0 = -2+i
eigenvalue.1 = 1/100i
alpha = 0
beta = 1
gamma = inf
mu_tilde = 1/2

[nonlinearity]
kind = explicit
terms =
    0 ; 1:1 -1:1 ; 1, -1/2
    1 ; 1:1 0:1 ; 0, 3

[run]
order = 3
x0 = 1:0.001, -1:0.001j
"""


# -- problem files --------------------------------------------------------------


def test_parse_burgers_fixture(burgers_cfg, burgers):
    spec = parse_problem(burgers_cfg.read_text())
    assert spec.model.modes == tuple(range(-5, 6))
    assert spec.model.alpha == burgers.model.alpha
    assert spec.model.gap == BURGERS_GAP
    assert spec.nonlinearity == burgers.nonlinearity
    assert spec.order == 4 and spec.policy == "csu"
    assert spec.options["dt"] == 1e-3 and spec.options["x0_support"] == "c"


def test_parse_explicit_problem():
    spec = parse_problem(EXPLICIT)
    assert spec.model.alpha[0].im == 1 and spec.model.gap.gamma.__class__.__name__ == "_Infinity"
    assert spec.nonlinearity[(0, MultiIndex({1: 1, -1: 1}))] == TimePoly([1, Fr(-1, 2)])
    assert spec.convolution is None
    assert spec.options["x0"] == {1: 0.001, -1: 0.001j}


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda s: s.replace("mu_tilde = 1/2", "mu_tilde = 0.5"), "model.mu_tilde"),
        (lambda s: s.replace("beta = 1", "beta = one"), "model.beta"),
        (lambda s: s.replace("0 ; 1:1 -1:1 ; 1, -1/2", "0 ; 1:1 -1:1"), "nonlinearity.terms"),
        (lambda s: s.replace("order = 3", "order = 3\nspeed = 2"), "run.speed"),
        (lambda s: s.replace("kind = explicit", "kind = magic"), "nonlinearity.kind"),
    ],
)
def test_parse_errors_name_the_field(mutate, field):
    with pytest.raises(ParseError) as exc:
        parse_problem(mutate(EXPLICIT))
    assert exc.value.field == field
    if field != "run.speed":
        assert exc.value.line is not None


def test_parse_rejects_invalid_models():
    with pytest.raises(ParseError):
        parse_problem("[model]\nmodes = 0\n")
    with pytest.raises(ModelInvariantViolation):
        parse_problem(EXPLICIT.replace("mu_tilde = 1/2", "mu_tilde = 2"))
    with pytest.raises(ModelInvariantViolation):
        parse_problem(EXPLICIT.replace("1 ; 1:1 0:1 ; 0, 3", "1 ; 0:1 ; 0, 3"))


def test_problem_round_trip(burgers_cfg):
    for text in (burgers_cfg.read_text(), EXPLICIT):
        spec = parse_problem(text)
        again = parse_problem(serialize_problem(spec))
        assert again.model.alpha == spec.model.alpha and again.model.gap == spec.model.gap
        assert again.nonlinearity == spec.nonlinearity
        assert (again.order, again.policy, again.options) == (spec.order, spec.policy, spec.options)
        assert serialize_problem(again) == serialize_problem(spec)


def test_bpoly_parse_and_print():
    b = BPoly.parse("j*k - k^2")
    assert b(3, 1) == 2 and b(0, -1) == -1
    assert BPoly.parse(str(b)) == b
    assert BPoly.parse("1/2 j^2 k")(2, 3) == 6
    for bad in ("j**k", "*j", "j*", "j+", "2x"):
        with pytest.raises(ValueError):
            BPoly.parse(bad)


# -- convolution generator ---------------------------------------------------------


def test_generator_examples(burgers):
    f = burgers.nonlinearity
    assert f[(2, MultiIndex({1: 2}))] == TimePoly([0, Fr(1, 2)])
    assert f[(0, MultiIndex({1: 1, -1: 1}))] == TimePoly([0, -1])
    zero = generate_quadratic_convolution(lambda j, k: 0, TimePoly([0, 1]), burgers.model)
    assert not zero


def test_generator_symmetry(burgers):
    f = burgers.nonlinearity
    # real Burgers: mode -j mirrors mode j
    for (j, q), c in f.terms.items():
        mirror = MultiIndex({-m: e for m, e in q.entries})
        assert f[(-j, mirror)] == c
    # only pairs inside the window appear
    assert all(abs(m) <= 5 for _, q in f.terms for m in q.support)


# -- fixtures ----------------------------------------------------------------------


def test_series_fixture_rejects_garbage():
    with pytest.raises(ParseError):
        load_series("{}")
    with pytest.raises(ParseError):
        load_series('{"header": {"format": "other/9", "max_degree": 2}, "terms": []}')


def test_golden_fixtures_hold_printed_coefficients():
    xi = load_series((GOLDEN / "xi.json").read_text())
    F = load_series((GOLDEN / "F.json").read_text())
    assert xi[(2, MultiIndex({1: 2}))] == TimePoly([Fr(-1, 18), Fr(1, 6)])
    assert xi[(0, MultiIndex({1: 1, -1: 1}))] == TimePoly([1, 1])
    for s in (1, -1):
        assert F[(s, MultiIndex({-s: 1, s: 2}))] == TimePoly([0, Fr(1, 9), Fr(-1, 3)])


# -- CLI ---------------------------------------------------------------------------


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_transform_reproduces_golden(tmp_path, capsys, burgers_cfg):
    code, out, _ = _cli(capsys, "transform", "--problem", burgers_cfg, "--order", 4, "--out", tmp_path)
    assert code == 0 and json.loads(out)["p"] == 4
    for name in ("xi", "F", "R", "R_full", "ledger"):
        assert (tmp_path / f"{name}.json").read_bytes() == (GOLDEN / f"{name}.json").read_bytes()


def test_verify_golden_passes(capsys, burgers_cfg):
    code, out, _ = _cli(capsys, "verify", "--problem", burgers_cfg, "--fixtures", GOLDEN)
    records = json.loads(out)
    assert code == 0
    assert {r["name"] for r in records} >= {
        "separation",
        "residual-order",
        "residual-consistency",
        "update-identity",
        "elimination-divisor",
        "residual-scaling",
        "oracle-agreement",
    }


@pytest.mark.parametrize(
    "fixture, j, q, expect",
    [
        ("xi", 2, [[1, 2]], {"residual-order", "oracle-agreement"}),
        ("F", 1, [[-1, 1], [1, 2]], {"residual-order"}),
    ],
)
def test_verify_tampered_fixture(tmp_path, capsys, burgers_cfg, fixture, j, q, expect):
    shutil.copytree(GOLDEN, tmp_path / "fx")
    path = tmp_path / "fx" / f"{fixture}.json"
    doc = json.loads(path.read_text())
    for rec in doc["terms"]:
        if rec[0] == j and rec[1] == q:
            rec[2][0][1] = str(Fr(rec[2][0][1]) + Fr(1, 1000))
            break
    else:
        raise AssertionError("target term not found")
    path.write_text(json.dumps(doc))
    code, _, err = _cli(capsys, "verify", "--problem", burgers_cfg, "--fixtures", tmp_path / "fx")
    assert code == 1
    assert expect <= set(json.loads(err)["failed"])


def test_verify_tampered_ledger(tmp_path, capsys, burgers_cfg):
    shutil.copytree(GOLDEN, tmp_path / "fx")
    path = tmp_path / "fx" / "ledger.json"
    doc = json.loads(path.read_text())
    doc["orders"]["2"]["eliminated"][0]["xi_hat"][0][0] = "7"
    path.write_text(json.dumps(doc))
    code, _, err = _cli(capsys, "verify", "--problem", burgers_cfg, "--fixtures", tmp_path / "fx")
    assert code == 1 and json.loads(err)["failed"] == ["update-identity"]


def test_manifold_count(capsys, burgers_cfg):
    code, out, _ = _cli(capsys, "manifold", "--problem", burgers_cfg, "--which", "c", "--samples", 100, "--radius", 0.01)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 101
    assert lines[0].startswith("t,re[-5]")


def test_simulate_writes_outputs(tmp_path, capsys, burgers_cfg):
    code, out, _ = _cli(capsys, "simulate", "--problem", burgers_cfg, "--order", 3, "--out", tmp_path)
    summary = json.loads(out)
    assert code == 0 and summary["decay"]["ok"]
    assert summary["conjugacy_defect"] <= 1e-6
    assert (tmp_path / "trajectory.csv").read_text().count("\n") == 1 + 1001
    assert json.loads((tmp_path / "simulation.json").read_text()) == summary


def test_report_is_deterministic(tmp_path, capsys, burgers_cfg):
    outs = []
    for name in ("a.json", "b.json"):
        code, _, _ = _cli(capsys, "report", "--problem", burgers_cfg, "--order", 3, "--out", tmp_path / name)
        assert code == 0
        doc = json.loads((tmp_path / name).read_text())
        doc.pop("timing_s")
        outs.append(doc)
    assert outs[0] == outs[1]
    assert all(c["passed"] for c in outs[0]["checks"])
    assert set(outs[0]["fixtures"]) == {"xi", "F", "R", "R_full"}


def test_input_errors_exit_2(tmp_path, capsys):
    code, _, err = _cli(capsys, "transform", "--problem", tmp_path / "missing.cfg", "--out", tmp_path)
    assert code == 2 and json.loads(err)["error"] == "InputError"
    bad = tmp_path / "bad.cfg"
    bad.write_text(EXPLICIT.replace("beta = 1", "beta = 0.9"))
    code, _, err = _cli(capsys, "transform", "--problem", bad, "--out", tmp_path)
    rec = json.loads(err)
    assert code == 2 and rec["error"] == "ParseError" and "model.beta" in rec["message"]


def test_explicit_problem_through_cli(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(EXPLICIT)
    code, _, _ = _cli(capsys, "transform", "--problem", cfg, "--out", tmp_path / "fx")
    assert code == 0
    code, _, _ = _cli(capsys, "verify", "--problem", cfg, "--fixtures", tmp_path / "fx")
    assert code == 0


def test_console_script_entry_point(burgers_cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "modalnf.cli", "--version"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and proc.stdout.strip()


def test_burgers_problem_matches_cfg(burgers_cfg):
    spec = burgers_problem(Fr(1), 5, BURGERS_GAP)
    assert parse_problem(burgers_cfg.read_text()).nonlinearity == spec.nonlinearity
    assert isinstance(spec.nonlinearity, ModalSeries)
    assert dump_series(spec.nonlinearity) == dump_series(parse_problem(burgers_cfg.read_text()).nonlinearity)
