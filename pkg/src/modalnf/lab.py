"""Numerical checks on constructed normal forms.

Everything here works in double precision on the truncated mode window, in
the plain l2 norm of modal coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .algebra import ModalSeries
from .engine import NormalFormResult
from .errors import InsideViolation, MissingMode, NonFinite
from .spectral import SpectralModel, subspace_modes

__all__ = [
    "CompiledSeries",
    "Trajectory",
    "DomainProbe",
    "integrate",
    "check_conjugacy",
    "residual_scaling",
    "tilde_probe",
    "decay_check",
    "invariant_subset_sample",
    "DEGENERATE",
]

DEGENERATE = math.inf


class CompiledSeries:
    """Dense numpy form of a series over a fixed mode order, for fast evaluation."""

    def __init__(self, S: ModalSeries, modes: Sequence[int]):
        self.modes = tuple(modes)
        pos = {m: i for i, m in enumerate(self.modes)}
        items = S.items()
        n = len(items)
        self.targets = np.zeros(n, dtype=np.intp)
        self.exps = np.zeros((n, len(self.modes)), dtype=np.int64)
        tdeg = max((len(c.coeffs) for _, c in items), default=1)
        self.coeffs = np.zeros((n, max(tdeg, 1)), dtype=complex)
        for i, ((j, q), c) in enumerate(items):
            if j not in pos:
                raise MissingMode(f"target mode {j} not in the state layout")
            self.targets[i] = pos[j]
            for m, e in q.entries:
                if m not in pos:
                    raise MissingMode(f"mode {m} not in the state layout")
                self.exps[i, pos[m]] = e
            for p, x in enumerate(c.coeffs):
                self.coeffs[i, p] = complex(x)
        self.degree = self.exps.sum(axis=1)
        self._tpow = np.arange(self.coeffs.shape[1])
        # one row per (term, variable in its support), for the tilde matrix
        ti, tk = np.nonzero(self.exps)
        self._pair_term, self._pair_var = ti, tk
        red = self.exps[ti].copy()
        red[np.arange(len(ti)), tk] -= 1
        self._pair_exps = red
        self._pair_weight = self.exps[ti, tk] / np.maximum(self.degree[ti], 1)

    def __len__(self):
        return len(self.targets)

    def time_coeffs(self, t: float) -> np.ndarray:
        return self.coeffs @ (float(t) ** self._tpow)

    def monomials(self, v: np.ndarray) -> np.ndarray:
        return np.prod(v[None, :] ** self.exps, axis=1)

    def __call__(self, t: float, v: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.modes), dtype=complex)
        if len(self.targets):
            np.add.at(out, self.targets, self.time_coeffs(t) * self.monomials(v))
        return out

    def tilde_matrix(self, t: float, v: np.ndarray) -> np.ndarray:
        """Matrix M(t, v) with M(t, v) v = S(t, v), from symmetric insertion per term."""
        n = len(self.modes)
        M = np.zeros((n, n), dtype=complex)
        if not len(self.targets):
            return M
        ct = self.time_coeffs(t)[self._pair_term]
        vals = ct * self._pair_weight * np.prod(v[None, :] ** self._pair_exps, axis=1)
        np.add.at(M, (self.targets[self._pair_term], self._pair_var), vals)
        return M


def _layout(model: SpectralModel, v: Mapping[int, complex]) -> np.ndarray:
    extra = set(v) - set(model.modes)
    if extra:
        raise MissingMode(f"state has modes {sorted(extra)} outside the model")
    return np.array([complex(v.get(m, 0)) for m in model.modes], dtype=complex)


def _as_state(model: SpectralModel, x: np.ndarray) -> Dict[int, complex]:
    return {m: complex(x[i]) for i, m in enumerate(model.modes)}


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray  # samples x modes
    modes: tuple
    meta: dict = field(default_factory=dict)

    def state(self, i: int) -> Dict[int, complex]:
        return {m: complex(self.X[i, k]) for k, m in enumerate(self.modes)}

    def norms(self, modes: Optional[Iterable[int]] = None) -> np.ndarray:
        if modes is None:
            return np.linalg.norm(self.X, axis=1)
        idx = [k for k, m in enumerate(self.modes) if m in set(modes)]
        return np.linalg.norm(self.X[:, idx], axis=1)

    def to_text(self) -> str:
        """Delimited export: ``t`` then ``re``/``im`` per mode in model order."""
        head = ["t"] + [f"{part}[{m}]" for m in self.modes for part in ("re", "im")]
        rows = [",".join(head)]
        for ti, x in zip(self.t, self.X):
            vals = [repr(float(ti))]
            for z in x:
                vals += [repr(float(z.real)), repr(float(z.imag))]
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"


def _time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(abs(t1 - t0) / dt))
    if n == 0:
        return np.array([t0])
    return t0 + np.sign(t1 - t0) * dt * np.arange(n + 1)


def integrate(
    model: SpectralModel,
    S: ModalSeries,
    X0: Mapping[int, complex],
    t0: float,
    t1: float,
    dt: float,
    *,
    on_step=None,
) -> Trajectory:
    """Classical RK4 for ``X' = diag(alpha) X + S(t, X)``; ``t1 < t0`` integrates backward."""
    lam = np.array([complex(model.alpha[m]) for m in model.modes])
    field_ = CompiledSeries(S, model.modes)
    ts = _time_grid(t0, t1, dt)
    X = np.empty((len(ts), len(model.modes)), dtype=complex)
    x = _layout(model, X0)
    X[0] = x

    def rhs(t, y):
        return lam * y + field_(t, y)

    if on_step is not None:
        on_step(ts[0], x)
    for i in range(1, len(ts)):
        t, h = ts[i - 1], ts[i] - ts[i - 1]
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e150:
            raise NonFinite(float(ts[i]))
        X[i] = x
        if on_step is not None:
            on_step(ts[i], x)
    return Trajectory(ts, X, model.modes, {"method": "rk4", "dt": dt, "t0": t0, "t1": t1})


def check_conjugacy(
    model: SpectralModel,
    f: ModalSeries,
    result: NormalFormResult,
    X0: Mapping[int, complex],
    t0: float,
    t1: float,
    dt: float,
    *,
    include_residual: bool = True,
) -> float:
    """Max over interior samples of ``|x' - A x - f(t, x) - R(t, X)|`` with ``x = xi(t, X)``.

    ``x'`` is a centred difference on the sample grid, so the defect is O(dt^2).
    """
    traj = integrate(model, result.F, X0, t0, t1, dt)
    lam = np.array([complex(model.alpha[m]) for m in model.modes])
    xi = CompiledSeries(result.xi, model.modes)
    fc = CompiledSeries(f, model.modes)
    R = result.R_full if result.R_full is not None else result.R
    Rc = CompiledSeries(R, model.modes)
    x = np.array([xi(t, X) for t, X in zip(traj.t, traj.X)])
    worst = 0.0
    for i in range(1, len(traj.t) - 1):
        xdot = (x[i + 1] - x[i - 1]) / (traj.t[i + 1] - traj.t[i - 1])
        rhs = lam * x[i] + fc(traj.t[i], x[i])
        if include_residual:
            rhs = rhs + Rc(traj.t[i], traj.X[i])
        worst = max(worst, float(np.linalg.norm(xdot - rhs)))
    return worst


def residual_scaling(
    model: SpectralModel,
    R: ModalSeries,
    direction: Mapping[int, complex],
    t: float,
    eps_grid: Sequence[float] = tuple(np.logspace(-3, -1, 9)),
) -> float:
    """Least-squares slope of ``log|R(t, eps d)|`` against ``log eps``; ``DEGENERATE`` if R vanishes."""
    Rc = CompiledSeries(R, model.modes)
    d = _layout(model, direction)
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    vals = np.array([np.linalg.norm(Rc(t, e * d)) for e in eps_grid])
    if np.all(vals == 0):
        return DEGENERATE
    keep = vals > 0
    slope, _ = np.polyfit(np.log(np.asarray(eps_grid)[keep]), np.log(vals[keep]), 1)
    return float(slope)


@dataclass
class DomainProbe:
    t: float
    v: Dict[int, complex]
    tilde_norm: float
    inside: bool
    matrix: np.ndarray = field(repr=False, default=None)


def tilde_probe(F: ModalSeries, model: SpectralModel, t: float, v: Mapping[int, complex], _compiled=None) -> DomainProbe:
    Fc = _compiled if _compiled is not None else CompiledSeries(F, model.modes)
    x = _layout(model, v)
    M = Fc.tilde_matrix(t, x)
    norm = float(np.linalg.norm(M, 2)) if M.size else 0.0
    return DomainProbe(float(t), dict(v), norm, norm < float(model.gap.mu_tilde), M)


@dataclass
class BoundCheck:
    name: str
    holds: bool
    worst_ratio: float  # max over samples of lhs / rhs; <= 1 + tol when the bound holds
    samples: int


@dataclass
class DecayReport:
    checks: List[BoundCheck]
    max_tilde_norm: float

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)


def _bound_check(name, traj, modes, rate, tol) -> BoundCheck:
    norms = traj.norms(modes)
    n0 = norms[0]
    bound = n0 * np.exp(rate(traj.t))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, norms / bound, np.where(norms > 0, np.inf, 1.0))
    worst = float(np.max(ratio)) if len(ratio) else 1.0
    return BoundCheck(name, bool(np.all(norms <= bound * (1 + tol))), worst, len(norms))


def decay_check(
    result: NormalFormResult,
    model: SpectralModel,
    X0: Mapping[int, complex],
    horizon: float,
    dt: float,
    *,
    tol: float = 1e-6,
) -> DecayReport:
    """Check the exponential bounds on ``X_s``, ``X_u``, ``X_c`` along RK4 trajectories.

    Stable bound forward on ``[0, |horizon|]``, unstable bound backward on
    ``[-|horizon|, 0]``, centre bound both ways when ``X_s(0) = 0`` or ``X_u(0) = 0``.
    Only the directions some applicable bound needs are integrated, so a
    stable start is never pushed backward. Every sample must stay inside the
    trust domain; otherwise ``InsideViolation``.
    """
    F = result.F
    Fc = CompiledSeries(F, model.modes)
    g = model.gap
    mu_t = float(g.mu_tilde)
    worst_tilde = [0.0]

    def guard(t, x):
        M = Fc.tilde_matrix(t, x)
        nrm = float(np.linalg.norm(M, 2)) if M.size else 0.0
        worst_tilde[0] = max(worst_tilde[0], nrm)
        if not nrm < mu_t:
            raise InsideViolation(float(t), nrm, g.mu_tilde)

    x0 = _layout(model, X0)
    pos = {m: i for i, m in enumerate(model.modes)}
    xs0 = any(x0[pos[m]] for m in model.J_s)
    xu0 = any(x0[pos[m]] for m in model.J_u)
    xc0 = any(x0[pos[m]] for m in model.J_c)
    centre = bool(model.J_c) and xc0 and (not xs0 or not xu0)
    H = abs(horizon)
    fwd = integrate(model, F, X0, 0.0, H, dt, on_step=guard) if xs0 or centre else None
    bwd = integrate(model, F, X0, 0.0, -H, dt, on_step=guard) if xu0 or centre else None
    checks = []
    if fwd is not None and model.J_s:
        rate = float(g.beta) - mu_t
        checks.append(_bound_check("stable-forward", fwd, model.J_s, lambda t: -rate * t, tol))
    if bwd is not None and model.J_u:
        rate = float(g.gamma) - mu_t
        checks.append(_bound_check("unstable-backward", bwd, model.J_u, lambda t: rate * t, tol))
    if centre:
        rate = float(g.alpha) + mu_t
        for name, tr in (("centre-forward", fwd), ("centre-backward", bwd)):
            if tr is not None:
                checks.append(_bound_check(name, tr, model.J_c, lambda t: rate * np.abs(t), tol))
    return DecayReport(checks, worst_tilde[0])


def invariant_subset_sample(
    result: NormalFormResult,
    model: SpectralModel,
    which: str,
    samples: int,
    radius: float,
    *,
    t: float | Sequence[float] = 0.0,
    rng: Optional[np.random.Generator] = None,
    max_tries: int = 100,
) -> List[tuple]:
    """Points ``(t, xi(t, v))`` with ``v`` in ``V_which``, ``|v| <= radius``, inside the trust domain."""
    rng = rng if rng is not None else np.random.default_rng(0)
    allowed = subspace_modes(model, which)
    idx = [i for i, m in enumerate(model.modes) if m in allowed]
    xi = CompiledSeries(result.xi, model.modes)
    Fc = CompiledSeries(result.F, model.modes)
    times = np.broadcast_to(np.asarray(t, dtype=float), (samples,)) if np.ndim(t) == 0 else np.asarray(t, float)
    out = []
    for s in range(samples):
        ts = float(times[s % len(times)])
        for _ in range(max_tries):
            v = np.zeros(len(model.modes), dtype=complex)
            if radius > 0 and idx:
                z = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
                z *= radius * rng.uniform() ** (1 / (2 * len(idx))) / np.linalg.norm(z)
                v[idx] = z
            M = Fc.tilde_matrix(ts, v)
            if (np.linalg.norm(M, 2) if M.size else 0.0) < float(model.gap.mu_tilde):
                out.append((ts, _as_state(model, v), _as_state(model, xi(ts, v))))
                break
        else:
            raise InsideViolation(ts, float("nan"), model.gap.mu_tilde)
    return out
