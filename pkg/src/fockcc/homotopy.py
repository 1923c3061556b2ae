"""Predictor-corrector path tracking, total-degree and monodromy solving.

All paths of a run are tracked together: every array carries a leading batch
axis and each path keeps its own step size.  Systems only need
``evaluate_with_jacobian(X) -> (F, J)`` for a batch ``X`` of shape
``(paths, unknowns)`` plus ``degrees`` and ``n_vars``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from math import prod
from typing import Sequence

import numpy as np

from .ccsystem import (
    CCSystem,
    ParamEvaluator,
    assemble_degree_system,
    generator,
    monodromy_seed,
    random_hamiltonian,
    slice_seed,
)
from .errors import CapacityError, SeedError
from .multipoly import PolynomialSystem, aux_var, format_var
from .truncation import _as_levels, dimension, is_linear

ACTIVE, DONE, DIVERGED, FAILED = 0, 1, 2, 3


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-7
    max_step: float = 0.1
    newton_tol: float = 1e-12
    max_corrector_iters: int = 3
    corrector_tol: float = 1e-9
    divergence_cutoff: float = 1e8
    dedup_tol: float = 1e-8
    real_tol: float = 1e-6
    residual_tol: float = 1e-9
    stall_limit: int = 5
    max_loops: int = 100
    max_steps: int = 50_000
    predictor: str = "rk4"
    growth_after: int = 4
    batch_size: int = 4096
    bezout_limit: int = 1_000_000
    total_degree_auto_limit: int = 5000
    endgame_window: float = 1e-4
    endgame_iters: int = 30
    transfer_retries: int = 6
    detour_width: float = 0.05
    collision_tol: float = 1e-6

    def __post_init__(self):
        for name in ("initial_step", "min_step", "newton_tol", "divergence_cutoff", "dedup_tol", "real_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_step >= self.initial_step:
            raise ValueError("min_step must be below initial_step")
        if self.predictor not in ("euler", "rk4"):
            raise ValueError("predictor must be 'euler' or 'rk4'")


# --------------------------------------------------------------------------
# linear algebra helpers

def _solve(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Batched ``J^{-1} F``; singular batch members come back as NaN."""
    try:
        return np.linalg.solve(J, F[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(F.shape, np.nan, dtype=complex)
        for k in range(len(F)):
            try:
                out[k] = np.linalg.solve(J[k], F[k])
            except np.linalg.LinAlgError:
                pass
        return out


def _norm(X: np.ndarray) -> np.ndarray:
    return np.max(np.abs(X), axis=-1) if X.shape[-1] else np.zeros(X.shape[:-1])


# --------------------------------------------------------------------------
# homotopies

class StraightLineHomotopy:
    """``(1 - s) * gamma * G(x) + s * F(x)`` for two systems on the same unknowns."""

    def __init__(self, start, target, gamma: complex = 1.0):
        self.start, self.target, self.gamma = start, target, gamma

    def __call__(self, X, s):
        G, JG = self.start.evaluate_with_jacobian(X)
        F, JF = self.target.evaluate_with_jacobian(X)
        a = (1 - s)[:, None]
        b = s[:, None]
        H = a * self.gamma * G + b * F
        JH = a[:, :, None] * self.gamma * JG + b[:, :, None] * JF
        return H, JH, F - self.gamma * G


class PowerStartSystem:
    """``x_i^{d_i} - 1``."""

    def __init__(self, degrees: Sequence[int]):
        self.degrees = np.asarray(degrees)
        self.n_vars = len(degrees)

    def evaluate_with_jacobian(self, X):
        X = np.atleast_2d(X)
        F = X ** self.degrees - 1
        diag = self.degrees * X ** (self.degrees - 1)
        J = np.zeros(X.shape + (X.shape[1],), dtype=complex)
        idx = np.arange(X.shape[1])
        J[:, idx, idx] = diag
        return F, J

    def evaluate(self, X):
        return self.evaluate_with_jacobian(X)[0]

    def solutions(self) -> np.ndarray:
        roots = [np.exp(2j * np.pi * np.arange(k) / k) for k in self.degrees]
        return np.array(list(product(*roots)), dtype=complex).reshape(-1, self.n_vars)


class ProjectiveChart:
    """Homogenized system restricted to the affine chart ``a . y = 1``.

    ``y = (y0, y1, ..., yN)`` with ``x = y[1:] / y0``; solutions of large
    affine norm stay bounded in ``y``.
    """

    def __init__(self, system, chart: np.ndarray):
        poly = system if isinstance(system, PolynomialSystem) else system.to_polynomial_system()
        h = aux_var(0)
        self.homogeneous = PolynomialSystem([q.homogenize(h) for q in poly.polys], [h] + list(poly.unknowns))
        self.chart = np.asarray(chart, dtype=complex)
        self.n_vars = len(self.chart)
        self.degrees = list(poly.degrees) + [1]

    def evaluate_with_jacobian(self, Y):
        F, J = self.homogeneous.evaluate_with_jacobian(Y)
        row = Y @ self.chart - 1
        F = np.concatenate([F, row[:, None]], axis=1)
        J = np.concatenate([J, np.broadcast_to(self.chart, (len(Y), 1, self.n_vars))], axis=1)
        return F, J


class ProjectivePowerStart:
    """``y_i^{d_i} - y0^{d_i}`` on the same affine chart."""

    def __init__(self, degrees: Sequence[int], chart: np.ndarray):
        self.degrees = np.asarray(degrees)
        self.chart = np.asarray(chart, dtype=complex)
        self.n_vars = len(self.chart)

    def evaluate_with_jacobian(self, Y):
        y0, y = Y[:, :1], Y[:, 1:]
        d = self.degrees
        F = y ** d - y0 ** d
        J = np.zeros((len(Y), self.n_vars, self.n_vars), dtype=complex)
        idx = np.arange(len(d))
        J[:, idx, idx + 1] = d * y ** (d - 1)
        J[:, idx, 0] = -d * y0 ** (d - 1)
        F = np.concatenate([F, (Y @ self.chart - 1)[:, None]], axis=1)
        J[:, -1, :] = self.chart
        return F, J

    def solutions(self) -> np.ndarray:
        X = PowerStartSystem(self.degrees).solutions()
        Y = np.hstack([np.ones((len(X), 1)), X])
        return Y / (Y @ self.chart)[:, None]


class ParameterHomotopy:
    """System whose parameters (Hamiltonian or slices) move on a segment ``Ha -> Hb``."""

    def __init__(self, system, Ha: np.ndarray, Hb: np.ndarray):
        self.system = system
        self.Hpa = system.restrict(Ha)
        self.Hpb = system.restrict(Hb)

    def __call__(self, X, s):
        Fa, Ja = self.system.evaluate_with_jacobian(X, self.Hpa)
        Fb, Jb = self.system.evaluate_with_jacobian(X, self.Hpb)
        a = (1 - s)[:, None]
        b = s[:, None]
        return a * Fa + b * Fb, a[:, :, None] * Ja + b[:, :, None] * Jb, Fb - Fa


# --------------------------------------------------------------------------
# tracker

@dataclass
class TrackResult:
    points: np.ndarray
    status: np.ndarray
    steps: int
    rejected: int
    s: np.ndarray | None = None


def _tangent(hom, X, s):
    _, J, Fs = hom(X, s)
    return -_solve(J, Fs)


def _predict(hom, X, s, h, method):
    k1 = _tangent(hom, X, s)
    if method == "euler":
        return X + h[:, None] * k1
    hh = h[:, None]
    k2 = _tangent(hom, X + 0.5 * hh * k1, s + 0.5 * h)
    k3 = _tangent(hom, X + 0.5 * hh * k2, s + 0.5 * h)
    k4 = _tangent(hom, X + hh * k3, s + h)
    return X + hh * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _correct(hom, X, s, cfg):
    ok = np.ones(len(X), dtype=bool)
    prev = None
    for _ in range(cfg.max_corrector_iters):
        F, J, _ = hom(X, s)
        dx = _solve(J, F)
        X = X - dx
        size = _norm(dx)
        scale = 1 + _norm(X)
        bad = ~np.isfinite(size)
        if prev is not None:
            # demand contraction while the correction is still meaningful
            bad |= (prev > cfg.corrector_tol * scale) & (size > 0.5 * prev)
        ok &= ~bad
        prev = np.where(np.isfinite(size), size, np.inf)
        if np.all(prev <= cfg.corrector_tol * scale):
            break
    ok &= prev <= cfg.corrector_tol * (1 + _norm(X))
    return ok, X


def track(hom, X0: np.ndarray, cfg: TrackerConfig) -> TrackResult:
    """Track every row of ``X0`` from ``s = 0`` to ``s = 1``."""
    X = np.array(X0, dtype=complex, copy=True)
    P = len(X)
    s = np.zeros(P)
    h = np.full(P, cfg.initial_step)
    streak = np.zeros(P, dtype=int)
    status = np.zeros(P, dtype=int)
    steps = rejected = 0
    while True:
        act = np.flatnonzero(status == ACTIVE)
        if not len(act):
            break
        if steps >= cfg.max_steps:
            status[act] = FAILED
            break
        steps += 1
        sa = s[act]
        ha = np.minimum(h[act], 1 - sa)
        with np.errstate(all="ignore"):
            Xp = _predict(hom, X[act], sa, ha, cfg.predictor)
            s1 = np.where(ha >= 1 - sa, 1.0, sa + ha)
            ok, Xc = _correct(hom, Xp, s1, cfg)
        acc = act[ok]
        X[acc] = Xc[ok]
        s[acc] = s1[ok]
        streak[acc] += 1
        grow = acc[streak[acc] >= cfg.growth_after]
        h[grow] = np.minimum(h[grow] * 1.5, cfg.max_step)
        streak[grow] = 0
        rej = act[~ok]
        rejected += len(rej)
        h[rej] /= 2
        streak[rej] = 0
        status[rej[h[rej] < cfg.min_step]] = FAILED
        status[acc[s[acc] >= 1.0]] = DONE
        big = acc[_norm(X[acc]) > cfg.divergence_cutoff]
        status[big] = DIVERGED
    return TrackResult(X, status, steps, rejected, s)


def track_batched(hom, X0: np.ndarray, cfg: TrackerConfig) -> TrackResult:
    parts = [track(hom, X0[k : k + cfg.batch_size], cfg) for k in range(0, len(X0), cfg.batch_size)]
    if not parts:
        return TrackResult(np.zeros((0, X0.shape[1]), dtype=complex), np.zeros(0, dtype=int), 0, 0, np.zeros(0))
    return TrackResult(
        np.concatenate([p.points for p in parts]),
        np.concatenate([p.status for p in parts]),
        sum(p.steps for p in parts),
        sum(p.rejected for p in parts),
        np.concatenate([p.s for p in parts]),
    )


# --------------------------------------------------------------------------
# refinement and solution sets

def newton_refine(system, point, cfg: TrackerConfig = TrackerConfig(), max_iters: int = 20):
    """Damped Newton on a single point; returns ``(point, status)``.

    ``status`` is one of ``"converged"``, ``"singular"`` or ``"max_iters"``.
    """
    x = np.array(point, dtype=complex, copy=True)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    F, J = system.evaluate_with_jacobian(x)
    res = _norm(F)[0]
    status = "max_iters"
    for _ in range(max_iters):
        if res <= cfg.newton_tol:
            status = "converged"
            break
        try:
            dx = np.linalg.solve(J[0], F[0])
        except np.linalg.LinAlgError:
            status = "singular"
            break
        if np.linalg.cond(J[0]) > 1e14:
            status = "singular"
        step = 1.0
        while step > 1e-4:
            trial = x - step * dx
            Ft, Jt = system.evaluate_with_jacobian(trial)
            rt = _norm(Ft)[0]
            if rt <= res or rt <= cfg.newton_tol:
                break
            step /= 2
        else:
            break
        if rt >= res and rt > cfg.newton_tol:
            break
        progress = np.max(np.abs(step * dx))
        x, F, J, res = trial, Ft, Jt, rt
        if status == "singular":
            break
        if progress <= 1e-15 * (1 + np.max(np.abs(x))):
            status = "converged" if res <= 1e3 * cfg.newton_tol else status
            break
    else:
        if res <= cfg.newton_tol:
            status = "converged"
    return (x[0] if single else x), status


def scaled_residual(system, X: np.ndarray, F: np.ndarray) -> np.ndarray:
    """``|F(x)| / (1 + |x|)^deg``: a backward error that stays meaningful for large points."""
    deg = max(max(system.degrees), 1)
    return _norm(F) / (1 + _norm(X)) ** deg


def _refine_batch(system, X, iters=30):
    """Newton on every row until its update is at round-off level."""
    X = np.array(X, dtype=complex, copy=True)
    live = np.arange(len(X))
    with np.errstate(all="ignore"):
        for _ in range(iters):
            if not len(live):
                break
            F, J = system.evaluate_with_jacobian(X[live])
            dx = _solve(J, F)
            good = np.all(np.isfinite(dx), axis=1)
            X[live[good]] -= dx[good]
            moving = _norm(dx) > 1e-14 * (1 + _norm(X[live]))
            live = live[good & moving]
        F, J = system.evaluate_with_jacobian(X)
    return X, F, J


def deduplicate(X: np.ndarray, tol: float) -> np.ndarray:
    """Indices of pairwise distinct rows, relative tolerance ``tol``."""
    keep: list[int] = []
    if not len(X):
        return np.array(keep, dtype=int)
    order = np.lexsort((np.round(X[:, 0].imag, 6), np.round(X[:, 0].real, 6)))
    kept = np.zeros((0, X.shape[1]), dtype=complex)
    for k in order:
        x = X[k]
        if len(kept):
            dist = np.max(np.abs(kept - x), axis=1)
            if np.any(dist <= tol * (1 + np.max(np.abs(x)))):
                continue
        kept = np.vstack([kept, x])
        keep.append(k)
    return np.array(keep, dtype=int)


@dataclass
class SolutionSet:
    points: np.ndarray
    residuals: np.ndarray
    conditions: np.ndarray
    real: np.ndarray
    unknowns: list = field(default_factory=list)
    diverged: int = 0
    failed: int = 0
    paths: int = 0
    seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_finite(self) -> int:
        return len(self.points)

    @property
    def n_real(self) -> int:
        return int(np.sum(self.real))

    def summary(self) -> dict:
        return {"finite": self.n_finite, "real": self.n_real, "diverged": self.diverged,
                "failed": self.failed, "paths": self.paths, "seconds": round(self.seconds, 3), **self.meta}

    def to_json(self) -> str:
        data = self.summary()
        data.pop("seconds")
        data["unknowns"] = [format_var(v) for v in self.unknowns]
        data["solutions"] = [
            {"point": [[z.real, z.imag] for z in p], "residual": float(r), "real": bool(re_)}
            for p, r, re_ in zip(self.points, self.residuals, self.real)
        ]
        return json.dumps(data, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        names = [format_var(v) for v in self.unknowns] or [f"x{k}" for k in range(self.points.shape[1] if len(self.points) else 0)]
        w.writerow([f"{nm}_{part}" for nm in names for part in ("re", "im")] + ["residual", "real"])
        for p, r, re_ in zip(self.points, self.residuals, self.real):
            w.writerow([f"{v:.16g}" for z in p for v in (z.real, z.imag)] + [f"{r:.3e}", int(re_)])
        return buf.getvalue()


def _sorted_points(X: np.ndarray) -> np.ndarray:
    if not len(X):
        return np.arange(0)
    key = np.round(X, 8)
    return np.lexsort(tuple(np.concatenate([key.imag, key.real], axis=1).T[::-1]))


def solution_set(system, X: np.ndarray, status: np.ndarray, cfg: TrackerConfig, unknowns=None,
                 seconds: float = 0.0, meta: dict | None = None) -> SolutionSet:
    finite = np.flatnonzero(status == DONE)
    diverged = int(np.sum(status == DIVERGED))
    failed = int(np.sum(status == FAILED))
    Xf, F, J = _refine_batch(system, X[finite]) if len(finite) else (np.zeros((0, X.shape[1]), complex), None, None)
    if len(Xf):
        res = scaled_residual(system, Xf, F)
        small = _norm(Xf) <= cfg.divergence_cutoff
        good = np.isfinite(res) & (res <= cfg.residual_tol) & small
        diverged += int(np.sum(~small))
        failed += int(np.sum(~good & small))
        Xf, res, J = Xf[good], res[good], J[good]
    else:
        res = np.zeros(0)
    keep = deduplicate(Xf, cfg.dedup_tol)
    Xf, res = Xf[keep], res[keep]
    conds = np.array([np.linalg.cond(J[k]) for k in keep]) if len(keep) else np.zeros(0)
    order = _sorted_points(Xf)
    Xf, res, conds = Xf[order], res[order], conds[order]
    real = np.max(np.abs(Xf.imag), axis=1) <= cfg.real_tol * (1 + np.max(np.abs(Xf), axis=1)) if len(Xf) else np.zeros(0, bool)
    return SolutionSet(Xf, res, conds, real, list(unknowns or []), diverged, failed, len(X), seconds, dict(meta or {}))


# --------------------------------------------------------------------------
# solvers

def bezout_number(system) -> int:
    return prod(system.degrees)


def _endgame(system, result: TrackResult, cfg: TrackerConfig) -> np.ndarray:
    """Finish paths that stalled just short of the target with plain Newton.

    Paths heading to large, ill-conditioned solutions hit ``min_step`` a few
    ulps before ``s = 1``; their endpoints still lie in the target basin.
    """
    status = result.status.copy()
    if result.s is None:
        return status
    near = np.flatnonzero((status == FAILED) & (1 - result.s < cfg.endgame_window))
    if not len(near):
        return status
    Y, F, _ = _refine_batch(system, result.points[near], iters=cfg.endgame_iters)
    ok = np.isfinite(scaled_residual(system, Y, F)) & (scaled_residual(system, Y, F) <= cfg.residual_tol)
    result.points[near[ok]] = Y[ok]
    status[near[ok]] = DONE
    return status


def _dehomogenize(result: TrackResult, cfg: TrackerConfig) -> tuple[np.ndarray, np.ndarray]:
    Y = result.points
    status = result.status.copy()
    y0 = Y[:, 0]
    at_inf = np.abs(y0) * cfg.divergence_cutoff <= np.max(np.abs(Y[:, 1:]), axis=1)
    status[(status == DONE) & at_inf] = DIVERGED
    with np.errstate(all="ignore"):
        X = np.where(at_inf[:, None], np.nan, Y[:, 1:] / np.where(at_inf, 1, y0)[:, None])
    return X, status


def total_degree_solve(system, cfg: TrackerConfig = TrackerConfig(), seed: int = 0,
                       projective: bool = True) -> SolutionSet:
    """Track ``prod(deg f_i)`` paths from ``x_i^{d_i} = 1`` with a random gamma.

    By default the paths run on a random affine chart of projective space, so
    solutions of large norm and paths going to infinity stay bounded.
    """
    t0 = time.perf_counter()
    degrees = list(system.degrees)
    if len(degrees) != system.n_vars:
        raise ValueError("total-degree homotopy needs a square system")
    bez = prod(degrees)
    if bez > cfg.bezout_limit:
        raise CapacityError(f"Bezout number {bez} exceeds {cfg.bezout_limit}; use monodromy_solve")
    rng = generator(seed)
    gamma = np.exp(2j * np.pi * rng.uniform())
    if projective:
        chart = rng.normal(size=len(degrees) + 1) + 1j * rng.normal(size=len(degrees) + 1)
        start = ProjectivePowerStart(degrees, chart)
        target = ProjectiveChart(system, chart)
        result = track_batched(StraightLineHomotopy(start, target, gamma), start.solutions(), cfg)
        result.status = _endgame(target, result, cfg)
        points, status = _dehomogenize(result, cfg)
    else:
        start = PowerStartSystem(degrees)
        result = track_batched(StraightLineHomotopy(start, system, gamma), start.solutions(), cfg)
        points, status = result.points, _endgame(system, result, cfg)
    return solution_set(system, points, status, cfg, getattr(system, "unknowns", None),
                        time.perf_counter() - t0,
                        {"method": "total-degree", "bezout": bez, "steps": result.steps})


def _collided(X: np.ndarray, mask: np.ndarray, tol: float) -> np.ndarray:
    """Rows selected by ``mask`` that lie within ``tol`` (relative) of another selected row."""
    out = np.zeros(len(X), dtype=bool)
    idx = np.flatnonzero(mask)
    Y = X[idx]
    for a, k in enumerate(idx):
        dist = np.max(np.abs(Y - Y[a]), axis=1)
        dist[a] = np.inf
        out[k] = np.any(dist <= tol * (1 + np.max(np.abs(Y[a]))))
    return out


def _merge(known: np.ndarray, new: np.ndarray, tol: float) -> np.ndarray:
    if not len(new):
        return known
    allp = np.vstack([known, new]) if len(known) else new
    keep = deduplicate(allp, tol)
    # keep the already known points in their positions
    keep = np.sort(keep)
    return allp[keep]


def _segment(system, X, Ha, Hb, cfg):
    if not len(X):
        return X
    res = track_batched(ParameterHomotopy(system, Ha, Hb), X, cfg)
    Y = res.points[res.status == DONE]
    if len(Y):
        Y, F, _ = _refine_batch(system.with_hamiltonian(Hb), Y)
        Y = Y[scaled_residual(system, Y, F) <= cfg.residual_tol]
    return Y


def _transfer(system, sols, base, target, cfg, rng):
    """Move solutions from ``base`` to ``target``; returns ``(points, status, retried)``."""
    final_sys = system.with_hamiltonian(target)
    res = track_batched(ParameterHomotopy(system, base, target), sols, cfg)
    points, status = res.points, _endgame(final_sys, res, cfg)
    retried = 0
    # Paths that fail, or land where another path already landed, go again
    # through a thin triangle around the straight segment.  A detour may apply
    # a monodromy permutation, so an endpoint is only accepted if it is new;
    # the count of distinct endpoints never decreases.
    for k in range(cfg.transfer_retries):
        lost = np.flatnonzero((status != DONE) | _collided(points, status == DONE, cfg.collision_tol))
        if not len(lost):
            break
        retried += len(lost)
        mid = 0.5 * (base + target) + cfg.detour_width * 2**k * system.random_parameters(rng)
        first = track_batched(ParameterHomotopy(system, base, mid), sols[lost], cfg)
        through = lost[first.status == DONE]
        if not len(through):
            continue
        second = track_batched(ParameterHomotopy(system, mid, target), first.points[first.status == DONE], cfg)
        ok = _endgame(final_sys, second, cfg) == DONE
        for idx, y in zip(through[ok], second.points[ok]):
            others = (status == DONE) & (np.arange(len(points)) != idx)
            dist = np.max(np.abs(points[others] - y), axis=1) if others.any() else np.array([np.inf])
            if np.all(dist > cfg.collision_tol * (1 + np.max(np.abs(y)))):
                points[idx] = y
                status[idx] = DONE
    return points, status, retried


def _loops(system, sols, base, cfg, rng, goal=None):
    """Triangle loops at ``base`` until ``cfg.stall_limit`` loops add nothing or ``goal`` is reached."""
    stall = loops = 0
    history = [len(sols)]
    while stall < cfg.stall_limit and loops < cfg.max_loops and (goal is None or len(sols) < goal):
        loops += 1
        H1 = system.random_parameters(rng)
        H2 = system.random_parameters(rng)
        Y = _segment(system, sols, base, H1, cfg)
        Y = _segment(system, Y, H1, H2, cfg)
        Y = _segment(system, Y, H2, base, cfg)
        before = len(sols)
        sols = _merge(sols, Y, cfg.dedup_tol)
        stall = 0 if len(sols) > before else stall + 1
        history.append(len(sols))
    return sols, loops, history


def monodromy_solve(system, seed, target: np.ndarray | None = None,
                    cfg: TrackerConfig = TrackerConfig(), loop_seed: int = 0) -> SolutionSet:
    """Populate the solutions at the seed Hamiltonian by triangle loops.

    ``seed`` is a :class:`MonodromySeed`.  Stops after ``cfg.stall_limit``
    consecutive loops without a new solution, then moves every solution to
    ``target`` (default: the system's own Hamiltonian) by a parameter homotopy.
    If fewer distinct solutions arrive than left, loops resume at ``target``
    until the count is restored or they stall.
    """
    t0 = time.perf_counter()
    base = np.asarray(seed.hamiltonian)
    x0 = np.asarray(seed.point)
    based = system.with_hamiltonian(base)
    if np.max(np.abs(based.evaluate(x0))) > 1e-8:
        raise SeedError("seed point does not solve the system at the seed Hamiltonian")
    sols = _refine_batch(based, x0[None, :])[0]
    rng = generator(loop_seed)
    sols, loops, history = _loops(system, sols, base, cfg, rng)
    target = system.parameters if target is None else np.asarray(target)
    final_sys = system.with_hamiltonian(target)
    points, status, retried = _transfer(system, sols, base, target, cfg, rng)
    meta = {"method": "monodromy", "loops": loops, "base_count": len(sols), "history": history,
            "retried": retried}
    found = solution_set(final_sys, points, status, cfg)
    if found.n_finite < len(sols):
        more, extra, hist = _loops(system, found.points, target, cfg, rng, goal=len(sols))
        meta.update(target_loops=extra, target_history=hist)
        points = np.vstack([points[status != DONE], more]) if np.any(status != DONE) else more
        status = np.concatenate([status[status != DONE], np.full(len(more), DONE)])
    return solution_set(final_sys, points, status, cfg, system.unknowns, time.perf_counter() - t0, meta)


# --------------------------------------------------------------------------
# reports

@dataclass
class CCDegreeReport:
    d: int
    n: int
    sigma: str
    dimension: int
    ccdeg: int | None
    counts: list
    n_real: list
    method: str
    seeds: list
    consensus: bool
    timings: list
    details: list = field(default_factory=list)

    def to_json(self) -> str:
        data = asdict(self)
        data.pop("timings")
        data["details"] = _details_json(self.details)
        return json.dumps(data, sort_keys=True, default=str)


def linear_cc_solutions(system: CCSystem) -> np.ndarray:
    """Solutions for a linear level set from the principal eigenproblem.

    Each eigenvector on the projected coordinates is scaled so that the
    reference coordinate is 1, then pulled back to amplitudes by the inverse
    map.
    """
    from .expparam import inverse_coordinate
    from .combinatorics import first_n
    from .multipoly import psi_var

    proj = system.projection
    H = system.H[np.ix_(proj, proj)]
    vals, vecs = np.linalg.eigh(H) if np.allclose(H, np.conj(H.T)) else np.linalg.eig(H)
    D = first_n(system.d)
    iD = proj.index(D)
    inverse = {v: inverse_coordinate(_coord_of(v, system.d), system.d, system.n, "psi")
               for v in system.unknowns[1:]}
    out = []
    for lam, vec in zip(vals, vecs.T):
        if abs(vec[iD]) < 1e-12:
            continue
        vec = vec / vec[iD]
        point = {psi_var(J): vec[k] for k, J in enumerate(proj)}
        point.update({psi_var(J): 0.0 for J in range(1 << system.n) if psi_var(J) not in point})
        t = [inverse[v].evaluate(point) for v in system.unknowns[1:]]
        out.append([lam] + t)
    return np.array(out, dtype=complex).reshape(-1, system.n_vars)


def _coord_of(v, d: int) -> int:
    from .combinatorics import first_n

    _, I, B = v
    return (first_n(d) & ~I) | B


def _details_json(details: list) -> list:
    return [{k: v for k, v in det.items() if k != "seconds"} for det in details]


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _cc_one(d, n, sigma, ev, linear, cfg, method, s):
    t0 = time.perf_counter()
    H = random_hamiltonian(n, s).matrix
    system = CCSystem(ev, H)
    if method == "eigen" or (method == "auto" and linear):
        X = linear_cc_solutions(system)
        F = system.evaluate(X) if len(X) else np.zeros((0, 1))
        ok = _norm(F) <= 1e-8 * (1 + _norm(X)) if len(X) else np.zeros(0, bool)
        X = X[ok]
        n_real = int(np.sum(np.max(np.abs(X.imag), axis=1) <= cfg.real_tol)) if len(X) else 0
        detail = {"method": "eigen", "max_residual": float(np.max(_norm(F))) if len(F) else 0.0}
        return len(X), n_real, "eigen", detail, time.perf_counter() - t0
    if method == "total-degree" or (method == "auto" and bezout_number(system) <= cfg.total_degree_auto_limit):
        used = "total-degree"
        sol = total_degree_solve(system, cfg, seed=s)
    else:
        used = "monodromy"
        start = monodromy_seed(d, n, sigma, seed=s, evaluator=ev)
        sol = monodromy_solve(system, start, H, cfg, loop_seed=s)
    return sol.n_finite, sol.n_real, used, sol.summary(), time.perf_counter() - t0


def cc_degree(d: int, n: int, sigma, cfg: TrackerConfig = TrackerConfig(), seeds: Sequence[int] = (0, 1, 2),
              method: str = "auto", threads: int = 1) -> CCDegreeReport:
    """CC degree by consensus over several random real Hamiltonians.

    ``method`` is ``"auto"``, ``"eigen"`` (linear level sets only),
    ``"total-degree"`` or ``"monodromy"``.  ``auto`` picks the eigenproblem for
    linear level sets, total degree up to ``cfg.total_degree_auto_limit``
    paths and monodromy beyond.
    """
    if method not in ("auto", "eigen", "total-degree", "monodromy"):
        raise ValueError(f"unknown method {method!r}")
    sigma = _as_levels(sigma).check(d, n)
    dim = dimension(sigma, d, n)
    ev = ParamEvaluator(d, n, sigma)
    linear = is_linear(sigma, d, n)
    if method == "eigen" and not linear:
        raise ValueError("the eigen method needs a linear level set")
    runs = _map(lambda s: _cc_one(d, n, sigma, ev, linear, cfg, method, s), seeds, threads)
    counts = [r[0] for r in runs]
    consensus = len(set(counts)) == 1
    return CCDegreeReport(d, n, str(sigma), dim, counts[0] if consensus else None, counts,
                          [r[1] for r in runs], "/".join(sorted({r[2] for r in runs})), list(seeds),
                          consensus, [r[4] for r in runs], [r[3] for r in runs])


@dataclass
class VarietyDegreeReport:
    d: int
    n: int
    sigma: str
    dimension: int
    degree: int | None
    counts: list
    method: str
    seeds: list
    consensus: bool
    details: list = field(default_factory=list)

    def to_json(self) -> str:
        data = asdict(self)
        data["details"] = _details_json(self.details)
        return json.dumps(data, sort_keys=True, default=str)


def _vdeg_one(sigma, d, n, ev, cfg, method, s):
    system = assemble_degree_system(sigma, d, n, s, evaluator=ev)
    if method == "total-degree" or (method == "auto" and bezout_number(system) <= cfg.total_degree_auto_limit):
        return total_degree_solve(system, cfg, seed=s), "total-degree"
    start = slice_seed(system, s)
    return monodromy_solve(system, start, system.parameters, cfg, loop_seed=s), "monodromy"


def variety_degree(d: int, n: int, sigma, cfg: TrackerConfig = TrackerConfig(),
                   seeds: Sequence[int] = (0, 1), method: str = "auto", threads: int = 1) -> VarietyDegreeReport:
    """Degree of ``V_sigma`` as the number of chart points on random linear sections.

    ``auto`` uses total degree while the Bezout number is at most
    ``cfg.total_degree_auto_limit`` and monodromy over the slices beyond.
    """
    if method not in ("auto", "total-degree", "monodromy"):
        raise ValueError(f"unknown method {method!r}")
    sigma = _as_levels(sigma).check(d, n)
    ev = ParamEvaluator(d, n, sigma)
    runs = _map(lambda s: _vdeg_one(sigma, d, n, ev, cfg, method, s), seeds, threads)
    counts = [sol.n_finite for sol, _ in runs]
    consensus = len(set(counts)) == 1
    return VarietyDegreeReport(d, n, str(sigma), dimension(sigma, d, n), counts[0] if consensus else None,
                               counts, "/".join(sorted({m for _, m in runs})), list(seeds), consensus,
                               [sol.summary() for sol, _ in runs])
