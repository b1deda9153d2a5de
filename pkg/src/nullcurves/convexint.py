"""Deformation of families of quadric-valued paths with prescribed integrals.

Given paths sigma_p : [0, 1] -> A* (A the null quadric) and a schedule of
target integrals alpha_p^t that starts at the actual integrals and is constant
on a frozen subfamily, :func:`deform_paths` builds a homotopy sigma_p^t that
is fixed at t = 0 and on the frozen subfamily, keeps both endpoints, and has
integrals within epsilon of the targets.  The pipeline is

    convex_blend -> endpoint_splice -> oscillate -> retract_path

Paths are :class:`~nullcurves.domain.DiscretePath` objects; integrals are
trapezoid sums, which are exact for the piecewise-linear interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from . import quadric
from .domain import DiscretePath, trapezoid
from .errors import (
    BadMargin,
    BudgetExceeded,
    Infeasible,
    NullCurveError,
    OutsideRetractionDomain,
    StageError,
)

DEFAULT_T = 16


@dataclass(frozen=True)
class PathFamily:
    paths: tuple
    frozen: frozenset = frozenset()

    def __post_init__(self):
        paths = tuple(self.paths)
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "frozen", frozenset(self.frozen))
        if not paths:
            raise ValueError("empty path family")
        N, n = paths[0].N, paths[0].n
        for p in paths:
            if p.N != N or p.n != n:
                raise ValueError("all paths in a family must share N and n")
            if not np.all(quadric.on_quadric(p.samples)):
                raise ValueError("family paths must lie on the punctured quadric")
        if not self.frozen <= set(range(len(paths))):
            raise ValueError("frozen indices out of range")

    @property
    def N(self) -> int:
        return self.paths[0].N

    @property
    def n(self) -> int:
        return self.paths[0].n

    def __len__(self):
        return len(self.paths)

    def integrals(self) -> np.ndarray:
        return np.array([p.integral() for p in self.paths])


@dataclass(frozen=True)
class TargetSchedule:
    """targets[p, k] is the target integral of path p at t_k = k/T."""

    targets: np.ndarray

    @property
    def T(self) -> int:
        return self.targets.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.T + 1) / self.T

    @classmethod
    def linear(cls, family: PathFamily, final, T: int = DEFAULT_T) -> "TargetSchedule":
        """alpha^t = alpha + t (final - alpha) for free paths, constant for frozen ones."""
        alpha = family.integrals()
        final = np.asarray(final, dtype=complex).reshape(alpha.shape)
        t = np.arange(T + 1) / T
        tg = alpha[:, None, :] + t[None, :, None] * (final - alpha)[:, None, :]
        for q in family.frozen:
            tg[q] = alpha[q]
        return cls(tg)

    def validate(self, family: PathFamily, rtol: float = 1e-12):
        alpha = family.integrals()
        if self.targets.shape[0] != len(family) or self.targets.shape[2] != family.n:
            raise ValueError("schedule shape does not match the family")
        scale = max(1.0, float(np.max(np.abs(alpha))))
        if np.max(np.abs(self.targets[:, 0] - alpha)) > rtol * scale:
            raise ValueError("targets at t = 0 must equal the path integrals")
        for q in family.frozen:
            if np.max(np.abs(self.targets[q] - alpha[q])) > rtol * scale:
                raise ValueError(f"targets of frozen path {q} must stay at its integral")


@dataclass(frozen=True)
class CutoffProfile:
    """Tent in t: 1 at t = 0 and on frozen paths, 0 for t >= width."""

    width: float = 0.25

    def __post_init__(self):
        if not 0 < self.width <= 0.5:
            raise ValueError("cutoff width must lie in (0, 1/2]")

    def __call__(self, t: float, frozen: bool) -> float:
        if frozen:
            return 1.0
        return max(0.0, 1.0 - t / self.width)


@dataclass(frozen=True)
class ShellConfig:
    """Omega = {z : |sum z_j^2| < delta, r0 < |z| < r1}."""

    r0: float
    r1: float
    delta: float

    def __post_init__(self):
        if not 0 < self.r0 < self.r1 or self.delta <= 0:
            raise ValueError("shell needs 0 < r0 < r1 and delta > 0")

    def contains(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        nz = quadric.norm(Z)
        return (np.abs(quadric.residual(Z)) < self.delta) & (nz > self.r0) & (nz < self.r1)

    @property
    def frame_radius(self) -> float:
        return self.r0 + 0.9 * (self.r1 - self.r0)

    def with_delta(self, delta) -> "ShellConfig":
        return ShellConfig(self.r0, self.r1, delta)


@dataclass
class DeformConfig:
    T: int = DEFAULT_T
    cutoff_width: float = 0.25
    margin: float = 1 / 20
    cells: int = 32
    frame_phases: int = 24
    extra_rotations: int = 8
    delta: float = 1e-2
    fine_samples: int = 4096
    max_refinements: int = 6
    max_delta_halvings: int = 8
    seed: int = 0


# ---------------------------------------------------------------------------
# stage 1: convex blend

def convex_blend(family: PathFamily, schedule: TargetSchedule, cutoff: CutoffProfile) -> list:
    """chi*sigma_p + (1 - chi)*alpha_p^t pointwise; out[p][k] is a DiscretePath."""
    out = []
    for p, path in enumerate(family.paths):
        frozen = p in family.frozen
        row = []
        for k, t in enumerate(schedule.times):
            chi = cutoff(t, frozen)
            if chi == 1.0:
                row.append(path)
            else:
                row.append(DiscretePath(chi * path.samples + (1 - chi) * schedule.targets[p, k]))
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# stage 2: endpoint splice

def _pl_eval(samples: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of uniform samples on [0, 1] at u."""
    N = samples.shape[0] - 1
    x = np.clip(u, 0.0, 1.0) * N
    i = np.minimum(np.floor(x).astype(int), N - 1)
    frac = (x - i)[:, None]
    return samples[i] * (1 - frac) + samples[i + 1] * frac


def endpoint_splice(blended: DiscretePath, original: DiscretePath, margin: float = 1 / 20,
                    N_out: Optional[int] = None):
    """Return (spliced path, integral shift).

    On [0, margin] the path runs straight from original(0) to blended(0), then
    follows the blended path reparameterised onto the middle interval, and
    runs straight to original(1) on [1 - margin, 1].  An end whose values
    already agree gets no segment, so a path that already matches is
    returned unchanged.
    """
    if not 0 < margin < 1 / 3:
        raise BadMargin(f"margin {margin} not in (0, 1/3)")
    a0, a1 = original.samples[0], original.samples[-1]
    b0, b1 = blended.samples[0], blended.samples[-1]
    left = not np.array_equal(a0, b0)
    right = not np.array_equal(a1, b1)
    if not left and not right:
        return blended, 0.0
    N_out = blended.N if N_out is None else int(N_out)
    s = np.arange(N_out + 1) / N_out
    eL = margin if left else 0.0
    eR = margin if right else 0.0
    u = (s - eL) / (1 - eL - eR)
    out = _pl_eval(blended.samples, u)
    if left:
        sel = s < eL
        out[sel] = a0 + (s[sel] / eL)[:, None] * (b0 - a0)
    if right:
        sel = s > 1 - eR
        out[sel] = b1 + ((s[sel] - (1 - eR)) / eR)[:, None] * (a1 - b1)
    out[0], out[-1] = a0, a1
    spliced = DiscretePath(out)
    shift = float(np.linalg.norm(spliced.integral() - blended.integral()))
    return spliced, shift


# ---------------------------------------------------------------------------
# stage 3: convex decomposition and oscillation

@dataclass(frozen=True)
class Decomposition:
    weights: np.ndarray  # (k,) nonnegative, sum 1
    points: np.ndarray  # (k, n) on the quadric

    def value(self) -> np.ndarray:
        return self.weights @ self.points


def _random_rotation(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def null_frame(n: int, radius: float, phases: int = 24, extra_rotations: int = 8,
               seed: int = 0) -> np.ndarray:
    """Null vectors radius * e^{i phi} R (1, i, 0, ..., 0)/sqrt(2).

    R runs over the rotations taking (e1, e2) to coordinate pairs (e_j, e_k),
    j != k, plus a few seeded random rotations.
    """
    base = []
    for j in range(n):
        for k in range(n):
            if j != k:
                v = np.zeros(n, dtype=complex)
                v[j], v[k] = 1, 1j
                base.append(v)
    rng = np.random.default_rng(seed)
    e12 = np.zeros(n, dtype=complex)
    e12[0], e12[1] = 1, 1j
    for _ in range(extra_rotations):
        base.append(_random_rotation(rng, n) @ e12)
    base = np.array(base) / math.sqrt(2)
    ph = np.exp(2j * np.pi * np.arange(phases) / phases)
    return radius * (ph[:, None, None] * base[None]).reshape(-1, n)


def convex_decompose(c, shell: ShellConfig, frame_size: int = 24, frame=None,
                     seed: int = 0) -> Decomposition:
    """Write c as a convex combination of null vectors inside the shell."""
    c = np.asarray(c, dtype=complex)
    n = c.shape[0]
    nc = float(np.linalg.norm(c))
    if shell.r0 < nc < shell.r1 and abs(quadric.residual(c)) <= 1e-14 * nc ** 2:
        return Decomposition(np.array([1.0]), c[None].copy())
    if nc <= 1e-14 * shell.r1:
        e = np.zeros(n, dtype=complex)
        e[0], e[1] = 1, 1j
        a = shell.frame_radius * e / math.sqrt(2)
        return Decomposition(np.array([0.5, 0.5]), np.array([a, -a]))
    if frame is None:
        frame = null_frame(n, shell.frame_radius, frame_size, seed=seed)
    w = 10.0 * shell.r1
    A = np.vstack([frame.T.real, frame.T.imag, w * np.ones((1, frame.shape[0]))])
    b = np.concatenate([c.real, c.imag, [w]])
    lam, _ = nnls(A, b, maxiter=50 * A.shape[1])
    keep = lam > 0
    lam, pts = lam[keep], frame[keep]
    lam = lam / lam.sum()
    res = float(np.linalg.norm(lam @ pts - c))
    if res >= 1e-8:
        raise Infeasible(f"no convex decomposition of |c| = {nc:.3g} in the frame "
                         f"(residual {res:.3g}); enlarge the frame or r1")
    return Decomposition(lam, pts)


def _refine(path: DiscretePath, q: int) -> DiscretePath:
    if q == 1:
        return path
    N = path.N * q
    s = np.arange(N + 1) / N
    out = _pl_eval(path.samples, s)
    out[0], out[-1] = path.samples[0], path.samples[-1]
    return DiscretePath(out)


def _allocate(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to total, largest remainders first."""
    raw = weights * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _oscillate_once(path: DiscretePath, shell: ShellConfig, K: int, frame, seed):
    """Cell-by-cell piecewise-constant replacement; returns (path, group ids)."""
    Z = path.samples
    N = path.N
    h = 1.0 / N
    out = np.empty_like(Z)
    out[0], out[-1] = Z[0], Z[-1]
    groups = np.full(N + 1, -1)
    bounds = np.linspace(0, N, K + 1).round().astype(int)
    carry = np.zeros(Z.shape[1], dtype=complex)
    w = np.full(N + 1, h)
    w[0] = w[-1] = h / 2
    keys = {}
    for k in range(K):
        lo, hi = bounds[k], bounds[k + 1] + (1 if k == K - 1 else 0)
        idx = np.arange(lo, hi)
        target = w[idx] @ Z[idx] + carry
        free = idx[(idx != 0) & (idx != N)]
        fixed = idx[(idx == 0) | (idx == N)]
        want = target - (w[fixed] @ Z[fixed] if fixed.size else 0)
        mean = want / (h * free.size)
        dec = convex_decompose(mean, shell, frame=frame, seed=seed)
        counts = _allocate(dec.weights, free.size)
        out[free] = np.repeat(dec.points, counts, axis=0)
        ids = [keys.setdefault(pt.tobytes(), len(keys)) for pt in dec.points]
        groups[free] = np.repeat(ids, counts)
        carry = want - h * (counts @ dec.points)
    return DiscretePath(out), groups


def _absorb_residual(path: DiscretePath, groups, target, iters: int = 6) -> DiscretePath:
    """Rescale each group of equal samples by e^{c_j} so the integral hits ``target``.

    Scaling keeps every sample on the same complex ray, hence on the quadric;
    the minimal-norm c is tiny when many samples share the rounding residue.
    """
    Z = path.samples.copy()
    ids = np.unique(groups[groups >= 0])
    if ids.size == 0:
        return path
    h = 1.0 / path.N
    counts = np.array([np.count_nonzero(groups == g) for g in ids])
    base = np.array([Z[np.argmax(groups == g)] for g in ids])  # (G, n)
    e = target - path.integral()
    c = np.zeros(ids.size, dtype=complex)
    for _ in range(iters):
        J = (h * counts * np.exp(c))[:, None] * base  # (G, n): d integral / d c_j
        F = (h * counts * (np.exp(c) - 1)) @ base - e
        if np.linalg.norm(F) < 1e-15 * max(1.0, np.linalg.norm(target)):
            break
        c = c - np.linalg.lstsq(J.T, F, rcond=None)[0]
    scaled = np.exp(c)[:, None] * base
    for g, v in zip(ids, scaled):
        Z[groups == g] = v
    return DiscretePath(Z)


def oscillate(path: DiscretePath, shell: ShellConfig, K: int = 32, budget: Optional[float] = None,
              frame=None, seed: int = 0, max_refinements: int = 6) -> DiscretePath:
    """Replace a hull-valued path by one whose samples lie in the shell.

    [0, 1] is cut into K cells; in each cell the path visits the points of a
    convex decomposition of the cell mean for sub-durations proportional to
    the weights.  Rounding residue is carried to the next cell, and what is
    left after the last cell is absorbed by slightly rescaling the values.  If ``budget``
    is given the grid is refined by factors of 2 until the integral moves by
    less than the budget.
    """
    if K < 8:
        raise ValueError("need at least K = 8 oscillation cells")
    if np.all(shell.contains(path.samples)):
        return path
    if frame is None:
        frame = null_frame(path.n, shell.frame_radius, seed=seed)
    base = path
    if base.N % K:
        base = _refine(base, K // math.gcd(base.N, K))
    target = base.integral()
    err = math.inf
    out = None
    for _ in range(max_refinements + 1):
        out, groups = _oscillate_once(base, shell, K, frame, seed)
        fixed = _absorb_residual(out, groups, target)
        if np.all(shell.contains(fixed.samples[1:-1])):
            out = fixed
        err = float(np.linalg.norm(out.integral() - target))
        if budget is None or err < budget:
            return out
        base = _refine(base, 2)
    raise BudgetExceeded(f"oscillation error {err:.3g} exceeds budget {budget:.3g}", achieved=err)


# ---------------------------------------------------------------------------
# stage 4: retraction

def retract_path(path: DiscretePath, shell: Optional[ShellConfig] = None, budget: Optional[float] = None):
    """Samplewise retraction onto the quadric; returns (path, integral drift)."""
    Z = path.samples
    # endpoints are kept as given; the family supplies them on the quadric
    if shell is not None and not np.all(shell.contains(Z[1:-1])):
        raise OutsideRetractionDomain("path leaves the shell")
    out = Z.copy()
    out[1:-1] = quadric.retract_many(Z[1:-1])
    res = DiscretePath(out, closed=path.closed)
    drift = float(np.linalg.norm(res.integral() - path.integral()))
    if budget is not None and drift >= budget:
        raise BudgetExceeded(f"retraction drift {drift:.3g} exceeds {budget:.3g}", achieved=drift)
    return res, drift


# ---------------------------------------------------------------------------
# the full deformation

@dataclass
class HomotopyOfPaths:
    family: PathFamily
    schedule: TargetSchedule
    snapshots: list  # snapshots[p][k]
    epsilon: float  # achieved max |integral - target|
    requested_epsilon: float
    shell: ShellConfig
    stage_errors: dict = field(default_factory=dict)

    def conditions(self) -> dict:
        """Recompute the three homotopy conditions directly from the snapshots."""
        fam, sch = self.family, self.schedule
        fixed_ok = True
        ends_ok = True
        worst = 0.0
        worst_res = 0.0
        for p, row in enumerate(self.snapshots):
            src = fam.paths[p].samples
            for k, snap in enumerate(row):
                if k == 0 or p in fam.frozen:
                    fixed_ok &= bool(np.array_equal(snap.samples, src))
                ends_ok &= bool(np.array_equal(snap.samples[0], src[0])
                                and np.array_equal(snap.samples[-1], src[-1]))
                worst = max(worst, float(np.linalg.norm(snap.integral() - sch.targets[p, k])))
                nz = quadric.norm(snap.samples)
                worst_res = max(worst_res, float(np.max(np.abs(quadric.residual(snap.samples)) / nz ** 2)))
        return {
            "fixed_on_initial_and_frozen": fixed_ok,
            "endpoints_fixed": ends_ok,
            "max_integral_error": worst,
            "integral_condition": worst < self.requested_epsilon,
            "max_relative_quadric_residual": worst_res,
        }

    def certificate(self) -> dict:
        cond = self.conditions()
        return {
            "epsilon": self.requested_epsilon,
            "achieved_epsilon": self.epsilon,
            "conditions": cond,
            "stage_errors": self.stage_errors,
            "shell": {"r0": self.shell.r0, "r1": self.shell.r1, "delta": self.shell.delta},
            "parameters": len(self.family),
            "frozen": sorted(self.family.frozen),
            "T": self.schedule.T,
            "pass": bool(cond["fixed_on_initial_and_frozen"] and cond["endpoints_fixed"]
                         and cond["integral_condition"]),
        }


def choose_shell(family: PathFamily, schedule: TargetSchedule, epsilon: float,
                 delta: float = 1e-2, extra=()) -> ShellConfig:
    """Radii around all path values; hull radius large enough for every target."""
    mags = np.concatenate([quadric.norm(p.samples) for p in family.paths])
    tmax = float(np.max(quadric.norm(schedule.targets)))
    for e in extra:
        tmax = max(tmax, float(np.max(quadric.norm(e))))
    n = family.n
    r0 = 0.5 * float(mags.min())
    r1 = max(1.25 * float(mags.max()), 1.5 * math.sqrt(2 * n) * tmax, 2 * r0)
    # a retraction step moves z by about |residual| / (2|z|)
    delta = min(delta, epsilon * r0 / 4)
    return ShellConfig(r0, r1, delta)


def _compensated_targets(family, schedule, cutoff, margin, N_fine):
    """Blend targets beta with integral(splice(blend(beta))) equal to alpha^t.

    The spliced integral is affine in beta with a scalar slope, so two trial
    evaluations determine beta exactly.
    """
    comp = schedule.targets.copy()
    n = family.n
    for p, path in enumerate(family.paths):
        frozen = p in family.frozen
        for k, t in enumerate(schedule.times):
            chi = cutoff(t, frozen)
            if chi == 1.0:
                continue

            def spliced_integral(beta):
                blended = DiscretePath(chi * path.samples + (1 - chi) * beta)
                return endpoint_splice(blended, path, margin, N_fine)[0].integral()

            i0 = spliced_integral(np.zeros(n, dtype=complex))
            e = np.zeros(n, dtype=complex)
            e[0] = 1.0
            slope = (spliced_integral(e) - i0)[0]
            comp[p, k] = (schedule.targets[p, k] - i0) / slope
    return TargetSchedule(comp)


def deform_paths(family: PathFamily, schedule: TargetSchedule, epsilon: float,
                 config: Optional[DeformConfig] = None) -> HomotopyOfPaths:
    """Homotopy fixed at t = 0 and on frozen paths, with fixed endpoints and
    integrals within epsilon of the schedule."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    config = config or DeformConfig()
    schedule.validate(family)
    cutoff = CutoffProfile(config.cutoff_width)
    K = config.cells
    lcm = family.N * K // math.gcd(family.N, K)
    N_fine = lcm * max(1, math.ceil(config.fine_samples / lcm))

    def stage(name, p, k, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except NullCurveError as exc:
            raise StageError(name, (p, float(schedule.times[k])), exc) from exc

    try:
        comp = _compensated_targets(family, schedule, cutoff, config.margin, N_fine)
    except NullCurveError as exc:
        raise StageError("endpoint_splice", None, exc) from exc
    shell = choose_shell(family, schedule, epsilon, config.delta, extra=[comp.targets])
    frame = null_frame(family.n, shell.frame_radius, config.frame_phases,
                       config.extra_rotations, config.seed)
    blended = convex_blend(family, comp, cutoff)
    P = len(family)
    snapshots = [[None] * (schedule.T + 1) for _ in range(P)]
    errs = {"blend_splice": 0.0, "oscillate": 0.0, "retract": 0.0, "total": 0.0}
    budget = epsilon / 4
    for p in range(P):
        src = family.paths[p]
        for k in range(schedule.T + 1):
            if k == 0 or p in family.frozen:
                snapshots[p][k] = src
                continue
            alpha = schedule.targets[p, k]
            tau, _ = stage("endpoint_splice", p, k, endpoint_splice, blended[p][k], src,
                           config.margin, N_fine)
            e_bs = float(np.linalg.norm(tau.integral() - alpha))
            cur = shell
            for _ in range(config.max_delta_halvings + 1):
                osc = stage("oscillate", p, k, oscillate, tau, cur, K, budget, frame,
                            config.seed, config.max_refinements)
                try:
                    out, drift = retract_path(osc, cur, budget)
                    break
                except BudgetExceeded:
                    cur = cur.with_delta(cur.delta / 2)
                except NullCurveError as exc:
                    raise StageError("retract_path", (p, float(schedule.times[k])), exc) from exc
            else:
                raise StageError("retract_path", (p, float(schedule.times[k])),
                                 BudgetExceeded("retraction drift stays above budget"))
            e_osc = float(np.linalg.norm(osc.integral() - tau.integral()))
            total = float(np.linalg.norm(out.integral() - alpha))
            if total >= epsilon:
                raise StageError("deform_paths", (p, float(schedule.times[k])),
                                 BudgetExceeded(f"integral error {total:.3g} >= {epsilon}", achieved=total))
            errs["blend_splice"] = max(errs["blend_splice"], e_bs)
            errs["oscillate"] = max(errs["oscillate"], e_osc)
            errs["retract"] = max(errs["retract"], drift)
            errs["total"] = max(errs["total"], total)
            snapshots[p][k] = out
    return HomotopyOfPaths(family, schedule, snapshots, errs["total"], epsilon, shell, errs)
