"""Period-dominating sprays and exact period correction.

A spray deforms a quadric-valued map f by composing flows of complete vector
fields tangent to the quadric,

    Psi(x, zeta) = phi^1_{zeta_1 h_1(x)} o ... o phi^N_{zeta_N h_N(x)} (f(x)),

with rotation flows in coordinate planes and the scaling flow, and Laurent
monomial coefficients h_j.  Each flow is a linear map of C^n preserving the
quadric exactly, so Psi(x, zeta) stays on the quadric for every zeta.  If the
period map zeta -> P(Psi(., zeta)) is submersive at 0, Newton's method finds
zeta* with prescribed periods.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import quadric
from .convexint import DeformConfig, PathFamily, TargetSchedule, deform_paths
from .domain import DEFAULT_QUADRATURE_N, DiscretePath, sample_loop
from .errors import (
    BallExceeded,
    ClassChanged,
    FlatData,
    FlatOnLoop,
    NoConvergence,
    NonzeroRealPeriods,
    NotOnQuadric,
    NullCurveError,
    RankDeficient,
    SamplesTooCoarse,
    StageError,
)
from .weierstrass import (
    PeriodVector,
    _segment_integral,
    classify,
    loop_sample_path,
    map_dimension,
    periods,
)

logger = logging.getLogger(__name__)

ROTATION = "rotation"
SCALING = "scaling"
DEFAULT_BALL_RADIUS = 8.0
REAL_PERIOD_TOL = 1e-6


@dataclass(frozen=True)
class TangentFlow:
    """Rotation in the (j, k) coordinate plane or the scaling z -> e^t z."""

    kind: str
    j: int = 0
    k: int = 1

    def __post_init__(self):
        if self.kind not in (ROTATION, SCALING):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.kind == ROTATION and self.j == self.k:
            raise ValueError("rotation needs two distinct coordinates")

    @classmethod
    def rotation(cls, j, k) -> "TangentFlow":
        return cls(ROTATION, j, k)

    @classmethod
    def scaling(cls) -> "TangentFlow":
        return cls(SCALING, 0, 0)

    def act(self, t, Z) -> np.ndarray:
        """Apply the flow for times ``t`` (broadcast over the leading axes of Z)."""
        t = np.asarray(t, dtype=complex)
        if self.kind == SCALING:
            return Z * np.exp(t)[..., None]
        c, s = np.cos(t), np.sin(t)
        out = Z.copy()
        a, b = Z[..., self.j], Z[..., self.k]
        out[..., self.j] = a * c - b * s
        out[..., self.k] = a * s + b * c
        return out

    def __str__(self):
        return "scaling" if self.kind == SCALING else f"rotation({self.j + 1},{self.k + 1})"


def apply_flow(flow: TangentFlow, t, z, check: bool = True) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if check and not np.all(quadric.on_quadric(z)):
        raise NotOnQuadric("flows are applied to points of the punctured quadric")
    return flow.act(t, z)


@dataclass(frozen=True)
class SprayConfig:
    """Flows with coefficients h_j(x) = (x - center)^m_j, optionally times (x - anchor)^order."""

    flows: tuple
    exponents: tuple
    center: complex = 0j
    ball_radius: float = DEFAULT_BALL_RADIUS
    anchor: Optional[complex] = None
    anchor_order: int = 0

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        object.__setattr__(self, "exponents", tuple(int(m) for m in self.exponents))
        if len(self.flows) != len(self.exponents):
            raise ValueError("one exponent per flow")
        if not self.flows:
            raise ValueError("a spray needs at least one flow")

    @property
    def size(self) -> int:
        return len(self.flows)

    def coefficients(self, x) -> np.ndarray:
        """h_j(x) stacked on a new leading axis."""
        x = np.asarray(x, dtype=complex)
        d = x - self.center
        H = np.stack([d ** m for m in self.exponents])
        if self.anchor is not None and self.anchor_order:
            H = H * (x - self.anchor) ** self.anchor_order
        return H

    def enlarged(self, n: Optional[int] = None) -> "SprayConfig":
        """Twice as many flows and one more monomial degree on each allowed side."""
        if n is None:
            n = max(max(f.j, f.k) for f in self.flows) + 1
        kinds = _flow_kinds(n)
        lo, hi = min(self.exponents), max(self.exponents)
        # negative powers only if already allowed: they need a puncture at the center
        exps = list(range(lo - 1 if lo < 0 else lo, hi + 2))
        N = 2 * self.size
        flows = [kinds[j % len(kinds)] for j in range(N)]
        exponents = [exps[j % len(exps)] for j in range(N)]
        return SprayConfig(tuple(flows), tuple(exponents), self.center, self.ball_radius,
                           self.anchor, self.anchor_order)

    def with_anchor(self, anchor, order) -> "SprayConfig":
        return SprayConfig(self.flows, self.exponents, self.center, self.ball_radius,
                           complex(anchor), int(order))

    def describe(self) -> list:
        return [f"{f} * (x - {self.center:g})^{m}" for f, m in zip(self.flows, self.exponents)]


def _flow_kinds(n):
    kinds = [TangentFlow.rotation(j, k) for j in range(n) for k in range(j + 1, n)]
    kinds.append(TangentFlow.scaling())
    return kinds


def default_config(n: int, ell: int, domain=None, size: Optional[int] = None,
                   ball_radius: float = DEFAULT_BALL_RADIUS) -> SprayConfig:
    """4*n*ell flows, kinds cycled, exponents swept over -2..2.

    Negative exponents are only used when the expansion center is a puncture
    (so the coefficients stay holomorphic on the domain).
    """
    center = 0j
    negative_ok = True
    if domain is not None and domain.kind == "punctured-plane":
        pts = [complex(p) for p in domain.punctures]
        if 0j in pts:
            center = 0j
        elif pts:
            center = pts[0]
        else:
            negative_ok = False
    exps = list(range(-2, 3)) if negative_ok else list(range(0, 5))
    kinds = _flow_kinds(n)
    N = size or 4 * n * ell
    flows = [kinds[j % len(kinds)] for j in range(N)]
    exponents = [exps[j % len(exps)] for j in range(N)]
    return SprayConfig(tuple(flows), tuple(exponents), center, ball_radius)


def _compose(F, config: SprayConfig, Zt):
    """Apply phi^1 o ... o phi^N with times Zt[j] (broadcast against F[..., 0])."""
    for j in reversed(range(config.size)):
        F = config.flows[j].act(Zt[j], F)
    return F


def evaluate_spray(f, config: SprayConfig, zeta, x, weight: float = 1.0) -> np.ndarray:
    """Psi(x, zeta) with flow times weight * zeta_j * h_j(x)."""
    zeta = np.asarray(zeta, dtype=complex)
    if zeta.shape != (config.size,):
        raise ValueError(f"zeta needs {config.size} entries")
    if np.linalg.norm(zeta) > config.ball_radius:
        raise BallExceeded(f"|zeta| = {np.linalg.norm(zeta):.3g} exceeds {config.ball_radius}")
    x = np.asarray(x, dtype=complex)
    F = np.asarray(f(x), dtype=complex)
    if weight == 0 or not np.any(zeta):
        return F
    H = config.coefficients(x)
    return _compose(F, config, weight * zeta.reshape((-1,) + (1,) * x.ndim) * H)


class SprayedMap:
    """x -> Psi(x, zeta) as a callable map."""

    def __init__(self, f, config: SprayConfig, zeta, weight: float = 1.0):
        self.base = f
        self.config = config
        self.zeta = np.asarray(zeta, dtype=complex).copy()
        self.weight = weight
        self.n = map_dimension(f)

    def __call__(self, x):
        return evaluate_spray(self.base, self.config, self.zeta, x, self.weight)

    def __repr__(self):
        return f"SprayedMap(|zeta|={np.linalg.norm(self.zeta):.4g}, flows={self.config.size})"


class _LoopPeriods:
    """Vectorised zeta -> periods of Psi(., zeta) * theta on fixed loop samples."""

    def __init__(self, f, theta, basis, config: SprayConfig, N: int, weight: float = 1.0):
        xs, ws = [], []
        for loop in basis:
            path = sample_loop(loop, N)
            xs.append(path.samples[:-1, 0])
            ws.append(path.tangent[:-1] / N)
        self.L = len(basis)
        self.N = N
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        F0 = np.asarray(f(x), dtype=complex)
        if theta is not None:
            F0 = F0 * np.asarray(theta(x))[:, None]
        self.F0 = F0 * w[:, None]
        self.H = weight * config.coefficients(x)  # (size, L*N)
        self.config = config
        self.n = F0.shape[1]

    def __call__(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))  # (B, size)
        Zt = Z.T[:, :, None] * self.H[:, None, :]  # (size, B, L*N)
        F = _compose(np.broadcast_to(self.F0, (Z.shape[0],) + self.F0.shape), self.config, Zt)
        return F.reshape(Z.shape[0], self.L, self.N, self.n).sum(axis=2)


def _realify(P):
    """(..., L, n) complex -> (..., 2 L n) real."""
    P = np.asarray(P)
    flat = P.reshape(P.shape[:-2] + (-1,))
    return np.concatenate([flat.real, flat.imag], axis=-1)


@dataclass
class JacobianResult:
    matrix: np.ndarray  # (2 n l, 2 N)
    rank: int
    required: int
    singular_values: np.ndarray

    @property
    def submersive(self) -> bool:
        return self.rank == self.required

    def require(self):
        if not self.submersive:
            raise RankDeficient(f"period Jacobian has rank {self.rank} < {self.required}",
                                rank=self.rank, required=self.required)
        return self


def _check_nonflat_loops(f, basis, N=DEFAULT_QUADRATURE_N):
    for loop in basis:
        if not quadric.is_nonflat(loop_sample_path(f, loop, N).samples):
            raise FlatOnLoop(f"map is flat along loop {loop.index}")


def _fd_jacobian(evaluator: _LoopPeriods, zeta, step):
    size = evaluator.config.size
    E = np.eye(size) * step
    Z = np.concatenate([zeta + E, zeta - E, zeta + 1j * E, zeta - 1j * E])
    R = _realify(evaluator(Z))
    d_re = (R[:size] - R[size:2 * size]) / (2 * step)
    d_im = (R[2 * size:3 * size] - R[3 * size:]) / (2 * step)
    return np.concatenate([d_re, d_im]).T  # columns: Re zeta_1..N, Im zeta_1..N


def _rank(J):
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > 1e-6 * s[0])) if s.size and s[0] > 0 else 0, s


def period_jacobian(f, config: SprayConfig, basis, fd_step: Optional[float] = None, theta=None,
                    zeta=None, N: int = DEFAULT_QUADRATURE_N, weight: float = 1.0) -> JacobianResult:
    """Central-difference Jacobian of the period map in (Re zeta, Im zeta)."""
    _check_nonflat_loops(f, basis)
    ev = _LoopPeriods(f, theta, basis, config, N, weight)
    step = 1e-6 * config.ball_radius if fd_step is None else fd_step
    z0 = np.zeros(config.size, dtype=complex) if zeta is None else np.asarray(zeta, dtype=complex)
    J = _fd_jacobian(ev, z0, step)
    rank, s = _rank(J)
    return JacobianResult(J, rank, 2 * ev.n * len(basis), s)


def ensure_submersive(f, config: SprayConfig, basis, theta=None, max_doublings: int = 4,
                      N: int = DEFAULT_QUADRATURE_N, weight: float = 1.0):
    """Enlarge the spray until the period Jacobian has full rank; returns (config, result)."""
    for _ in range(max_doublings + 1):
        res = period_jacobian(f, config, basis, theta=theta, N=N, weight=weight)
        if res.submersive:
            return config, res
        logger.info("rank %d < %d with %d flows; enlarging", res.rank, res.required, config.size)
        config = config.enlarged(res.matrix.shape[0] // (2 * len(basis)))
    raise RankDeficient(f"period Jacobian stays rank deficient ({res.rank} < {res.required})",
                        rank=res.rank, required=res.required)


@dataclass
class CorrectionResult:
    zeta_star: np.ndarray
    corrected: SprayedMap
    period_norm: float  # |P| of the corrected map by independent quadrature
    error: float  # |P - target| by the same quadrature
    iterations: int
    trace: list = field(default_factory=list)


def _newton(ev: _LoopPeriods, target, zeta0, tol, ball, step, max_iter=50):
    goal = _realify(np.asarray(target, dtype=complex))
    zeta = np.asarray(zeta0, dtype=complex).copy()
    size = zeta.size
    r = _realify(ev(zeta)[0]) - goal
    for it in range(max_iter + 1):
        if np.max(np.abs(r)) <= tol:
            return zeta, it
        if it == max_iter:
            break
        J = _fd_jacobian(ev, zeta, step)
        d = -np.linalg.lstsq(J, r, rcond=1e-10)[0]
        dz = d[:size] + 1j * d[size:]
        lam = 1.0
        rn = np.linalg.norm(r)
        while lam >= 1 / 1024:
            cand = zeta + lam * dz
            if np.linalg.norm(cand) <= ball:
                rc = _realify(ev(cand)[0]) - goal
                if np.linalg.norm(rc) < rn:
                    zeta, r = cand, rc
                    break
            lam /= 2
        else:
            raise NoConvergence(f"Newton stalled at residual {np.max(np.abs(r)):.3g} "
                                f"(|zeta| = {np.linalg.norm(zeta):.3g}, ball {ball})")
    raise NoConvergence(f"no convergence in {max_iter} Newton steps, residual {np.max(np.abs(r)):.3g}")


def solve_periods(f, config: SprayConfig, basis, target, tol: float = 1e-10, theta=None,
                  zeta0=None, N: int = DEFAULT_QUADRATURE_N, weight: float = 1.0) -> CorrectionResult:
    """Damped Newton for P(Psi(., zeta)) = target, verified by an independent quadrature."""
    target = target.entries if isinstance(target, PeriodVector) else np.asarray(target, dtype=complex)
    ev = _LoopPeriods(f, theta, basis, config, N, weight)
    z0 = np.zeros(config.size, dtype=complex) if zeta0 is None else zeta0
    zeta, it = _newton(ev, target, z0, tol, config.ball_radius, 1e-6 * config.ball_radius)
    out = SprayedMap(f, config, zeta, weight)
    check = periods(out, theta, basis, 2 * N)
    err = float(np.max(np.abs(check.entries - target)))
    if err > tol:
        raise NoConvergence(f"independent quadrature gives period error {err:.3g} > {tol}")
    return CorrectionResult(zeta, out, float(check.norm()), err, it)


@dataclass
class TraceSnapshot:
    t: float
    zeta: np.ndarray
    periods: PeriodVector
    isotopy: object
    nonflat: bool


@dataclass
class NullCorrection:
    original: object
    corrected: object
    zeta_star: np.ndarray
    period_norm: float
    trace: list
    initial_class: object
    config: Optional[SprayConfig]
    loop_homotopy: object = None

    def certificate(self, epsilon, tol) -> dict:
        real_max = max(s.periods.real_norm() for s in self.trace)
        classes = [s.isotopy.to_json()["bits"] for s in self.trace]
        return {
            "period_norm": self.period_norm,
            "period_tol": tol,
            "max_real_period_along_trace": real_max,
            "epsilon": epsilon,
            "class_initial": self.initial_class.to_json(),
            "class_constant": all(c == classes[0] for c in classes),
            "nonflat_throughout": all(s.nonflat for s in self.trace),
            "zeta_star": [[float(z.real), float(z.imag)] for z in self.zeta_star],
            "snapshots": len(self.trace),
            "loop_deformation": None if self.loop_homotopy is None
            else self.loop_homotopy.certificate()["conditions"],
            "pass": bool(self.period_norm <= tol and real_max < epsilon
                         and all(c == classes[0] for c in classes)
                         and all(s.nonflat for s in self.trace)),
        }


def _snapshot(f, t, zeta, theta, basis, domain, N):
    pv = periods(f, theta, basis, N)
    cls = _classify_refining(f, domain, basis)
    samples = np.concatenate([loop_sample_path(f, lp, N).samples for lp in basis])
    return TraceSnapshot(t, zeta, pv, cls, quadric.is_nonflat(samples))


def _classify_refining(f, domain, basis, N=256, max_N=8192):
    while True:
        try:
            return classify(f, domain, basis, N)
        except SamplesTooCoarse:
            if N >= max_N:
                raise
            N *= 2


def _loop_pullbacks(f, theta, basis, N):
    paths = []
    for loop in basis:
        lp = sample_loop(loop, N)
        z = lp.samples[:, 0]
        vals = np.asarray(f(z), dtype=complex) * lp.tangent[:, None]
        if theta is not None:
            vals = vals * np.asarray(theta(z))[:, None]
        vals[-1] = vals[0]
        paths.append(DiscretePath(vals, closed=True))
    return paths


def correct_to_null(f, theta, basis, domain, epsilon: float = 1e-3, tol: float = 1e-10,
                    config: Optional[SprayConfig] = None, T: int = 16, N: int = DEFAULT_QUADRATURE_N,
                    loop_stage: bool = True, weight: float = 1.0) -> NullCorrection:
    """Deform f through nonflat quadric-valued maps to one with vanishing periods.

    The complex periods are driven along alpha^t = (1 - t) P(f) by spray
    continuation, so the real periods stay within epsilon at every snapshot.
    With ``loop_stage`` the same schedule is first realised on the loop
    pullbacks s -> f(gamma(s)) theta gamma'(s) by convex integration, as a
    certificate that the approximate problem is solvable by paths in the
    quadric.
    """
    n = map_dimension(f)
    samples = np.concatenate([loop_sample_path(f, lp, N).samples for lp in basis])
    if not quadric.is_nonflat(samples):
        raise FlatData("a nonflat map is required")
    P0 = periods(f, theta, basis, N)
    if P0.real_norm() > REAL_PERIOD_TOL:
        raise NonzeroRealPeriods(f"real periods {P0.real_norm():.3g} do not vanish",
                                 defect=P0.real_norm())
    first = _snapshot(f, 0.0, np.zeros(0, dtype=complex), theta, basis, domain, N)
    if P0.norm() <= tol:
        trace = [first] + [TraceSnapshot(k / T, first.zeta, first.periods, first.isotopy, first.nonflat)
                           for k in range(1, T + 1)]
        return NullCorrection(f, f, np.zeros(0, dtype=complex), P0.norm(), trace, first.isotopy, None)

    loop_h = None
    if loop_stage:
        family = PathFamily(tuple(_loop_pullbacks(f, theta, basis, N)))
        sched = TargetSchedule.linear(family, np.zeros((len(basis), n)), T)
        try:
            loop_h = deform_paths(family, sched, epsilon, DeformConfig(T=T))
        except NullCurveError as exc:
            raise StageError("convex_integration", "loops", exc) from exc

    config = config or default_config(n, len(basis), domain)
    config, _ = ensure_submersive(f, config, basis, theta, N=N, weight=weight)
    zeta = np.zeros(config.size, dtype=complex)
    first.zeta = zeta
    trace = [first]
    current = f
    for k in range(1, T + 1):
        t = k / T
        target = (1 - t) * P0.entries if k < T else np.zeros_like(P0.entries)
        try:
            res = solve_periods(f, config, basis, target, tol, theta, zeta, N, weight)
        except NullCurveError as exc:
            raise StageError("spray", t, exc) from exc
        zeta = res.zeta_star
        current = res.corrected
        snap = _snapshot(current, t, zeta, theta, basis, domain, N)
        if snap.isotopy.bits != first.isotopy.bits:
            raise ClassChanged(f"isotopy class changed at t = {t}: "
                               f"{first.isotopy.bits} -> {snap.isotopy.bits}")
        if not snap.nonflat:
            raise FlatData(f"map became flat at t = {t}")
        trace.append(snap)
    final = periods(current, theta, basis, 2 * N).norm()
    return NullCorrection(f, current, zeta, final, trace, first.isotopy, config, loop_h)


# ---------------------------------------------------------------------------
# families over a finite parameter set

def reference_disc(anchor, radius, n_radial: int = 6, n_angular: int = 24) -> np.ndarray:
    """Nodes of a small polar grid around ``anchor`` (including the center)."""
    r = radius * np.arange(1, n_radial + 1) / n_radial
    ang = np.exp(2j * np.pi * np.arange(n_angular) / n_angular)
    return np.concatenate([[complex(anchor)], (complex(anchor) + r[:, None] * ang[None]).ravel()])


def surface_deviation(f_new, f_old, theta, anchor, points) -> float:
    """sup over points of |Re int_anchor^x (f_new - f_old) theta dz|."""
    diff = lambda z: np.asarray(f_new(z)) - np.asarray(f_old(z))
    worst = 0.0
    for x in points:
        if x == anchor:
            continue
        worst = max(worst, float(np.max(np.abs(_segment_integral(diff, theta, complex(anchor), x).real))))
    return worst


@dataclass
class FamilyIsotopy:
    members: list
    frozen: frozenset
    snapshots: list  # snapshots[p][k] maps
    corrections: dict
    reference_points: np.ndarray
    anchor: complex
    epsilon: float
    tol: float
    theta: object
    basis: list

    def conditions(self) -> dict:
        """The four postconditions, recomputed from the snapshots."""
        fixed = True
        ref = self.reference_points
        for p, row in enumerate(self.snapshots):
            base = np.asarray(self.members[p](ref))
            for k, snap in enumerate(row):
                if k == 0 or p in self.frozen:
                    fixed &= bool(np.array_equal(np.asarray(snap(ref)), base))
        dev = 0.0
        real = 0.0
        final = 0.0
        for p, row in enumerate(self.snapshots):
            for snap in row:
                dev = max(dev, surface_deviation(snap, self.members[p], self.theta, self.anchor, ref))
                real = max(real, periods(snap, self.theta, self.basis).real_norm())
            final = max(final, periods(row[-1], self.theta, self.basis, 2 * DEFAULT_QUADRATURE_N).norm())
        return {
            "fixed_on_initial_and_frozen": fixed,
            "max_reference_deviation": dev,
            "approximation": dev < self.epsilon,
            "max_real_period": real,
            "real_periods_small": real < self.epsilon,
            "max_final_period": final,
            "final_periods_vanish": final <= self.tol,
        }


def isotope_family(members: Sequence, frozen, theta, basis, domain, epsilon: float = 1e-3,
                   tol: float = 1e-10, anchor=None, anchor_order: int = 3,
                   reference_radius: float = 0.05, T: int = 16,
                   config: Optional[SprayConfig] = None) -> FamilyIsotopy:
    """Correct every non-frozen member to vanishing periods, approximating on a reference disc.

    Spray coefficients vanish to order ``anchor_order`` at ``anchor`` so the
    surfaces move little on the disc of ``reference_radius`` around it.
    Frozen members are reused unchanged at every t.
    """
    frozen = frozenset(frozen)
    members = list(members)
    if not members:
        raise ValueError("empty family")
    if anchor is None:
        anchor = basis[0].point(0.0) if basis else 0j
    anchor = complex(anchor)
    ref = reference_disc(anchor, reference_radius)
    snapshots = []
    corrections = {}
    for p, f in enumerate(members):
        if p in frozen:
            pv = periods(f, theta, basis)
            if pv.norm() > tol:
                raise ValueError(f"frozen member {p} has periods {pv.norm():.3g} > {tol}")
            snapshots.append([f] * (T + 1))
            continue
        n = map_dimension(f)
        cfg = (config or default_config(n, len(basis), domain)).with_anchor(anchor, anchor_order)
        try:
            corr = correct_to_null(f, theta, basis, domain, epsilon, tol, cfg, T, loop_stage=False)
        except NullCurveError as exc:
            raise StageError("isotope_family", p, exc) from exc
        corrections[p] = corr
        row = [f]
        for snap in corr.trace[1:]:
            row.append(SprayedMap(f, corr.config, snap.zeta) if corr.config else f)
        snapshots.append(row)
    return FamilyIsotopy(members, frozen, snapshots, corrections, ref, anchor, epsilon, tol,
                         theta, list(basis))
