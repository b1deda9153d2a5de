"""Punctured planar domains, homology bases of circles, and contour quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicatePuncture,
    NoAdmissibleRadius,
    NonIntegralWinding,
    SampleCountMismatch,
    ZeroOnContour,
)
from .rational import QI, RationalMap, as_qi

PUNCTURED_PLANE = "punctured-plane"
ANNULUS = "annulus"

DEFAULT_QUADRATURE_N = 512
_AVOID_FRACTION = Fraction(1, 1000)
_MAX_RADIUS_ATTEMPTS = 64
# default loop radius as a fraction of the distance to the nearest other puncture;
# strictly below 1/2 so neighbouring loops never touch
_RADIUS_FRACTION = Fraction(2, 5)


@dataclass(frozen=True)
class PuncturedDomain:
    punctures: tuple
    kind: str = PUNCTURED_PLANE
    r_inner: Optional[Fraction] = None
    r_outer: Optional[Fraction] = None
    label: str = ""

    @property
    def rank(self) -> int:
        """Rank of the first homology group."""
        return 1 if self.kind == ANNULUS else len(self.punctures)

    def contains(self, z) -> bool:
        z = complex(z)
        if self.kind == ANNULUS:
            return float(self.r_inner) < abs(z) < float(self.r_outer)
        return all(z != complex(p) for p in self.punctures)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "punctures": [p.to_pair_strings() for p in self.punctures],
            "label": self.label,
        }
        if self.kind == ANNULUS:
            out["r_inner"] = _frac(self.r_inner)
            out["r_outer"] = _frac(self.r_outer)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PuncturedDomain":
        kind = data.get("kind", PUNCTURED_PLANE)
        punctures = [as_qi(p) for p in data.get("punctures", [])]
        if kind == ANNULUS:
            return make_domain(punctures, kind, label=data.get("label", ""),
                               r_inner=Fraction(data["r_inner"]),
                               r_outer=Fraction(data["r_outer"]))
        return make_domain(punctures, kind, label=data.get("label", ""))


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def make_domain(punctures: Sequence, kind: str = PUNCTURED_PLANE, label: str = "",
                r_inner=None, r_outer=None) -> PuncturedDomain:
    """Build a validated domain from exact puncture points.

    ``punctures`` may hold ints, Fractions, complex numbers, ``[re, im]`` pairs
    or strings such as ``"1/2"``; they are converted to exact Gaussian
    rationals.  An annulus is centred at the origin and carries no punctures.
    """
    pts = tuple(as_qi(p) for p in punctures)
    seen = set()
    for p in pts:
        if p in seen:
            raise DuplicatePuncture(f"puncture {p} listed twice")
        seen.add(p)
    if kind == ANNULUS:
        if pts:
            raise ValueError("an annulus domain takes no punctures")
        if r_inner is None or r_outer is None:
            raise ValueError("annulus needs r_inner and r_outer")
        r_inner, r_outer = Fraction(r_inner), Fraction(r_outer)
        if not 0 < r_inner < r_outer:
            raise ValueError("annulus radii must satisfy 0 < r_inner < r_outer")
        return PuncturedDomain((), ANNULUS, r_inner, r_outer, label)
    if kind != PUNCTURED_PLANE:
        raise ValueError(f"unknown domain kind {kind!r}")
    return PuncturedDomain(pts, PUNCTURED_PLANE, None, None, label)


@dataclass(frozen=True)
class BasisLoop:
    """Counterclockwise circle ``|z - center| = radius``."""

    center: QI
    radius: Fraction
    index: int
    orientation: int = 1

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return complex(self.center) + float(self.radius) * np.exp(2j * np.pi * s)

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        return 2j * np.pi * float(self.radius) * np.exp(2j * np.pi * s)

    def __str__(self):
        return f"|z - ({complex(self.center):g})| = {self.radius}"


def _dist2(a: QI, b: QI) -> Fraction:
    return (a - b).norm2()


def _rational_below_sqrt(x2: Fraction, factor: Fraction) -> Fraction:
    """Largest convenient rational r with r <= factor*sqrt(x2), exact when possible."""
    target2 = factor * factor * x2
    num, den = target2.numerator, target2.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    approx = Fraction(math.sqrt(float(target2))).limit_denominator(1 << 12)
    while approx * approx > target2:
        approx -= Fraction(1, 1 << 12)
    return approx


def _candidate_radii(r0: Fraction):
    """r0, r0/2, 3r0/4, r0/4, 7r0/8, 5r0/8, ...: dyadic points, coarse levels first."""
    yield r0
    level = 1
    while True:
        den = 1 << level
        for k in range(den - 1, 0, -2):
            yield r0 * Fraction(k, den)
        level += 1


def _circle_clear(center: QI, r: Fraction, points) -> bool:
    c = complex(center)
    rf = float(r)
    for e in points:
        if abs(abs(complex(e) - c) - rf) <= float(_AVOID_FRACTION) * rf:
            return False
    return True


def homology_basis(domain: PuncturedDomain, exceptional: Sequence = (),
                   radius=None) -> list:
    """One counterclockwise circle per puncture (core circle for an annulus).

    The nominal radius is 2/5 of the distance to the nearest other puncture (1
    when there is none), or ``radius`` when given.  If a circle passes within
    1/1000 of its radius from an exceptional point, smaller dyadic radii are
    tried, at most 64 in total.
    """
    exc = [as_qi(e) for e in exceptional]
    for e in exc:
        if e in domain.punctures:
            raise ValueError(f"exceptional point {e} is a puncture")
    loops = []
    if domain.kind == ANNULUS:
        r0 = (domain.r_inner + domain.r_outer) / 2
        span = domain.r_outer - domain.r_inner
        for k, r in enumerate(_annulus_candidates(r0, span)):
            if k >= _MAX_RADIUS_ATTEMPTS:
                raise NoAdmissibleRadius("no admissible core circle")
            if _circle_clear(QI(), r, exc):
                return [BasisLoop(QI(), r, 1)]
    for idx, p in enumerate(domain.punctures, start=1):
        others = [q for q in domain.punctures if q != p]
        if radius is not None:
            r0 = Fraction(radius)
            if others and r0 * r0 >= min(_dist2(p, q) for q in others) / 4:
                raise ValueError(f"radius {r0} is not below half the distance to the nearest puncture")
        elif others:
            r0 = _rational_below_sqrt(min(_dist2(p, q) for q in others), _RADIUS_FRACTION)
        else:
            r0 = Fraction(1)
        for k, r in enumerate(_candidate_radii(r0)):
            if k >= _MAX_RADIUS_ATTEMPTS:
                raise NoAdmissibleRadius(f"no admissible radius around {p}")
            if _circle_clear(p, r, exc):
                loops.append(BasisLoop(p, r, idx))
                break
    return loops


def _annulus_candidates(r0: Fraction, span: Fraction):
    yield r0
    level = 2
    while True:
        den = 1 << level
        for k in range(1, den // 2, 2):
            off = span * Fraction(k, den)
            yield r0 + off
            yield r0 - off
        level += 1


@dataclass(frozen=True)
class DiscretePath:
    """Samples of a path [0, 1] -> C^n on the uniform grid s_k = k/N.

    ``samples`` has shape (N+1, n).  ``tangent`` optionally carries exact
    derivatives at the grid points (circles), used for contour integrals.
    """

    samples: np.ndarray
    closed: bool = False
    quadric_tol: Optional[float] = None
    tangent: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        object.__setattr__(self, "samples", s)
        if self.closed and not np.array_equal(s[0], s[-1]):
            raise ValueError("closed path must repeat its first sample")

    @property
    def N(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def parameter(self) -> np.ndarray:
        return np.arange(self.N + 1) / self.N

    def integral(self) -> np.ndarray:
        """Trapezoid value of the integral over [0, 1] (exact for the PL interpolant)."""
        return trapezoid(self.samples)


def trapezoid(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples)
    N = samples.shape[0] - 1
    return (samples[1:-1].sum(axis=0) + 0.5 * (samples[0] + samples[-1])) / N


def sample_loop(loop: BasisLoop, N: int) -> DiscretePath:
    if N < 8 or N % 2:
        raise ValueError("loop sampling needs an even N >= 8")
    s = np.arange(N + 1) / N
    pts = loop.point(s)
    tan = loop.tangent(s)
    # quarter turns are exact for the special grid points
    k = np.arange(N + 1)
    for frac, unit in ((0, 1), (N // 4, 1j), (N // 2, -1), (3 * N // 4, -1j)):
        if N % 4 == 0 or frac in (0, N // 2):
            sel = k % N == frac
            pts[sel] = complex(loop.center) + float(loop.radius) * unit
            tan[sel] = 2j * np.pi * float(loop.radius) * unit
    pts[-1] = pts[0]
    tan[-1] = tan[0]
    return DiscretePath(pts[:, None], closed=True, tangent=tan)


def contour_integral(integrand_samples, path: DiscretePath) -> np.ndarray:
    """Composite trapezoid value of the integral of h(gamma(s)) gamma'(s) ds."""
    h = np.asarray(integrand_samples, dtype=complex)
    if h.shape[0] != path.N + 1:
        raise SampleCountMismatch(
            f"got {h.shape[0]} integrand samples for a path with {path.N + 1} grid points")
    if path.tangent is not None:
        d = path.tangent
    else:
        d = _path_derivative(path)
    if h.ndim == 1:
        return trapezoid(h * d)
    return trapezoid(h * d[:, None])


def _path_derivative(path: DiscretePath) -> np.ndarray:
    z = path.samples[:, 0]
    N = path.N
    if path.closed:
        c = np.fft.fft(z[:-1])
        k = np.fft.fftfreq(N, d=1.0 / N)
        if N % 2 == 0:
            k[N // 2] = 0
        d = np.fft.ifft(2j * np.pi * k * c)
        return np.append(d, d[0])
    return np.gradient(z, 1.0 / N, edge_order=2)


def winding_number(r: RationalMap, loop: BasisLoop, N: int = DEFAULT_QUADRATURE_N) -> int:
    """Integer winding of ``r`` along ``loop`` via the argument principle."""
    c, rad = complex(loop.center), float(loop.radius)
    for pt in np.concatenate([r.zeros(), r.poles()]):
        if abs(abs(pt - c) - rad) < 1e-9 * max(rad, 1.0):
            raise ZeroOnContour(f"{r} has a zero or pole on {loop}")
    path = sample_loop(loop, N)
    z = path.samples[:, 0]
    val = r(z)
    if not np.all(np.isfinite(val)) or np.min(np.abs(val)) == 0:
        raise ZeroOnContour(f"{r} vanishes or blows up on {loop}")
    w = contour_integral(r.derivative()(z) / val, path) / (2j * np.pi)
    k = int(round(w.real))
    if abs(w - k) >= 0.1:
        raise NonIntegralWinding(f"winding quadrature gave {w}")
    return k
