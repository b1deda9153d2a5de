"""Weierstrass data, period and flux maps, integration to surfaces, and
isotopy classes of quadric-valued maps.

A *map* here is anything callable on an array of points of the plane that
returns an array with one extra trailing axis of length ``n``; the
:class:`RationalVector` built from exact data is the main example, and the
spray module produces transcendental ones.  One-forms are ``f * theta * dz``
with ``theta`` a :class:`~nullcurves.rational.RationalMap` (1 by default).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import quadric
from .domain import (
    DEFAULT_QUADRATURE_N,
    BasisLoop,
    DiscretePath,
    PuncturedDomain,
    contour_integral,
    sample_loop,
    winding_number,
)
from .errors import (
    DimensionNot3,
    FlatData,
    GNotHolomorphic,
    NonzeroPeriods,
    NonzeroRealPeriods,
    PoleAtSample,
)
from .rational import QI, RationalMap, as_qi

logger = logging.getLogger(__name__)

SINGLE_VALUED_TOL = 1e-6
CLASSIFY_N = 256
EDGE_GAUSS_POINTS = 64


class RationalVector:
    """An n-tuple of exact rational maps, evaluated componentwise."""

    def __init__(self, components: Sequence[RationalMap]):
        self.components = tuple(c if isinstance(c, RationalMap) else RationalMap.const(c)
                                for c in components)

    @property
    def n(self) -> int:
        return len(self.components)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.stack([c(z) for c in self.components], axis=-1)

    def __getitem__(self, k):
        return self.components[k]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return self.n

    def scale(self, c) -> "RationalVector":
        return RationalVector([c * f for f in self.components])

    def symbolic_nullity(self) -> RationalMap:
        out = RationalMap.const(0)
        for f in self.components:
            out = out + f * f
        return out

    def poles_within(self, points) -> bool:
        return all(c.poles_within(points) for c in self.components)

    def __repr__(self):
        return f"RationalVector({', '.join(str(c) for c in self.components)})"


def map_dimension(f) -> int:
    n = getattr(f, "n", None)
    if n is None:
        n = np.asarray(f(np.array([1.0 + 0.5j]))).shape[-1]
    return int(n)


def from_gw(g: RationalMap, eta: RationalMap) -> RationalVector:
    """((1-g^2) eta, i(1+g^2) eta, 2 g eta), reduced exactly."""
    i = QI(0, 1)
    g2 = g * g
    return RationalVector([(1 - g2) * eta, i * (1 + g2) * eta, 2 * g * eta])


@dataclass
class WeierstrassData:
    n: int
    f: RationalVector
    domain: PuncturedDomain
    theta: RationalMap = field(default_factory=lambda: RationalMap.const(1))
    name: str = ""
    g: Optional[RationalMap] = None
    eta: Optional[RationalMap] = None
    kind: str = quadric.NULL_QUADRIC

    def __post_init__(self):
        if self.f.n != self.n:
            raise ValueError(f"f has {self.f.n} components, expected n = {self.n}")
        pts = self.domain.punctures
        if self.domain.kind == "punctured-plane":
            if not self.f.poles_within(pts):
                raise ValueError(f"{self.name}: f has poles inside the domain")
            if not self.theta.poles_within(pts):
                raise ValueError(f"{self.name}: theta has poles inside the domain")
        if self.kind == quadric.NULL_QUADRIC:
            probe = _probe_points(self.domain)
            res = nullity_residual(self.f, probe)
            scale = max(1.0, float(np.max(np.abs(self.f(probe))) ** 2))
            if res > 1e-10 * scale:
                raise ValueError(f"{self.name}: nullity residual {res:.3g} on test samples")

    @classmethod
    def from_gw(cls, g, eta, domain, theta=None, name="") -> "WeierstrassData":
        theta = RationalMap.const(1) if theta is None else theta
        return cls(3, from_gw(g, eta), domain, theta, name, g, eta)

    def exceptional_points(self) -> list:
        """Zeros/poles of eta and poles of g off the puncture set.

        Roots are snapped to exact Gaussian rationals when an exact check
        confirms them.
        """
        polys = []
        if self.eta is not None:
            polys += [self.eta.num, self.eta.den]
        if self.g is not None:
            polys.append(self.g.den)
        if self.eta is None:
            polys += [c.den for c in self.f]
        pts = []
        for poly in polys:
            for z in poly.roots():
                q = _snap_root(poly, z)
                if any(abs(complex(q) - complex(p)) < 1e-9 for p in self.domain.punctures):
                    continue
                if any(abs(complex(q) - complex(p)) < 1e-6 for p in pts):
                    continue
                pts.append(q)
        return pts


def _snap_root(poly, z, max_den=1000):
    cand = QI(Fraction(z.real).limit_denominator(max_den), Fraction(z.imag).limit_denominator(max_den))
    if abs(complex(cand) - z) < 1e-6 and not poly.eval_exact(cand):
        return cand
    return as_qi(complex(z))


def _probe_points(domain: PuncturedDomain, count: int = 16) -> np.ndarray:
    rng = np.random.default_rng(12345)
    if domain.kind == "annulus":
        r = rng.uniform(float(domain.r_inner), float(domain.r_outer), count)
        return r * np.exp(2j * np.pi * rng.uniform(size=count))
    pts = rng.normal(size=count) + 1j * rng.normal(size=count)
    return pts * 1.7 + 0.123


def nullity_residual(f, sample_points) -> float:
    """max |sum_j f_j(z)^2| over the samples."""
    z = np.asarray(sample_points, dtype=complex).ravel()
    if isinstance(f, RationalVector):
        for c in f.components:
            if np.any(c.den(z) == 0):
                raise PoleAtSample("f has a pole at a sample point")
    vals = f(z)
    if not np.all(np.isfinite(vals)):
        raise PoleAtSample("f is not finite at a sample point")
    return float(np.max(np.abs(quadric.residual(vals))))


# ---------------------------------------------------------------------------
# periods and flux

@dataclass(frozen=True)
class PeriodVector:
    entries: np.ndarray  # (l, n) complex

    @property
    def rank(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    def real_norm(self) -> float:
        return float(np.max(np.abs(self.entries.real))) if self.entries.size else 0.0

    def realify(self) -> np.ndarray:
        return np.concatenate([self.entries.real.ravel(), self.entries.imag.ravel()])


@dataclass(frozen=True)
class FluxVector:
    entries: np.ndarray  # (l, n) real

    def norm(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0


def _one_form_on_loop(f, theta, loop: BasisLoop, N: int):
    path = sample_loop(loop, N)
    z = path.samples[:, 0]
    vals = np.asarray(f(z), dtype=complex)
    if theta is not None:
        vals = vals * np.asarray(theta(z))[..., None]
    if not np.all(np.isfinite(vals)):
        raise PoleAtSample(f"one-form has a pole on {loop}")
    return vals, path


def periods(f, theta=None, basis: Sequence[BasisLoop] = (), N: int = DEFAULT_QUADRATURE_N) -> PeriodVector:
    """Contour integrals of f*theta*dz over each basis loop."""
    n = map_dimension(f)
    out = np.zeros((len(basis), n), dtype=complex)
    for i, loop in enumerate(basis):
        vals, path = _one_form_on_loop(f, theta, loop, N)
        out[i] = contour_integral(vals, path)
    return PeriodVector(out)


def flux(f, theta=None, basis: Sequence[BasisLoop] = (), N: int = DEFAULT_QUADRATURE_N) -> FluxVector:
    return FluxVector(periods(f, theta, basis, N).entries.imag.copy())


def period_table_rows(pv: PeriodVector) -> list:
    """CSV rows: loop index then re/im per coordinate."""
    rows = []
    for i, e in enumerate(pv.entries, start=1):
        row = [i]
        for c in e:
            row += [float(c.real), float(c.imag)]
        rows.append(row)
    return rows


def period_table_header(n: int) -> list:
    head = ["loop"]
    for j in range(1, n + 1):
        head += [f"re{j}", f"im{j}"]
    return head


# ---------------------------------------------------------------------------
# integration over polar grids

@dataclass(frozen=True)
class PolarGrid:
    """Nodes center + exp(x_i + i*y_j) with equal steps h = 2*pi/n_angular.

    In the coordinate w = log(z - center) the grid is uniform and square, and
    the angular direction is periodic.
    """

    center: complex
    r_min: float
    n_radial: int
    n_angular: int

    @classmethod
    def spanning(cls, center, r_min, r_max, n_angular) -> "PolarGrid":
        h = 2 * np.pi / n_angular
        n_radial = int(round(np.log(r_max / r_min) / h)) + 1
        return cls(complex(center), float(r_min), max(n_radial, 2), int(n_angular))

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n_angular

    @property
    def log_nodes(self) -> np.ndarray:
        h = self.spacing
        x = np.log(self.r_min) + h * np.arange(self.n_radial)
        y = h * np.arange(self.n_angular)
        return x[:, None] + 1j * y[None, :]

    @property
    def nodes(self) -> np.ndarray:
        return self.center + np.exp(self.log_nodes)


@dataclass
class SurfaceGrid:
    zeta: np.ndarray  # (nr, na) complex grid nodes
    values: np.ndarray  # (nr, na, n); complex for null curves, real for surfaces
    base_point: complex
    base_value: np.ndarray
    spacing: float
    periodic: bool = True
    plaquette_defect: float = 0.0
    loop_defects: np.ndarray = field(default_factory=lambda: np.zeros(0))
    conjugate: Optional[np.ndarray] = None


def _gauss_segment_integrals(f, theta, center, w_a, w_b, npts=EDGE_GAUSS_POINTS):
    """Integrals of f*theta dz along the straight segments w_a -> w_b in w = log(z-c)."""
    x, wts = np.polynomial.legendre.leggauss(npts)
    w_a = np.asarray(w_a)
    w_b = np.asarray(w_b)
    t = 0.5 * (x + 1)
    W = w_a[..., None] + (w_b - w_a)[..., None] * t  # (..., npts)
    Z = center + np.exp(W)
    vals = np.asarray(f(Z), dtype=complex)
    if theta is not None:
        vals = vals * np.asarray(theta(Z))[..., None]
    if not np.all(np.isfinite(vals)):
        raise PoleAtSample("integrand not finite on a grid edge")
    dz = np.exp(W) * (w_b - w_a)[..., None]
    return 0.5 * np.einsum("...k,...kn->...n", wts * dz, vals)


def _segment_integral(f, theta, a, b, npts=EDGE_GAUSS_POINTS):
    x, wts = np.polynomial.legendre.leggauss(npts)
    t = 0.5 * (x + 1)
    Z = a + (b - a) * t
    vals = np.asarray(f(Z), dtype=complex)
    if theta is not None:
        vals = vals * np.asarray(theta(Z))[..., None]
    if not np.all(np.isfinite(vals)):
        raise PoleAtSample("integrand not finite on the base segment")
    return 0.5 * (b - a) * np.einsum("k,kn->n", wts, vals)


def _integrate_tree(f, theta, base_point, base_value, grid: PolarGrid):
    W = grid.log_nodes
    nr, na = W.shape
    c = grid.center
    radial = _gauss_segment_integrals(f, theta, c, W[:-1, :], W[1:, :])  # (nr-1, na, n)
    W_next = np.concatenate([W[:, 1:], W[:, :1] + 2j * np.pi], axis=1)
    angular = _gauss_segment_integrals(f, theta, c, W, W_next)  # (nr, na, n)
    n = radial.shape[-1]
    F = np.zeros((nr, na, n), dtype=complex)
    base_value = np.asarray(base_value, dtype=complex)
    node00 = c + np.exp(W[0, 0])
    F[0, 0] = base_value + (_segment_integral(f, theta, complex(base_point), node00)
                            if node00 != complex(base_point) else 0)
    F[1:, 0] = F[0, 0] + np.cumsum(radial[:, 0], axis=0)
    F[:, 1:] = F[:, :1] + np.cumsum(angular[:, :-1], axis=1)
    plaq = radial + angular[1:] - np.roll(radial, -1, axis=1) - angular[:-1]
    loops = angular.sum(axis=1)  # closure of each ring
    return F, plaq, loops


def _check_basis(f, theta, basis, part):
    if not basis:
        return
    pv = periods(f, theta, basis)
    vals = {"complex": np.abs(pv.entries), "real": np.abs(pv.entries.real)}[part]
    d = float(np.max(vals))
    if d > SINGLE_VALUED_TOL:
        cls = NonzeroPeriods if part == "complex" else NonzeroRealPeriods
        raise cls(f"{part} periods on the homology basis reach {d:.3g}", defect=d)


def integrate_complex(f, theta, base_point, base_value, grid: PolarGrid,
                      basis: Sequence[BasisLoop] = ()) -> SurfaceGrid:
    """Integrate f*theta to a null curve on the grid by a spanning tree of edges."""
    F, plaq, loops = _integrate_tree(f, theta, base_point, base_value, grid)
    defect = float(np.max(np.abs(loops)))
    if defect > SINGLE_VALUED_TOL:
        raise NonzeroPeriods(f"integral is not single valued: ring defect {defect:.3g}", defect=defect)
    _check_basis(f, theta, basis, "complex")
    return SurfaceGrid(grid.nodes, F, complex(base_point), np.asarray(base_value, dtype=complex),
                       grid.spacing, True, float(np.max(np.abs(plaq))), np.abs(loops).max(axis=-1))


def integrate_real(f, theta, base_point, base_value, grid: PolarGrid,
                   basis: Sequence[BasisLoop] = (), single_valued: bool = True) -> SurfaceGrid:
    """u = base_value + integral of Re(f*theta); the tree's Im part is the conjugate.

    With ``single_valued=False`` nonzero real periods are allowed and the
    result is one sheet cut along the angular seam (``periodic`` is False).
    """
    base_value = np.asarray(base_value, dtype=float)
    F, plaq, loops = _integrate_tree(f, theta, base_point, base_value.astype(complex), grid)
    defect = float(np.max(np.abs(loops.real)))
    if not single_valued:
        return SurfaceGrid(grid.nodes, F.real.copy(), complex(base_point), base_value, grid.spacing,
                           defect <= SINGLE_VALUED_TOL, float(np.max(np.abs(plaq.real))),
                           np.abs(loops.real).max(axis=-1), conjugate=F.imag.copy())
    if defect > SINGLE_VALUED_TOL:
        raise NonzeroRealPeriods(f"real periods do not vanish: ring defect {defect:.3g}", defect=defect)
    _check_basis(f, theta, basis, "real")
    return SurfaceGrid(grid.nodes, F.real.copy(), complex(base_point), base_value, grid.spacing,
                       True, float(np.max(np.abs(plaq.real))), np.abs(loops.real).max(axis=-1),
                       conjugate=F.imag.copy())


# ---------------------------------------------------------------------------
# isotopy classes

@dataclass(frozen=True)
class IsotopyClass:
    """Z2 bit per basis loop for n = 3; ``bits is None`` is the trivial class for n >= 4."""

    bits: Optional[tuple]
    flat: bool = False

    @property
    def is_trivial(self) -> bool:
        return self.bits is None or not any(self.bits)

    def labels(self) -> list:
        if self.bits is None:
            return ["trivial"]
        return ["nontrivial" if b else "trivial" for b in self.bits]

    def to_json(self):
        return {"bits": None if self.bits is None else list(self.bits), "flat": self.flat,
                "labels": self.labels()}


def loop_sample_path(f, loop: BasisLoop, N: int) -> DiscretePath:
    z = sample_loop(loop, N).samples[:, 0]
    vals = np.asarray(f(z), dtype=complex)
    vals[-1] = vals[0]
    return DiscretePath(vals, closed=True)


def classify(f, domain: PuncturedDomain, basis: Sequence[BasisLoop], N: int = CLASSIFY_N,
             require_nonflat: bool = False) -> IsotopyClass:
    """Monodromy of f along each basis loop through the spinor cover.

    Flat data still has a well-defined homotopy class of maps into the quadric
    and is classified, with ``flat=True`` on the result; pass
    ``require_nonflat=True`` to refuse it instead.
    """
    n = map_dimension(f)
    if n >= 4:
        logger.info("n = %d: the quadric is simply connected, class is trivial", n)
        return IsotopyClass(None)
    if n != 3:
        raise DimensionNot3(f"classification needs n >= 3, got {n}")
    paths = [loop_sample_path(f, loop, N) for loop in basis]
    allsamples = np.concatenate([p.samples for p in paths]) if paths else np.zeros((0, 3))
    flat = not quadric.is_nonflat(allsamples)
    if flat and require_nonflat:
        raise FlatData("data is flat: its image lies on one complex ray")
    bits = tuple(quadric.spinor_monodromy(p) for p in paths)
    return IsotopyClass(bits, flat)


def winding_parity_class(eta: RationalMap, basis: Sequence[BasisLoop], g: Optional[RationalMap] = None,
                         domain: Optional[PuncturedDomain] = None,
                         N: int = DEFAULT_QUADRATURE_N) -> IsotopyClass:
    """Parity of the winding of eta around each loop (square-root obstruction)."""
    if g is not None and domain is not None and not g.poles_within(domain.punctures):
        raise GNotHolomorphic(f"g = {g} has poles inside the domain")
    return IsotopyClass(tuple(winding_number(eta, loop, N) % 2 for loop in basis))
