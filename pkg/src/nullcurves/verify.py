"""Finite-difference checks that a sampled surface is conformal and harmonic.

Grids are uniform in a conformal coordinate w = x + iy (for polar grids,
w = log(z - c)); harmonicity and conformality are invariant under conformal
changes of coordinates, so the checks apply in w directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GridTooSmall

# Error constants: thresholds are C * h^2 * scale, with C ten times the ratio
# measured on the flat null curve rounded up to a half (see calibrate_constants).
LAPLACIAN_CONSTANT = 9.5
CONFORMALITY_CONSTANT = 13.5


@dataclass
class VerificationReport:
    laplacian_max: float
    conformality_max: float
    nullity_max: float
    spacing: float
    laplacian_threshold: float
    conformality_threshold: float
    period_table: Optional[list] = None
    class_bits: Optional[list] = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.laplacian_max <= self.laplacian_threshold
                and self.conformality_max <= self.conformality_threshold
                and self.nullity_max <= self.conformality_threshold)

    def to_json(self) -> dict:
        return {
            "laplacian_max": self.laplacian_max,
            "conformality_max": self.conformality_max,
            "nullity_max": self.nullity_max,
            "spacing": self.spacing,
            "laplacian_threshold": self.laplacian_threshold,
            "conformality_threshold": self.conformality_threshold,
            "period_table": self.period_table,
            "class_bits": self.class_bits,
            "pass": self.passed,
            **self.extra,
        }


def _derivatives(u, hx, hy, periodic):
    """Centered first derivatives and the 5-point Laplacian on interior nodes."""
    if periodic:
        up = np.roll(u, -1, axis=1)
        dn = np.roll(u, 1, axis=1)
        core = slice(1, -1), slice(None)
    else:
        up = np.concatenate([u[:, 1:], u[:, -1:]], axis=1)
        dn = np.concatenate([u[:, :1], u[:, :-1]], axis=1)
        core = slice(1, -1), slice(1, -1)
    ux = (u[2:] - u[:-2]) / (2 * hx)
    uy = (up - dn)[1:-1] / (2 * hy)
    lap = (u[2:] - 2 * u[1:-1] + u[:-2]) / hx ** 2 + (up - 2 * u + dn)[1:-1] / hy ** 2
    inner = core[1]
    return ux[:, inner], uy[:, inner], lap[:, inner]


def residual_fields(grid, h=None, periodic=None):
    """Pointwise (Laplacian norm, conformality) on all nodes; NaN where undefined."""
    u = np.asarray(getattr(grid, "values", grid), dtype=float)
    if u.ndim == 2:
        u = u[..., None]
    if u.shape[0] < 3 or u.shape[1] < 3:
        raise GridTooSmall(f"need at least 3 nodes per axis, got {u.shape[:2]}")
    h = getattr(grid, "spacing", None) if h is None else h
    hx, hy = (h, h) if np.isscalar(h) else h
    periodic = bool(getattr(grid, "periodic", False)) if periodic is None else periodic
    ux, uy, lap = _derivatives(u, hx, hy, periodic)
    lap_f = np.full(u.shape[:2], np.nan)
    conf_f = np.full(u.shape[:2], np.nan)
    cols = slice(None) if periodic else slice(1, -1)
    lap_f[1:-1, cols] = np.linalg.norm(lap, axis=-1)
    conf_f[1:-1, cols] = np.abs(np.sum(ux * ux, -1) - np.sum(uy * uy, -1)) + np.abs(np.sum(ux * uy, -1))
    return lap_f, conf_f


def verify_minimal(grid, h=None, periodic=None, period_table=None, class_bits=None,
                   constants=(LAPLACIAN_CONSTANT, CONFORMALITY_CONSTANT)) -> VerificationReport:
    """Max-norm Laplacian and conformality residuals of a real (rows, cols, n) grid.

    conformality = | |u_x|^2 - |u_y|^2 | + |u_x . u_y|;  nullity = |sum (u_x - i u_y)_j^2|.
    Thresholds scale as h^2 times max|grad u| (Laplacian) and max|grad u|^2.
    """
    u = np.asarray(getattr(grid, "values", grid), dtype=float)
    if u.ndim == 2:
        u = u[..., None]
    if u.shape[0] < 3 or u.shape[1] < 3:
        raise GridTooSmall(f"need at least 3 nodes per axis, got {u.shape[:2]}")
    if h is None:
        h = getattr(grid, "spacing", None)
        if h is None:
            raise ValueError("grid spacing h is required")
    hx, hy = (h, h) if np.isscalar(h) else h
    if periodic is None:
        periodic = bool(getattr(grid, "periodic", False))
    ux, uy, lap = _derivatives(u, hx, hy, periodic)
    conf = np.abs(np.sum(ux * ux, -1) - np.sum(uy * uy, -1)) + np.abs(np.sum(ux * uy, -1))
    phi = ux - 1j * uy
    null = np.abs(np.sum(phi * phi, -1))
    grad = float(np.max(np.sqrt(np.sum(ux * ux + uy * uy, -1))))
    hh = max(hx, hy) ** 2
    cl, cc = constants
    return VerificationReport(
        laplacian_max=float(np.max(np.linalg.norm(lap, axis=-1))),
        conformality_max=float(np.max(conf)),
        nullity_max=float(np.max(null)),
        spacing=float(max(hx, hy)),
        laplacian_threshold=cl * hh * max(grad, 1e-300),
        conformality_threshold=cc * hh * max(grad, 1e-300) ** 2,
        period_table=period_table,
        class_bits=class_bits,
    )


def calibrate_constants(n_angular: int = 64) -> tuple:
    """Residual/(h^2 scale) ratios on the flat null curve u = Re(z^2/2, i z^2/2, 0)."""
    from .domain import make_domain
    from .rational import parse_rational
    from .weierstrass import PolarGrid, WeierstrassData, integrate_real

    data = WeierstrassData.from_gw(parse_rational("0"), parse_rational("z"), make_domain([0]))
    grid = integrate_real(data.f, None, 1.0, np.zeros(3), PolarGrid.spanning(0, 0.5, 2.0, n_angular))
    rep = verify_minimal(grid, constants=(1.0, 1.0))
    return rep.laplacian_max / rep.laplacian_threshold, rep.conformality_max / rep.conformality_threshold
