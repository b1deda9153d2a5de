"""Geometry of the punctured null quadric {z in C^n : sum z_j^2 = 0} \\ {0}.

Membership and tangent spaces, a Newton retraction onto the quadric, the
spinor double cover of the n = 3 quadric and its monodromy along loops, and
the rank tests used to decide nondegeneracy and nonflatness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DiscretePath
from .errors import (
    DimensionNot3,
    NearOrigin,
    NoConvergence,
    NotOnQuadric,
    OutsideRetractionDomain,
    SamplesTooCoarse,
    ZeroSpinor,
)

NULL_QUADRIC = "null-quadric"
FULL_SPACE = "full-space"

ON_QUADRIC_RTOL = 1e-8
_ORIGIN_TOL = 1e-8


def residual(z):
    """Sum of squares along the last axis."""
    z = np.asarray(z, dtype=complex)
    return np.sum(z * z, axis=-1)


def norm(z):
    return np.linalg.norm(np.asarray(z, dtype=complex), axis=-1)


def on_quadric(z, rtol=ON_QUADRIC_RTOL):
    z = np.asarray(z, dtype=complex)
    nz = norm(z)
    return (np.abs(residual(z)) <= rtol * nz ** 2) & (nz > 0)


def _check_on_quadric(z):
    nz = float(norm(z))
    if nz < _ORIGIN_TOL:
        raise NearOrigin(f"|z| = {nz:.3g} is too close to the origin")
    if abs(residual(z)) > ON_QUADRIC_RTOL * nz ** 2:
        raise NotOnQuadric(f"residual {abs(residual(z)):.3g} at z = {z}")


def tangent_frame(z) -> np.ndarray:
    """Orthonormal rows spanning {w : sum z_j w_j = 0}, shape (n-1, n)."""
    z = np.asarray(z, dtype=complex)
    _check_on_quadric(z)
    _, _, vh = np.linalg.svd(z.reshape(1, -1))
    # rows of vh are orthonormal; the ones past the first are orthogonal to conj(z)
    return vh[1:].conj()


def retract(z, tol=None, max_iter=50):
    """Newton projection onto the quadric with minimal-norm steps.

    The constraint map w -> sum w_j^2 has complex derivative 2 z . (-), so the
    least-norm solution of the linearised equation is a multiple of conj(z).
    """
    z = np.asarray(z, dtype=complex)
    nz = float(norm(z))
    if nz <= 1e-6:
        raise OutsideRetractionDomain("point too close to the origin")
    r = residual(z)
    if abs(r) >= nz ** 2 / 4:
        raise OutsideRetractionDomain(f"residual {abs(r):.3g} outside the retraction neighbourhood")
    if r == 0:
        return z
    tol = 1e-14 * max(1.0, nz ** 2) if tol is None else tol
    w = z.copy()
    for _ in range(max_iter):
        r = residual(w)
        if abs(r) <= tol:
            return w
        w = w - r * w.conj() / (2 * np.vdot(w, w).real)
    if abs(residual(w)) <= tol:
        return w
    raise NoConvergence(f"retraction did not converge, residual {abs(residual(w)):.3g}")


def retract_many(Z, tol=None, max_iter=50):
    """Vectorised :func:`retract` over the leading axes of ``Z``."""
    Z = np.asarray(Z, dtype=complex)
    nz = norm(Z)
    r = residual(Z)
    if np.any(nz <= 1e-6) or np.any(np.abs(r) >= nz ** 2 / 4):
        raise OutsideRetractionDomain("some samples lie outside the retraction neighbourhood")
    tol_arr = (1e-14 * np.maximum(1.0, nz ** 2)) if tol is None else np.full(nz.shape, tol)
    W = Z.copy()
    for _ in range(max_iter):
        r = residual(W)
        todo = np.abs(r) > tol_arr
        if not np.any(todo):
            return W
        W[todo] = W[todo] - (r[todo] / (2 * nz[todo] ** 2))[:, None] * W[todo].conj()
        nz = norm(W)
    if np.any(np.abs(residual(W)) > tol_arr):
        raise NoConvergence("vectorised retraction did not converge")
    return W


# ---------------------------------------------------------------------------
# spinor double cover C^2 \ {0} -> quadric in C^3

def spinor_project(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if np.any((u == 0) & (v == 0)):
        raise ZeroSpinor("(u, v) = (0, 0) has no image on the punctured quadric")
    return np.stack([u * u - v * v, 1j * (u * u + v * v), 2 * u * v], axis=-1)


def _local_lift(z):
    """One of the two preimages of ``z`` under the spinor map."""
    a = z[0] - 1j * z[1]  # = 2u^2
    b = z[0] + 1j * z[1]  # = -2v^2
    if abs(a) >= abs(b):
        u = np.sqrt(a / 2)
        v = z[2] / (2 * u)
    else:
        v = np.sqrt(-b / 2)
        u = z[2] / (2 * v)
    return np.array([u, v])


@dataclass(frozen=True)
class SpinorLift:
    u: complex
    v: complex

    def project(self):
        return spinor_project(self.u, self.v)


def spinor_lift(z) -> SpinorLift:
    z = np.asarray(z, dtype=complex)
    if z.shape != (3,):
        raise DimensionNot3("spinor lift is defined for n = 3")
    _check_on_quadric(z)
    u, v = _local_lift(z)
    return SpinorLift(complex(u), complex(v))


def spinor_monodromy(path: DiscretePath) -> int:
    """Z2 monodromy of a closed quadric loop in C^3: 1 if the lift flips sign.

    The lift is continued sample by sample, choosing at each step the preimage
    nearest to the previous one.
    """
    Z = path.samples
    if Z.shape[1] != 3:
        raise DimensionNot3(f"spinor monodromy needs n = 3, got n = {Z.shape[1]}")
    if not path.closed:
        raise ValueError("monodromy needs a closed path")
    tol = ON_QUADRIC_RTOL if path.quadric_tol is None else path.quadric_tol
    nz = norm(Z)
    if np.any(nz < _ORIGIN_TOL):
        raise NearOrigin("loop passes through the origin")
    if np.any(np.abs(residual(Z)) > tol * nz ** 2):
        raise NotOnQuadric("loop leaves the quadric")
    steps = norm(np.diff(Z, axis=0))
    if np.any(steps >= nz[:-1] / 4):
        raise SamplesTooCoarse(
            f"step/size ratio {np.max(steps / nz[:-1]):.3f} >= 1/4; refine the sampling")
    first = _local_lift(Z[0])
    prev = first
    for z in Z[1:]:
        cand = _local_lift(z)
        if np.linalg.norm(cand - prev) > np.linalg.norm(cand + prev):
            cand = -cand
        prev = cand
    return int(np.linalg.norm(prev + first) < np.linalg.norm(prev - first))


# ---------------------------------------------------------------------------
# rank tests

def nondegeneracy_rank(samples) -> int:
    """Rank of the stacked tangent frames at the sample points."""
    Z = np.atleast_2d(np.asarray(samples, dtype=complex))
    if Z.shape[0] == 0:
        raise ValueError("need at least one sample")
    frames = np.concatenate([tangent_frame(z) for z in Z], axis=0)
    s = np.linalg.svd(frames, compute_uv=False)
    return int(np.sum(s > 1e-8 * s[0]))


def is_nonflat(samples, tol=1e-8) -> bool:
    """True iff the samples do not all lie on one complex line through 0."""
    Z = np.asarray(samples, dtype=complex)
    if Z.size == 0:
        return False
    Z = Z.reshape(-1, Z.shape[-1])
    if Z.shape[0] < 2:
        return False
    s = np.linalg.svd(Z, compute_uv=False)
    return bool(s[0] > 0 and s[1] > tol * s[0])


# ---------------------------------------------------------------------------
# directing varieties

@dataclass(frozen=True)
class DirectionVariety:
    """Either the null quadric in C^n (n >= 3) or all of C^n."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind == NULL_QUADRIC and self.n < 3:
            raise ValueError("null quadric needs n >= 3")
        if self.kind == FULL_SPACE and self.n < 1:
            raise ValueError("full space needs n >= 1")
        if self.kind not in (NULL_QUADRIC, FULL_SPACE):
            raise ValueError(f"unknown variety {self.kind!r}")

    def residual(self, z):
        if self.kind == FULL_SPACE:
            return np.zeros(np.shape(z)[:-1], dtype=complex)
        return residual(z)

    def contains(self, z):
        if self.kind == FULL_SPACE:
            return norm(z) > 0
        return on_quadric(z)

    def tangent_frame(self, z):
        if self.kind == FULL_SPACE:
            if norm(z) < _ORIGIN_TOL:
                raise NearOrigin("origin is not in the punctured variety")
            return np.eye(self.n, dtype=complex)
        return tangent_frame(z)

    def retract(self, z, tol=None):
        if self.kind == FULL_SPACE:
            if norm(z) <= 1e-6:
                raise OutsideRetractionDomain("point too close to the origin")
            return np.asarray(z, dtype=complex)
        return retract(z, tol)

    def nondegeneracy_rank(self, samples) -> int:
        Z = np.atleast_2d(np.asarray(samples, dtype=complex))
        frames = np.concatenate([self.tangent_frame(z) for z in Z], axis=0)
        s = np.linalg.svd(frames, compute_uv=False)
        return int(np.sum(s > 1e-8 * s[0]))
