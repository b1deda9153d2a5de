import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nullcurves import quadric
from nullcurves.domain import DiscretePath
from nullcurves.errors import (
    DimensionNot3,
    NearOrigin,
    NotOnQuadric,
    OutsideRetractionDomain,
    SamplesTooCoarse,
    ZeroSpinor,
)

NULL = np.array([1, 1j, 0])
finite = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def circle_path(f, N=256):
    s = np.arange(N + 1) / N
    z = np.exp(2j * np.pi * s)
    vals = f(z)
    vals[-1] = vals[0]
    return DiscretePath(vals, closed=True)


def test_residual_examples():
    assert quadric.residual(NULL) == 0
    assert quadric.residual([1, 0, 0]) == 1
    assert quadric.residual([3, 4j, 0]) == -7


def test_tangent_frame():
    fr = quadric.tangent_frame(NULL)
    assert fr.shape == (2, 3)
    np.testing.assert_allclose(fr @ fr.conj().T, np.eye(2), atol=1e-12)
    assert np.max(np.abs(fr @ NULL)) < 1e-12
    # span equals span{(-i, 1, 0)/sqrt2, (0, 0, 1)}
    ref = np.array([[-1j, 1, 0], [0, 0, np.sqrt(2)]]) / np.sqrt(2)
    assert np.linalg.matrix_rank(np.vstack([fr, ref]), tol=1e-10) == 2
    with pytest.raises(NotOnQuadric):
        quadric.tangent_frame([0, 0, 2])
    with pytest.raises(NearOrigin):
        quadric.tangent_frame([0, 0, 0])


def test_retract_examples():
    assert quadric.retract(NULL) is not None
    assert np.array_equal(quadric.retract(NULL), NULL)
    z = np.array([1 + 1e-4, 1j, 0])
    w = quadric.retract(z)
    assert abs(quadric.residual(w)) < 1e-12
    assert np.linalg.norm(w - z) < 1e-3
    with pytest.raises(OutsideRetractionDomain):
        quadric.retract([1, 0, 0])
    with pytest.raises(OutsideRetractionDomain):
        quadric.retract([1e-7, 1e-7j, 0])


def test_retract_many_matches_scalar():
    rng = np.random.default_rng(3)
    Z = spinor_points(rng, 50) + 1e-3 * (rng.normal(size=(50, 3)) + 1j * rng.normal(size=(50, 3)))
    W = quadric.retract_many(Z)
    for z, w in zip(Z, W):
        np.testing.assert_allclose(w, quadric.retract(z), rtol=1e-12, atol=1e-12)


def spinor_points(rng, k):
    u = rng.normal(size=k) + 1j * rng.normal(size=k)
    v = rng.normal(size=k) + 1j * rng.normal(size=k)
    return quadric.spinor_project(u, v)


def test_spinor_project_examples():
    np.testing.assert_array_equal(quadric.spinor_project(1, 0), [1, 1j, 0])
    np.testing.assert_array_equal(quadric.spinor_project(0, 1), [-1, 1j, 0])
    np.testing.assert_array_equal(quadric.spinor_project(1, 1), [0, 2j, 2])
    with pytest.raises(ZeroSpinor):
        quadric.spinor_project(0, 0)


def test_spinor_identity_symbolic():
    sp = pytest.importorskip("sympy")
    u, v = sp.symbols("u v")
    z = [u**2 - v**2, sp.I * (u**2 + v**2), 2 * u * v]
    assert sp.expand(sum(c**2 for c in z)) == 0


@settings(max_examples=200, deadline=None)
@given(cplx, cplx)
def test_spinor_properties(u, v):
    if u == 0 and v == 0:
        return
    z = quadric.spinor_project(u, v)
    scale = max(1.0, abs(u) ** 2 + abs(v) ** 2) ** 2
    assert abs(quadric.residual(z)) < 1e-12 * scale
    np.testing.assert_array_equal(z, quadric.spinor_project(-u, -v))
    assert np.linalg.norm(z) == pytest.approx(np.sqrt(2) * (abs(u) ** 2 + abs(v) ** 2), rel=1e-12)
    if np.linalg.norm(z) > 1e-6:
        lift = quadric.spinor_lift(z)
        np.testing.assert_allclose(lift.project(), z, rtol=1e-10, atol=1e-10 * np.linalg.norm(z))


@settings(max_examples=100, deadline=None)
@given(cplx, cplx)
def test_retract_fixes_quadric_points(u, v):
    assume(u != 0 or v != 0)
    z = quadric.spinor_project(u, v)
    if np.linalg.norm(z) > 1e-6 and quadric.residual(z) == 0:
        assert np.array_equal(quadric.retract(z), z)


@settings(max_examples=100, deadline=None)
@given(cplx, cplx)
def test_tangent_frame_annihilated(u, v):
    assume(u != 0 or v != 0)
    z = quadric.spinor_project(u, v)
    nz = np.linalg.norm(z)
    if nz < 1e-3:
        return
    fr = quadric.tangent_frame(z)
    assert np.max(np.abs(fr @ z)) <= 1e-10 * nz
    np.testing.assert_allclose(fr @ fr.conj().T, np.eye(2), atol=1e-10)


def test_monodromy_examples():
    const = DiscretePath(np.tile(NULL, (65, 1)), closed=True)
    assert quadric.spinor_monodromy(const) == 0
    assert quadric.spinor_monodromy(circle_path(lambda z: z[:, None] * NULL)) == 1
    assert quadric.spinor_monodromy(circle_path(lambda z: (z ** 2)[:, None] * NULL)) == 0


def test_monodromy_refinement_and_cyclic_shift():
    # the lift (2 + z, 0.3 z^2) is single valued, so this loop is trivial
    f = lambda z: quadric.spinor_project(2 + z, 0.3 * z ** 2)
    for N in (128, 256, 512):
        p = circle_path(lambda z: (z ** 3)[:, None] * NULL, N)
        assert quadric.spinor_monodromy(p) == 1
    p = circle_path(lambda z: z[:, None] * NULL, 256)
    s = np.roll(p.samples[:-1], 37, axis=0)
    shifted = DiscretePath(np.vstack([s, s[:1]]), closed=True)
    assert quadric.spinor_monodromy(shifted) == 1
    q = circle_path(f, 256)
    assert quadric.spinor_monodromy(q) == 0


def test_monodromy_errors():
    with pytest.raises(SamplesTooCoarse):
        quadric.spinor_monodromy(circle_path(lambda z: z[:, None] * NULL, 8))
    with pytest.raises(DimensionNot3):
        quadric.spinor_monodromy(DiscretePath(np.ones((9, 4)), closed=True))
    with pytest.raises(NotOnQuadric):
        quadric.spinor_monodromy(circle_path(lambda z: z[:, None] * np.array([1, 0, 0])))


def test_nondegeneracy_rank(catalog):
    z = np.exp(2j * np.pi * np.arange(16) / 16)
    assert quadric.nondegeneracy_rank(catalog["catenoid"].f(z)) == 3
    assert quadric.nondegeneracy_rank(NULL) == 2
    assert quadric.nondegeneracy_rank(np.tile(NULL, (5, 1))) == 2
    with pytest.raises(NotOnQuadric):
        quadric.nondegeneracy_rank([[1, 0, 0]])


def test_is_nonflat(catalog):
    z = np.exp(2j * np.pi * np.arange(32) / 32)
    assert not quadric.is_nonflat(z[:, None] * NULL)
    assert quadric.is_nonflat(catalog["catenoid"].f(z))
    assert not quadric.is_nonflat(np.zeros((0, 3)))


def test_direction_varieties():
    full = quadric.DirectionVariety(quadric.FULL_SPACE, 2)
    assert full.contains(np.array([1.0, 0])) and full.nondegeneracy_rank([[1, 2]]) == 2
    assert np.array_equal(full.retract([3, 4]), np.array([3, 4]))
    null = quadric.DirectionVariety(quadric.NULL_QUADRIC, 3)
    assert null.contains(NULL) and not null.contains([1, 0, 0])
    with pytest.raises(ValueError):
        quadric.DirectionVariety(quadric.NULL_QUADRIC, 2)
