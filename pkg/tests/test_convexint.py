import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullcurves import quadric
from nullcurves.convexint import (
    CutoffProfile,
    DeformConfig,
    PathFamily,
    ShellConfig,
    TargetSchedule,
    convex_blend,
    convex_decompose,
    deform_paths,
    endpoint_splice,
    null_frame,
    oscillate,
    retract_path,
)
from nullcurves.domain import DiscretePath
from nullcurves.errors import BadMargin, NotOnQuadric, OutsideRetractionDomain, StageError

E12 = np.array([1, 1j, 0])


def flat_circle(N=64):
    s = np.arange(N + 1) / N
    Z = np.exp(2j * np.pi * s)[:, None] * E12
    Z[-1] = Z[0]
    return DiscretePath(Z, closed=True)


def wobble(N=64, phase=0.3):
    s = np.arange(N + 1) / N
    Z = (1.5 + 0.4 * np.cos(2 * np.pi * s + phase))[:, None] * np.exp(1j * s)[:, None] * E12
    return DiscretePath(Z)


SHELL = ShellConfig(0.1, 4.0, 1e-2)


def test_family_validation():
    with pytest.raises(ValueError):
        PathFamily([DiscretePath(np.ones((9, 3)))])
    with pytest.raises(ValueError):
        PathFamily([flat_circle(64), flat_circle(32)])
    with pytest.raises(ValueError):
        PathFamily([flat_circle()], frozen={3})


def test_schedule_validation():
    fam = PathFamily([flat_circle(), wobble()], frozen={1})
    sch = TargetSchedule.linear(fam, [[0.5, 0.5j, 0], [9, 9, 9]], T=4)
    sch.validate(fam)
    assert np.array_equal(sch.targets[1], np.repeat(fam.integrals()[1][None], 5, 0))
    bad = sch.targets.copy()
    bad[1, 2] += 1
    with pytest.raises(ValueError):
        TargetSchedule(bad).validate(fam)


@pytest.mark.parametrize("width", [0.0, 0.6])
def test_cutoff_width_range(width):
    with pytest.raises(ValueError):
        CutoffProfile(width)


@given(st.floats(0, 1), st.floats(0.01, 0.5))
def test_cutoff_profile_bounds(t, w):
    chi = CutoffProfile(w)
    assert 0 <= chi(t, False) <= 1
    assert chi(t, True) == 1
    assert chi(0, False) == 1
    if t >= w:
        assert chi(t, False) == 0


def test_blend_trivial_cases():
    fam = PathFamily([flat_circle(), wobble()])
    sch = TargetSchedule.linear(fam, [[0, 0, 0], [1, 0, 0]], T=4)
    out = convex_blend(fam, sch, CutoffProfile(0.5))
    assert out[0][0] is fam.paths[0]
    last = out[0][-1].samples
    assert np.array_equal(last, np.zeros_like(last))
    # integral of the blend is chi alpha + (1 - chi) alpha^t
    chi = CutoffProfile(0.5)(0.25, False)
    expect = chi * fam.integrals()[1] + (1 - chi) * sch.targets[1, 1]
    np.testing.assert_allclose(out[1][1].integral(), expect, atol=1e-14)
    all_frozen = PathFamily(fam.paths, frozen={0, 1})
    sch_f = TargetSchedule.linear(all_frozen, [[5, 0, 0], [5, 0, 0]], T=4)
    assert all(b is p for row, p in zip(convex_blend(all_frozen, sch_f, CutoffProfile(0.5)), fam.paths) for b in row)


def test_splice_matching_and_identity():
    path = wobble(256)
    same, shift = endpoint_splice(path, path)
    assert same is path and shift == 0.0
    moved = DiscretePath(path.samples + np.array([0.1, 0, 0]))
    out, shift = endpoint_splice(moved, path, 1e-4, N_out=200_000)
    assert np.array_equal(out.samples[0], path.samples[0])
    assert np.array_equal(out.samples[-1], path.samples[-1])
    assert shift < 1e-3


def test_splice_reparameterises_middle():
    path = wobble(128)
    blended = DiscretePath(0.5 * path.samples)
    out, shift = endpoint_splice(blended, path, 0.25, N_out=256)
    s = out.parameter
    mid = out.samples[64:193]
    u = (s[64:193] - 0.25) / 0.5
    np.testing.assert_allclose(mid, blended.samples[np.round(u * 128).astype(int)], atol=1e-12)
    assert shift > 0


def test_splice_bad_margin():
    with pytest.raises(BadMargin):
        endpoint_splice(wobble(), wobble(), 0.4)
    with pytest.raises(BadMargin):
        endpoint_splice(wobble(), wobble(), 0.0)


def test_decompose_examples():
    d = convex_decompose(np.zeros(3), SHELL)
    np.testing.assert_array_equal(d.weights, [0.5, 0.5])
    np.testing.assert_array_equal(d.points[0], -d.points[1])
    r = 2.0
    d = convex_decompose(r * E12, SHELL)
    assert d.weights.tolist() == [1.0] and np.array_equal(d.points[0], r * E12)
    d = convex_decompose([1, 0, 0], SHELL, frame_size=24)
    assert np.linalg.norm(d.value() - [1, 0, 0]) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.6, 0.6), min_size=6, max_size=6))
def test_decompose_invariants(xs):
    c = np.array(xs[:3]) + 1j * np.array(xs[3:])
    d = convex_decompose(c, SHELL)
    assert np.all(d.weights >= 0)
    assert abs(d.weights.sum() - 1) < 1e-12
    assert np.linalg.norm(d.value() - c) < 1e-8
    assert np.all(SHELL.contains(d.points))


def test_null_frame_on_quadric():
    F = null_frame(4, 2.0, phases=6, extra_rotations=3)
    assert F.shape == (6 * (12 + 3), 4)
    np.testing.assert_allclose(quadric.norm(F), 2.0)
    assert np.max(np.abs(quadric.residual(F))) < 1e-14


def test_oscillate_examples():
    inside = flat_circle()
    assert oscillate(inside, SHELL) is inside
    with pytest.raises(ValueError):
        oscillate(DiscretePath(np.zeros((65, 3))), SHELL, K=4)
    zero = DiscretePath(np.zeros((257, 3), dtype=complex))
    eps = 1e-2
    out = oscillate(zero, SHELL, K=32, budget=eps / 4)
    assert np.linalg.norm(out.integral()) < eps / 4
    assert np.all(SHELL.contains(out.samples[1:-1]))
    assert np.array_equal(out.samples[[0, -1]], zero.samples[[0, -1]])
    back, drift = retract_path(out, SHELL, eps / 4)
    assert drift < eps / 4
    assert np.all(quadric.on_quadric(back.samples[1:-1]))


def test_oscillate_hull_path():
    path = DiscretePath(np.linspace([0.2, 0, 0], [0, 0.3j, 0.5], 129))
    out = oscillate(path, SHELL, K=16, budget=1e-10)
    assert np.linalg.norm(out.integral() - path.integral()) < 1e-10


def test_retract_examples():
    p = flat_circle()
    same, drift = retract_path(p, SHELL)
    assert np.array_equal(same.samples, p.samples) and drift == 0
    dented = p.samples.copy()
    dented[5] *= SHELL.r0 / 2
    with pytest.raises(OutsideRetractionDomain):
        retract_path(DiscretePath(dented), SHELL)


def test_deform_flat_circle_target():
    fam = PathFamily([flat_circle()])
    sch = TargetSchedule.linear(fam, [[0.5, 0.5j, 0]], T=4)
    H = deform_paths(fam, sch, 1e-3)
    c = H.conditions()
    assert c["fixed_on_initial_and_frozen"] and c["endpoints_fixed"] and c["integral_condition"]
    assert c["max_relative_quadric_residual"] < 1e-8
    assert H.certificate()["pass"]
    for snap in H.snapshots[0]:
        assert np.all(quadric.on_quadric(snap.samples))


def test_deform_closed_curve_case():
    fam = PathFamily([flat_circle()])
    sch = TargetSchedule.linear(fam, [[0, 0, 0]], T=4)
    H = deform_paths(fam, sch, 1e-3)
    final = H.snapshots[0][-1].integral()
    assert np.max(np.abs(final.real)) < 1e-3 and np.max(np.abs(final.imag)) < 1e-3
    assert H.conditions()["integral_condition"]


def test_deform_all_frozen_is_identity():
    fam = PathFamily([flat_circle(), wobble()], frozen={0, 1})
    sch = TargetSchedule.linear(fam, np.zeros((2, 3)), T=4)
    H = deform_paths(fam, sch, 1e-3)
    for p, row in enumerate(H.snapshots):
        assert all(s is fam.paths[p] for s in row)


def test_deform_frozen_member_bitwise_and_deterministic():
    fam = PathFamily([flat_circle(), wobble()], frozen={1})
    sch = TargetSchedule.linear(fam, [[0.2, 0.2j, 0], [0, 0, 0]], T=4)
    cfg = DeformConfig(seed=3)
    H1 = deform_paths(fam, sch, 1e-3, cfg)
    H2 = deform_paths(fam, sch, 1e-3, cfg)
    for a, b in zip(H1.snapshots[0], H2.snapshots[0]):
        assert np.array_equal(a.samples, b.samples)
    for s in H1.snapshots[1]:
        assert np.array_equal(s.samples, fam.paths[1].samples)


def test_deform_halved_epsilon_keeps_conditions():
    fam = PathFamily([flat_circle()])
    sch = TargetSchedule.linear(fam, [[0.5, 0.5j, 0]], T=2)
    for eps in (1e-3, 5e-4):
        c = deform_paths(fam, sch, eps).conditions()
        assert c["fixed_on_initial_and_frozen"] and c["endpoints_fixed"] and c["integral_condition"]


def test_deform_reports_stage():
    fam = PathFamily([flat_circle()])
    sch = TargetSchedule.linear(fam, [[0.5, 0.5j, 0]], T=2)
    with pytest.raises(StageError) as info:
        deform_paths(fam, sch, 1e-3, DeformConfig(margin=0.5))
    assert info.value.stage == "endpoint_splice"
    with pytest.raises(ValueError):
        deform_paths(fam, sch, 0.0)
