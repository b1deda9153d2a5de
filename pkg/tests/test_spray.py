import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from nullcurves import quadric
from nullcurves.domain import homology_basis, make_domain
from nullcurves.errors import (
    BallExceeded,
    FlatData,
    FlatOnLoop,
    NoConvergence,
    NonzeroRealPeriods,
    NotOnQuadric,
    RankDeficient,
)
from nullcurves.rational import parse_rational
from nullcurves.spray import (
    SprayConfig,
    SprayedMap,
    TangentFlow,
    apply_flow,
    correct_to_null,
    default_config,
    ensure_submersive,
    evaluate_spray,
    isotope_family,
    period_jacobian,
    solve_periods,
)
from nullcurves.weierstrass import RationalVector, classify, from_gw, periods

CSTAR = make_domain([0])
UNIT = homology_basis(CSTAR)
FLAT = RationalVector([parse_rational("1"), parse_rational("i"), parse_rational("0")])

complexes = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


def flows(n):
    return st.one_of(
        st.just(TangentFlow.scaling()),
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
        .filter(lambda p: p[0] != p[1])
        .map(lambda p: TangentFlow.rotation(*p)),
    )


def test_flow_examples():
    out = apply_flow(TangentFlow.rotation(0, 1), np.pi / 2, [1, 1j, 0])
    np.testing.assert_allclose(out, [-1j, 1, 0], atol=1e-15)
    assert quadric.residual(out) == pytest.approx(0, abs=1e-15)
    z = np.array([1, 1j, 0])
    np.testing.assert_allclose(apply_flow(TangentFlow.scaling(), np.log(2), z), 2 * z)
    for f in (TangentFlow.scaling(), TangentFlow.rotation(1, 2)):
        assert np.array_equal(apply_flow(f, 0, z), z)
    with pytest.raises(NotOnQuadric):
        apply_flow(TangentFlow.scaling(), 0.1, [1, 0, 0])
    with pytest.raises(ValueError):
        TangentFlow.rotation(1, 1)


def test_flow_residual_symbolic():
    t = sp.symbols("t")
    z = sp.symbols("z1:4")
    res = sum(c ** 2 for c in z)
    c, s = sp.cos(t), sp.sin(t)
    rotated = (z[0] * c - z[1] * s, z[0] * s + z[1] * c, z[2])
    assert sp.simplify(sum(w ** 2 for w in rotated) - res) == 0
    scaled = [sp.exp(t) * w for w in z]
    assert sp.simplify(sum(w ** 2 for w in scaled) - sp.exp(2 * t) * res) == 0


@settings(max_examples=200)
@given(st.data(), st.integers(3, 5))
def test_flow_preserves_quadric(data, n):
    flow = data.draw(flows(n))
    t = data.draw(complexes)
    z = np.array([data.draw(complexes) for _ in range(n)])
    before = quadric.residual(z)
    after = quadric.residual(flow.act(t, z))
    if flow.kind == "scaling":
        before = before * np.exp(2 * t)
    scale = max(1.0, float(np.abs(flow.act(t, z)).max())) ** 2
    assert abs(after - before) < 1e-13 * scale


@settings(max_examples=50, deadline=None)
@given(st.lists(complexes, min_size=12, max_size=12), complexes)
def test_spray_core_and_quadric(zs, x):
    F = from_gw(parse_rational("z"), parse_rational("1/z^2"))
    cfg = default_config(3, 1, CSTAR)
    x = x if abs(x) > 0.1 else 0.5
    assert np.array_equal(evaluate_spray(F, cfg, np.zeros(12), x), F(x))
    zeta = np.array(zs) / 10
    out = evaluate_spray(F, cfg, zeta, np.array([x]))
    scale = float(np.abs(out).max()) ** 2
    assert abs(quadric.residual(out[0])) < 1e-12 * max(1, scale)


def test_spray_examples():
    F = FLAT
    cfg = SprayConfig([TangentFlow.scaling()], [0])
    x = np.array([0.3, 2j])
    np.testing.assert_allclose(evaluate_spray(F, cfg, [np.log(2)], x), 2 * F(x))
    assert np.array_equal(evaluate_spray(F, cfg, [5.0], x, weight=0.0), F(x))
    with pytest.raises(BallExceeded):
        evaluate_spray(F, cfg, [100.0], x)
    with pytest.raises(ValueError):
        SprayConfig([TangentFlow.scaling()], [0, 1])


def test_default_config():
    cfg = default_config(3, 1, CSTAR)
    assert cfg.size == 12 and min(cfg.exponents) == -2 and max(cfg.exponents) == 2
    assert {str(f) for f in cfg.flows} == {"rotation(1,2)", "rotation(1,3)", "rotation(2,3)", "scaling"}
    assert default_config(3, 2, make_domain([1, 2])).center == 1
    assert min(default_config(3, 1, make_domain([])).exponents) == 0
    assert cfg.enlarged().size == 24


def test_jacobian_catenoid(catalog):
    e = catalog["catenoid"]
    cfg = default_config(3, 1, CSTAR, size=24)
    J = period_jacobian(e.f, cfg, UNIT)
    assert J.matrix.shape == (6, 48)
    assert J.rank == 6 and J.submersive
    J.require()
    assert period_jacobian(e.f, default_config(3, 1, CSTAR), UNIT).rank == 6


def test_jacobian_failures(catalog):
    with pytest.raises(FlatOnLoop):
        period_jacobian(FLAT, default_config(3, 1), UNIT)
    tiny = SprayConfig([TangentFlow.scaling()], [0])
    J = period_jacobian(catalog["catenoid"].f, tiny, UNIT)
    assert J.rank <= 2
    with pytest.raises(RankDeficient):
        J.require()


def test_ensure_submersive_enlarges(catalog):
    small = SprayConfig([TangentFlow.rotation(0, 1), TangentFlow.scaling()], [0, -1])
    cfg, J = ensure_submersive(catalog["catenoid"].f, small, UNIT)
    assert cfg.size > small.size and J.submersive
    with pytest.raises(RankDeficient):
        ensure_submersive(catalog["catenoid"].f, small, UNIT, max_doublings=0)


def test_solve_periods(catalog):
    e = catalog["catenoid"]
    cfg = default_config(3, 1, CSTAR)
    P0 = periods(e.f, None, UNIT)
    same = solve_periods(e.f, cfg, UNIT, P0)
    assert not np.any(same.zeta_star) and same.iterations == 0
    res = solve_periods(e.f, cfg, UNIT, np.zeros((1, 3)), tol=1e-10)
    assert res.period_norm < 1e-10
    assert periods(res.corrected, None, UNIT, 1024).norm() < 1e-10
    assert np.linalg.norm(res.zeta_star) <= cfg.ball_radius
    cramped = SprayConfig(cfg.flows, cfg.exponents, ball_radius=1e-6)
    with pytest.raises(NoConvergence):
        solve_periods(e.f, cramped, UNIT, np.zeros((1, 3)))


def test_correct_to_null_catenoid(catalog):
    e = catalog["catenoid"]
    out = correct_to_null(e.f, None, UNIT, CSTAR, epsilon=1e-3, tol=1e-10, T=4, loop_stage=False)
    assert out.period_norm < 1e-10
    assert all(s.periods.real_norm() < 1e-3 for s in out.trace)
    assert all(s.isotopy.bits == (0,) and s.nonflat for s in out.trace)
    assert len(out.trace) == 5 and not np.any(out.trace[0].zeta)
    assert out.certificate(1e-3, 1e-10)["pass"]
    assert classify(out.corrected, CSTAR, UNIT).bits == classify(e.f, CSTAR, UNIT).bits


def test_correct_to_null_trivial_and_errors(catalog):
    e = catalog["catenoid"]
    done = correct_to_null(e.f, None, UNIT, CSTAR, T=2, loop_stage=False)
    again = correct_to_null(done.corrected, None, UNIT, CSTAR, T=2)
    assert again.corrected is done.corrected and again.config is None
    with pytest.raises(FlatData):
        correct_to_null(FLAT, None, UNIT, CSTAR)
    bad = lambda z: 1j * e.f(z)  # flux turns into a real period
    with pytest.raises(NonzeroRealPeriods):
        correct_to_null(bad, None, UNIT, CSTAR)


def test_isotope_family(catalog):
    e = catalog["catenoid"]
    pre = correct_to_null(e.f, None, UNIT, CSTAR, T=2, loop_stage=False).corrected
    fam = isotope_family([e.f, pre], {1}, None, UNIT, CSTAR, epsilon=1e-3, tol=1e-10, T=4)
    c = fam.conditions()
    assert c["fixed_on_initial_and_frozen"] and c["approximation"]
    assert c["real_periods_small"] and c["final_periods_vanish"]
    assert all(s is pre for s in fam.snapshots[1])


def test_isotope_family_trivial_and_flat(catalog):
    e = catalog["catenoid"]
    pre = correct_to_null(e.f, None, UNIT, CSTAR, T=2, loop_stage=False).corrected
    fam = isotope_family([pre], {0}, None, UNIT, CSTAR, T=3)
    assert fam.snapshots == [[pre] * 4]
    with pytest.raises(Exception):
        isotope_family([FLAT], set(), None, UNIT, CSTAR)


def test_sprayed_map_is_callable(catalog):
    e = catalog["catenoid"]
    m = SprayedMap(e.f, default_config(3, 1), np.zeros(12))
    assert m.n == 3
    assert np.array_equal(m(np.array([2.0])), e.f(np.array([2.0])))
