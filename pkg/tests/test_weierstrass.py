from fractions import Fraction

import numpy as np
import pytest

from conftest import as_complex
from nullcurves import quadric
from nullcurves.domain import homology_basis, make_domain
from nullcurves.errors import (
    DimensionNot3,
    FlatData,
    GNotHolomorphic,
    NonzeroPeriods,
    NonzeroRealPeriods,
    PoleAtSample,
)
from nullcurves.rational import RationalMap, parse_rational
from nullcurves.weierstrass import (
    PolarGrid,
    RationalVector,
    WeierstrassData,
    classify,
    flux,
    from_gw,
    integrate_complex,
    integrate_real,
    nullity_residual,
    period_table_header,
    period_table_rows,
    periods,
    winding_parity_class,
)

P = parse_rational
CSTAR = make_domain([0])
UNIT = homology_basis(CSTAR)


def vec(*texts):
    return RationalVector([P(t) for t in texts])


def test_from_gw_examples(derived):
    cat = from_gw(P("z"), P("1/z^2"))
    assert list(cat) == [P("(1-z^2)/z^2"), P("i*(1+z^2)/z^2"), P("2/z")]
    flat = from_gw(P("0"), P("z"))
    assert list(flat) == [P("z"), P("i*z"), P("0")]
    meeks = from_gw(P("z^2*(z+1)/(z-1)"), P("i*(z-1)^2/z^4"))
    assert meeks[2] == P("2*i*(z+1)*(z-1)/z^2")
    assert meeks[2] == P(derived["meeks_third_component"].replace("I", "i").replace("**", "^"))
    assert all(c.poles_within([0]) for c in meeks)


def test_symbolic_nullity(catalog, derived):
    for name, entry in catalog.items():
        assert entry.f.symbolic_nullity().is_zero(), name
        assert derived["catalog"][name]["nullity_is_zero"]


def test_nullity_residual():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=32) + 1j * rng.normal(size=32)
    assert nullity_residual(from_gw(P("z^2 - 3"), P("(z+i)/z")), pts) < 1e-10
    assert nullity_residual(vec("1", "0", "0"), pts) == 1
    with pytest.raises(PoleAtSample):
        nullity_residual(from_gw(P("z"), P("1/z^2")), [0])


def test_weierstrass_data_validation():
    with pytest.raises(ValueError):
        WeierstrassData.from_gw(P("z"), P("1/(z-1)^2"), CSTAR)  # pole off the punctures
    with pytest.raises(ValueError):
        WeierstrassData(3, vec("1", "0", "0"), CSTAR)  # not null


def test_exceptional_points(catalog):
    assert [complex(p) for p in catalog["meeks-cover"].data().exceptional_points()] == [1]
    assert catalog["catenoid"].data().exceptional_points() == []
    assert catalog["meeks-cover"].basis()[0].radius == Fraction(1, 2)


def test_catalog_periods_match_residue_oracle(catalog, derived):
    for name, entry in catalog.items():
        expect = as_complex(derived["catalog"][name]["periods"])
        got = periods(entry.f, entry.theta, entry.basis(), 256).entries
        np.testing.assert_allclose(got, expect, atol=1e-10, err_msg=name)


def test_misc_periods(derived):
    m = derived["periods_misc"]
    got = periods(vec("1/z", "i/z", "0"), None, UNIT).entries[0]
    np.testing.assert_allclose(got, as_complex(m["(1/z, i/z, 0) on |z|=1"]), atol=1e-12)
    assert np.allclose(periods(vec("z", "i*z", "0"), None, UNIT).entries, 0, atol=1e-12)


def test_flux_is_imaginary_part(catalog):
    e = catalog["catenoid"]
    pv = periods(e.f, None, UNIT)
    fx = flux(e.f, None, UNIT)
    assert np.array_equal(fx.entries, pv.entries.imag)
    np.testing.assert_allclose(fx.entries, [[0, 0, 4 * np.pi]], atol=1e-10)
    assert flux(catalog["flat-null-curve"].f, None, UNIT).norm() < 1e-12


def test_periods_stable_under_refinement_and_radius(catalog):
    e = catalog["catenoid"]
    a = periods(e.f, None, UNIT, 256).entries
    b = periods(e.f, None, UNIT, 512).entries
    c = periods(e.f, None, homology_basis(CSTAR, radius=Fraction(3, 2)), 256).entries
    assert np.max(np.abs(a - b)) < 1e-10
    assert np.max(np.abs(a - c)) < 1e-10


def test_period_table():
    pv = periods(vec("1/z", "i/z", "0"), None, UNIT)
    assert period_table_header(3) == ["loop", "re1", "im1", "re2", "im2", "re3", "im3"]
    row = period_table_rows(pv)[0]
    assert row[0] == 1 and row[2] == pytest.approx(2 * np.pi)


def test_integrate_complex_flat():
    f = vec("z", "i*z", "0")
    grid = PolarGrid.spanning(0, 0.5, 2.0, 32)
    out = integrate_complex(f, None, 1.0, 0.5 * np.array([1, 1j, 0]), grid)
    z = out.zeta
    exact = 0.5 * (z ** 2)[..., None] * np.array([1, 1j, 0])
    assert np.max(np.abs(out.values - exact)) < 1e-8
    assert out.plaquette_defect < 1e-8


def test_integrate_complex_linear():
    out = integrate_complex(vec("1", "i", "0"), None, 0.0, np.zeros(3), PolarGrid.spanning(0, 0.5, 2, 16))
    exact = out.zeta[..., None] * np.array([1, 1j, 0])
    assert np.max(np.abs(out.values - exact)) < 1e-10


def test_integrate_complex_catenoid_defect(catalog):
    with pytest.raises(NonzeroPeriods) as info:
        integrate_complex(catalog["catenoid"].f, None, 1.0, np.zeros(3), PolarGrid.spanning(0, 0.5, 2, 32))
    assert info.value.defect == pytest.approx(4 * np.pi, rel=1e-8)


def test_integrate_real_catenoid(catalog):
    grid = PolarGrid.spanning(0, 0.5, 2, 32)
    out = integrate_real(catalog["catenoid"].f, None, 1.0, np.zeros(3), grid, basis=UNIT)
    assert out.plaquette_defect < 1e-8
    assert np.array_equal(out.values[0, 0], out.values[0, 0])
    # closed form: u = Re(-1/z - z, i(-1/z + z), 2 log z) up to a constant
    z = out.zeta
    closed = np.stack([(-1 / z - z).real, (1j * (z - 1 / z)).real, 2 * np.log(np.abs(z))], -1)
    closed -= np.array([-2, 0, 0])
    assert np.max(np.abs(out.values - closed)) < 1e-10


def test_integrate_real_rejects_real_period():
    with pytest.raises(NonzeroRealPeriods):
        integrate_real(vec("0", "0", "i/z"), None, 1.0, np.zeros(3), PolarGrid.spanning(0, 0.5, 2, 32))


def test_real_part_of_complex_integral_when_periods_vanish(catalog):
    e = catalog["henneberg"]
    grid = PolarGrid.spanning(0, 0.02, 0.08, 32)
    C = integrate_complex(e.f, None, 0.05, np.zeros(3), grid, basis=e.basis())
    R = integrate_real(e.f, None, 0.05, np.zeros(3), grid)
    assert np.max(np.abs(C.values.real - R.values)) < 1e-10


def test_classify_catalog(catalog, derived):
    for name, entry in catalog.items():
        cls = classify(entry.f, entry.domain, entry.basis())
        assert list(cls.bits) == entry.expected["bits"], name
        assert cls.flat == (name == "flat-null-curve")
    with pytest.raises(FlatData):
        classify(catalog["flat-null-curve"].f, CSTAR, UNIT, require_nonflat=True)


def test_classify_dimensions():
    f4 = RationalVector([P("1"), P("i"), P("0"), P("0")])
    assert classify(f4, CSTAR, UNIT).is_trivial
    f2 = RationalVector([P("1"), P("i")])
    with pytest.raises(DimensionNot3):
        classify(f2, CSTAR, UNIT)


def test_classify_invariances(catalog):
    e = catalog["henneberg"]
    basis = e.basis()
    base = classify(e.f, e.domain, basis).bits
    scaled = lambda z: 3.5 * e.f(z)
    assert classify(scaled, e.domain, basis).bits == base
    c, s = np.cos(0.7), np.sin(0.7)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    rotated = lambda z: e.f(z) @ R.T
    assert classify(rotated, e.domain, basis).bits == base
    bump = np.array([1e-3, 0, 0])
    perturbed = lambda z: quadric.retract_many(e.f(z) + bump * np.abs(e.f(z)).max(-1, keepdims=True))
    assert classify(perturbed, e.domain, basis).bits == base


def test_winding_parity(catalog, derived):
    assert winding_parity_class(P("z"), UNIT).bits == (1,)
    assert winding_parity_class(P("1/z^2"), UNIT).bits == (0,)
    (half,) = homology_basis(CSTAR, radius=Fraction(1, 2))
    assert winding_parity_class(P("i*(z-1)^2/z^4"), [half]).bits == (0,)
    for name, entry in catalog.items():
        bits = list(winding_parity_class(entry.eta, entry.basis()).bits)
        assert bits == derived["catalog"][name]["eta_winding_parity"], name
    e = catalog["meeks-cover"]
    with pytest.raises(GNotHolomorphic):
        winding_parity_class(e.eta, e.basis(), g=e.g, domain=e.domain)
