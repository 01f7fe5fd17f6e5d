import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freespec.ensembles import sample_lue
from freespec.exceptions import (InvalidInputError, InversionError, PoleError,
                                 PrincipalValueError, UnsupportedAnalyticError)
from freespec.spectral import DensityEstimate, LawSpec, SpectrumSample, eigenvalues, law_density
from freespec.xform import (ContourSpec, GSource, RSignature, classical_cumulants,
                            free_cumulants, free_moments, inverse_g, invert_stieltjes_density,
                            moments, r_at, r_contour, r_transform, realign,
                            stieltjes_analytic, stieltjes_empirical, stieltjes_from_density)
from oracles import cumulants_by_enumeration

SC = LawSpec.semicircle()
MP1 = LawSpec.mp(1.0)


def spec(*vals):
    return SpectrumSample(np.array(vals, dtype=float))


# Stieltjes transforms

def test_empirical_point_values():
    assert stieltjes_empirical(spec(0), 1j) == pytest.approx(-1j)
    assert stieltjes_empirical(spec(1, 3), 2) == pytest.approx(0)


def test_empirical_pole():
    with pytest.raises(PoleError):
        stieltjes_empirical(spec(1, 3), 1.0)


def test_empirical_matches_analytic_lue():
    z = np.linspace(-1, 4, 241) + 0.1j
    ge = stieltjes_empirical(eigenvalues(sample_lue(1000, 3000, 0)), z)
    ga = stieltjes_analytic(LawSpec.mp(1 / 3), z)
    assert np.max(np.abs(ge - ga)) <= 0.02


def test_density_point_mass():
    d = DensityEstimate([0.0], [1.0], (-0.001, 0.001))
    assert stieltjes_from_density(d, 1j) == pytest.approx(-1j, abs=1e-6)


def test_density_semicircle_quadrature():
    grid = np.linspace(-2, 2, 2001)
    d = DensityEstimate(grid, law_density(SC, grid), (-2, 2))
    assert stieltjes_from_density(d, 2j) == pytest.approx(1j * (1 - np.sqrt(2)), abs=1e-3)


def test_density_far_field():
    grid = np.linspace(0, 4, 101)
    d = DensityEstimate(grid, law_density(MP1, grid) + 0.01, (0, 4))
    z = 1e6 + 3e5j
    assert abs(stieltjes_from_density(d, z) * z - 1) < 1e-5


def test_density_principal_value_rejected():
    grid = np.linspace(-2, 2, 101)
    d = DensityEstimate(grid, law_density(SC, grid), (-2, 2))
    with pytest.raises(PrincipalValueError):
        stieltjes_from_density(d, 0.5)


def test_analytic_points():
    assert stieltjes_analytic(SC, 2j) == pytest.approx(1j * (1 - np.sqrt(2)))
    assert stieltjes_analytic(MP1, 2 + 1e-6j) == pytest.approx(0.5 - 0.5j, abs=1e-5)


def test_analytic_unsupported():
    with pytest.raises(UnsupportedAnalyticError):
        stieltjes_analytic(LawSpec.wishart_sum(2, 1), 1j)


@pytest.mark.parametrize("law", [SC, MP1, LawSpec.mp(0.2), LawSpec.mp(0.7, 2.0),
                                 LawSpec.semicircle(0.5)])
def test_analytic_matches_quadrature(law):
    # independent oracle: adaptive quadrature of the closed-form density
    from scipy.integrate import quad
    from freespec.spectral import law_support
    lo, hi = law_support(law)
    for z in [0.5 + 1j, -1 + 0.3j, hi + 2 + 0.5j, 3j]:
        re = quad(lambda x: float(law_density(law, x)) * (1 / (z - x)).real, lo, hi, limit=200)[0]
        im = quad(lambda x: float(law_density(law, x)) * (1 / (z - x)).imag, lo, hi, limit=200)[0]
        assert stieltjes_analytic(law, z) == pytest.approx(re + 1j * im, abs=1e-6)


@given(st.floats(-5, 5), st.floats(0.01, 5))
def test_analytic_herglotz(x, y):
    # G maps the upper half-plane to the lower half-plane
    for law in (SC, LawSpec.mp(0.4)):
        assert stieltjes_analytic(law, complex(x, y)).imag < 0


# Inversion of G to a density

def test_inverse_density_mp():
    grid = np.linspace(0, 3, 1000)
    d = invert_stieltjes_density(GSource.analytic(LawSpec.mp(1 / 3)), grid, 1e-3)
    ref = law_density(LawSpec.mp(1 / 3), grid)
    assert np.trapezoid(np.abs(d.density - ref), grid) <= 0.05


def test_inverse_density_cauchy_peak():
    d = invert_stieltjes_density(GSource.empirical(spec(1.0)), [1.0], 0.01)
    assert d.density[0] == pytest.approx(1 / (np.pi * 0.01))


def test_inverse_density_far_outside():
    d = invert_stieltjes_density(GSource.analytic(SC), [5.0], 1e-3)
    assert d.density[0] <= 1e-3


def test_inverse_density_bad_eps():
    with pytest.raises(InvalidInputError):
        invert_stieltjes_density(GSource.analytic(SC), [0.0], 0.0)


# Moments and cumulants

def test_moments_trivial():
    assert np.allclose(moments(spec(1, 1, 1), 4), 1)
    assert np.allclose(moments(spec(0, 0), 3), 0)


def test_moments_lue_catalan():
    m = moments(eigenvalues(sample_lue(1000, 1000, 3)), 3)
    assert np.all(np.abs(m - [1, 2, 5]) <= [0.05, 0.2, 0.8])


@pytest.mark.parametrize("m,free,classical", [
    ((1, 2, 5, 14), (1, 1, 1, 1), None),
    ((0, 1, 0, 2), (0, 1, 0, 0), (0, 1, 0, -1)),
    ((1, 2, 5), (1, 1, 1), (1, 1, 1)),
    ((0.7,), (0.7,), (0.7,)),
])
def test_cumulant_examples(m, free, classical):
    assert np.allclose(free_cumulants(m), free)
    if classical is not None:
        assert np.allclose(classical_cumulants(m), classical)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6))
@settings(max_examples=40, deadline=None)
def test_free_cumulants_enumeration(m):
    assert np.allclose(free_cumulants(m), cumulants_by_enumeration(m, True), atol=1e-9, rtol=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5))
@settings(max_examples=40, deadline=None)
def test_classical_cumulants_enumeration(m):
    assert np.allclose(classical_cumulants(m), cumulants_by_enumeration(m, False),
                       atol=1e-9, rtol=1e-9)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=7))
def test_free_moments_roundtrip(k):
    assert np.allclose(free_moments(free_cumulants(k)), k, atol=1e-9)


def test_gaussian_classical_cumulants():
    assert np.allclose(classical_cumulants([0, 1, 0, 3, 0, 15]), [0, 1, 0, 0, 0, 0])


# Functional inverse and R

def test_inverse_g_examples():
    assert inverse_g(GSource.analytic(SC), 1j * (1 - np.sqrt(2))) == pytest.approx(2j, abs=1e-8)
    assert inverse_g(GSource.analytic(MP1), 0.25 - 1e-8j) == pytest.approx(16 / 3, abs=1e-6)


@pytest.mark.parametrize("g", [GSource.analytic(MP1), GSource.analytic(SC),
                               GSource.empirical(SpectrumSample(np.linspace(0.2, 2.0, 50)))])
def test_inverse_g_laurent(g):
    w = 1e-4 * np.exp(-0.3j)
    z = inverse_g(g, w)
    assert abs(z - (1 / w + g.m1)) <= 0.01 * abs(1 / w)


def test_inverse_g_roundtrip_empirical():
    g = GSource.empirical(eigenvalues(sample_lue(50, 150, 0)))
    for z in [0.5 + 0.4j, 2 + 0.2j, -1 + 1j]:
        assert inverse_g(g, g(z)) == pytest.approx(z, abs=1e-8)


def test_inverse_g_zero():
    with pytest.raises(PoleError):
        inverse_g(GSource.analytic(SC), 0)


def test_r_examples():
    assert r_transform(GSource.analytic(MP1), 0.5 - 1e-8j) == pytest.approx(2.0, abs=1e-6)
    assert r_transform(GSource.analytic(SC), 0.3 - 1e-8j) == pytest.approx(0.3, abs=1e-6)


def test_r_tends_to_mean():
    g = GSource.empirical(SpectrumSample(np.array([0.5, 1.0, 2.5])))
    vals = [r_transform(g, -1j * 10.0 ** -k) for k in (2, 3, 4)]
    assert abs(vals[-1] - g.m1) < abs(vals[0] - g.m1)
    assert vals[-1] == pytest.approx(g.m1, abs=1e-3)


def test_r_at_reports_failures():
    g = GSource.analytic(MP1)
    z, r, failed = r_at(g, [0.3 - 1e-6j, 0.5 - 1e-6j])
    assert failed == []
    assert np.allclose(r, [1 / 0.7, 2.0], atol=1e-5)


# Contours and signatures

def test_contour_validation():
    with pytest.raises(InvalidInputError):
        ContourSpec(nodes=5)
    with pytest.raises(InvalidInputError):
        ContourSpec(eps=0)
    with pytest.raises(InvalidInputError):
        ContourSpec(x_min=1, x_max=0)
    c = ContourSpec(-1, 1, 11, 0.2)
    assert np.allclose(c.z.imag, 0.2) and c.x[0] == -1 and c.x[-1] == 1


def test_r_contour_mp_scale_anchor():
    sig = r_contour(GSource.analytic(MP1), ContourSpec(-3, 3, 241, 0.1))
    j = np.argmin(np.abs(sig.w_nodes - (0.62 - 0.098j)))
    # the quoted node is an order-of-magnitude anchor, not an exact contour point
    assert abs(sig.w_nodes[j] - (0.62 - 0.098j)) < 0.3
    assert np.allclose(sig.r_values, 1 / (1 - sig.w_nodes), atol=1e-9)
    assert 1.0 < abs(sig.r_values[j]) < 3.0


def test_r_contour_point_mass_zero():
    sig = r_contour(GSource.empirical(spec(0.0)))
    assert np.allclose(sig.r_values, 0, atol=1e-12)


def test_r_contour_deterministic():
    a = r_contour(GSource.empirical(spec(0.3, 1.1, 2.0)))
    b = r_contour(GSource.empirical(spec(0.3, 1.1, 2.0)))
    assert a.r_values.tobytes() == b.r_values.tobytes()


def test_realign_recovers_nodes():
    ref = r_contour(GSource.analytic(MP1), ContourSpec(-3, 3, 61, 0.1))
    g = GSource.empirical(eigenvalues(sample_lue(200, 200, 1)))
    sig = realign(g, ref)
    assert np.allclose(np.asarray(g(sig.z_nodes)), sig.w_nodes, atol=1e-8)


def test_rsignature_validation():
    z = np.linspace(0, 1, 8) + 1j
    with pytest.raises(InvalidInputError):
        RSignature(z[:4], z[:4], z[:4], "x", ContourSpec())
    with pytest.raises(InvalidInputError):
        RSignature(z, np.zeros(8, complex), z, "x", ContourSpec())


@given(st.floats(-4, 6), st.floats(0.05, 3), st.sampled_from([0.2, 0.5, 1.0]))
@settings(max_examples=60, deadline=None)
def test_analytic_inverse_roundtrip(x, y, c):
    g = GSource.analytic(LawSpec.mp(c))
    z = complex(x, y)
    assert inverse_g(g, g(z), guess=z + 0.05) == pytest.approx(z, abs=1e-7)
