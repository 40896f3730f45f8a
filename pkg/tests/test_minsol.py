import cmath
import math

import numpy as np
import pytest

from conftest import GOLDEN
from maryland.errors import DomainError, MinSolPoleError, NearSingularValue
from maryland.minsol import (
    MinSolContext,
    asymptotic_coeffs,
    fit_asymptotic_coeffs,
    maryland_residual,
    pole_set_distance,
    second_equation_residual,
    upsilon,
    upsilon_real,
    wronskian,
    wronskian_closed_forms,
    xhat,
)
from maryland.params import SpectralParams, resonance_distance, wrap_angle


def test_contour_vs_axis_representation(base_ctx):
    for z in (0.2 + 0.4j, -0.35 - 0.25j, 0.6 + 1.1j, -0.1 - 0.9j):
        a = upsilon(base_ctx, z)
        b = upsilon_real(base_ctx, z)
        assert abs(a - b) < 1e-10 * abs(b)


def test_matching_on_the_axis(base_ctx):
    # the contour form is defined off the axis only; its symmetric average,
    # extrapolated to eps -> 0, must reproduce the axis representation
    x = 0.2
    eps = (0.2, 0.1, 0.05)
    avg = [0.5 * (upsilon(base_ctx, complex(x, e)) + upsilon(base_ctx, complex(x, -e))) for e in eps]
    # even in eps: Richardson with ratio 2 twice
    r1 = [(4 * avg[i + 1] - avg[i]) / 3 for i in range(2)]
    r2 = (16 * r1[1] - r1[0]) / 15
    ref = upsilon_real(base_ctx, x)
    assert abs(r2 - ref) < 1e-6 * abs(ref)


def test_conjugation_symmetry(base_ctx):
    for z in (0.3 + 0.5j, -0.7 + 0.2j):
        assert abs(upsilon(base_ctx, z.conjugate()) + upsilon(base_ctx, z).conjugate()) < 1e-10 * abs(upsilon(base_ctx, z))


def test_imaginary_on_real_axis(base_ctx):
    xs = np.array([-1.4, -0.6, -0.05, 0.1, 0.45, 0.9, 1.3])
    v = upsilon_real(base_ctx, xs)
    assert np.all(np.abs(v.real) < 1e-12 * np.abs(v))


def test_equations_inside_strip(base_ctx):
    for z in (0.13 + 0.02j, -0.21 + 0.3j, 0.05 - 0.4j):
        assert maryland_residual(base_ctx, lambda u: upsilon_real(base_ctx, u), z) < 1e-9
    for x in (-0.25, 0.0 + 0.013, 0.27):
        assert second_equation_residual(base_ctx, lambda u: upsilon_real(base_ctx, u), complex(x)) < 1e-9


def test_equation_off_axis_by_contour(base_ctx):
    z = 0.31 + 0.9j
    assert maryland_residual(base_ctx, lambda u: upsilon(base_ctx, u), z) < 1e-9


def test_pole_set():
    assert pole_set_distance(1 + GOLDEN, GOLDEN) < 1e-15
    assert pole_set_distance(-(2 + 3 * GOLDEN) + 0.01j, GOLDEN) == pytest.approx(0.01)
    assert pole_set_distance(0.5, GOLDEN) > 0.1


def test_pole_raises(base_ctx):
    with pytest.raises(MinSolPoleError):
        upsilon_real(base_ctx, 1 + GOLDEN)


def test_near_pole_grows(base_ctx):
    z0 = 1 + GOLDEN
    a = abs(upsilon_real(base_ctx, z0 + 1e-3))
    b = abs(upsilon_real(base_ctx, z0 + 1e-4))
    assert b / a == pytest.approx(10, rel=0.05)


def test_real_axis_needs_axis_representation(base_ctx):
    with pytest.raises(DomainError):
        upsilon(base_ctx, 0.4)


def test_xhat_shift_relation(base_ctx):
    # sigma(a + pi w) = (1 + exp(-i a)) sigma(a - pi w) applied to each factor
    p = 0.37 - 1.2j
    pw = math.pi * GOLDEN
    b, c = complex(base_ctx.eta, -base_ctx.l), complex(base_ctx.eta, base_ctx.l)
    f = lambda a: 1 + cmath.exp(-1j * a)  # noqa: E731
    ratio = f(p + b) * f(p - b) / (f(p - c) * f(p + c))
    assert abs(xhat(base_ctx, p + pw) / xhat(base_ctx, p - pw) - ratio) < 1e-10 * abs(ratio)


def test_xhat_singular_factor(base_ctx):
    z0 = math.pi * (1 + GOLDEN)
    p = z0 - complex(base_ctx.eta, -base_ctx.l)
    with pytest.raises(NearSingularValue, match="p\\+eta-il"):
        xhat(base_ctx, p)


def test_b_is_minus_conjugate_a(base_ctx):
    c = asymptotic_coeffs(base_ctx)
    assert c.b_plus == -c.a_plus.conjugate()
    assert c.b_minus == -c.a_minus.conjugate()


@pytest.mark.parametrize("eta, plus_zero", [(math.pi * GOLDEN, False), (-math.pi * GOLDEN, True), (0.0, True)])
def test_coefficients_vanish_on_resonance(eta, plus_zero):
    # a_- vanishes on eta = pi(omega k + m), a_+ on the negatives; eta = 0 is on both
    ctx = MinSolContext(SpectralParams(GOLDEN, 0.3, wrap_angle(eta), 0.5))
    c = asymptotic_coeffs(ctx)
    assert (c.a_plus == 0) == plus_zero
    assert (c.a_minus == 0) == (eta >= 0)


@pytest.mark.parametrize("eta", [math.pi * (3 * GOLDEN - 1), math.pi * (2 * GOLDEN - 2), math.pi * (1 - GOLDEN)])
def test_mixed_sign_lattice_points_are_regular(eta):
    ctx = MinSolContext(SpectralParams(GOLDEN, 0.3, eta, 0.5))
    c = asymptotic_coeffs(ctx)
    assert abs(c.a_plus) > 0.1 and abs(c.a_minus) > 0.1
    assert resonance_distance(eta, GOLDEN) > 0.1


def test_coefficient_fit(base_ctx):
    c = asymptotic_coeffs(base_ctx)
    ap, am = fit_asymptotic_coeffs(base_ctx)
    assert abs(ap - c.a_plus) < 1e-4 * abs(c.a_plus)
    assert abs(am - c.a_minus) < 1e-4 * abs(c.a_minus)


def test_wronskian_constant_and_closed_form(base_ctx):
    f = lambda z: upsilon_real(base_ctx, z)  # noqa: E731
    g = lambda z: upsilon_real(base_ctx, z + 1)  # noqa: E731
    ws = [wronskian(g, f, complex(x), GOLDEN) for x in (0.1, 0.35, 0.8)]
    a_form, b_form = wronskian_closed_forms(base_ctx)
    for w in ws:
        assert abs(w - a_form) < 1e-8 * abs(a_form)
    assert abs(a_form - b_form) < 1e-12 * abs(a_form)


def test_wronskian_antisymmetric():
    f = lambda z: cmath.exp(z)  # noqa: E731
    g = lambda z: z * z  # noqa: E731
    assert wronskian(f, g, 0.3, 0.7) == pytest.approx(-wronskian(g, f, 0.3, 0.7))
    assert wronskian(f, f, 0.3, 0.7) == 0


def test_mirror_symmetry(base_params):
    # Upsilon_{eta,l}(-z) = C Upsilon_{-eta,l}(z), C = b_-(eta) / a_+(-eta)
    ctx = MinSolContext(base_params)
    mirror = MinSolContext(SpectralParams(GOLDEN, 0.3, -base_params.eta, base_params.l))
    C = asymptotic_coeffs(ctx).b_minus / asymptotic_coeffs(mirror).a_plus
    for z in (0.23, -0.41 + 0.2j):
        lhs = upsilon_real(ctx, -z)
        rhs = C * upsilon_real(mirror, z)
        assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_sigma_context_mismatch(base_params, silver_sigma):
    with pytest.raises(DomainError):
        MinSolContext(base_params, sigma=silver_sigma)


def test_vectorized_matches_scalar(base_ctx):
    zs = np.array([0.1 + 0.1j, 1.7 - 0.2j, -2.3 + 0.05j])
    v = upsilon_real(base_ctx, zs)
    assert v.shape == (3,)
    for z, vv in zip(zs, v):
        assert upsilon_real(base_ctx, z) == vv
