import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, SILVER
from maryland.errors import DomainError, RationalFrequencyError, RationalFrequencyWarning, ResonanceWarning
from maryland.params import (
    SpectralParams,
    check_frequency,
    energy_from_params,
    frac,
    gauss_chain,
    params_from_energy,
    perturb_off_resonance,
    renorm_params,
    resonance_distance,
    wrap_angle,
)

# Newton iteration on 2 cos(eta) ch(l) = 1, -2 sin(eta) sh(l) = 1 (independent of the complex arccos)
ORACLE_E1_L1 = (-1.1185178796437059, 0.5306375309525179)


def test_energy_zero_gives_quarter_turn():
    eta, l = params_from_energy(0.0, 2 * math.sinh(1.0))
    assert eta == pytest.approx(-math.pi / 2, abs=1e-14)
    assert l == pytest.approx(1.0, rel=1e-14)


def test_round_trip_example():
    E, lam = energy_from_params(-1.0, 0.5)
    eta, l = params_from_energy(E, lam)
    assert eta == pytest.approx(-1.0, abs=1e-12)
    assert l == pytest.approx(0.5, rel=1e-12)


def test_energy_inversion_against_newton_oracle():
    eta, l = params_from_energy(1.0, 1.0)
    assert eta == pytest.approx(ORACLE_E1_L1[0], abs=1e-12)
    assert l == pytest.approx(ORACLE_E1_L1[1], rel=1e-12)


@pytest.mark.parametrize("lam", [0.0, -0.5])
def test_nonpositive_coupling_rejected(lam):
    with pytest.raises(DomainError):
        params_from_energy(0.3, lam)


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi + 1e-6, -1e-6), st.floats(1e-3, 20.0))
def test_round_trip_property(eta, l):
    E, lam = energy_from_params(eta, l)
    eta2, l2 = params_from_energy(E, lam)
    assert abs(eta2 - eta) < 1e-12 * max(1.0, abs(eta)) / min(1.0, math.tanh(l)) + 1e-12
    assert l2 == pytest.approx(l, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize(
    "kw",
    [
        dict(omega=0.0, theta=0.1, eta=1.0, l=1.0),
        dict(omega=1.0, theta=0.1, eta=1.0, l=1.0),
        dict(omega=0.5, theta=1.0, eta=1.0, l=1.0),
        dict(omega=0.5, theta=-0.1, eta=1.0, l=1.0),
        dict(omega=0.5, theta=0.1, eta=1.0, l=0.0),
        dict(omega=0.5, theta=0.1, eta=math.nan, l=1.0),
    ],
)
def test_invalid_params(kw):
    with pytest.raises(DomainError):
        SpectralParams(**kw)


def test_eta_is_wrapped():
    p = SpectralParams(GOLDEN, 0.3, 4.0, 1.0)
    assert p.eta == pytest.approx(4.0 - 2 * math.pi)
    assert SpectralParams(GOLDEN, 0.3, -math.pi, 1.0).eta == pytest.approx(math.pi)


def test_energy_properties_match_formula():
    p = SpectralParams(GOLDEN, 0.3, -0.7, 1.3)
    assert p.energy == pytest.approx(2 * math.cosh(1.3) * math.cos(-0.7))
    assert p.coupling == pytest.approx(-2 * math.sinh(1.3) * math.sin(-0.7))
    q = SpectralParams.from_energy(GOLDEN, 0.3, p.energy, p.coupling)
    assert (q.eta, q.l) == pytest.approx((p.eta, p.l), rel=1e-12)


def test_silver_fixed_point():
    step = renorm_params(SpectralParams(SILVER, 0.3, 1.0, 1.0), 10)
    assert step.next_params.omega == pytest.approx(SILVER, abs=1e-14)
    assert step.n_next == -4


def test_golden_eta_step():
    step = renorm_params(SpectralParams(GOLDEN, 0.3, 1.0, 0.5), 50)
    assert step.next_params.eta == pytest.approx(1.0 / GOLDEN, abs=1e-14)
    assert step.next_params.l == pytest.approx(0.5 / GOLDEN)
    assert step.next_params.theta == pytest.approx(frac(0.3 / GOLDEN))
    assert step.n_next == -math.floor(0.3 + 50 * GOLDEN)


@pytest.mark.parametrize("omega, value", [(SILVER, 0.41421356), (GOLDEN, 0.61803398)])
def test_gauss_chain_fixed_points(omega, value):
    ch = gauss_chain(omega, 5)
    assert len(ch) == 5
    assert all(abs(w - value) < 1e-8 for w in ch)


def test_gauss_chain_near_rational():
    assert gauss_chain(0.3, 2) == pytest.approx([0.3, 1 / 3])
    with pytest.warns(RationalFrequencyWarning):
        ch = gauss_chain(0.3, 3)
    assert len(ch) == 2


def test_gauss_chain_exact_rational():
    with pytest.raises(RationalFrequencyError):
        gauss_chain(0.5, 3)


def test_gauss_chain_depth_validation():
    with pytest.raises(DomainError):
        gauss_chain(GOLDEN, 0)


def test_check_frequency_flags_rationals():
    with pytest.warns(RationalFrequencyWarning):
        assert check_frequency(0.5 + 1e-12) is not None
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_frequency(GOLDEN) is None


def test_resonance_lattice():
    assert resonance_distance(math.pi * GOLDEN, GOLDEN) < 1e-12
    assert resonance_distance(-math.pi * (2 * GOLDEN + 1), GOLDEN) < 1e-12
    assert resonance_distance(math.pi, GOLDEN) == 0.0
    assert resonance_distance(0.0, GOLDEN) == 0.0
    assert resonance_distance(1.0, GOLDEN) > 0.1
    # mixed-sign combinations are regular points
    assert resonance_distance(math.pi * (3 * GOLDEN - 1), GOLDEN) > 0.1
    assert resonance_distance(math.pi * (2 * GOLDEN - 2), GOLDEN) > 0.1


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([GOLDEN, SILVER]), st.integers(0, 3), st.integers(0, 2), st.sampled_from([1, -1]))
def test_resonance_set_matches_vanishing_coefficient(omega, k, m, s):
    eta = s * math.pi * (omega * k + m)
    if abs(eta) > math.pi:
        return
    assert resonance_distance(eta, omega) < 1e-12


def test_perturbation_flagged():
    p = SpectralParams(GOLDEN, 0.3, math.pi * GOLDEN, 0.5)
    with pytest.warns(ResonanceWarning):
        q, moved = perturb_off_resonance(p)
    assert moved and q.eta != p.eta
    assert abs(q.eta - p.eta) == pytest.approx(1e-7)
    same, moved2 = perturb_off_resonance(SpectralParams(GOLDEN, 0.3, 1.0, 0.5))
    assert not moved2 and same.eta == 1.0


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from([GOLDEN, SILVER, math.sqrt(3) - 1, math.e - 2]),
    st.floats(0.01, 0.99),
    st.floats(-3.1, 3.1),
    st.floats(0.05, 3.0),
    st.integers(-200, 200),
)
def test_step_invariants(omega, theta, eta, l, N):
    p = SpectralParams(omega, theta, eta, l)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = renorm_params(p, N, perturb=False)
    q = s.next_params
    assert s.n_next == -math.floor(theta + N * omega)
    assert q.omega == pytest.approx(frac(1 / omega))
    assert -math.pi < q.eta <= math.pi
    k = (p.eta / omega - q.eta) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-9
    assert q.l == pytest.approx(l / omega)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([GOLDEN, SILVER, math.sqrt(3) - 1]), st.floats(0.05, 2.0), st.integers(1, 8))
def test_l_telescopes_along_chain(omega, l, depth):
    p = SpectralParams(omega, 0.3, 1.0, l)
    prod = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(depth):
            prod *= p.omega
            p = renorm_params(p, 10, perturb=False).next_params
    assert p.l == pytest.approx(l / prod, rel=1e-12)
