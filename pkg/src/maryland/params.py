"""Spectral parameters of the Maryland equation and their renormalization.

The pair ``(E, lambda)`` is traded for ``(eta, l)`` through
``E + i*lambda = 2*cos(eta + i*l)``; one renormalization step applies the
Gauss map to the frequency and rescales ``eta`` and ``l`` by ``1/omega``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import (
    DomainError,
    RationalFrequencyError,
    RationalFrequencyWarning,
    ResonanceWarning,
)

RATIONAL_TOL = 1e-9
Q_MAX = 64
RESONANCE_TOL = 1e-8
CHAIN_FLOOR = 1e-6


def wrap_angle(x: float) -> float:
    """Representative of ``x`` modulo ``2*pi`` in ``(-pi, pi]``."""
    y = math.remainder(x, 2.0 * math.pi)
    if y <= -math.pi:
        y += 2.0 * math.pi
    return y


def frac(x: float) -> float:
    return x - math.floor(x)


def nearest_rational(x: float, q_max: int = Q_MAX) -> tuple[Fraction, float]:
    """Best rational approximation with denominator ``<= q_max`` and its distance."""
    f = Fraction(x).limit_denominator(q_max)
    return f, abs(x - float(f))


def energy_from_params(eta: float, l: float) -> tuple[float, float]:
    """``(E, lambda)`` with ``E = 2 ch(l) cos(eta)`` and ``lambda = -2 sh(l) sin(eta)``."""
    return 2.0 * math.cosh(l) * math.cos(eta), -2.0 * math.sinh(l) * math.sin(eta)


def params_from_energy(E: float, lam: float) -> tuple[float, float]:
    """Invert ``E + i*lam = 2*cos(eta + i*l)`` for ``l > 0`` and ``eta in (-pi, 0)``.

    Raises
    ------
    DomainError
        If ``lam <= 0``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    w = cmath.acos(complex(E, lam) / 2.0)
    # principal acos has Re in [0, pi]; lam > 0 forces Im < 0, so -w is the branch we want
    eta, l = -w.real, -w.imag
    return eta, l


def resonance_distance(eta: float, omega: float, kmax: int = 64) -> float:
    """Distance from ``eta`` to the set ``+-pi*(omega*k + m)``, ``k, m >= 0``.

    At ``eta = pi*(omega*k + m)`` the coefficient ``a_-`` of the minimal
    solution vanishes, at the negatives ``a_+`` does; either way the
    fundamental matrix degenerates.  Mixed-sign points ``pi*(omega*k - m)``
    are regular.
    """
    best = math.inf
    for x in (eta / math.pi, -eta / math.pi):
        for k in range(kmax + 1):
            r = x - omega * k
            if r < -0.5:
                break
            best = min(best, abs(r - max(0, round(r))) * math.pi)
    return best


@dataclass(frozen=True)
class SpectralParams:
    """The tuple ``(omega, theta, eta, l)``.

    ``eta`` is stored as its representative in ``(-pi, pi]``.
    """

    omega: float
    theta: float
    eta: float
    l: float

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise DomainError(f"omega must lie in (0, 1), got {self.omega!r}")
        if not 0.0 <= self.theta < 1.0:
            raise DomainError(f"theta must lie in [0, 1), got {self.theta!r}")
        if not self.l > 0.0 or not math.isfinite(self.l):
            raise DomainError(f"l must be positive and finite, got {self.l!r}")
        if not math.isfinite(self.eta):
            raise DomainError(f"eta must be finite, got {self.eta!r}")
        object.__setattr__(self, "eta", wrap_angle(self.eta))

    @classmethod
    def from_energy(cls, omega, theta, E, lam):
        eta, l = params_from_energy(E, lam)
        return cls(omega, theta, eta, l)

    @property
    def energy(self) -> float:
        return energy_from_params(self.eta, self.l)[0]

    @property
    def coupling(self) -> float:
        return energy_from_params(self.eta, self.l)[1]

    def rational_diagnostic(self, rational_tol=RATIONAL_TOL, q_max=Q_MAX):
        """Return the nearby rational if ``omega`` is within ``rational_tol`` of one, else None."""
        f, d = nearest_rational(self.omega, q_max)
        return f if d < rational_tol else None

    def resonance_distance(self) -> float:
        return resonance_distance(self.eta, self.omega)


@dataclass(frozen=True)
class RenormStep:
    params: SpectralParams
    n_steps: int
    next_params: SpectralParams
    n_next: int
    perturbed: bool = False


def check_frequency(omega, rational_tol=RATIONAL_TOL, q_max=Q_MAX):
    f, d = nearest_rational(omega, q_max)
    if d < rational_tol:
        warnings.warn(
            f"omega={omega!r} is within {d:.2e} of {f}; renormalization is ill-conditioned",
            RationalFrequencyWarning,
            stacklevel=3,
        )
        return f
    return None


def perturb_off_resonance(p: SpectralParams, resonance_tol=RESONANCE_TOL):
    """Move ``eta`` by ``10*resonance_tol`` if it sits on the resonance lattice.

    Returns the (possibly new) parameters and a flag telling whether they moved.
    """
    if p.resonance_distance() >= resonance_tol:
        return p, False
    warnings.warn(
        f"eta={p.eta!r} is resonant for omega={p.omega!r}; perturbing by {10 * resonance_tol:g}",
        ResonanceWarning,
        stacklevel=3,
    )
    return replace(p, eta=p.eta + 10.0 * resonance_tol), True


def renorm_params(
    p: SpectralParams,
    N: int,
    rational_tol=RATIONAL_TOL,
    q_max=Q_MAX,
    resonance_tol=RESONANCE_TOL,
    perturb=True,
) -> RenormStep:
    """One Gauss-map step: ``N1 = -floor(theta + N*omega)``, ``omega1 = {1/omega}``,
    ``theta1 = {theta/omega}``, ``eta1 = eta/omega mod 2*pi``, ``l1 = l/omega``.

    With ``perturb`` set, a resonant ``eta1`` is nudged off the lattice and the
    step is flagged; otherwise only a :class:`ResonanceWarning` is issued.
    """
    check_frequency(p.omega, rational_tol, q_max)
    n_next = -math.floor(p.theta + N * p.omega)
    omega1 = frac(1.0 / p.omega)
    if omega1 == 0.0:
        raise RationalFrequencyError(f"{{1/omega}} vanishes for omega={p.omega!r}")
    nxt = SpectralParams(
        omega=omega1,
        theta=frac(p.theta / p.omega),
        eta=wrap_angle(p.eta / p.omega),
        l=p.l / p.omega,
    )
    perturbed = False
    if perturb:
        nxt, perturbed = perturb_off_resonance(nxt, resonance_tol)
    elif nxt.resonance_distance() < resonance_tol:
        warnings.warn(f"eta1={nxt.eta!r} is resonant", ResonanceWarning, stacklevel=2)
    return RenormStep(params=p, n_steps=N, next_params=nxt, n_next=n_next, perturbed=perturbed)


def gauss_chain(omega: float, depth: int, chain_floor=CHAIN_FLOOR) -> list[float]:
    """Frequencies ``omega_0 = omega``, ``omega_k = {1/omega_{k-1}}`` (``depth`` of them).

    Stops early, with a :class:`RationalFrequencyWarning`, once an entry comes
    within ``chain_floor`` of 0 or 1 (the step after would be numerically
    rational); raises :class:`RationalFrequencyError` on an exact zero.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if not 0.0 < omega < 1.0:
        raise DomainError(f"omega must lie in (0, 1), got {omega!r}")
    out = [omega]
    while len(out) < depth:
        nxt = frac(1.0 / out[-1])
        if nxt == 0.0:
            raise RationalFrequencyError(f"Gauss chain of {omega!r} terminates at step {len(out)}")
        if min(nxt, 1.0 - nxt) < chain_floor:
            warnings.warn(
                f"Gauss chain of {omega!r} reached {nxt!r}, within {chain_floor:g} of an integer, at step {len(out)}; "
                "omega is numerically rational",
                RationalFrequencyWarning,
                stacklevel=2,
            )
            break
        out.append(nxt)
    return out
