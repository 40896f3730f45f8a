"""The meromorphic function sigma at a fixed frequency omega.

sigma is characterized by the pair of first-order difference equations

    sigma(z + pi*omega) = (1 + exp(-i z))        sigma(z - pi*omega),
    sigma(z + pi)       = (1 + exp(-i z/omega))  sigma(z - pi),

together with sigma -> 1 as Im z -> -inf.  It has simple zeros at
``pi*(1+omega) + 2*pi*(omega*k + m)`` and simple poles at the negatives of
those points (``k, m >= 0``).

Evaluation strategy, by region:

* ``Im z <= -strip_delta``: the Fourier series of ``log sigma``;
* ``Im z >= strip_delta``: the Gaussian reflection formula applied to ``-z``;
* ``|Im z| < strip_delta``: a trapezoid rule for a line integral along
  ``Im t = 1/2`` of ``exp(-z t) / (4 t sinh(pi omega t) sinh(pi t))``,
  after shifting ``Re z`` into the window where that integral is accurate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NearSingularValue, SmallDenominatorError

STRIP_DELTA = 0.5
TAIL_TOL = 1e-14
SIN_FLOOR = 1e-12
LATTICE_TOL = 1e-10

# line-integral nodes: t = s + i*_C, s in [-_L, _L], step _H
_C = 0.5
_H = 1.0 / 16.0
_L = 20.0
# |Re z| below pi*(1+omega) - _MARGIN is integrated directly; kernel decay ~ exp(-_MARGIN*_L)
_MARGIN = 1.8
_CHUNK = 4096


def _log1p_exp_mi(x):
    """``log(1 + exp(-i x))`` without overflow, elementwise."""
    x = np.asarray(x, dtype=complex)
    lower = x.imag < 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = np.log1p(np.exp(-1j * np.where(lower, x, 0)))
        b = -1j * x + np.log1p(np.exp(1j * np.where(lower, 0, x)))
    return np.where(lower, a, b)


@dataclass(frozen=True)
class SigmaValue:
    """``log sigma(z)`` with a flag for proximity to the zero/pole lattice."""

    log_sigma: complex
    is_near_singular: bool = False
    distance: float = math.inf

    @property
    def value(self) -> complex:
        return cmath.exp(self.log_sigma) if self.log_sigma.real > -745 else 0j


@dataclass(frozen=True, eq=False)
class SigmaContext:
    """Precomputed data for evaluating sigma at fixed ``omega``.

    Parameters
    ----------
    omega : float
        Frequency in ``(0, 1)``.
    strip_delta : float
        Half-width of the band around the real axis where the series is not used.
    tail_tol : float
        Bound on the dropped series tail at ``|Im z| = strip_delta``.
    sin_floor : float
        Smallest admissible ``|sin(pi n omega)|``, ``|sin(pi n / omega)|``.
    """

    omega: float
    strip_delta: float = STRIP_DELTA
    tail_tol: float = TAIL_TOL
    sin_floor: float = SIN_FLOOR
    max_terms: int = 20000
    series_cutoff: int = field(init=False)
    min_sin_denominator: float = field(init=False)
    _s1: np.ndarray = field(init=False, repr=False)
    _s2: np.ndarray = field(init=False, repr=False)
    _t: np.ndarray = field(init=False, repr=False)
    _ker: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = self.omega
        if not 0.0 < w < 1.0:
            raise DomainError(f"omega must lie in (0, 1), got {w!r}")
        if not self.strip_delta > 0:
            raise DomainError("strip_delta must be positive")
        n = np.arange(1, self.max_terms + 1, dtype=float)
        s1 = np.sin(np.pi * ((n * w) % 2.0))
        s2 = np.sin(np.pi * ((n / w) % 2.0))
        d = self.strip_delta
        with np.errstate(divide="ignore", invalid="ignore"):
            e1, e2 = np.exp(-n * d), np.exp(-n * d / w)
            # an underflowed numerator contributes nothing even against a zero sine
            terms = np.where(e1 > 0, e1 / (2 * n * np.abs(s1)), 0.0) + np.where(e2 > 0, e2 / (2 * n * np.abs(s2)), 0.0)
        # smallest N whose dropped tail (summed over the table) is below tail_tol
        tail = np.cumsum(terms[::-1])[::-1]
        ok = np.nonzero(tail < self.tail_tol)[0]
        cutoff = int(ok[0]) if ok.size else self.max_terms
        cutoff = max(cutoff, 8)
        mins = float(min(np.abs(s1[:cutoff]).min(), np.abs(s2[:cutoff]).min()))
        object.__setattr__(self, "series_cutoff", cutoff)
        object.__setattr__(self, "min_sin_denominator", mins)
        object.__setattr__(self, "_s1", s1[:cutoff])
        object.__setattr__(self, "_s2", s2[:cutoff])
        s = np.arange(-_L, _L + _H / 2, _H)
        t = s + 1j * _C
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_ker", _H / (4 * t * np.sinh(np.pi * w * t) * np.sinh(np.pi * t)))

    @property
    def gauss_constant(self) -> complex:
        """``i*pi/(12 omega) + i*pi*omega/12``."""
        w = self.omega
        return 1j * math.pi / (12 * w) + 1j * math.pi * w / 12

    @property
    def direct_width(self) -> float:
        """Half-width in ``Re z`` where the line integral is applied without shifting."""
        return max(math.pi * self.omega, math.pi * (1 + self.omega) - _MARGIN)

    def check_denominators(self):
        if self.min_sin_denominator < self.sin_floor:
            raise SmallDenominatorError(
                f"min |sin| denominator {self.min_sin_denominator:.3e} < sin_floor "
                f"{self.sin_floor:g} for omega={self.omega!r}"
            )

    # --- building blocks -------------------------------------------------

    def series(self, z):
        """Fourier series of ``log sigma``; valid for ``Im z < 0``."""
        self.check_denominators()
        z = np.asarray(z, dtype=complex).ravel()
        n = np.arange(1, self.series_cutoff + 1, dtype=float)
        coef = (-1.0) ** n / (2j * n)
        out = np.empty(z.shape, dtype=complex)
        # the rate at which terms decay depends on Im z; trim the sum per chunk
        for i in range(0, z.size, _CHUNK):
            zz = z[i : i + _CHUNK]
            y = -float(zz.imag.max())
            nn = self.series_cutoff
            if y > self.strip_delta:
                nn = min(nn, int(math.ceil(self.series_cutoff * self.strip_delta / y)) + 8)
            zc = zz[:, None]
            a = np.exp(-1j * n[:nn] * zc) / self._s1[:nn]
            b = np.exp(-1j * n[:nn] * zc / self.omega) / self._s2[:nn]
            out[i : i + _CHUNK] = ((a + b) * coef[:nn]).sum(axis=1)
        return out

    def line_integral(self, z):
        """Trapezoid rule for the kernel integral; accurate for ``|Re z| <= direct_width``."""
        z = np.asarray(z, dtype=complex).ravel()
        out = np.empty(z.shape, dtype=complex)
        for i in range(0, z.size, _CHUNK):
            zc = z[i : i + _CHUNK, None]
            out[i : i + _CHUNK] = (np.exp(-zc * self._t) * self._ker).sum(axis=1)
        return out


def log_sigma_array(ctx: SigmaContext, z) -> np.ndarray:
    """Vectorized ``log sigma``.

    The branch is the one continuous in the lower half-plane with
    ``log sigma -> 0``; in the band around the real axis it is fixed by the
    principal ``log1p`` in each shift factor.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    out = np.empty(z.shape, dtype=complex)
    d = ctx.strip_delta
    lo = z.imag <= -d
    hi = z.imag >= d
    mid = ~(lo | hi)
    if lo.any():
        out[lo] = ctx.series(z[lo])
    if hi.any():
        zh = z[hi]
        out[hi] = -1j * zh * zh / (4 * math.pi * ctx.omega) + ctx.gauss_constant - ctx.series(-zh)
    if mid.any():
        out[mid] = _log_sigma_band(ctx, z[mid])
    return out.reshape(shape)


def _log_sigma_band(ctx, z):
    w = ctx.omega
    zz = z.copy()
    acc = np.zeros(zz.shape, dtype=complex)
    width = ctx.direct_width
    pw, p = math.pi * w, math.pi
    # long jumps use the pi-equation, the last ones the pi*omega equation
    while True:
        r = zz.real > width + 2 * p
        l = zz.real < -width - 2 * p
        if not (r.any() or l.any()):
            break
        acc[r] += _log1p_exp_mi((zz[r] - p) / w)
        zz[r] -= 2 * p
        acc[l] -= _log1p_exp_mi((zz[l] + p) / w)
        zz[l] += 2 * p
    while True:
        r = zz.real > width
        l = zz.real < -width
        if not (r.any() or l.any()):
            break
        acc[r] += _log1p_exp_mi(zz[r] - pw)
        zz[r] -= 2 * pw
        acc[l] -= _log1p_exp_mi(zz[l] + pw)
        zz[l] += 2 * pw
    return acc + ctx.line_integral(zz)


def lattice_distance(ctx: SigmaContext, z) -> float:
    """Distance from ``z`` to the nearest zero (``Re z >= 0``) or pole (``Re z < 0``) of sigma."""
    z = complex(z)
    w = ctx.omega
    x = abs(z.real)
    y = z.imag
    base = math.pi * (1 + w)
    if x < base - 1.0:
        return math.hypot(base - x, y)
    best = math.inf
    kmax = int((x - base) / (2 * math.pi * w)) + 2
    mmax = int((x - base) / (2 * math.pi)) + 2
    for m in range(mmax + 1):
        k = np.arange(kmax + 1)
        pts = base + 2 * math.pi * (w * k + m)
        best = min(best, float(np.min(np.hypot(pts - x, y))))
    return best


def log_sigma(ctx: SigmaContext, z, strict=False, lattice_tol=LATTICE_TOL) -> SigmaValue:
    """``log sigma(z)`` for a single complex ``z``.

    Parameters
    ----------
    strict : bool
        Raise :class:`NearSingularValue` instead of returning a flagged value
        when ``z`` is within ``lattice_tol`` of a zero or pole.
    """
    z = complex(z)
    dist = lattice_distance(ctx, z)
    near = dist < lattice_tol
    if near and strict:
        kind = "zero" if z.real >= 0 else "pole"
        raise NearSingularValue(f"z={z!r} is {dist:.2e} from a {kind} of sigma", point=z, distance=dist)
    v = complex(log_sigma_array(ctx, np.array([z]))[0])
    if near and not np.isfinite(v):
        v = complex(-np.inf, 0.0) if z.real >= 0 else complex(np.inf, 0.0)
    return SigmaValue(v, near, dist)


def sigma(ctx: SigmaContext, z) -> complex:
    return log_sigma(ctx, z).value


def residue_inv_sigma(ctx: SigmaContext) -> complex:
    """Residue of ``1/sigma`` at its first zero ``pi*(1+omega)`` (closed form)."""
    w = ctx.omega
    return -math.sqrt(w) * cmath.exp(1j * math.pi / (12 * w) + 1j * math.pi * w / 12 + 1j * math.pi / 4)


def sigma_conjugate_relation_check(ctx: SigmaContext, z) -> float:
    """``|conj(sigma(conj z)) * sigma(-z) - 1|``."""
    z = complex(z)
    a = log_sigma_array(ctx, np.array([z.conjugate(), -z]))
    return abs(cmath.exp(complex(a[0]).conjugate() + complex(a[1])) - 1)


def functional_residuals(ctx: SigmaContext, z) -> dict:
    """Relative residuals of the two shift equations and the reflection formula at ``z``."""
    z = complex(z)
    w = ctx.omega
    pw = math.pi * w
    pts = np.array([z + pw, z - pw, z + math.pi, z - math.pi, z, -z])
    ls = log_sigma_array(ctx, pts)
    f1 = complex(_log1p_exp_mi(z))
    f2 = complex(_log1p_exp_mi(z / w))
    refl = -1j * z * z / (4 * math.pi * w) + ctx.gauss_constant
    return {
        "shift_pi_omega": abs(cmath.exp(f1 + ls[1] - ls[0]) - 1),
        "shift_pi": abs(cmath.exp(f2 + ls[3] - ls[2]) - 1),
        "reflection": abs(cmath.exp(refl - ls[5] - ls[4]) - 1),
        "conjugation": sigma_conjugate_relation_check(ctx, z),
    }
