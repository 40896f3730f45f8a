"""2x2 complex matrix helpers, the transfer matrix and direct cocycle products.

Matrices are plain ``(2, 2)`` complex numpy arrays.  Long products are kept as
:class:`ScaledMat2C`, a mantissa matrix times ``exp(log_scale)``, so that
``P_N`` can grow like ``exp(l*N)`` without overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError, PotentialPoleError, SingularMatrixError
from .params import SpectralParams, energy_from_params

POLE_TOL = 1e-10
LN2 = math.log(2.0)

SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def mat_mul(a, b):
    return np.asarray(a, dtype=complex) @ np.asarray(b, dtype=complex)


def mat_det(a):
    a = np.asarray(a)
    return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def mat_inverse(a):
    a = np.asarray(a, dtype=complex)
    d = mat_det(a)
    scale = float(np.abs(a).max()) ** 2
    if d == 0 or abs(d) <= 1e-300 or (scale > 0 and abs(d) < 1e-15 * scale):
        raise SingularMatrixError(f"matrix is singular to working precision (det={d!r})")
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / d


def sigma2_conjugate(a):
    """``sigma2 @ inv(a) @ sigma2``; equals ``a.T`` when ``det a = 1``."""
    return SIGMA2 @ mat_inverse(a) @ SIGMA2


def frobenius_rel(a, b) -> float:
    """``||a - b||_F / ||b||_F``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    # rescale first so tiny or huge entries do not under/overflow when squared
    s = float(np.abs(b).max())
    if s == 0.0 or not math.isfinite(s):
        return math.inf if np.abs(a).max() > 0 or not math.isfinite(s) else 0.0
    return float(np.linalg.norm((a - b) / s) / np.linalg.norm(b / s))


@dataclass(frozen=True)
class ScaledMat2C:
    """The matrix ``exp(log_scale) * mat`` with ``max|mat_ij|`` kept in ``[1/2, 2]``."""

    mat: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def from_matrix(cls, m, log_scale=0.0):
        return cls(np.asarray(m, dtype=complex), float(log_scale)).renormalize()

    @classmethod
    def identity(cls):
        return cls(IDENTITY.copy(), 0.0)

    def renormalize(self) -> "ScaledMat2C":
        # power-of-two rescaling is exact, so the represented matrix does not move
        big = float(np.abs(self.mat).max())
        if big == 0.0 or not math.isfinite(big):
            return self
        _, e = math.frexp(big)
        if e == 0 or e == 1:
            return self
        return ScaledMat2C(np.ldexp(self.mat.real, -e) + 1j * np.ldexp(self.mat.imag, -e),
                           self.log_scale + e * LN2)

    def value(self) -> np.ndarray:
        """The represented matrix; overflows to ``inf`` for huge scales."""
        return self.mat * math.exp(self.log_scale)

    def __matmul__(self, other):
        if isinstance(other, ScaledMat2C):
            return ScaledMat2C(self.mat @ other.mat, self.log_scale + other.log_scale).renormalize()
        return ScaledMat2C(self.mat @ np.asarray(other, dtype=complex), self.log_scale).renormalize()

    def __rmatmul__(self, other):
        return ScaledMat2C(np.asarray(other, dtype=complex) @ self.mat, self.log_scale).renormalize()

    def det(self) -> complex:
        return mat_det(self.mat) * math.exp(2.0 * self.log_scale)

    def log_abs_det(self) -> float:
        return math.log(abs(mat_det(self.mat))) + 2.0 * self.log_scale

    def inverse(self) -> "ScaledMat2C":
        return ScaledMat2C(mat_inverse(self.mat), -self.log_scale).renormalize()

    def rel_error(self, reference: "ScaledMat2C") -> float:
        """Relative Frobenius distance to ``reference``, computed at a common scale."""
        d = self.log_scale - reference.log_scale
        a = self.mat * math.exp(d) if d < 700 else None
        if a is None:
            return math.inf
        return frobenius_rel(a, reference.mat)


def _cot_pi(z):
    """``cot(pi*z)`` with ``z`` first reduced to ``(-1/2, 1/2]``; raises near integers."""
    if isinstance(z, complex) or np.iscomplexobj(z):
        z = complex(z)
        zr = z - round(z.real)
        return 1.0 / np.tan(np.pi * zr)
    zr = float(z) - round(float(z))
    return 1.0 / math.tan(math.pi * zr)


def pole_distance(z) -> float:
    z = complex(z)
    return abs(z - round(z.real))


def transfer_matrix(z, eta, l, pole_tol=POLE_TOL):
    """``F(z, eta, l) = [[E - lambda*cot(pi z), -1], [1, 0]]``."""
    d = pole_distance(z)
    if d < pole_tol or d == 0.0:
        raise PotentialPoleError(z)
    E, lam = energy_from_params(eta, l)
    a = E - lam * _cot_pi(z)
    return np.array([[a, -1.0], [1.0, 0.0]], dtype=complex)


def _orbit_point(theta, k, omega):
    x = theta + k * omega
    return x - math.floor(x)


def cocycle_product(p: SpectralParams, N: int, pole_tol=POLE_TOL, precision="double") -> ScaledMat2C:
    """The matrix solution ``P_N`` of ``Psi_{k+1} = F(k*omega + theta) Psi_k`` with ``P_0 = I``.

    ``precision="extended"`` accumulates the product in 40-digit arithmetic
    before rounding back; the magnitude is carried in ``log_scale`` either way.
    """
    N = int(N)
    if precision not in ("double", "extended"):
        raise DomainError(f"unknown precision mode {precision!r}")
    E, lam = energy_from_params(p.eta, p.l)

    def entry(k):
        x = _orbit_point(p.theta, k, p.omega)
        if min(x, 1.0 - x) < pole_tol:
            raise PotentialPoleError(x, index=k)
        return E - lam / math.tan(math.pi * x)

    if precision == "extended":
        return _cocycle_product_mp(entry, N)

    m = IDENTITY.copy()
    log_scale = 0.0
    if N > 0:
        ks = range(N)
    else:
        ks = range(-1, N - 1, -1)
    for k in ks:
        a = entry(k)
        r0, r1 = m[0].copy(), m[1].copy()
        if N > 0:
            # [[a, -1], [1, 0]] @ m
            m[0] = a * r0 - r1
            m[1] = r0
        else:
            # inverse factor [[0, 1], [-1, a]] @ m
            m[0] = r1
            m[1] = -r0 + a * r1
        big = float(np.abs(m).max())
        if big > 2.0 or big < 0.5:
            _, e = math.frexp(big)
            m = np.ldexp(m.real, -e) + 1j * np.ldexp(m.imag, -e)
            log_scale += e * LN2
    return ScaledMat2C(m, log_scale)


def _cocycle_product_mp(entry, N):
    with mpmath.workdps(40):
        m = mpmath.matrix([[1, 0], [0, 1]])
        log_scale = mpmath.mpf(0)
        ks = range(N) if N > 0 else range(-1, N - 1, -1)
        for k in ks:
            x = entry(k)
            # mantissas of the factor stay in double; the accumulation is what needs the extra bits
            a = mpmath.mpf(x)
            if N > 0:
                m = mpmath.matrix([[a, -1], [1, 0]]) * m
            else:
                m = mpmath.matrix([[0, 1], [-1, a]]) * m
            big = max(abs(m[i, j]) for i in range(2) for j in range(2))
            if big > 2 or big < 0.5:
                log_scale += mpmath.log(big)
                m = m / big
        out = np.array([[complex(m[i, j]) for j in range(2)] for i in range(2)])
        return ScaledMat2C(out, float(log_scale)).renormalize()
