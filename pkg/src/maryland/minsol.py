"""The minimal meromorphic solution of the complex Maryland equation.

``Upsilon`` solves

    psi(z + omega) + psi(z - omega) + lambda*cot(pi z)*psi(z) = E*psi(z)

and, simultaneously, the same equation with ``omega -> 1`` shifts, ``cot(pi z/omega)``
and the renormalized parameters ``(eta1, l1)``.  Two representations are used:

* off the real axis, ``sin(pi z) sin(pi z/omega)`` times a contour integral of
  ``exp(i p z/omega) * Xhat(p)``, ``Xhat`` a ratio of four sigma values;
* in the vertical strip ``|Re z| < 1 + omega``, an integral along the
  imaginary axis of a regularized integrand plus a finite residue sum
  (:func:`upsilon_real`), extended further out by the equation itself.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MinSolPoleError, NearSingularValue, ResidueError
from .params import SpectralParams, energy_from_params, resonance_distance, wrap_angle
from .quadrature import build_gamma, gauss_legendre_panels, integrate_with_error, residue_by_circle
from .sigma import SigmaContext, lattice_distance, log_sigma, log_sigma_array, residue_inv_sigma

QUAD_TOL = 1e-13
MINSOL_POLE_TOL = 1e-8
# points farther than this from the axis get the shifted contour
SHIFT_THRESHOLD = 0.3
_LOG_NEG2 = complex(math.log(2.0), math.pi)  # log(-2)


def _logsin(x):
    """``log sin(x)`` for complex arrays without overflow at large ``|Im x|``."""
    x = np.asarray(x, dtype=complex)
    up = x.imag > 0
    xs = np.where(up, x, -x)
    # sin(xs) = -exp(-i xs) (1 - exp(2 i xs)) / (2i), and exp(2 i xs) is small for Im xs > 0
    v = -1j * xs + np.log((1 - np.exp(2j * xs)) * 0.5j)
    return np.where(up, v, v + 1j * math.pi)


@dataclass(frozen=True)
class AsymptoticCoeffs:
    a_plus: complex
    a_minus: complex
    b_plus: complex
    b_minus: complex


@dataclass(eq=False)
class MinSolContext:
    """Data for evaluating ``Upsilon`` at fixed ``(omega, eta, l)``.

    ``theta`` is irrelevant here and ignored.  The context is immutable after
    construction except for memo caches, which are guarded by a lock.
    """

    params: SpectralParams
    sigma: SigmaContext = None
    quad_tol: float = QUAD_TOL
    pole_tol: float = MINSOL_POLE_TOL
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        p = self.params
        if not abs(p.eta) < math.pi * (1 + p.omega):
            raise DomainError(f"|eta| must be below pi*(1+omega), got eta={p.eta!r}")
        if self.sigma is None:
            self.sigma = SigmaContext(p.omega)
        elif self.sigma.omega != p.omega:
            raise DomainError("sigma context built for a different omega")
        self._residues = {}
        self._real_data = None
        w, eta, l = p.omega, p.eta, p.l
        # pole real parts are pi(1+w) +- eta + 2 pi (w k + m) on the right, negatives on the left
        rmax = 6 * math.pi * (1 + w) + abs(eta)
        poles = []
        kmax = int(rmax / (2 * math.pi * w)) + 1
        mmax = int(rmax / (2 * math.pi)) + 1
        for k in range(kmax + 1):
            for m in range(mmax + 1):
                d = 2 * math.pi * (w * k + m)
                if d + math.pi * (1 + w) - abs(eta) > rmax:
                    continue
                for s in (1, -1):
                    poles.append(s * complex(eta, l) + math.pi * (1 + w) + d)
                    poles.append(s * complex(eta, -l) - math.pi * (1 + w) - d)
        self.poles = np.array(sorted(poles, key=lambda q: (q.real, q.imag)))
        self._pole_rmax = rmax

    # --- basic quantities -------------------------------------------------

    @property
    def omega(self):
        return self.params.omega

    @property
    def eta(self):
        return self.params.eta

    @property
    def l(self):
        return self.params.l

    @property
    def energy(self):
        return energy_from_params(self.eta, self.l)

    @property
    def second_energy(self):
        """``(E1, lambda1)`` of the equation in the shift ``z -> z + 1``."""
        w = self.omega
        return 2 * math.cos(self.eta / w) * math.cosh(self.l / w), -2 * math.sin(self.eta / w) * math.sinh(self.l / w)

    @property
    def resonance_distance(self) -> float:
        return resonance_distance(self.eta, self.omega)

    def log_xhat_array(self, p):
        p = np.asarray(p, dtype=complex)
        b, c = complex(self.eta, -self.l), complex(self.eta, self.l)
        args = np.stack([p + b, p - b, p - c, p + c])
        ls = log_sigma_array(self.sigma, args)
        return ls[0] + ls[1] - ls[2] - ls[3]

    # --- residues of Xhat ---------------------------------------------------

    def residue(self, q: complex) -> complex:
        """Residue of ``Xhat`` at the pole ``q``, by circle quadrature cross-checked at half radius."""
        key = complex(q)
        with self._lock:
            if key in self._residues:
                return self._residues[key]
        d = np.abs(self.poles - key)
        others = d[d > 1e-12]
        r = min(0.1, 0.5 * float(others.min()))

        def f(p):
            return np.exp(self.log_xhat_array(p))

        r1 = residue_by_circle(f, key, r, tol=1e-13)
        r2 = residue_by_circle(f, key, 0.5 * r, tol=1e-13)
        scale = max(abs(r1), abs(r2), 1e-300)
        if abs(r1 - r2) > 1e-9 * scale and abs(r1 - r2) > 1e-14:
            raise ResidueError(f"residue at {key!r} unstable: {r1!r} vs {r2!r}", estimate=r1, error=abs(r1 - r2))
        with self._lock:
            self._residues[key] = r1
        return r1

    def crossed_poles(self, lo: float, hi: float):
        """Poles with ``lo < Re q < hi``."""
        if max(abs(lo), abs(hi)) > self._pole_rmax - 1:
            raise DomainError("requested pole window exceeds the enumerated range")
        re = self.poles.real
        return self.poles[(re > lo) & (re < hi)]

    def shift_constant(self) -> float:
        """A translation ``c >= pi(1+omega) + |eta|`` lying well inside a gap between pole real parts."""
        w = self.omega
        c0 = math.pi * (1 + w) + abs(self.eta)
        re = np.unique(np.abs(self.poles.real))
        cand = c0 + np.linspace(0.05, 2.0, 400)
        dist = np.min(np.abs(cand[:, None] - re[None, :]), axis=1)
        return float(cand[int(np.argmax(dist))])

    # --- real-axis representation -------------------------------------------

    def _prepare_real(self):
        with self._lock:
            if self._real_data is not None:
                return self._real_data
        w, eta, l = self.omega, self.eta, self.l
        b = complex(eta, l)
        # four shifted copies of Xhat; their poles that land strictly between 0 and the shift
        terms = []
        axis_gap = math.inf
        for s1 in (1, -1):
            for s2 in (1, -1):
                sh = s1 * math.pi * w + s2 * math.pi
                for q in self.poles:
                    pr = q.real + sh
                    if abs(pr) < 2 * math.pi * (1 + w):
                        axis_gap = min(axis_gap, abs(pr))
                    if min(0.0, sh) < pr < max(0.0, sh):
                        terms.append((-0.25 * s1 * s2 * math.copysign(1.0, sh), q + sh, q))
        coefs = np.array([t[0] for t in terms])
        points = np.array([t[1] for t in terms])
        res = np.array([self.residue(t[2]) for t in terms])
        A = math.sinh(l) * math.sinh(l / w) * math.sin(eta) * math.sin(eta / w)
        logA = cmath.log(A) if A != 0 else None
        if logA is None:
            raise NearSingularValue("regularizing constant vanishes (eta or eta/omega is a multiple of pi)")
        # composite Gauss-Legendre on [-T, T], graded toward t = +-l where poles approach the axis
        T = 3 * l + 80
        h = min(0.25, max(0.5 * axis_gap, 1e-6))
        edges = set(np.round(np.linspace(-T, T, int(math.ceil(2 * T / 0.25)) + 1), 14))
        for c in (l, -l):
            edges.add(c)
            s = h
            while s < 0.5:
                edges.add(c + s)
                edges.add(c - s)
                s *= 2
        edges = np.array(sorted(e for e in edges if -T <= e <= T))
        xg, wg = np.polynomial.legendre.leggauss(20)
        mids = 0.5 * (edges[:-1] + edges[1:])
        hw = 0.5 * np.diff(edges)
        t = (mids[:, None] + hw[:, None] * xg[None, :]).ravel()
        wt = (hw[:, None] * wg[None, :]).ravel()
        p = 1j * t
        d1 = _LOG_NEG2 + _logsin((p + b) / 2) + _logsin((p - b) / 2)
        d2 = _LOG_NEG2 + _logsin((p + b) / (2 * w)) + _logsin((p - b) / (2 * w))
        logG = logA + self.log_xhat_array(p - math.pi - math.pi * w) - d1 - d2
        data = dict(t=t, logw=np.log(wt) + logG, coefs=coefs, points=points, res=res,
                    direct=1 + 0.5 * w, axis_gap=axis_gap)
        with self._lock:
            self._real_data = data
        return data

    def residue_sum(self, z):
        """``R(z)``: the finite residue sum of the real-axis representation."""
        d = self._prepare_real()
        z = np.asarray(z, dtype=complex)
        e = np.exp(1j * d["points"][None, :] * z.ravel()[:, None] / self.omega)
        return (e * (d["coefs"] * d["res"])[None, :]).sum(axis=1).reshape(z.shape)

    def _direct_real(self, z):
        d = self._prepare_real()
        z = np.asarray(z, dtype=complex).ravel()
        out = np.empty(z.shape, dtype=complex)
        for i in range(0, z.size, 64):
            zc = z[i : i + 64, None]
            out[i : i + 64] = 1j * np.exp(d["logw"][None, :] - d["t"][None, :] * zc / self.omega).sum(axis=1)
        return out + 2j * math.pi * self.residue_sum(z)


def pole_set_distance(z, omega, kmax=64) -> float:
    """Distance from ``z`` to ``{+-(omega*k + m): k, m >= 1}``."""
    z = complex(z)
    x = abs(z.real)
    best = math.inf
    for k in range(1, kmax + 1):
        m = round(x - omega * k)
        for mm in (m - 1, m, m + 1):
            if mm >= 1:
                best = min(best, abs(complex(x - (omega * k + mm), z.imag)))
    return best


def xhat(ctx: MinSolContext, p) -> complex:
    """``sigma(p+eta-il) sigma(p-eta+il) / (sigma(p-eta-il) sigma(p+eta+il))`` at a single point.

    Raises
    ------
    NearSingularValue
        If one of the four arguments lies on the sigma lattice; the message
        names the factor.
    """
    p = complex(p)
    b, c = complex(ctx.eta, -ctx.l), complex(ctx.eta, ctx.l)
    names = ("p+eta-il", "p-eta+il", "p-eta-il", "p+eta+il")
    args = (p + b, p - b, p - c, p + c)
    for name, a in zip(names, args):
        try:
            log_sigma(ctx.sigma, a, strict=True)
        except NearSingularValue as exc:
            raise NearSingularValue(f"factor sigma({name}) is singular at p={p!r}", point=p,
                                    distance=exc.distance) from exc
    return complex(np.exp(ctx.log_xhat_array(np.array([p]))[0]))


def upsilon(ctx: MinSolContext, z, tol=None) -> complex:
    """``Upsilon(z)`` off the real axis from the contour-integral representation.

    For ``|Im z| >= SHIFT_THRESHOLD`` the contour is translated horizontally by
    ``c`` (towards ``sign(Im z) * infinity``) and the crossed residues are added
    back; this removes the cancellation against the growth of ``sin(pi z) sin(pi z/omega)``.
    """
    z = complex(z)
    if z.imag == 0:
        raise DomainError("upsilon needs Im z != 0; use upsilon_real on the real axis")
    w, l = ctx.omega, ctx.l
    tol = ctx.quad_tol if tol is None else tol
    path = build_gamma(z, l, w)
    c = 0.0
    if abs(z.imag) >= SHIFT_THRESHOLD:
        c = math.copysign(ctx.shift_constant(), z.imag)
        path = path.translated(c)

    def f(p):
        return np.exp(1j * p * z / w + ctx.log_xhat_array(p))

    seg = path.pieces[1]
    probe = seg.a + (seg.b - seg.a) * np.linspace(0, 1, 65)
    scale = float(np.abs(f(probe)).max())
    res = integrate_with_error(f, path, tol=tol * max(scale, 1e-300))
    total = res.value
    if c != 0.0:
        crossed = ctx.crossed_poles(min(0.0, c), max(0.0, c))
        s = sum(cmath.exp(1j * q * z / w) * ctx.residue(q) for q in crossed)
        total += (-1.0 if c > 0 else 1.0) * 2j * math.pi * s
    return cmath.sin(math.pi * z) * cmath.sin(math.pi * z / w) * total


def upsilon_real(ctx: MinSolContext, z):
    """``Upsilon`` from the imaginary-axis representation; vectorized.

    Valid for any ``Im z``.  Points with ``|Re z|`` beyond ``1 + omega/2`` are
    reached from the central strip by running the Maryland equation outward,
    which is how the poles at ``+-(omega k + m)`` appear.

    Raises
    ------
    MinSolPoleError
        If a point is within ``pole_tol`` of ``+-(omega k + m)``, ``k, m >= 1``.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = ctx.omega
    for zz in z.ravel():
        if pole_set_distance(zz, w) < ctx.pole_tol:
            raise MinSolPoleError(f"z={complex(zz)!r} is on the pole set of Upsilon")
    d = ctx._prepare_real()
    bound = d["direct"]
    flat = z.ravel()
    inside = np.abs(flat.real) <= bound
    out = np.empty(flat.shape, dtype=complex)
    if inside.any():
        out[inside] = _cached_direct(ctx, flat[inside])
    for i in np.nonzero(~inside)[0]:
        out[i] = _by_recurrence(ctx, flat[i], bound)
    return complex(out[0]) if scalar else out.reshape(z.shape)


def _cached_direct(ctx, zs):
    keys = [complex(v) for v in zs]
    with ctx._lock:
        missing = [k for k in dict.fromkeys(keys) if k not in ctx._cache]
    if missing:
        vals = ctx._direct_real(np.array(missing))
        with ctx._lock:
            for k, v in zip(missing, vals):
                ctx._cache.setdefault(k, complex(v))
    with ctx._lock:
        return np.array([ctx._cache[k] for k in keys])


def _by_recurrence(ctx, z, bound):
    w = ctx.omega
    E, lam = ctx.energy
    sgn = 1.0 if z.real > 0 else -1.0
    n = int(math.ceil((abs(z.real) - bound) / w))
    # two consecutive points inside the strip, then step outward
    base = [z - sgn * (n + 1) * w, z - sgn * n * w]
    u0, u1 = _cached_direct(ctx, np.array(base))
    for j in range(n, 0, -1):
        x = z - sgn * j * w
        u0, u1 = u1, (E - lam / cmath.tan(math.pi * x)) * u1 - u0
    return u1


def asymptotic_coeffs(ctx: MinSolContext) -> AsymptoticCoeffs:
    """Leading coefficients of ``Upsilon`` as ``Im z -> +-infinity``.

    ``a_pm = (pi i/2) sigma(pi(1+w) -+ 2 eta) sigma(pi(1+w) -+ 2il) / sigma(pi(1+w) -+ 2(eta+il)) * res``
    with ``res`` the residue of ``1/sigma`` at ``pi(1+w)``; ``b_pm = -conj(a_pm)``.
    An argument on the sigma lattice gives an exact zero (or raises for a pole).
    """
    s = ctx.sigma
    w, eta, l = ctx.omega, ctx.eta, ctx.l
    base = math.pi * (1 + w)
    res = residue_inv_sigma(s)
    out = []
    for sg in (1, -1):
        num = (base - sg * 2 * eta, base - sg * 2j * l)
        den = base - sg * 2 * complex(eta, l)
        if lattice_distance(s, den) < 1e-10 and den.real < 0:
            raise NearSingularValue(f"sigma pole in the coefficient formula at {den!r}", point=den)
        if any(lattice_distance(s, a) < 1e-10 and complex(a).real >= 0 for a in num):
            out.append(0j)
            continue
        lv = log_sigma_array(s, np.array([num[0], num[1], den], dtype=complex))
        out.append(0.5j * math.pi * cmath.exp(lv[0] + lv[1] - lv[2]) * res)
    ap, am = out
    return AsymptoticCoeffs(ap, am, -ap.conjugate(), -am.conjugate())


def wronskian(f, g, z, omega) -> complex:
    """``f(z) g(z - omega) - f(z - omega) g(z)``."""
    return f(z) * g(z - omega) - f(z - omega) * g(z)


def wronskian_closed_forms(ctx: MinSolContext, coeffs: AsymptoticCoeffs = None):
    """The two closed forms of ``w(Upsilon(. + 1), Upsilon)`` (through ``a_pm`` and ``b_pm``)."""
    c = asymptotic_coeffs(ctx) if coeffs is None else coeffs
    w, eta, l = ctx.omega, ctx.eta, ctx.l
    u, v = complex(l, -eta), complex(l, eta)
    a_form = c.a_plus * c.a_minus * (cmath.exp(u / w) - cmath.exp(-u / w)) * (cmath.exp(u) - cmath.exp(-u))
    b_form = c.b_plus * c.b_minus * (cmath.exp(v / w) - cmath.exp(-v / w)) * (cmath.exp(v) - cmath.exp(-v))
    return a_form, b_form


def fit_asymptotic_coeffs(ctx: MinSolContext, heights=(6.0, 8.0), xs=None, evaluator=None):
    """Least-squares fit of ``Upsilon(x + iY) ~ a_+ e^{(l-i eta) z/w} + a_- e^{-(l-i eta) z/w}``."""
    if xs is None:
        xs = np.linspace(-0.4, 0.4, 5)
    ev = evaluator or (lambda zz: upsilon(ctx, zz))
    w = ctx.omega
    kappa = complex(ctx.l, -ctx.eta) / w
    zs = [complex(x, y) for y in heights for x in xs]
    vals = np.array([ev(zz) for zz in zs])
    ep = np.array([cmath.exp(kappa * zz) for zz in zs])
    em = np.array([cmath.exp(-kappa * zz) for zz in zs])
    # scale each row so both columns are O(1) where they matter
    rows = np.stack([ep, em], axis=1)
    nrm = np.abs(rows).max(axis=1)
    sol, *_ = np.linalg.lstsq(rows / nrm[:, None], vals / nrm, rcond=None)
    return complex(sol[0]), complex(sol[1])


def maryland_residual(ctx: MinSolContext, f, z) -> float:
    """Relative residual of the equation in the ``omega`` shift."""
    E, lam = ctx.energy
    w = ctx.omega
    u, up, um = f(z), f(z + w), f(z - w)
    pot = lam / cmath.tan(math.pi * z) * u
    r = up + um + pot - E * u
    return abs(r) / (abs(up) + abs(um) + abs(pot) + abs(E * u))


def second_equation_residual(ctx: MinSolContext, f, z) -> float:
    """Relative residual of the equation in the unit shift with ``cot(pi z / omega)``."""
    E1, lam1 = ctx.second_energy
    w = ctx.omega
    u, up, um = f(z), f(z + 1), f(z - 1)
    pot = lam1 / cmath.tan(math.pi * z / w) * u
    r = up + um + pot - E1 * u
    return abs(r) / (abs(up) + abs(um) + abs(pot) + abs(E1 * u))
