"""Integration along piecewise contours and residues by circle quadrature.

A contour is a :class:`PathSpec`: finite segments, optionally capped by rays
to infinity along which the integrand decays exponentially.  Segments are
handled by globally adaptive Gauss-Kronrod (7/15) bisection; rays are cut into
geometrically growing panels, each integrated the same way, until the panel
contributions fall below the requested tolerance.
"""

from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ContourSelectionError, DomainError, QuadratureError, ResidueError

DECAY_FLOOR = 0.02
TRUNCATION_GUARD = 1e-3
MAX_EVALS = 2_000_000

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    def point(self, u):
        return self.a + (self.b - self.a) * u

    def reversed(self):
        return Segment(self.b, self.a)

    @property
    def start(self):
        return self.a

    @property
    def end(self):
        return self.b


@dataclass(frozen=True)
class Ray:
    """``origin + t*direction``, ``t >= 0``.

    ``outgoing`` rays are traversed away from ``origin``; incoming ones come
    in from infinity and end at ``origin``.
    """

    origin: complex
    direction: complex
    outgoing: bool = True

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > 1e-12:
            raise DomainError("ray direction must have unit modulus")

    def reversed(self):
        return Ray(self.origin, self.direction, not self.outgoing)

    @property
    def start(self):
        return self.origin if self.outgoing else None

    @property
    def end(self):
        return None if self.outgoing else self.origin


Piece = Union[Segment, Ray]


@dataclass(frozen=True)
class PathSpec:
    pieces: tuple

    def __post_init__(self):
        ps = tuple(self.pieces)
        object.__setattr__(self, "pieces", ps)
        if not ps:
            raise DomainError("empty path")
        for i, pc in enumerate(ps):
            if isinstance(pc, Ray):
                if pc.outgoing and i != len(ps) - 1:
                    raise DomainError("an outgoing ray must be the last piece")
                if not pc.outgoing and i != 0:
                    raise DomainError("an incoming ray must be the first piece")
        for u, v in zip(ps[:-1], ps[1:]):
            if abs(u.end - v.start) > 1e-12 * max(1.0, abs(u.end)):
                raise DomainError("consecutive pieces must share endpoints")

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(p.reversed() for p in reversed(self.pieces)))

    def translated(self, c: complex) -> "PathSpec":
        out = []
        for p in self.pieces:
            if isinstance(p, Segment):
                out.append(Segment(p.a + c, p.b + c))
            else:
                out.append(Ray(p.origin + c, p.direction, p.outgoing))
        return PathSpec(tuple(out))


@dataclass(frozen=True)
class IntegrationResult:
    value: complex
    error: float
    evals: int


def _admissible_interval(z: complex):
    """Open interval of ray angles alpha with ``Im(exp(i alpha) z) > 0``."""
    a = cmath.phase(z)
    return (-a, math.pi - a)


def _intersect(intervals, target):
    lo, hi = target
    for a, b in intervals:
        best = None
        for k in (-1, 0, 1):
            aa, bb = a + 2 * math.pi * k, b + 2 * math.pi * k
            cand = (max(lo, aa), min(hi, bb))
            if cand[1] > cand[0] and (best is None or cand[1] - cand[0] > best[1] - best[0]):
                best = cand
        if best is None:
            return None
        lo, hi = best
    return lo, hi


def decay_rate(direction: complex, z: complex, omega: float) -> float:
    """Rate ``kappa`` in ``|exp(i p z/omega)| = exp(-kappa t)`` along ``p = t*direction``."""
    return (direction * z).imag / omega


def build_gamma(z, l, omega=1.0, also=(), decay_floor=DECAY_FLOOR) -> PathSpec:
    """The contour: in from infinity to ``-2il``, up the imaginary axis to ``2il``, out to infinity.

    Ray angles are the midpoints of the admissible intervals for ``z`` and every
    point in ``also``, restricted to the upper (outgoing) and lower (incoming)
    half-planes so the rays stay clear of the singular lines ``Im p = +-l``.

    Raises
    ------
    ContourSelectionError
        If no direction gives a decay rate above ``decay_floor``.
    """
    zs = [complex(z)] + [complex(w) for w in also]
    for w in zs:
        if w.imag == 0:
            raise ContourSelectionError(f"z={w!r} is real; use the real-axis representation")
    ints = [_admissible_interval(w) for w in zs]
    up = _intersect(ints, (0.0, math.pi))
    down = _intersect(ints, (-math.pi, 0.0))
    if up is None or down is None:
        raise ContourSelectionError(f"no common admissible direction for {zs!r}")
    tau_out = cmath.exp(1j * 0.5 * (up[0] + up[1]))
    tau_in = cmath.exp(1j * 0.5 * (down[0] + down[1]))
    margin = min(decay_rate(t, w, omega) for t in (tau_out, tau_in) for w in zs)
    if margin <= decay_floor:
        raise ContourSelectionError(
            f"best decay rate {margin:.3g} <= decay_floor {decay_floor:g} for z={z!r}"
        )
    top, bot = 2j * l, -2j * l
    return PathSpec((Ray(bot, tau_in, outgoing=False), Segment(bot, top), Ray(top, tau_out, outgoing=True)))


def _gk(f, a, b):
    """One GK15 panel on the straight segment ``a -> b``; returns (value, error)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    v = np.asarray(f(mid + half * _XK), dtype=complex)
    k = half * np.dot(_WK, v)
    g = half * np.dot(_WG, v)
    if not (np.isfinite(k) and np.isfinite(g)):
        raise QuadratureError(f"integrand not finite on panel [{a}, {b}]")
    return k, abs(k - g)


def _adaptive(f, a, b, tol, budget):
    """Global adaptive bisection on a segment; returns (value, error, evals)."""
    v, e = _gk(f, a, b)
    heap = [(-e, 0, a, b, v, e)]
    total, err, evals, tick = v, e, 15, 1
    while err > tol:
        if evals >= budget:
            raise QuadratureError(
                f"segment integral did not converge within {budget} evaluations",
                estimate=total, error=err,
            )
        _, _, pa, pb, pv, pe = heapq.heappop(heap)
        m = 0.5 * (pa + pb)
        v1, e1 = _gk(f, pa, m)
        v2, e2 = _gk(f, m, pb)
        evals += 30
        total += v1 + v2 - pv
        err += e1 + e2 - pe
        heapq.heappush(heap, (-e1, tick, pa, m, v1, e1))
        heapq.heappush(heap, (-e2, tick + 1, m, pb, v2, e2))
        tick += 2
        if len(heap) > 20000:
            err = sum(h[5] for h in heap)
    return total, err, evals


def _ray(f, ray: Ray, tol, budget, truncation_guard, first=1.0, max_len=1e4):
    """Integral along a ray, panels of doubling length, stopped on small contributions."""
    total, err, evals = 0j, 0.0, 0
    t0, L, prev = 0.0, first, None
    while True:
        a, b = ray.origin + ray.direction * t0, ray.origin + ray.direction * (t0 + L)
        v, e, n = _adaptive(f, a, b, tol, budget - evals)
        evals += n
        total += v
        err += e
        t0 += L
        mag = abs(v)
        if prev is not None and mag < tol * truncation_guard:
            # geometric tail estimate from the last two panels
            ratio = mag / prev if prev > 0 else 0.0
            if ratio < 0.5:
                err += mag * ratio / (1 - ratio) if ratio > 0 else 0.0
                break
        if t0 > max_len:
            raise QuadratureError("ray integrand does not decay", estimate=total, error=err)
        # slow decay: keep doubling so consecutive panels shrink by at least half
        slow = prev is not None and prev > 0 and mag > 0.5 * prev
        prev = mag
        L *= 2 if (L < 8 or slow) else 1
    if not ray.outgoing:
        total = -total
    return total, err, evals


def integrate_with_error(f: Callable, path: PathSpec, tol=1e-12, max_evals=MAX_EVALS,
                         truncation_guard=TRUNCATION_GUARD) -> IntegrationResult:
    """Integrate ``f`` (vectorized over complex arrays) along ``path``.

    ``tol`` is an absolute tolerance per piece.
    """
    total, err, evals = 0j, 0.0, 0
    for pc in path.pieces:
        if isinstance(pc, Segment):
            v, e, n = _adaptive(f, pc.a, pc.b, tol, max_evals - evals)
        else:
            v, e, n = _ray(f, pc, tol, max_evals - evals, truncation_guard)
        total += v
        err += e
        evals += n
    return IntegrationResult(total, err, evals)


def integrate(f: Callable, path: PathSpec, tol=1e-12, max_evals=MAX_EVALS) -> complex:
    return integrate_with_error(f, path, tol, max_evals).value


def residue_by_circle(f: Callable, center: complex, radius: float, tol=1e-12, n0=16, nmax=8192) -> complex:
    """``(1/(2 pi i)) * closed integral of f`` over the circle, by the trapezoid rule.

    Node counts double until two successive estimates agree to ``tol``
    (relative to the larger of the estimate and the mean of ``|f|*radius``).
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    prev, n = None, n0
    while n <= nmax:
        e = np.exp(2j * np.pi * np.arange(n) / n)
        vals = np.asarray(f(center + radius * e), dtype=complex) * radius * e
        if not np.all(np.isfinite(vals)):
            raise ResidueError(f"integrand not finite on circle around {center!r}")
        est = complex(vals.mean())
        scale = max(abs(est), float(np.abs(vals).mean()))
        if prev is not None and abs(est - prev) <= tol * scale:
            return est
        prev, n = est, 2 * n
    raise ResidueError(f"circle quadrature around {center!r} did not converge", estimate=prev)


def gauss_legendre_panels(a: float, b: float, width: float, order: int = 20):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    npan = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, npan + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    hw = 0.5 * (edges[1] - edges[0])
    return (mids[:, None] + hw * x[None, :]).ravel(), np.tile(w, npan) * hw
