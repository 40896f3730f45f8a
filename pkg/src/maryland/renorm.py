"""Fundamental solutions, monodromy matrices and the renormalization of cocycles.

For a 1-periodic unimodular ``M`` and a fundamental solution ``Psi`` of
``Psi(z + omega) = M(z) Psi(z)``, the product ``P_N = M(theta+(N-1)omega)...M(theta)``
factors as

    P_N = Psi({theta + N omega}) sigma2 P_{N1}(M1, omega1, theta1) sigma2 Psi(theta)^{-1},

where ``M1(x) = p(omega x)^T`` and ``Psi(x + 1) = Psi(x) p(x)``.  For the Maryland
transfer matrix, ``Psi`` is built from the minimal solution and ``M1`` is the
transfer matrix again, at the renormalized parameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cocycle import (
    SIGMA2,
    IDENTITY,
    POLE_TOL,
    ScaledMat2C,
    cocycle_product,
    mat_det,
    mat_inverse,
    transfer_matrix,
)
from .errors import (
    DomainError,
    MarylandError,
    PotentialPoleError,
    PrecisionError,
    SingularFundamentalError,
)
from .minsol import MinSolContext, upsilon_real, wronskian_closed_forms
from .params import (
    RESONANCE_TOL,
    RenormStep,
    SpectralParams,
    frac,
    perturb_off_resonance,
    renorm_params,
)

# det Psi relative to ||Psi||^2 below this counts as singular (sampled determinant only)
DET_FLOOR = 1e-13
# largest l for which a cascade level is attempted at all
L_BUDGET = 60.0
# relative accuracy assumed for each minimal-solution value when estimating cascade errors
UPSILON_REL_ERROR = 1e-13
# random perturbations used by the sensitivity estimate (fixed seed keeps runs reproducible)
SENSITIVITY_DRAWS = 4
# default bound on the accumulated error estimate of a cascade
PRECISION_BUDGET = 1e-6
_EPS = 2.220446049250313e-16


def psi_matrix(ctx: MinSolContext, z, scale=1.0) -> np.ndarray:
    """``[[Y(z), Y(z-1)], [Y(z-omega), Y(z-1-omega)]]`` with ``Y`` the minimal solution."""
    w = ctx.omega
    v = upsilon_real(ctx, np.array([z, z - 1, z - w, z - 1 - w], dtype=complex)) * scale
    return np.array([[v[0], v[1]], [v[2], v[3]]])


def condition(m, det=None) -> float:
    """``||m||_F * ||m^{-1}||_F`` for a 2x2 matrix, optionally with a known determinant."""
    m = np.asarray(m)
    d = mat_det(m) if det is None else det
    return float(np.sum(np.abs(m) ** 2) / abs(d))


@dataclass(eq=False)
class FundamentalSolution:
    """A matrix solution ``Psi`` of ``Psi(z + omega) = M(z) Psi(z)`` with constant non-zero determinant.

    Parameters
    ----------
    evaluator : callable
        ``z -> Psi(z)`` as a ``(2, 2)`` complex array.
    omega : float
    check_points : sequence of float
        Points where ``det Psi`` is sampled.
    det_tol : float
        Allowed relative variation of the sampled determinant, on top of the
        rounding floor ``64 * eps * condition(Psi)``.
    expected_det : complex, optional
        The determinant in closed form.  When given it is used for inverses
        and the samples are only checked against it.

    Raises
    ------
    SingularFundamentalError
        If the determinant vanishes or the samples are inconsistent.
    """

    evaluator: Callable
    omega: float
    check_points: tuple = (0.23, 0.51, 0.79)
    det_tol: float = 1e-7
    expected_det: complex = None
    det_constant: complex = field(init=False)
    max_condition: float = field(init=False)

    def __post_init__(self):
        dets, norms = [], []
        for x in self.check_points:
            m = self.evaluator(x)
            dets.append(mat_det(m))
            norms.append(float(np.sum(np.abs(m) ** 2)))
        if self.expected_det is not None:
            d0 = complex(self.expected_det)
            if d0 == 0 or not all(abs(d0) > 1e-300 * n for n in norms):
                raise SingularFundamentalError("det Psi vanishes; eta is on the resonance lattice")
        else:
            d0 = dets[0]
            rel = [abs(d) / n for d, n in zip(dets, norms)]
            if min(rel) < DET_FLOOR:
                raise SingularFundamentalError(
                    f"det Psi is numerically zero (|det|/||Psi||^2 = {min(rel):.2e}); eta is (near) resonant"
                )
        conds = [n / abs(d0) for n in norms]
        floor = 64 * _EPS * max(conds)
        spread = max(abs(d - d0) for d in dets) / abs(d0)
        if spread > max(self.det_tol, floor):
            raise SingularFundamentalError(f"det Psi is not constant: relative spread {spread:.2e}")
        self.det_constant = d0 if self.expected_det is not None else complex(np.mean(dets))
        self.max_condition = max(conds)

    @classmethod
    def from_minsol(cls, ctx: MinSolContext, scale=1.0, **kw):
        """``Psi`` built from the minimal solution; ``det Psi`` is the closed-form Wronskian."""
        kw.setdefault("expected_det", wronskian_closed_forms(ctx)[0] * scale * scale)
        return cls(lambda z: psi_matrix(ctx, z, scale), ctx.omega, **kw)

    def __call__(self, z) -> np.ndarray:
        return self.evaluator(z)

    def inverse(self, z) -> np.ndarray:
        """``Psi(z)^{-1}`` as the adjugate over the constant determinant."""
        a = self.evaluator(z)
        return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / self.det_constant

    def extended(self, z, monodromy: Callable) -> np.ndarray:
        """``Psi(z)`` for any real ``z``, from ``Psi({z})`` and unit shifts.

        Uses ``Psi(x + 1) = Psi(x) p(x)`` with ``p(x) = monodromy(x/omega)^T``;
        the governing equation in the ``omega`` shift is not used.
        """
        n = math.floor(z)
        x = z - n
        m = self.evaluator(x)
        if n >= 0:
            for j in range(n):
                m = m @ monodromy((x + j) / self.omega).T
        else:
            for j in range(1, -n + 1):
                m = m @ mat_inverse(monodromy((x - j) / self.omega).T)
        return m


def monodromy_matrix(fs: FundamentalSolution, omega: float, x: float) -> np.ndarray:
    """``M1(x) = (Psi(omega x)^{-1} Psi(omega x + 1))^T``."""
    z = omega * x
    return (fs.inverse(z) @ fs(z + 1)).T


def maryland_monodromy(params: SpectralParams) -> Callable:
    """The closed form ``x -> F(x, eta1, l1)`` of the Maryland monodromy matrix."""
    w = params.omega
    eta1, l1 = params.eta / w, params.l / w
    return lambda x: transfer_matrix(x, eta1, l1, pole_tol=0.0)


def generic_cocycle(M: Callable, omega: float, theta: float, N: int) -> ScaledMat2C:
    """``P_N(M, omega, theta)`` for an arbitrary matrix function ``M``."""
    out = ScaledMat2C.identity()
    if N >= 0:
        for k in range(N):
            out = ScaledMat2C(np.asarray(M(theta + k * omega), dtype=complex)) @ out
    else:
        for k in range(1, -N + 1):
            out = ScaledMat2C(mat_inverse(M(theta - k * omega))) @ out
    return out


@dataclass(frozen=True)
class RenormResult:
    """One application of the renormalization formula.

    ``P_N = left @ P_{n_next}(inner) @ right``.
    """

    left: np.ndarray
    inner: object
    n_next: int
    right: np.ndarray
    condition_left: float
    condition_right: float
    perturbed: bool = False
    params: SpectralParams = None


def _check_theta(theta, pole_tol=POLE_TOL, index=None):
    if min(theta, 1.0 - theta) < pole_tol:
        raise PotentialPoleError(theta, index=index,
                                 msg=f"theta={theta!r} is on the potential pole set (an integer)")


def generic_renormalize(M: Callable, fs: FundamentalSolution, omega: float, theta: float, N: int,
                        M1: Callable = None) -> RenormResult:
    """Boundary matrices and inner data of the renormalization formula for a generic ``M``.

    ``inner`` is ``(M1, omega1, theta1)``; ``M1`` defaults to the monodromy
    matrix computed from ``fs``.
    """
    if M1 is None:
        M1 = lambda x: monodromy_matrix(fs, omega, x)  # noqa: E731
    n_next = -math.floor(theta + N * omega)
    x = frac(theta + N * omega)
    psi_l = fs(x)
    psi_r = fs(theta)
    left = psi_l @ SIGMA2
    right = SIGMA2 @ fs.inverse(theta)
    inner = (M1, frac(1.0 / omega), frac(theta / omega))
    d = fs.det_constant
    return RenormResult(left, inner, n_next, right, condition(psi_l, d), condition(psi_r, d))


def intermediate_identity(M: Callable, fs: FundamentalSolution, omega, theta, N, monodromy: Callable):
    """Both sides of ``P_N = Psi(theta + N omega) Psi(theta)^{-1}``.

    ``Psi`` at ``theta + N omega`` is reached from ``[0, 1)`` through unit
    shifts (``monodromy``), never through the equation defining ``P_N``.
    Returns ``(lhs, rhs)`` as :class:`ScaledMat2C`.
    """
    lhs = generic_cocycle(M, omega, theta, N)
    rhs = fs.extended(theta + N * omega, monodromy) @ fs.inverse(theta)
    return lhs, ScaledMat2C.from_matrix(rhs)


def renormalize_once(p: SpectralParams, N: int, ctx: MinSolContext = None, perturb=True,
                     resonance_tol=RESONANCE_TOL, scale=1.0) -> RenormResult:
    """One step of the renormalization formula for the Maryland cocycle.

    Returns boundary matrices ``left = Psi({theta+N omega}) sigma2`` and
    ``right = sigma2 Psi(theta)^{-1}`` with the inner problem
    ``(SpectralParams(omega1, theta1, eta1, l1), N1)``.  If ``eta`` is resonant it is moved
    off the lattice first (flagged in ``perturbed``; ``params`` holds the values actually used).
    """
    _check_theta(p.theta)
    perturbed = False
    if perturb:
        p, perturbed = perturb_off_resonance(p, resonance_tol)
    if ctx is None or ctx.params.omega != p.omega or ctx.params.eta != p.eta or ctx.params.l != p.l:
        ctx = MinSolContext(p)
    fs = FundamentalSolution.from_minsol(ctx, scale=scale)
    step = renorm_params(p, N, resonance_tol=resonance_tol, perturb=False)
    x = frac(p.theta + N * p.omega)
    _check_theta(x, index=N)
    psi_l, psi_r = fs(x), fs(p.theta)
    return RenormResult(
        left=psi_l @ SIGMA2,
        inner=step.next_params,
        n_next=step.n_next,
        right=SIGMA2 @ fs.inverse(p.theta),
        condition_left=condition(psi_l, fs.det_constant),
        condition_right=condition(psi_r, fs.det_constant),
        perturbed=perturbed,
        params=p,
    )


def renorm_reconstruct(r: RenormResult, precision="double") -> ScaledMat2C:
    """``left @ P_{N1}(inner) @ right``."""
    inner = cocycle_product(r.inner, r.n_next, precision=precision)
    return ScaledMat2C(r.left) @ inner @ r.right


@dataclass
class RenormChain:
    """Levels of a cascaded renormalization and the final short product."""

    levels: list = field(default_factory=list)
    boundary_left: list = field(default_factory=list)
    boundary_right: list = field(default_factory=list)
    conditions: list = field(default_factory=list)
    perturbed: list = field(default_factory=list)
    terminal_params: SpectralParams = None
    terminal_n: int = 0
    terminal_product: ScaledMat2C = None
    truncated: bool = False
    error_estimate: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.levels)


def _reconstruct(lefts, rights, terminal: ScaledMat2C) -> ScaledMat2C:
    out = terminal
    for left, right in zip(reversed(lefts), reversed(rights)):
        out = left @ out @ right
    return out


def sensitivity_estimate(lefts, rights, terminal: ScaledMat2C, delta=UPSILON_REL_ERROR,
                         draws=SENSITIVITY_DRAWS, seed=0) -> float:
    """Relative change of the reconstruction when every ``Psi`` entry is perturbed by ``delta``.

    ``left = Psi sigma2`` and ``right = sigma2 adj(Psi) / det``, and the adjugate
    holds the same entries as ``Psi``, so entrywise relative noise on
    ``left sigma2`` and ``sigma2 right`` models errors in the minimal solution.
    Values above ``0.1`` are outside the linear regime and reported as ``inf``.
    """
    rng = np.random.default_rng(seed)
    base = _reconstruct(lefts, rights, terminal)
    worst = 0.0

    def noise():
        return 1.0 + delta * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))

    for _ in range(draws):
        ls = [ScaledMat2C((L.mat @ SIGMA2 * noise()) @ SIGMA2, L.log_scale) for L in lefts]
        rs = [ScaledMat2C(SIGMA2 @ (SIGMA2 @ R.mat * noise()), R.log_scale) for R in rights]
        worst = max(worst, _reconstruct(ls, rs, terminal).rel_error(base))
    return worst if worst <= 0.1 else math.inf


def cascade(p: SpectralParams, N: int, max_depth: int = 64, precision="double",
            tol=PRECISION_BUDGET, l_budget=L_BUDGET, resonance_tol=RESONANCE_TOL,
            truncate=False) -> RenormChain:
    """Renormalize repeatedly until ``|N_k| <= 1`` or ``max_depth`` levels.

    ``precision`` only affects the direct terminal product: the boundary
    matrices come from double-precision minimal solutions in either mode.
    With ``truncate=True`` a level that would break the budget is not added;
    the chain ends there (``truncated`` is set) and the remaining product is
    computed directly.

    Raises
    ------
    PrecisionError
        If a level would need ``l_k`` beyond ``l_budget``, or the accumulated
        error estimate exceeds ``tol`` (only when not truncating).
    """
    if precision not in ("double", "extended"):
        raise DomainError(f"unknown precision mode {precision!r}")
    chain = RenormChain()
    cur, n = p, int(N)
    terminal = None
    while abs(n) > 1 and chain.depth < max_depth:
        if cur.l > l_budget:
            if truncate:
                chain.truncated = True
                break
            raise PrecisionError(
                f"level {chain.depth} needs l={cur.l:.3g} > {l_budget:g}; the minimal solution "
                "cannot be resolved there"
            )
        try:
            r = renormalize_once(cur, n, resonance_tol=resonance_tol)
        except SingularFundamentalError:
            if not truncate or cur.resonance_distance() < resonance_tol:
                raise
            chain.truncated = True
            break
        # a resonant inner eta is nudged here; the product is then that of the nudged problem
        nxt, moved = perturb_off_resonance(r.inner, resonance_tol)
        left, right = ScaledMat2C.from_matrix(r.left), ScaledMat2C.from_matrix(r.right)
        inner = cocycle_product(nxt, r.n_next, precision=precision)
        est = sensitivity_estimate(chain.boundary_left + [left], chain.boundary_right + [right], inner)
        if est > tol:
            if truncate:
                chain.truncated = True
                break
            raise PrecisionError(
                f"level {chain.depth} (l={cur.l:.3g}, condition {max(r.condition_left, r.condition_right):.2e}) "
                f"raises the error estimate to {est:.2e} > tol={tol:g}; stop earlier with max_depth "
                "or use a smaller l"
            )
        chain.levels.append(RenormStep(r.params, n, r.inner, r.n_next, r.perturbed))
        chain.boundary_left.append(left)
        chain.boundary_right.append(right)
        chain.conditions.append(max(r.condition_left, r.condition_right))
        chain.perturbed.append(r.perturbed or moved)
        chain.error_estimate = est
        cur, n, terminal = nxt, r.n_next, inner
    chain.terminal_params = cur
    chain.terminal_n = n
    chain.terminal_product = terminal if terminal is not None else cocycle_product(cur, n, precision=precision)
    return chain


def cascade_reconstruct(chain: RenormChain) -> ScaledMat2C:
    """``L_0 (L_1 (... P_terminal ...) R_1) R_0``."""
    return _reconstruct(chain.boundary_left, chain.boundary_right, chain.terminal_product)
