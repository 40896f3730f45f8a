"""Identity checks run by ``maryland verify``.

Each check returns a :class:`CheckResult` named after the identity it tests.
Module errors are caught and recorded as failed checks, so a report is
always produced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cocycle import cocycle_product, frobenius_rel, transfer_matrix
from .errors import MarylandError, PotentialPoleError, ResonanceWarning, SingularFundamentalError
from .minsol import (
    MinSolContext,
    maryland_residual,
    second_equation_residual,
    upsilon,
    upsilon_real,
    wronskian,
    wronskian_closed_forms,
)
from .params import SpectralParams, wrap_angle
from .quadrature import residue_by_circle
from .renorm import (
    FundamentalSolution,
    cascade,
    cascade_reconstruct,
    intermediate_identity,
    maryland_monodromy,
    monodromy_matrix,
    renorm_reconstruct,
    renormalize_once,
)
from .sigma import SigmaContext, functional_residuals, log_sigma_array, residue_inv_sigma

SIGMA_TOL = 1e-10
RESIDUE_TOL = 1e-8
EQUATION_TOL = 1e-8
WRONSKIAN_TOL = 1e-7
MONODROMY_TOL = 1e-7
RENORM_TOL = 1e-7
INTERMEDIATE_TOL = 1e-8
CASCADE_TOL = 1e-6
INTERMEDIATE_MAX_N = 30


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "residual": self.residual, "tol": self.tol,
                "passed": self.passed, "detail": self.detail}


def _result(name, residual, tol, **detail):
    residual = float(residual)
    return CheckResult(name, residual, tol, bool(residual < tol), detail)


def _failed(name, tol, exc):
    return CheckResult(name, math.inf, tol, False, {"error": type(exc).__name__, "message": str(exc)})


def sigma_points(omega, n=50, seed=0):
    """Deterministic sample with ``|Im z|`` in ``[0.05, 10]`` and ``|Re z| < pi(1+omega)``."""
    rng = np.random.default_rng(seed)
    re = rng.uniform(-1, 1, n) * math.pi * (1 + omega) * 0.999
    im = rng.uniform(0.05, 10.0, n) * rng.choice([-1.0, 1.0], n)
    return re + 1j * im


def check_sigma(omega, n=50):
    ctx = SigmaContext(omega)
    worst = {"shift_pi_omega": 0.0, "shift_pi": 0.0, "reflection": 0.0, "conjugation": 0.0}
    for z in sigma_points(omega, n):
        for k, v in functional_residuals(ctx, z).items():
            worst[k] = max(worst[k], v)
    names = {
        "shift_pi_omega": "sigma-shift-pi-omega",
        "shift_pi": "sigma-shift-pi",
        "reflection": "sigma-reflection",
        "conjugation": "sigma-conjugation",
    }
    return [_result(names[k], v, SIGMA_TOL, points=n) for k, v in worst.items()]


def sigma_residue_error(omega) -> float:
    """Closed-form residue of ``1/sigma`` at ``pi(1+omega)`` against circle quadrature."""
    ctx = SigmaContext(omega)
    z0 = math.pi * (1 + omega)
    num = residue_by_circle(lambda z: np.exp(-log_sigma_array(ctx, z)), z0, 0.1, tol=1e-13)
    ref = residue_inv_sigma(ctx)
    return abs(num - ref) / abs(ref)


def check_residue(omega):
    name = "sigma-residue-closed-form"
    try:
        return _result(name, sigma_residue_error(omega), RESIDUE_TOL)
    except MarylandError as exc:
        return _failed(name, RESIDUE_TOL, exc)


def check_minsol(ctx: MinSolContext):
    out = []
    name = "minsol-maryland-equation"
    try:
        f = lambda z: upsilon(ctx, z)  # noqa: E731
        pts = [0.31 + 0.9j, -0.47 + 1.6j, 0.22 - 0.8j, -0.6 - 1.3j]
        r = max(maryland_residual(ctx, f, z) for z in pts)
        out.append(_result(name, r, EQUATION_TOL, points=len(pts)))
    except MarylandError as exc:
        out.append(_failed(name, EQUATION_TOL, exc))
    name = "minsol-second-equation"
    try:
        f = lambda z: upsilon_real(ctx, z)  # noqa: E731
        pts = np.linspace(-0.29, 0.29, 7) + 0.013
        r = max(second_equation_residual(ctx, f, complex(z)) for z in pts)
        out.append(_result(name, r, EQUATION_TOL, points=len(pts)))
    except MarylandError as exc:
        out.append(_failed(name, EQUATION_TOL, exc))
    name = "wronskian-constant"
    try:
        f = lambda z: upsilon_real(ctx, z)  # noqa: E731
        g = lambda z: upsilon_real(ctx, z + 1)  # noqa: E731
        ws = np.array([wronskian(g, f, complex(z), ctx.omega) for z in np.linspace(0.05, 0.95, 7)])
        mean = ws.mean()
        out.append(_result(name, np.abs(ws - mean).max() / abs(mean), WRONSKIAN_TOL))
        a_form, b_form = wronskian_closed_forms(ctx)
        out.append(_result("wronskian-closed-form", abs(mean - a_form) / abs(a_form), WRONSKIAN_TOL,
                           a_form_re=a_form.real, a_form_im=a_form.imag))
        out.append(_result("wronskian-a-b-forms", abs(a_form - b_form) / abs(a_form), WRONSKIAN_TOL))
    except MarylandError as exc:
        for nm in ("wronskian-constant", "wronskian-closed-form", "wronskian-a-b-forms"):
            out.append(_failed(nm, WRONSKIAN_TOL, exc))
    return out


def monodromy_error(p: SpectralParams, xs=None) -> float:
    """Largest relative residual of ``M1(x) = F(x, eta1, l1)`` over ``xs``."""
    ctx = MinSolContext(p)
    fs = FundamentalSolution.from_minsol(ctx)
    M1 = maryland_monodromy(p)
    if xs is None:
        xs = np.linspace(0.037, 0.937, 10)
    return max(frobenius_rel(monodromy_matrix(fs, p.omega, x), M1(x)) for x in xs)


def renormalization_error(p: SpectralParams, N: int, ctx=None):
    """Relative error of the one-step renormalization formula against the direct product."""
    r = renormalize_once(p, N, ctx=ctx)
    direct = cocycle_product(r.params, N)
    return renorm_reconstruct(r).rel_error(direct), r


def intermediate_error(p: SpectralParams, N: int, ctx=None) -> float:
    ctx = ctx or MinSolContext(p)
    fs = FundamentalSolution.from_minsol(ctx)
    F = lambda z: transfer_matrix(z, p.eta, p.l)  # noqa: E731
    lhs, rhs = intermediate_identity(F, fs, p.omega, p.theta, N, maryland_monodromy(p))
    return rhs.rel_error(lhs)


def check_renormalization(p: SpectralParams, N: int, ctx=None):
    out = []
    name = "monodromy-identity"
    try:
        out.append(_result(name, monodromy_error(p), MONODROMY_TOL))
    except MarylandError as exc:
        out.append(_failed(name, MONODROMY_TOL, exc))
    name = "renormalization-identity"
    try:
        err, r = renormalization_error(p, N, ctx)
        out.append(_result(name, err, RENORM_TOL, n=N, n_next=r.n_next, perturbed=r.perturbed,
                           eta_used=r.params.eta))
    except MarylandError as exc:
        out.append(_failed(name, RENORM_TOL, exc))
    name = "intermediate-identity"
    n_int = max(-INTERMEDIATE_MAX_N, min(INTERMEDIATE_MAX_N, N))
    try:
        out.append(_result(name, intermediate_error(p, n_int, ctx), INTERMEDIATE_TOL, n=n_int))
    except MarylandError as exc:
        out.append(_failed(name, INTERMEDIATE_TOL, exc))
    name = "cascade-reconstruction"
    try:
        chain = cascade(p, N, truncate=True, tol=CASCADE_TOL)
        ref = cocycle_product(chain.levels[0].params if chain.levels else p, N)
        err = cascade_reconstruct(chain).rel_error(ref)
        out.append(_result(name, err, CASCADE_TOL, depth=chain.depth, truncated=chain.truncated,
                           terminal_n=chain.terminal_n, error_estimate=chain.error_estimate))
    except MarylandError as exc:
        out.append(_failed(name, CASCADE_TOL, exc))
    return out


def check_resonance_handling(omega=None):
    """A resonant ``eta`` is moved off the lattice (and flagged), never used silently."""
    name = "resonance-perturbation"
    omega = omega if omega is not None else (math.sqrt(5) - 1) / 2
    p = SpectralParams(omega, 0.3, wrap_angle(math.pi * omega), 0.5)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            err, r = renormalization_error(p, 7)
        warned = any(issubclass(w.category, ResonanceWarning) for w in caught)
        try:
            renormalize_once(p, 7, perturb=False)
            unperturbed = "no error"
        except SingularFundamentalError as exc:
            unperturbed = type(exc).__name__
        except MarylandError as exc:
            unperturbed = type(exc).__name__
        ok = r.perturbed and warned and unperturbed != "no error"
        return CheckResult(name, err, RENORM_TOL, bool(ok and err < RENORM_TOL),
                           {"perturbed": r.perturbed, "warned": warned, "unperturbed": unperturbed,
                            "eta_used": r.params.eta})
    except MarylandError as exc:
        return _failed(name, RENORM_TOL, exc)


def check_pole_rejection(omega=None):
    """``theta`` on the potential pole set is refused with :class:`PotentialPoleError`."""
    omega = omega if omega is not None else (math.sqrt(5) - 1) / 2
    p = SpectralParams(omega, 0.0, 1.0, 0.5)
    raised = []
    for fn in (lambda: cocycle_product(p, 5), lambda: renormalize_once(p, 5)):
        try:
            fn()
            raised.append(False)
        except PotentialPoleError:
            raised.append(True)
    ok = all(raised)
    return CheckResult("pole-set-rejection", 0.0 if ok else 1.0, 0.5, ok,
                       {"cocycle_raised": raised[0], "renormalize_raised": raised[1]})


def run_verify(p: SpectralParams, N: int, sigma_points_n=50) -> dict:
    """Run every check for ``p`` and ``N``; returns a JSON-ready report."""
    checks = []
    checks += check_sigma(p.omega, sigma_points_n)
    checks.append(check_residue(p.omega))
    ctx = None
    try:
        ctx = MinSolContext(p)
        checks += check_minsol(ctx)
    except MarylandError as exc:
        checks.append(_failed("minsol-context", EQUATION_TOL, exc))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResonanceWarning)
        checks += check_renormalization(p, N, None)
    checks.append(check_resonance_handling(p.omega))
    checks.append(check_pole_rejection(p.omega))
    return {
        "config": {"omega": p.omega, "theta": p.theta, "eta": p.eta, "l": p.l, "n": N},
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
    }
