"""Eigenvalues by shooting, norming constants, and spectral-data gradients.

The shooting function is the value at 0 of the square-integrable
solution; its zeros are the Dirichlet eigenvalues. Brackets seed at the
unperturbed eigenvalues and expand by doubling until a sign change is
found. The norming constant is log(-psi'(0) / psi_dot(0)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .airy import airy_zero
from .asymptotics import lambda_prediction
from .errors import BracketError, DegeneracyError, InconsistencyError, NumericError
from .potentials import Potential
from .volterra import (Grid, SolutionProfile, Workspace, build_grid,
                       default_grid, envelope_offset, solve_psi, solve_sc)

__all__ = [
    "EigenRecord",
    "locate_eigenvalue",
    "shooting_value",
    "norm_sq_psi",
    "NormSquare",
    "oscillation_count",
    "lambda_directional_derivative",
    "kappa_directional_derivative",
    "scan_low_eigenvalues",
]

BRACKET_COEFF = 4.0
BRACKET_EXPONENT = -2.0 / 3.0 + 0.05
MAX_DOUBLINGS = 6
ROOT_XTOL = 1e-13
Z_DIFF_STEP = 1e-4
_SQRT_PI = math.sqrt(math.pi)
#: grid length past the largest bracketed z, from the envelope decay rule
_GA_OFFSET = envelope_offset()


@dataclass
class EigenRecord:
    """One eigenvalue with its norming data and solver provenance."""

    n: int
    lam: float
    kappa: float
    bracket: tuple
    shoot_residual: float
    norm_sq: float          # quadrature of psi^2 plus tail estimate
    kappa_alt: float        # norm-based definition log(psi'(0)^2 / norm_sq)
    method: str
    psi_prime0: float
    psi_dot0: float
    psi: SolutionProfile = field(repr=False)


def shooting_value(q: Potential, lam: float, grid: Grid) -> float:
    """psi(q, lam, 0) without assembling the full profile."""
    ws = Workspace(q, lam, grid)
    f, _ = ws.picard(ws.psi0, "back")
    a0 = float(np.sum(ws.grid.weights * ws.psi0 * ws.qg * f))
    b0 = float(np.sum(ws.grid.weights * ws.th0 * ws.qg * f))
    return float(ws.b_psi0[0] - ws.b_th0[0] * a0 + ws.b_psi0[0] * b0)


def _norm_sq_from_profile(prof: SolutionProfile) -> float:
    body = float(np.sum(prof.grid.weights * prof.gauss_values ** 2))
    # tail: psi tracks the decaying basis solution beyond x_max
    w_end = prof.grid.x_max - prof.z
    ai, aip, _, _ = special.airy(w_end)
    psi0_end = _SQRT_PI * ai
    if psi0_end != 0.0:
        c = prof.values[-1] / psi0_end
        tail = c ** 2 * math.pi * (aip ** 2 - w_end * ai ** 2)
    else:
        tail = 0.0
    return body + max(tail, 0.0)


def _finalize(q: Potential, lam: float, n: int, bracket, method: str) -> EigenRecord:
    """Re-grid at the root, Newton-polish with psi_dot, build the record."""
    grid = default_grid(q, lam)
    prof = solve_psi(q, lam, grid)
    for _ in range(3):
        if prof.z_derivs[0] == 0.0:
            raise DegeneracyError("psi_dot(0) vanished during polish")
        step = prof.values[0] / prof.z_derivs[0]
        if abs(step) <= 1e-15 * (1.0 + abs(lam)):
            break
        lam = lam - step
        prof = solve_psi(q, lam, grid)
    psi_prime0 = float(prof.derivs[0])
    psi_dot0 = float(prof.z_derivs[0])
    if psi_dot0 == 0.0:
        raise DegeneracyError("psi_dot(0) = 0 at a root; numerically degenerate")
    ratio = -psi_prime0 / psi_dot0
    if ratio <= 0.0:
        raise DegeneracyError(
            f"-psi'(0)/psi_dot(0) = {ratio:g} <= 0 at lam = {lam:g}; "
            "not a simple Dirichlet eigenvalue")
    kappa = math.log(ratio)
    norm_sq = _norm_sq_from_profile(prof)
    kappa_alt = math.log(psi_prime0 ** 2 / norm_sq)
    return EigenRecord(n, lam, kappa, bracket, abs(float(prof.values[0])),
                       norm_sq, kappa_alt, method, psi_prime0, psi_dot0, prof)


def locate_eigenvalue(q: Potential, n: int) -> EigenRecord:
    """Bracketed Brent root of the shooting function near the n-th
    unperturbed eigenvalue, then a Newton polish on a fresh grid.

    The bracket half-width is the crude-localization scale or twice the
    first-order correction, whichever is larger; it doubles (at most 6
    times) until the shooting function changes sign.
    """
    a_n = airy_zero(n).a_n
    center = -a_n
    correction = lambda_prediction(q, n) - center
    delta = max(BRACKET_COEFF * (1.5 * math.pi * n) ** BRACKET_EXPONENT,
                2.0 * abs(correction))
    grid = None
    for _ in range(MAX_DOUBLINGS + 1):
        lo, hi = center - delta, center + delta
        if grid is None or grid.x_max < hi + _GA_OFFSET:
            grid = build_grid(center, hi + _GA_OFFSET)
        f_lo = shooting_value(q, lo, grid)
        f_hi = shooting_value(q, hi, grid)
        if f_lo * f_hi < 0.0:
            break
        delta *= 2.0
    else:
        raise BracketError(
            f"no sign change around -a_{n} after {MAX_DOUBLINGS} doublings; "
            "neighboring eigenvalue interference or mislabeled index")
    lam = brentq(lambda t: shooting_value(q, t, grid), lo, hi,
                 xtol=ROOT_XTOL, rtol=8.9e-16)
    return _finalize(q, lam, n, (lo, hi), "shooting")


def oscillation_count(record: EigenRecord, rel_floor: float = 1e-8) -> int:
    """Sign changes of the eigenfunction on (0, x_max), noise-floored."""
    v = record.psi.gauss_values.ravel()
    v = v[np.abs(v) > rel_floor * np.max(np.abs(v))]
    return int(np.sum(np.sign(v[:-1]) * np.sign(v[1:]) < 0))


@dataclass(frozen=True)
class NormSquare:
    quadrature: float
    product: float       # -psi'(0) psi_dot(0)
    rel_gap: float


def norm_sq_psi(q: Potential, record: EigenRecord) -> NormSquare:
    """Both routes to the squared norm and their relative gap."""
    quad_val = record.norm_sq
    prod = -record.psi_prime0 * record.psi_dot0
    gap = abs(quad_val - prod) / quad_val
    if gap > 1e-5:
        raise InconsistencyError(
            f"norm identity gap {gap:.3e} exceeds 1e-5 at n={record.n}")
    return NormSquare(quad_val, prod, gap)


def _pair_with_direction(prof_values, grid: Grid, v: Potential) -> float:
    vv = np.asarray(v.q(grid.gauss_x))
    return float(np.sum(grid.weights * prof_values * vv))


def lambda_directional_derivative(q: Potential, n: int, v: Potential,
                                  record: EigenRecord | None = None) -> float:
    """Derivative of the n-th eigenvalue along v: integral of eta_n^2 v.

    The (1+x)^r weight of the gradient cancels against the pairing, so
    this is a plain L2 integral of the normalized eigenfunction squared.
    """
    rec = record or locate_eigenvalue(q, n)
    norm_sq = -rec.psi_prime0 * rec.psi_dot0
    eta2 = rec.psi.gauss_values ** 2 / norm_sq
    return _pair_with_direction(eta2, rec.psi.grid, v)


def _psi_dot0_at(q: Potential, z: float, grid: Grid) -> float:
    return float(solve_psi(q, z, grid).z_derivs[0])


def kappa_directional_derivative(q: Potential, n: int, v: Potential,
                                 record: EigenRecord | None = None) -> float:
    """Derivative of the n-th norming constant along v.

    Assembles the two gradient pieces: the psi'- and psi_dot-gradient
    integrals built from the s, c, s_dot profiles at the eigenvalue, plus
    the second-derivative bracket B_n multiplying the eigenvalue gradient.
    B_n uses psi_dot'(0) from the solved z-derivative profile and
    psi_ddot(0) by centered z-differencing of psi_dot(0) with step
    halving; disagreement beyond 1e-3 relative raises.
    """
    rec = record or locate_eigenvalue(q, n)
    lam = rec.lam
    grid = rec.psi.grid
    s_prof, c_prof = solve_sc(q, lam, grid)
    psi_g = rec.psi.gauss_values
    psidot_g = rec.psi.gauss_z_derivs
    integrand = (-c_prof.gauss_values * psi_g / rec.psi_prime0
                 - (s_prof.gauss_z_derivs * psi_g + s_prof.gauss_values * psidot_g)
                 / rec.psi_dot0)
    a_part = _pair_with_direction(integrand, grid, v)
    a_part += _kappa_gradient_tail(lam, grid.x_max, v, rec.psi_prime0, rec.psi_dot0)

    # B_n by differencing; psi_dot'(0) comes from the psi_dot solve itself
    psidot_prime0 = float(rec.psi.z_derivs_prime[0])
    results = []
    for dz in (Z_DIFF_STEP * (1.0 + abs(lam)), 0.5 * Z_DIFF_STEP * (1.0 + abs(lam))):
        ddot = (_psi_dot0_at(q, lam + dz, grid) - _psi_dot0_at(q, lam - dz, grid)) / (2.0 * dz)
        b_n = psidot_prime0 / rec.psi_prime0 - ddot / rec.psi_dot0
        results.append(a_part + b_n * lambda_directional_derivative(q, n, v, rec))
    if abs(results[0] - results[1]) > 1e-3 * max(abs(results[0]), 1e-300):
        raise NumericError(
            f"kappa gradient differencing unstable at n={n}: step halving moved "
            f"the value by {abs(results[0] - results[1]):.3e}")
    return results[1]


def _kappa_gradient_tail(lam: float, x_max: float, v: Potential,
                         psi_prime0: float, psi_dot0: float) -> float:
    """Contribution of [x_max, inf) to the kappa gradient pairing.

    Beyond the grid the profiles track their unperturbed forms, whose
    products stay bounded, so the tail reduces to Airy-product integrals
    against v. Skipped when v has no mass out there.
    """
    if v.decay_point <= x_max:
        return 0.0
    from scipy.integrate import quad

    ai0, aip0, bi0, bip0 = special.airy(-lam)
    t0, tp0 = _SQRT_PI * bi0, _SQRT_PI * bip0
    p0, pp0 = _SQRT_PI * ai0, _SQRT_PI * aip0

    def f(x):
        # scaled Airy products: Bi alone overflows out here, the decaying
        # and growing factors pair up into bounded combinations
        w = x - lam
        eai, eaip, ebi, ebip = special.airye(w)
        damp = math.exp(-(4.0 / 3.0) * w ** 1.5)
        p_aa = math.pi * eai * eai * damp
        p_aap = math.pi * eai * eaip * damp
        p_ab = math.pi * eai * ebi
        p_abp = math.pi * eai * ebip
        p_apb = math.pi * eaip * ebi
        c0psi0 = tp0 * p_aa - pp0 * p_ab
        sdot0psi0_plus = c0psi0 + t0 * 2.0 * p_aap - p0 * (p_abp + p_apb)
        return (-c0psi0 / psi_prime0 - sdot0psi0_plus / psi_dot0) * float(v.q(x))

    hi = min(v.decay_point, x_max + 80.0)
    out = quad(f, x_max, hi, limit=200, epsabs=1e-13, epsrel=1e-9, full_output=1)
    return float(out[0])


def scan_low_eigenvalues(q: Potential, step: float = 0.1) -> list:
    """Coarse sweep of the shooting function below the first bracket seed.

    Finds any eigenvalues under -a_1 (finitely many exist); they are
    reported with index 0 and excluded from asymptotic fits by callers.
    The sweep floor is the min-max bound: no spectrum can sit below the
    free ground state minus the potential's sup norm, and chasing the
    coarse -10(1+sup) floor past that would underflow the decaying basis
    solution for deep potentials.
    """
    a_1 = airy_zero(1).a_n
    lam_min = max(-10.0 * (1.0 + q.sup_norm), -a_1 - 1.05 * q.sup_norm - 0.5)
    top = -a_1 - BRACKET_COEFF * (1.5 * math.pi) ** BRACKET_EXPONENT
    if top <= lam_min:
        return []
    grid = default_grid(q, top)
    lams = np.arange(lam_min, top + step, step)
    vals = [shooting_value(q, t, grid) for t in lams]
    found = []
    for i in range(len(lams) - 1):
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0:
            root = brentq(lambda t: shooting_value(q, t, grid),
                          lams[i], lams[i + 1], xtol=ROOT_XTOL, rtol=8.9e-16)
            found.append(_finalize(q, root, 0, (lams[i], lams[i + 1]), "scan"))
    return found
