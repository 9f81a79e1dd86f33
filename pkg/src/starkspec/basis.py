"""Unperturbed solutions of -f'' + x f = z f and their Green kernel.

psi0 decays and theta0 grows past the turning point x = z; s0 and c0 are
the fundamental pair normalized at x = 0. Everything reduces to Airy
evaluations at w = x - z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .airy import airy_eval
from .errors import NumericError

__all__ = ["BasisValues", "basis_eval", "green0"]

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class BasisValues:
    z: float
    x: float
    psi0: float
    psi0_prime: float
    theta0: float
    theta0_prime: float
    s0: float
    s0_prime: float
    c0: float
    c0_prime: float
    s0_dot: float


def basis_eval(z: float, x: float) -> BasisValues:
    """All unperturbed solution values at (z, x), x >= 0.

    Normalization: W(psi0, theta0) = 1. The s0_dot field uses the identity
    s0_dot = c0 - s0_prime.
    """
    at_x = airy_eval(x - z)
    at_0 = airy_eval(-z)
    if at_x.scaled or at_0.scaled:
        raise NumericError(
            f"basis_eval: Airy overflow at w = {x - z:g} (x = {x:g}, z = {z:g}); "
            "the unperturbed basis is only tabulated in the unscaled range")
    psi0 = _SQRT_PI * at_x.ai
    psi0p = _SQRT_PI * at_x.ai_prime
    theta0 = _SQRT_PI * at_x.bi
    theta0p = _SQRT_PI * at_x.bi_prime
    p0 = _SQRT_PI * at_0.ai
    pp0 = _SQRT_PI * at_0.ai_prime
    t0 = _SQRT_PI * at_0.bi
    tp0 = _SQRT_PI * at_0.bi_prime
    s0 = -t0 * psi0 + p0 * theta0
    s0p = -t0 * psi0p + p0 * theta0p
    c0 = tp0 * psi0 - pp0 * theta0
    c0p = tp0 * psi0p - pp0 * theta0p
    return BasisValues(z, x, psi0, psi0p, theta0, theta0p,
                       s0, s0p, c0, c0p, s0_dot=c0 - s0p)


def _scaled_airy(w: float):
    """(ai, bi, t) with Ai = ai e^-t, Bi = bi e^t; t = 0 on the left axis."""
    if w > 100.0:
        eai, _, ebi, _ = special.airye(w)
        return float(eai), float(ebi), (2.0 / 3.0) * w ** 1.5
    ai, _, bi, _ = special.airy(w)
    return float(ai), float(bi), 0.0


def green0(z: float, x: float, y: float) -> float:
    """Initial-value Green kernel J0(z, x, y); antisymmetric in (x, y).

    Computed from the decaying/growing pair with the exponents of the two
    cross products summed before exponentiation, so the kernel stays
    finite whenever the result is representable even where Bi alone
    overflows.
    """
    if any(map(math.isnan, (z, x, y))):
        raise NumericError("green0: NaN argument")
    ax, bx, tx = _scaled_airy(x - z)
    ay, by, ty = _scaled_airy(y - z)
    # J0 = pi * (Bi(x-z) Ai(y-z) - Ai(x-z) Bi(y-z))
    e1 = tx - ty
    e2 = ty - tx
    if max(e1, e2) > 700.0:
        raise NumericError(
            f"green0: kernel overflows double range at x-z={x - z:g}, y-z={y - z:g}")
    return math.pi * (bx * ay * math.exp(e1) - ax * by * math.exp(e2))
