"""Airy functions, their zeros, and the envelope weights used in estimates.

Evaluation is backed by scipy.special (AMOS); this module adds the domain
checks, the scaled representation past the Bi overflow point, zero
refinement, and the envelope triple sigma, g_A, g_B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericError

__all__ = [
    "AiryValues",
    "Envelope",
    "AiryZero",
    "airy_eval",
    "airy_zero",
    "envelope",
    "envelope_margin",
    "zero_seed",
]

#: beyond this the plain Bi overflows / Ai underflows; switch to the scaled form
_SCALE_CUTOFF = 100.0
#: hard domain limit
_W_MAX = 200.0


@dataclass(frozen=True)
class AiryValues:
    """Pointwise Ai, Bi and derivatives.

    When ``scaled`` is True the stored numbers satisfy
    ``Ai = ai * exp(-log_scale)`` and ``Bi = bi * exp(+log_scale)``
    (same for the derivatives) with ``log_scale = (2/3) w**1.5``.
    """

    w: float
    ai: float
    ai_prime: float
    bi: float
    bi_prime: float
    scaled: bool = False
    log_scale: float = 0.0


@dataclass(frozen=True)
class Envelope:
    """Envelope triple at w: sigma = 1 + |w|^(1/4), g_a decaying, g_b = 1/g_a."""

    w: float
    sigma: float
    g_a: float
    g_b: float


@dataclass(frozen=True)
class AiryZero:
    n: int
    a_n: float
    refinement_residual: float


def airy_eval(w: float) -> AiryValues:
    """Evaluate Ai, Ai', Bi, Bi' at a real argument.

    Accurate to ~1e-14 relative away from zeros of the functions. For
    w > 100 a scaled representation is returned (``scaled`` flag set)
    because Bi overflows the double range there.
    """
    w = float(w)
    if math.isnan(w):
        raise DomainError("airy_eval: argument is NaN")
    if abs(w) > _W_MAX:
        raise DomainError(f"airy_eval: |w| = {abs(w):g} exceeds supported range {_W_MAX:g}")
    if w > _SCALE_CUTOFF:
        eai, eaip, ebi, ebip = special.airye(w)
        t = (2.0 / 3.0) * w ** 1.5
        return AiryValues(w, float(eai), float(eaip), float(ebi), float(ebip),
                          scaled=True, log_scale=t)
    ai, aip, bi, bip = special.airy(w)
    return AiryValues(w, float(ai), float(aip), float(bi), float(bip))


def zero_seed(n: int) -> float:
    """Leading-order location of the n-th Ai zero."""
    return -((1.5 * math.pi * (n - 0.25)) ** (2.0 / 3.0))


def _gap_estimate(n: int) -> float:
    # spacing of consecutive zeros near a_n, from the seed formula derivative
    return (math.pi) * (1.5 * math.pi * n) ** (-1.0 / 3.0)


def airy_zero(n: int) -> AiryZero:
    """The n-th (negative) zero of Ai, refined from the asymptotic seed.

    Safeguarded Newton inside a bracket around the seed; the bracket
    half-width is the remainder scale 5*n**(-4/3) clipped to a quarter of
    the local zero spacing so it can never capture a neighboring zero.
    """
    if n < 1:
        raise DomainError("airy_zero: n must be >= 1")
    seed = zero_seed(n)
    half = min(5.0 * n ** (-4.0 / 3.0), 0.25 * _gap_estimate(n))
    lo, hi = seed - half, seed + half
    flo = float(special.airy(lo)[0])
    fhi = float(special.airy(hi)[0])
    if flo * fhi > 0:
        raise NumericError(f"airy_zero: no sign change in bracket for n={n}")
    x = seed
    fx = float(special.airy(x)[0])
    for _ in range(100):
        dfx = float(special.airy(x)[1])
        step = fx / dfx if dfx != 0.0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)  # bisection fallback
        f_new = float(special.airy(x_new)[0])
        if f_new * flo > 0:
            lo, flo = x_new, f_new
        else:
            hi, fhi = x_new, f_new
        x, fx = x_new, f_new
        if abs(fx) <= 1e-12:
            return AiryZero(n, x, fx)
    raise NumericError(f"airy_zero: refinement did not converge for n={n} "
                       f"(last residual {fx:.3e})")


def envelope(w: float) -> Envelope:
    """sigma, g_A, g_B at real w; Re w^(3/2) = 0 on the negative axis."""
    w = float(w)
    if math.isnan(w):
        raise DomainError("envelope: argument is NaN")
    sigma = 1.0 + abs(w) ** 0.25
    if w <= 0.0:
        g_a = 1.0
    else:
        g_a = math.exp(-(2.0 / 3.0) * w ** 1.5)
    return Envelope(w, sigma, g_a, 1.0 / g_a)


def envelope_margin(grid) -> float:
    """Empirical envelope constant over a grid.

    Returns max over the grid of |Ai(w)| sigma(w) / g_A(w) and
    |Ai'(w)| / (sigma(w) g_A(w)). Uses the scaled Airy form for w > 0 so
    the ratio never overflows.
    """
    w = np.asarray(grid, dtype=float)
    if w.size == 0:
        raise DomainError("envelope_margin: empty grid")
    if np.any(np.isnan(w)):
        raise DomainError("envelope_margin: NaN in grid")
    sigma = 1.0 + np.abs(w) ** 0.25
    # airye divides out exp(-(2/3) w^(3/2)) on the positive axis, which is
    # exactly g_A there; on the negative axis g_A = 1 and airy is safe.
    pos = w > 0
    ai_over_ga = np.empty_like(w)
    aip_over_ga = np.empty_like(w)
    if np.any(pos):
        eai, eaip, _, _ = special.airye(w[pos])
        ai_over_ga[pos] = eai
        aip_over_ga[pos] = eaip
    if np.any(~pos):
        ai, aip, _, _ = special.airy(w[~pos])
        ai_over_ga[~pos] = ai
        aip_over_ga[~pos] = aip
    m1 = np.max(np.abs(ai_over_ga) * sigma)
    m2 = np.max(np.abs(aip_over_ga) / sigma)
    return float(max(m1, m2))
