"""Upper quantiles of the F distribution via the inverse regularised
incomplete beta function.

The forward function I_z(a, b) comes from scipy.special; the inversion is a
bracketed Newton iteration with bisection safeguarding, so no statistical
tables or distribution objects are involved. For F(d1, d2),

    P(F <= f) = I_z(d1/2, d2/2)  with  z = d1 f / (d1 f + d2),

so the upper-alpha point is f = d2 z / (d1 (1 - z)) at I_z(a, b) = 1 - alpha.
"""

from __future__ import annotations

import math

from scipy.special import betainc, betaln

from .exceptions import InvalidDofError


def inverse_reg_incomplete_beta(a: float, b: float, p: float, tol: float = 1e-14) -> float:
    """Solve I_z(a, b) = p for z in (0, 1) by safeguarded Newton."""
    if not (a > 0 and b > 0):
        raise ValueError("beta parameters must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    z = a / (a + b)  # mean of the beta distribution as the starting point
    log_norm = -betaln(a, b)
    for _ in range(200):
        fz = betainc(a, b, z) - p
        if fz > 0:
            hi = z
        else:
            lo = z
        if hi - lo < tol:
            break
        # density of Beta(a, b) at z; guard the endpoint singularities
        if 0.0 < z < 1.0:
            pdf = math.exp(log_norm + (a - 1.0) * math.log(z) + (b - 1.0) * math.log1p(-z))
        else:
            pdf = 0.0
        step_ok = False
        if pdf > 0 and math.isfinite(pdf):
            z_new = z - fz / pdf
            if lo < z_new < hi:
                if abs(z_new - z) < tol:
                    return z_new
                z = z_new
                step_ok = True
        if not step_ok:
            z = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def f_upper_quantile(alpha: float, d1: int, d2: int) -> float:
    """The point f with P(F(d1, d2) > f) = alpha."""
    if d1 <= 0 or d2 <= 0:
        raise InvalidDofError(f"degrees of freedom must be positive, got ({d1}, {d2})")
    if not 0.0 < alpha < 1.0:
        raise InvalidDofError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    z = inverse_reg_incomplete_beta(d1 / 2.0, d2 / 2.0, 1.0 - alpha)
    if z >= 1.0:
        return math.inf
    return d2 * z / (d1 * (1.0 - z))
