"""
Scaled complementary error function for non-negative real arguments.

``erfcx(z) = exp(z^2) erfc(z)``. Below ``z = 2`` a positive-term series for
erf is used (at most ~2 digits lost to ``1 - erf``); from ``z = 2`` upward the
Laplace continued fraction is evaluated with the modified Lentz algorithm,
which never forms ``1 - erf`` at all.
"""

import math

__all__ = ["erfcx", "erfc", "erfc_cf_tail"]

_SWITCH = 2.0
_TINY = 1e-300
_EPS = 1e-16


def _erf_series(z):
    # erf(z) = 2/sqrt(pi) exp(-z^2) sum_k (2 z^2)^k z / (2k+1)!!
    term = z
    total = z
    z2 = 2.0 * z * z
    k = 0
    while True:
        k += 1
        term *= z2 / (2 * k + 1)
        total += term
        if term <= _EPS * total:
            break
    return 2.0 / math.sqrt(math.pi) * math.exp(-z * z) * total


def erfc_cf_tail(z):
    """Tail ``K(z)`` of ``erfc(z) = exp(-z^2)/sqrt(pi) / (z + K(z))``, for z > 0.

    ``K = (1/2) / (z + 1 / (z + (3/2) / (z + 2 / (z + ...))))``.
    """
    if z <= 0:
        raise ValueError("continued fraction needs z > 0")
    # modified Lentz on 0 + a1/(z + a2/(z + ...)), a_k = k/2; the zero lead term
    # is replaced by TINY so K comes out directly, without cancelling against z
    f = _TINY
    C = f
    D = 0.0
    for k in range(1, 5000):
        a = 0.5 * k
        D = z + a * D
        D = _TINY if D == 0.0 else D
        C = z + a / C
        C = _TINY if C == 0.0 else C
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return f


def erfcx(z):
    """exp(z^2) erfc(z) for real z >= 0."""
    if z < 0:
        raise ValueError("erfcx is implemented for z >= 0 only")
    if z < _SWITCH:
        return math.exp(z * z) * (1.0 - _erf_series(z))
    return 1.0 / (math.sqrt(math.pi) * (z + erfc_cf_tail(z)))


def erfc(z):
    if z < 0:
        return 2.0 - erfc(-z)
    if z < _SWITCH:
        return 1.0 - _erf_series(z)
    return math.exp(-z * z) * erfcx(z)
