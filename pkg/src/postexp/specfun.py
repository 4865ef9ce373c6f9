"""Complex special functions used by the exact source solution.

The central object is the scaled complementary error function
w(z) = exp(-z^2) erfc(-iz), together with its large-argument series and
its analytic derivative. Everything here is pure and stateless.
"""

from __future__ import annotations

import cmath
import math
import sys

from scipy.special import wofz

SQRT_PI = math.sqrt(math.pi)

# exp(-z^2) in the lower half-plane grows like exp(Im(z)^2 - Re(z)^2);
# refuse evaluations that would overflow instead of returning inf.
_OVERFLOW_LIMIT = 0.9 * math.log(sys.float_info.max)


class FaddeevaDomainError(ValueError):
    """Raised when w(z) cannot be evaluated in double precision."""

    def __init__(self, z: complex, reason: str):
        self.z = z
        super().__init__(f"w(z) domain error at z={z!r}: {reason}")


def _check_overflow(z: complex) -> None:
    if z.imag < 0.0 and (z.imag * z.imag - z.real * z.real) > _OVERFLOW_LIMIT:
        raise FaddeevaDomainError(z, "exp(-z^2) overflows in the lower half-plane")


def faddeeva(z: complex) -> complex:
    """Scaled complementary error function w(z) = exp(-z^2) erfc(-iz).

    Accurate to better than 1e-12 relative in the closed upper half-plane.
    Lower half-plane values follow the reflection w(-z) = 2 exp(-z^2) - w(z)
    and lose accuracy as exp(-z^2) grows; past the overflow guard the call
    raises FaddeevaDomainError rather than returning inf.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise FaddeevaDomainError(z, "non-finite argument")
    _check_overflow(z)
    w = complex(wofz(z))
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise FaddeevaDomainError(z, "evaluation overflowed")
    return w


def faddeeva_asymptotic(z: complex, m_max: int) -> complex:
    """Truncated large-|z| series for w(z).

    i/(sqrt(pi) z) [1 + sum_{m=1..m_max} (2m-1)!!/(2 z^2)^m], plus the
    reflection term 2 exp(-z^2) when Im z < 0. Valid for |z| >= 3; used to
    validate the saddle-plus-pole split, not in production paths.
    """
    z = complex(z)
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if abs(z) < 3.0:
        raise FaddeevaDomainError(z, "|z| below asymptotic validity floor 3")
    _check_overflow(z)
    acc = 1.0 + 0.0j
    term = 1.0 + 0.0j
    inv2z2 = 1.0 / (2.0 * z * z)
    for m in range(1, m_max + 1):
        term *= (2 * m - 1) * inv2z2
        acc += term
    out = 1j / (SQRT_PI * z) * acc
    if z.imag < 0.0:
        out += 2.0 * cmath.exp(-z * z)
    return out


def faddeeva_derivative(z: complex) -> complex:
    """dw/dz via the identity w'(z) = -2 z w(z) + 2i/sqrt(pi)."""
    return -2.0 * z * faddeeva(z) + 2j / SQRT_PI
