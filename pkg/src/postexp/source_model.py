"""Exact wavefunction of an exponentially decaying point source.

Dimensionless model on the half-line x >= 0: the value at the origin is
prescribed as psi(0, t) = exp(-i omega0 t) for t > 0 (nothing before the
switch-on), with omega0 = k0^2 and k0 = 1 + i k0I, -1 < k0I < 0. The exact
solution is a sum of two Faddeeva terms; its asymptotic decomposition is a
saddle (algebraic) part plus a conditionally present pole (resonance) part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import specfun

SQRT_PI = math.sqrt(math.pi)

# |t^2 - tau^2| below this is treated as the singular locus of the
# saddle form (the exact evaluator is fine there, the asymptotics are not)
SADDLE_SINGULAR_TOL = 1e-12


class EvaluationDomainError(Exception):
    """Exact evaluation left double precision at some (x, t)."""

    def __init__(self, x: float, t: float, reason: str):
        self.x = x
        self.t = t
        super().__init__(f"evaluation domain error at (x={x!r}, t={t!r}): {reason}")


class SingularConfigurationError(Exception):
    """Asymptotic form requested on (or too near) its singular locus t = |tau|."""


@dataclass(frozen=True)
class SourceParams:
    """Resonance parameters. k0I is the imaginary part of k0 = 1 + i k0I."""

    k0I: float

    def __post_init__(self):
        if not (-1.0 < self.k0I < 0.0):
            raise ValueError(f"k0I must lie in (-1, 0), got {self.k0I!r}")

    @property
    def k0(self) -> complex:
        return complex(1.0, self.k0I)

    @property
    def omega0(self) -> complex:
        return self.k0 * self.k0

    @property
    def tau0(self) -> float:
        """Resonance lifetime 1/(4 |k0I|)."""
        return 1.0 / (4.0 * abs(self.k0I))

    @property
    def gamma_rate(self) -> float:
        """Exponential decay rate of the source density, 4 |k0I|."""
        return 4.0 * abs(self.k0I)


def k0_from_omega0(omega0: complex) -> complex:
    """Recover k0 from omega0 = k0^2.

    Completeness helper only; the library always builds k0 = 1 + i k0I
    directly. Uses the principal square root, whose cut runs along the
    negative real axis approached from above, and returns the root in the
    right half-plane (positive imaginary axis for negative real omega0).
    """
    return cmath.sqrt(omega0)


@dataclass(frozen=True)
class SpaceTimePoint:
    x: float
    t: float

    def __post_init__(self):
        if not (self.x >= 0.0 and math.isfinite(self.x)):
            raise ValueError(f"x must be finite and >= 0, got {self.x!r}")
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise ValueError(f"t must be finite and > 0, got {self.t!r}")


@dataclass(frozen=True)
class WaveDecomposition:
    """Exact value plus its asymptotic ingredients at one (x, t).

    psi_saddle is None on the singular locus |t^2 - tau^2| < 1e-12 where
    the algebraic form diverges; psi_exact is always filled.
    """

    psi_exact: complex
    psi_saddle: Optional[complex]
    psi_pole: complex
    pole_crossed: bool
    u_plus: complex
    u_minus: complex
    tau: complex
    k_saddle: float


def _u_pair(p: SourceParams, x: float, t: float) -> Tuple[complex, complex, complex]:
    k0 = p.k0
    tau = x / (2.0 * k0)
    pref = (1.0 + 1j) * math.sqrt(t / 2.0) * k0
    u_plus = pref * (1.0 - tau / t)
    u_minus = -pref * (1.0 + tau / t)
    return u_plus, u_minus, tau


def evaluate_exact(p: SourceParams, pt: SpaceTimePoint) -> WaveDecomposition:
    """Exact wavefunction psi = (1/2) e^{i k_s^2 t} [w(-u_+) + w(-u_-)].

    k_s = x/(2t) is the stationary wavenumber, tau = x/(2 k0) the complex
    traversal time. The pole term is included in the decomposition record
    unconditionally; pole_crossed says whether the asymptotic split would
    add it (Im u_+ > 0).
    """
    x, t = pt.x, pt.t
    u_plus, u_minus, tau = _u_pair(p, x, t)
    k_s = x / (2.0 * t)
    phase = cmath.exp(1j * k_s * k_s * t)
    try:
        w_p = specfun.faddeeva(-u_plus)
        w_m = specfun.faddeeva(-u_minus)
    except specfun.FaddeevaDomainError as exc:
        raise EvaluationDomainError(x, t, str(exc)) from exc
    psi = 0.5 * phase * (w_p + w_m)

    t2mtau2 = t * t - tau * tau
    if abs(t2mtau2) < SADDLE_SINGULAR_TOL:
        psi_s: Optional[complex] = None
    else:
        psi_s = math.sqrt(2.0 * t / math.pi) * tau * phase / ((1j - 1.0) * p.k0 * t2mtau2)

    psi_0 = cmath.exp(-1j * p.omega0 * t + 1j * p.k0 * x)
    return WaveDecomposition(
        psi_exact=psi,
        psi_saddle=psi_s,
        psi_pole=psi_0,
        pole_crossed=u_plus.imag > 0.0,
        u_plus=u_plus,
        u_minus=u_minus,
        tau=tau,
        k_saddle=k_s,
    )


def evaluate_saddle(p: SourceParams, pt: SpaceTimePoint) -> complex:
    """Algebraic (steepest-descent) part; diverges on t^2 = tau^2."""
    x, t = pt.x, pt.t
    _, _, tau = _u_pair(p, x, t)
    t2mtau2 = t * t - tau * tau
    if abs(t2mtau2) < SADDLE_SINGULAR_TOL:
        raise SingularConfigurationError(
            f"saddle form singular at (x={x!r}, t={t!r}): |t^2 - tau^2| < {SADDLE_SINGULAR_TOL}"
        )
    k_s = x / (2.0 * t)
    phase = cmath.exp(1j * k_s * k_s * t)
    return math.sqrt(2.0 * t / math.pi) * tau * phase / ((1j - 1.0) * p.k0 * t2mtau2)


def evaluate_pole(p: SourceParams, pt: SpaceTimePoint) -> complex:
    """Resonance part e^{-i omega0 t} e^{i k0 x}, returned unconditionally."""
    return cmath.exp(-1j * p.omega0 * pt.t + 1j * p.k0 * pt.x)


def evaluate_approx(p: SourceParams, pt: SpaceTimePoint) -> complex:
    """Saddle plus pole, the pole included only once Im u_+ > 0."""
    psi_s = evaluate_saddle(p, pt)
    u_plus, _, _ = _u_pair(p, pt.x, pt.t)
    if u_plus.imag > 0.0:
        return psi_s + evaluate_pole(p, pt)
    return psi_s


def u_moduli(p: SourceParams, pt: SpaceTimePoint) -> Tuple[float, float]:
    """Closed-form |u_+| and |u_-|.

    |u_+| = sqrt(x |k0|) sqrt(t/(2|tau|) - 1/|k0| + |tau|/(2t)) and |u_-|
    carries + 1/|k0| instead. Both moduli diverge as t -> 0+ and t -> inf;
    the |u_+| bracket bottoms out at t = |tau|. At x = 0 the sqrt(x) form
    degenerates and the moduli come from the definitions directly.
    """
    x, t = pt.x, pt.t
    if x == 0.0:
        u_plus, u_minus, _ = _u_pair(p, x, t)
        return abs(u_plus), abs(u_minus)
    abs_k0 = abs(p.k0)
    abs_tau = x / (2.0 * abs_k0)
    base = t / (2.0 * abs_tau) + abs_tau / (2.0 * t)
    scale = math.sqrt(x * abs_k0)
    mod_plus = scale * math.sqrt(base - 1.0 / abs_k0)
    mod_minus = scale * math.sqrt(base + 1.0 / abs_k0)
    return mod_plus, mod_minus


def boundary_value(p: SourceParams, t: float) -> complex:
    """Prescribed origin value e^{-i omega0 t} for t > 0."""
    return cmath.exp(-1j * p.omega0 * t)


def wavefunction(p: SourceParams, x: float, t: float) -> complex:
    """Convenience evaluator honoring the switch-on: exactly 0 for t <= 0."""
    if t <= 0.0:
        return 0j
    return evaluate_exact(p, SpaceTimePoint(x, t)).psi_exact


def density_and_current(
    p: SourceParams, pt: SpaceTimePoint
) -> Tuple[float, complex, float]:
    """Probability density, analytic d psi/dx, and current at one point.

    rho = |psi|^2 and J = 2 Im[psi* dpsi/dx]. The spatial derivative uses
    du_+-/dx = -(1+i)/(2 sqrt(2t)) (identical for both branches), the chain
    rule through dw/dz, and the phase factor derivative i k_s e^{i k_s^2 t}.
    """
    x, t = pt.x, pt.t
    u_plus, u_minus, _ = _u_pair(p, x, t)
    k_s = x / (2.0 * t)
    phase = cmath.exp(1j * k_s * k_s * t)
    try:
        w_p = specfun.faddeeva(-u_plus)
        w_m = specfun.faddeeva(-u_minus)
        wd_p = specfun.faddeeva_derivative(-u_plus)
        wd_m = specfun.faddeeva_derivative(-u_minus)
    except specfun.FaddeevaDomainError as exc:
        raise EvaluationDomainError(x, t, str(exc)) from exc
    psi = 0.5 * phase * (w_p + w_m)
    # d/dx w(-u) = -w'(-u) du/dx with du/dx = -(1+i)/(2 sqrt(2t)) for both u
    c = (1.0 + 1j) / (2.0 * math.sqrt(2.0 * t))
    dpsi = 0.5 * phase * (1j * k_s * (w_p + w_m) + c * (wd_p + wd_m))
    rho = abs(psi) ** 2
    current = 2.0 * (psi.conjugate() * dpsi).imag
    return rho, dpsi, current


def density_grid(
    p: SourceParams, xs: np.ndarray, ts: np.ndarray
) -> np.ndarray:
    """|psi|^2 on the outer product of xs and ts (rows are x, columns t)."""
    out = np.empty((len(xs), len(ts)), dtype=float)
    for i, x in enumerate(xs):
        for j, t in enumerate(ts):
            out[i, j] = abs(wavefunction(p, float(x), float(t))) ** 2
    return out
