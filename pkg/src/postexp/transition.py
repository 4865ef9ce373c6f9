"""Locate the exponential-to-algebraic transition of the decaying source.

The pole (resonance) and saddle (algebraic) densities cross where their
modulus ratio R(x, t) equals one. This module finds that crossing in time
at fixed x, the x that minimizes it, the largest x for which it exists at
all, and the purely-non-exponential threshold.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .source_model import (
    SingularConfigurationError,
    SourceParams,
    SpaceTimePoint,
    evaluate_approx,
    evaluate_exact,
)

ROOT_TOL = 1e-6          # |R - 1| at the reported transition time
BISECT_REL_TOL = 1e-3    # relative tolerance of the critical-distance bisection
SCAN_CEILING_FACTOR = 100.0


class RangeExhaustedError(Exception):
    """Every scanned x still admits a transition; the true limit is beyond the ceiling."""

    def __init__(self, ceiling: float):
        self.ceiling = ceiling
        super().__init__(
            f"transition exists at every x scanned up to the ceiling {ceiling!r}"
        )


@dataclass(frozen=True)
class TransitionPoint:
    x: float
    t_p: float
    density_raw: float
    density_normalized: float
    method: str          # "exact_ratio" or "late_time"
    valid: bool
    residual: float      # |R - 1| for exact_ratio, equation residual for late_time


def _ratio_vec(p: SourceParams, x: float, ts: np.ndarray) -> np.ndarray:
    """Pole/saddle modulus ratio on an array of times."""
    k0 = p.k0
    tau = x / (2.0 * k0)
    abs_tau2 = abs(tau) ** 2
    re_tau2 = (tau * tau).real
    t2 = ts * ts
    bracket = 1.0 + (abs_tau2 * abs_tau2) / (t2 * t2) - 2.0 * re_tau2 / t2
    np.maximum(bracket, 0.0, out=bracket)
    pref = 2.0 * math.sqrt(math.pi) * abs(k0) ** 2 / x
    return pref * ts ** 1.5 * np.exp(2.0 * p.k0I * ts - p.k0I * x) * np.sqrt(bracket)


def ratio_R(p: SourceParams, pt: SpaceTimePoint) -> float:
    """R = 2 sqrt(pi) |k0|^2 t^{3/2} / x * e^{2 k0I t - k0I x} * sqrt(B).

    B = 1 + |tau|^4/t^4 - 2 Re(tau^2)/t^2 = |t^2 - tau^2|^2 / t^4, so the
    ratio equals |pole|/|saddle| identically away from the singular locus.
    """
    if pt.x <= 0.0:
        raise ValueError("ratio is defined for x > 0")
    tau = pt.x / (2.0 * p.k0)
    if abs(pt.t * pt.t - tau * tau) < 1e-12:
        raise SingularConfigurationError(
            f"ratio singular at (x={pt.x!r}, t={pt.t!r})"
        )
    return float(_ratio_vec(p, pt.x, np.array([pt.t]))[0])


def pole_crossing_time(p: SourceParams, x: float) -> float:
    """Earliest time with Im u_+ > 0 at this x, namely x / (2 (1 + k0I))."""
    return x / (2.0 * (1.0 + p.k0I))


def _scan_grid(p: SourceParams, x: float) -> np.ndarray:
    t_cross = pole_crossing_time(p, x)
    lo = max(x / 2.0, 0.01) * 0.1
    hi = 1e3 / p.gamma_rate
    base = np.geomspace(lo, max(hi, lo * 10.0), 600)
    onset = t_cross * (1.0 + np.geomspace(1e-4, 1.0, 120))
    ts = np.unique(np.concatenate([base, onset]))
    return ts[ts > t_cross]


def _last_downward_crossing(
    ts: np.ndarray, vals: np.ndarray
) -> Optional[Tuple[float, float]]:
    sign_flip = (vals[:-1] >= 0.0) & (vals[1:] < 0.0)
    idx = np.nonzero(sign_flip)[0]
    if len(idx) == 0:
        return None
    i = int(idx[-1])
    return float(ts[i]), float(ts[i + 1])


@lru_cache(maxsize=256)
def _n_total_cached(k0I: float) -> float:
    from .normalization import total_emitted

    return total_emitted(SourceParams(k0I)).n_total


def _late_time_rhs_log(p: SourceParams, x: float, ts: np.ndarray) -> np.ndarray:
    # log of x e^{k0I x} e^{gamma t / 2} / (2 sqrt(pi) |k0|^2)
    log_c = math.log(x / (2.0 * math.sqrt(math.pi) * abs(p.k0) ** 2)) + p.k0I * x
    return log_c + 0.5 * p.gamma_rate * ts


def transition_time(
    p: SourceParams, x: float, method: str = "exact_ratio"
) -> TransitionPoint:
    """Transition time t_p at fixed x, or an invalid point if none exists.

    t_p is the time where R falls through 1 (the downward crossing; the
    upward crossing right after the pole first appears is not a transition),
    searched over pole-crossed times only. method "late_time" solves the
    t >> |tau| reduction t^{3/2} = x e^{k0I x} e^{gamma t/2} / (2 sqrt(pi) |k0|^2)
    with the same bracketing; its residual field reports the self-consistency
    of that equation rather than |R - 1|.
    """
    if x <= 0.0:
        raise ValueError("transition_time requires x > 0")
    if method not in ("exact_ratio", "late_time"):
        raise ValueError(f"unknown method {method!r}")
    ts = _scan_grid(p, x)
    if method == "exact_ratio":
        vals = _ratio_vec(p, x, ts) - 1.0
    else:
        vals = 1.5 * np.log(ts) - _late_time_rhs_log(p, x, ts)
    bracket = _last_downward_crossing(ts, vals)
    if bracket is None:
        return TransitionPoint(
            x=x, t_p=math.nan, density_raw=math.nan, density_normalized=math.nan,
            method=method, valid=False, residual=math.nan,
        )
    a, b = bracket

    def above(t: float) -> bool:
        arr = np.array([t])
        if method == "exact_ratio":
            return float(_ratio_vec(p, x, arr)[0]) >= 1.0
        return 1.5 * math.log(t) >= float(_late_time_rhs_log(p, x, arr)[0])

    def residual_at(t: float) -> float:
        arr = np.array([t])
        if method == "exact_ratio":
            return abs(float(_ratio_vec(p, x, arr)[0]) - 1.0)
        return abs(math.expm1(1.5 * math.log(t) - float(_late_time_rhs_log(p, x, arr)[0])))

    t_p = 0.5 * (a + b)
    for _ in range(200):
        t_p = 0.5 * (a + b)
        if residual_at(t_p) < ROOT_TOL:
            break
        if above(t_p):
            a = t_p
        else:
            b = t_p

    dec = evaluate_exact(p, SpaceTimePoint(x, t_p))
    rho = abs(dec.psi_exact) ** 2
    rho_norm = rho / _n_total_cached(p.k0I)
    return TransitionPoint(
        x=x, t_p=t_p, density_raw=rho, density_normalized=rho_norm,
        method=method, valid=bool(dec.pole_crossed), residual=residual_at(t_p),
    )


def tp_turning_point(p: SourceParams) -> float:
    """x that minimizes t_p(x); expected near 1/|k0I|.

    Scans a 30-point grid around 1/|k0I| and refines by bounded golden-style
    minimization between the argmin's neighbors. A non-unimodal grid falls
    back to the raw grid argmin and emits a warning.
    """
    scale = 1.0 / abs(p.k0I)
    xs = np.geomspace(0.1 * scale, 2.5 * scale, 30)
    tps = np.array([transition_time(p, float(x)).t_p for x in xs])
    if np.isnan(tps).any():
        warnings.warn("transition missing on part of the turning-point grid")
        tps = np.where(np.isnan(tps), np.inf, tps)
    i_min = int(np.argmin(tps))
    diffs = np.diff(tps)
    unimodal = bool(np.all(diffs[:i_min] < 0.0) and np.all(diffs[i_min:] > 0.0))
    if not unimodal:
        warnings.warn("t_p(x) grid is not unimodal; returning grid argmin")
        return float(xs[i_min])
    lo = xs[max(i_min - 1, 0)]
    hi = xs[min(i_min + 1, len(xs) - 1)]
    res = minimize_scalar(
        lambda x: transition_time(p, float(x)).t_p,
        bounds=(float(lo), float(hi)),
        method="bounded",
        options={"xatol": 1e-4 * scale},
    )
    return float(res.x)


def critical_distance(p: SourceParams) -> Tuple[float, float]:
    """Largest x admitting a transition, with its t_p.

    Grid-scan up to 100/|k0I| for the last valid and first invalid x, then
    bisect to relative 1e-3. Raises RangeExhaustedError if even the ceiling
    still has a transition.
    """
    ceiling = SCAN_CEILING_FACTOR / abs(p.k0I)
    xs = np.geomspace(0.01 / abs(p.k0I), ceiling, 80)
    valid = [transition_time(p, float(x)).valid for x in xs]
    if all(valid):
        raise RangeExhaustedError(ceiling)
    if not valid[0]:
        raise RuntimeError("no transition found at any scanned x")
    i = max(j for j, v in enumerate(valid) if v)
    lo, hi = float(xs[i]), float(xs[i + 1])
    while (hi - lo) / lo > BISECT_REL_TOL:
        mid = 0.5 * (lo + hi)
        if transition_time(p, mid).valid:
            lo = mid
        else:
            hi = mid
    tp = transition_time(p, lo)
    return lo, tp.t_p


def jittoh_criterion(p: SourceParams) -> Tuple[float, bool]:
    """Decay-rate to level-spacing quotient 4|k0I| and the >= 2 threshold."""
    q = 4.0 * abs(p.k0I)
    return q, q >= 2.0


@dataclass(frozen=True)
class CriticalDensityPoint:
    k0I: float
    x_max: float
    t_p: float
    density_exact: float
    density_approx: float
    valid: bool


def critical_density_curve(
    params: Sequence[SourceParams], normalized: bool = True
) -> List[CriticalDensityPoint]:
    """Density at (x_max, t_p) for each parameter set.

    Exact and saddle-plus-pole densities are both reported, divided by the
    emitted norm when normalized is set. Points whose critical distance
    cannot be bracketed are flagged invalid and skipped, not fatal.
    """
    out: List[CriticalDensityPoint] = []
    for p in params:
        try:
            x_max, t_p = critical_distance(p)
        except RangeExhaustedError:
            out.append(
                CriticalDensityPoint(p.k0I, math.nan, math.nan, math.nan, math.nan, False)
            )
            continue
        pt = SpaceTimePoint(x_max, t_p)
        dec = evaluate_exact(p, pt)
        rho_exact = abs(dec.psi_exact) ** 2
        try:
            rho_approx = abs(evaluate_approx(p, pt)) ** 2
        except SingularConfigurationError:
            rho_approx = math.nan
        if normalized:
            n = _n_total_cached(p.k0I)
            rho_exact /= n
            rho_approx /= n
        out.append(
            CriticalDensityPoint(p.k0I, x_max, t_p, rho_exact, rho_approx, True)
        )
    return out
