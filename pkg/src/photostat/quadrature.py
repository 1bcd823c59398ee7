"""One-dimensional adaptive quadrature and support localization.

The adaptive rule is a Gauss-Lobatto 4-point estimate refined against
its 7-point Kronrod extension (Gander-Gautschi style), recursing on six
subintervals until the local discrepancy is below a share of the global
tolerance.  ``localize_support`` trims the integration interval of a
sharply peaked integrand to the region that actually carries mass, which
lets the quadrature place its points well.

``composite_simpson`` and ``simplex_grid_integrate`` are brute-force
oracles used by the test suite only; they take vectorized integrands.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "adaptive_quad",
    "localize_support",
    "composite_simpson",
    "simplex_grid_integrate",
]

_ALPHA = math.sqrt(2.0 / 3.0)
_BETA = 1.0 / math.sqrt(5.0)
# auxiliary nodes of the 13-point startup estimate
_X1 = 0.942882415695480
_X2 = 0.641853342345781
_X3 = 0.236383199662150


def _lobatto_pair(f, a: float, fa: float, b: float, fb: float):
    """4-point Lobatto and 7-point Kronrod estimates plus interior nodes."""
    m = 0.5 * (a + b)
    h = 0.5 * (b - a)
    mll = m - _ALPHA * h
    ml = m - _BETA * h
    mr = m + _BETA * h
    mrr = m + _ALPHA * h
    fmll, fml, fm, fmr, fmrr = f(mll), f(ml), f(m), f(mr), f(mrr)
    i2 = (h / 6.0) * (fa + fb + 5.0 * (fml + fmr))
    i1 = (h / 1470.0) * (
        77.0 * (fa + fb) + 432.0 * (fmll + fmrr) + 625.0 * (fml + fmr) + 672.0 * fm
    )
    return i1, i2, (mll, fmll, ml, fml, m, fm, mr, fmr, mrr, fmrr)


def adaptive_quad(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-10,
    max_depth: int = 40,
) -> float:
    """Integrate f over [lo, hi] to the requested relative tolerance.

    Deterministic for fixed inputs.  Raises :class:`NumericError` with
    the best estimate attached if the recursion depth cap is reached
    anywhere.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"adaptive_quad requires finite lo < hi, got [{lo}, {hi}]")
    if not (0.0 < rel_tol < 1.0):
        raise DomainError(f"rel_tol must be in (0, 1), got {rel_tol}")

    m = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    fa, fb = f(lo), f(hi)
    # 13-point startup estimate fixes the global error scale
    ys = [
        f(m - _X1 * h), f(m - _ALPHA * h), f(m - _X2 * h), f(m - _BETA * h),
        f(m - _X3 * h), f(m), f(m + _X3 * h), f(m + _BETA * h), f(m + _X2 * h),
        f(m + _ALPHA * h), f(m + _X1 * h),
    ]
    i_est = h * (
        0.0158271919734802 * (fa + fb)
        + 0.0942738402188500 * (ys[0] + ys[10])
        + 0.155071987336585 * (ys[1] + ys[9])
        + 0.188821573960182 * (ys[2] + ys[8])
        + 0.199773405226859 * (ys[3] + ys[7])
        + 0.224926465333340 * (ys[4] + ys[6])
        + 0.242611071901408 * ys[5]
    )
    if not math.isfinite(i_est):
        raise DomainError("integrand is not finite on the integration interval")
    scale = max(abs(i_est), _stack_scale(fa, fb, ys, h))
    if scale == 0.0:
        scale = 1.0
    thresh = rel_tol * scale
    span = hi - lo
    min_width = span * 1e-14
    capped = False

    def recurse(a: float, fav: float, b: float, fbv: float, depth: int) -> float:
        nonlocal capped
        i1, i2, nodes = _lobatto_pair(f, a, fav, b, fbv)
        width = b - a
        # accept on the locally relative test (robust when the startup grid
        # underestimates the scale, e.g. for very narrow peaks) or on this
        # interval's share of the global error budget
        err = abs(i1 - i2)
        if (
            err <= rel_tol * abs(i1)
            or err <= thresh * (width / span)
            or width <= min_width
            or not math.isfinite(err)
        ):
            return i1
        if depth >= max_depth:
            capped = True
            return i1
        mll, fmll, ml, fml, mm, fm, mr, fmr, mrr, fmrr = nodes
        d = depth + 1
        return (
            recurse(a, fav, mll, fmll, d)
            + recurse(mll, fmll, ml, fml, d)
            + recurse(ml, fml, mm, fm, d)
            + recurse(mm, fm, mr, fmr, d)
            + recurse(mr, fmr, mrr, fmrr, d)
            + recurse(mrr, fmrr, b, fbv, d)
        )

    result = recurse(lo, fa, hi, fb, 0)
    if capped:
        raise NumericError(
            f"adaptive quadrature hit the depth cap ({max_depth}) on [{lo}, {hi}]",
            partial=result,
        )
    return result


def _stack_scale(fa, fb, ys, h):
    vals = [abs(fa), abs(fb)] + [abs(y) for y in ys]
    return h * max(vals) * 1e-2


def localize_support(
    log_f: Callable[[float], float],
    lo: float,
    hi: float,
    cutoff: float = 1e-6,
) -> tuple[float, float]:
    """Smallest subinterval of [lo, hi] containing {x : f(x) >= cutoff * max f}.

    ``log_f`` must be unimodal up to numerical noise.  The maximum is
    bracketed by grid scans, the level-set crossings are bisected, and a
    5% width margin is added.  If the maximum cannot be bracketed the
    full interval is returned unchanged (safe fallback).
    """
    if not (0.0 < cutoff < 1.0):
        raise DomainError(f"cutoff must be in (0, 1), got {cutoff}")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"localize_support requires finite lo < hi, got [{lo}, {hi}]")

    n = 201
    xs = np.linspace(lo, hi, n)
    vals = np.array([log_f(float(x)) for x in xs])
    finite = np.isfinite(vals)
    if not finite.any():
        return lo, hi
    k = int(np.nanargmax(np.where(finite, vals, -np.inf)))
    # two zoom rounds around the provisional peak
    for _ in range(2):
        a = xs[max(k - 1, 0)]
        b = xs[min(k + 1, len(xs) - 1)]
        xs = np.linspace(a, b, 51)
        vals = np.array([log_f(float(x)) for x in xs])
        if not np.isfinite(vals).any():
            return lo, hi
        k = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
    x_peak = float(xs[k])
    log_max = float(vals[k])
    if not math.isfinite(log_max):
        return lo, hi
    target = log_max + math.log(cutoff)

    def crossing(inner: float, outer: float) -> float:
        # log_f(inner) >= target > log_f(outer); return point with value >= target
        a, b = inner, outer
        for _ in range(80):
            mid = 0.5 * (a + b)
            v = log_f(mid)
            if math.isfinite(v) and v >= target:
                a = mid
            else:
                b = mid
            if abs(b - a) <= (hi - lo) * 1e-12:
                break
        return a

    v_lo = log_f(lo)
    left = lo if (math.isfinite(v_lo) and v_lo >= target) else crossing(x_peak, lo)
    v_hi = log_f(hi)
    right = hi if (math.isfinite(v_hi) and v_hi >= target) else crossing(x_peak, hi)
    if not (left < right):
        return lo, hi
    pad = 0.05 * (right - left)
    return max(lo, left - pad), min(hi, right + pad)


# ---------------------------------------------------------------------------
# Brute-force oracles (test use only)
# ---------------------------------------------------------------------------

def composite_simpson(f, lo: float, hi: float, panels: int = 1_000_000) -> float:
    """Composite Simpson rule with a vectorized integrand (test oracle)."""
    if panels % 2 == 1:
        panels += 1
    x = np.linspace(lo, hi, panels + 1)
    y = np.asarray(f(x), dtype=float)
    h = (hi - lo) / panels
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum()))


def simplex_grid_integrate(
    log_f, a: float, step: float = 1.0 / 2000.0
) -> float:
    """Midpoint-rule integral over the truncated 3-part simplex (test oracle).

    Integrates exp(log_f(r1, r2, r3)) over {r_i >= a, sum r_i = 1} using a
    uniform grid in (r1, r2) with the given step.  The grid is anchored at
    r1 = r2 = a, so the axis truncation boundaries fall exactly between
    cells; ``log_f`` must be vectorized.
    """
    if not (0.0 <= a < 1.0 / 3.0):
        raise DomainError(f"3-part simplex truncation requires a in [0, 1/3), got {a}")
    n = int(math.ceil((1.0 - 3.0 * a) / step)) + 1
    r = a + (np.arange(n) + 0.5) * step
    r1, r2 = np.meshgrid(r, r, indexing="ij")
    r3 = 1.0 - r1 - r2
    mask = r3 >= a
    vals = np.zeros_like(r1)
    if mask.any():
        vals[mask] = np.exp(log_f(r1[mask], r2[mask], r3[mask]))
    return float(vals.sum() * step * step)
