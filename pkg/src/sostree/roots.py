"""Bracketed scalar root isolation: sign scan, bisection, Newton polish.

Built for fixed-point residuals whose polynomial forms have extreme
coefficient ranges; everything works on sign changes over a log grid, with an
extra pass that splits brackets hiding an extremum (nearly tangent root
pairs), so nascent pairs near a bifurcation are not missed.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def bisect(f: Callable[[float], float], lo: float, hi: float,
           rel_tol: float = 1e-12, max_iter: int = 200) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("root not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(1.0, abs(mid)):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def newton_polish(f: Callable[[float], float], df: Callable[[float], float],
                  x0: float, lo: float, hi: float, max_iter: int = 8) -> float:
    """A few guarded Newton steps; falls back to x0 if they do not improve."""
    x, fx = x0, f(x0)
    best, best_f = x0, abs(fx)
    for _ in range(max_iter):
        d = df(x)
        if d == 0.0 or not np.isfinite(d):
            break
        step = fx / d
        x_new = x - step
        if not (lo <= x_new <= hi) or not np.isfinite(x_new):
            break
        fx = f(x_new)
        x = x_new
        if abs(fx) < best_f:
            best, best_f = x, abs(fx)
        if fx == 0.0:
            break
    return best


def _dedupe(xs: list[float], rel_tol: float = 1e-9) -> list[float]:
    out: list[float] = []
    for x in sorted(xs):
        if not out or abs(x - out[-1]) > rel_tol * max(1.0, abs(x)):
            out.append(x)
    return out


def find_roots(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
               df: Callable[[np.ndarray], np.ndarray] | None = None,
               n_grid: int = 4096, rel_tol: float = 1e-12) -> list[float]:
    """All isolated roots of f on [lo, hi] via a log-spaced sign scan.

    `f` and `df` must accept arrays.  When `df` is given, brackets containing
    a sign change of `df` are additionally split at the interior extremum,
    which recovers root pairs too close for the base grid to separate.
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi for a log grid")
    xs = np.geomspace(lo, hi, n_grid)
    fs = np.asarray(f(xs), dtype=float)

    def f1(x: float) -> float:
        return float(f(np.asarray([x]))[0])

    df1 = None
    if df is not None:
        def df1(x: float) -> float:
            return float(df(np.asarray([x]))[0])

    roots: list[float] = [float(xs[i]) for i in np.nonzero(fs == 0.0)[0]]
    sign = np.sign(fs)
    cross = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    brackets = [(float(xs[i]), float(xs[i + 1])) for i in cross]

    if df is not None:
        # split cells where the derivative changes sign but f does not
        dsign = np.sign(np.asarray(df(xs), dtype=float))
        for i in np.nonzero(dsign[:-1] * dsign[1:] < 0)[0]:
            if sign[i] * sign[i + 1] < 0:
                continue  # already a plain bracket
            a, b = float(xs[i]), float(xs[i + 1])
            xe = bisect(df1, a, b, rel_tol=1e-13)
            fe = f1(xe)
            if fe == 0.0:
                roots.append(xe)
            elif fe * fs[i] < 0:
                brackets.append((a, xe))
                brackets.append((xe, b))

    for a, b in brackets:
        x = bisect(f1, a, b, rel_tol=rel_tol)
        if df is not None:
            x = newton_polish(f1, df1, x, a, b)
        roots.append(x)
    return _dedupe(roots)
