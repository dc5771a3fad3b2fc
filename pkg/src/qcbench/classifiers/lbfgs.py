"""Limited-memory BFGS with a strong-Wolfe line search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DatasetError


@dataclass
class LBFGSState:
    m: int = 10
    s: deque = field(default_factory=deque)
    y: deque = field(default_factory=deque)
    rho: deque = field(default_factory=deque)
    n_iter: int = 0
    n_skipped: int = 0

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        sy = float(s @ y)
        # curvature pairs with s'y <= 0 would make the implicit Hessian indefinite
        if not sy > 1e-10 * np.sqrt(float(s @ s) * float(y @ y)):
            self.n_skipped += 1
            return False
        if len(self.s) == self.m:
            self.s.popleft()
            self.y.popleft()
            self.rho.popleft()
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        return True

    def clear(self):
        self.s.clear()
        self.y.clear()
        self.rho.clear()

    def direction(self, g: np.ndarray) -> np.ndarray:
        """Two-loop recursion: returns -H g for the implicit inverse Hessian H."""
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if self.s:
            s, y = self.s[-1], self.y[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y, rho), a in zip(zip(self.s, self.y, self.rho), reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q


@dataclass
class LBFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    n_eval: int
    converged: bool
    line_search_failed: bool = False
    history: list = field(default_factory=list)  # objective after each accepted step
    slopes: list = field(default_factory=list)  # g'd at each accepted step


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through (a, fa, da), (b, fb, db), or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if np.isfinite(t) else None


def wolfe_line_search(fun, x, f0, g0, d, step0=1.0, c1=1e-4, c2=0.9, max_evals=50):
    """Bracketing + zoom search for a step meeting the strong Wolfe conditions.

    Returns (step, f, g, n_evals, ok).  On failure the best point seen is
    returned with ok=False (step 0 if nothing improved).
    """
    dphi0 = float(g0 @ d)
    evals = 0
    best = (0.0, f0, g0)

    def phi(a):
        nonlocal evals, best
        evals += 1
        fa, ga = fun(x + a * d)
        if np.isfinite(fa) and fa < best[1]:
            best = (a, fa, ga)
        return fa, ga, (float(ga @ d) if np.isfinite(fa) else np.nan)

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        while evals < max_evals:
            width = hi - lo
            a = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                a = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            lo_b, hi_b = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if a is None or not (lo_b <= a <= hi_b):
                a = lo + 0.5 * width
            fa, ga, da = phi(a)
            if not np.isfinite(fa) or fa > f0 + c1 * a * dphi0 or fa >= f_lo:
                hi, f_hi, d_hi = a, fa, da
            else:
                if abs(da) <= -c2 * dphi0:
                    return a, fa, ga
                if da * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = a, fa, da
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        return None

    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    a = step0
    first = True
    while evals < max_evals:
        fa, ga, da = phi(a)
        if not np.isfinite(fa) or fa > f0 + c1 * a * dphi0 or (not first and fa >= f_prev):
            out = zoom(a_prev, f_prev, d_prev, a, fa, da)
            break
        if abs(da) <= -c2 * dphi0:
            out = (a, fa, ga)
            break
        if da >= 0:
            out = zoom(a, fa, da, a_prev, f_prev, d_prev)
            break
        a_prev, f_prev, d_prev = a, fa, da
        a = 2.0 * a
        first = False
    else:
        out = None
    if out is None:
        a, fa, ga = best
        return a, fa, ga, evals, False
    return out[0], out[1], out[2], evals, True


def lbfgs_minimize(objective: Callable, x0, m: int = 10, tol: float = 1e-5, max_iter: int = 200,
                   c1: float = 1e-4, c2: float = 0.9, max_line_evals: int = 50) -> LBFGSResult:
    """Minimize ``objective(x) -> (value, gradient)`` from ``x0``.

    Stops when ``max|g| <= tol`` or after ``max_iter`` iterations.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = objective(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise DatasetError("objective is not finite at the starting point")
    state = LBFGSState(m=m)
    n_eval = 1
    history = [float(f)]
    slopes = []
    failed = False
    converged = bool(np.max(np.abs(g), initial=0.0) <= tol)
    while not converged and state.n_iter < max_iter:
        d = state.direction(g)
        slope = float(g @ d)
        if not slope < 0:
            state.clear()
            d = -g
            slope = float(g @ d)
        if state.s:
            step0 = 1.0
        else:
            step0 = min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
        step, f_new, g_new, evals, ok = wolfe_line_search(objective, x, f, g, d, step0, c1, c2, max_line_evals)
        n_eval += evals
        if not ok:
            failed = True
            if step > 0:
                x = x + step * d
                f, g = f_new, g_new
                history.append(float(f))
                slopes.append(slope)
            break
        s = step * d
        state.push(s, g_new - g)
        x = x + s
        f, g = f_new, g_new
        state.n_iter += 1
        history.append(float(f))
        slopes.append(slope)
        converged = bool(np.max(np.abs(g), initial=0.0) <= tol)
    return LBFGSResult(x, float(f), g, state.n_iter, n_eval, converged, failed, history, slopes)
