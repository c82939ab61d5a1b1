"""
Limited-memory BFGS with a strong-Wolfe line search.

The direction comes from the usual two-loop recursion; the step length from
the bracketing/zoom line search of Nocedal & Wright (Algorithms 3.5 and 3.6)
with safeguarded cubic interpolation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ValueAndGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class LbfgsConfig:
    history: int = 10
    max_iter: int = 200
    gtol: float = 1e-8
    ftol: float = 1e-12
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 40

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        if self.history < 1 or self.max_iter < 0 or self.max_ls < 1:
            raise ValueError("history, max_ls must be >= 1 and max_iter >= 0")


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    n_evals: int
    status: str
    trace: list[float] = field(default_factory=list)
    ls_failures: int = 0


def _cubic_min(a, fa, ga, b, fb, gb) -> Optional[float]:
    """Minimizer of the cubic through two points with slopes, or None."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


class _LineSearch:
    def __init__(self, fun: ValueAndGrad, x, d, f0, gtd0, c1, c2, max_evals):
        self.fun, self.x, self.d = fun, x, d
        self.f0, self.gtd0 = f0, gtd0
        self.c1, self.c2 = c1, c2
        self.max_evals = max_evals
        self.evals = 0
        self.best = None  # lowest point with sufficient decrease

    def phi(self, alpha):
        f, g = self.fun(self.x + alpha * self.d)
        self.evals += 1
        dphi = float(g @ self.d)
        armijo = np.isfinite(f) and f <= self.f0 + self.c1 * alpha * self.gtd0
        if armijo and (self.best is None or f < self.best[1]):
            self.best = (alpha, f, g)
        return f, g, dphi

    def curvature_ok(self, dphi) -> bool:
        return abs(dphi) <= -self.c2 * self.gtd0

    def run(self, alpha):
        """Returns ``(alpha, f, g, strong_wolfe_met)`` or None if no decrease was found."""
        a_prev, f_prev, d_prev = 0.0, self.f0, self.gtd0
        first = True
        while self.evals < self.max_evals:
            f, g, dphi = self.phi(alpha)
            if not np.isfinite(f) or f > self.f0 + self.c1 * alpha * self.gtd0 or (
                not first and f >= f_prev
            ):
                return self.zoom(a_prev, f_prev, d_prev, alpha, f, dphi)
            if self.curvature_ok(dphi):
                return alpha, f, g, True
            if dphi >= 0:
                return self.zoom(alpha, f, dphi, a_prev, f_prev, d_prev)
            a_next = _cubic_min(a_prev, f_prev, d_prev, alpha, f, dphi)
            lo, hi = alpha * 1.1, alpha * 10.0
            if a_next is None or not lo <= a_next <= hi:
                a_next = 2.0 * alpha
            a_prev, f_prev, d_prev = alpha, f, dphi
            alpha = a_next
            first = False
        return self.fallback()

    def zoom(self, a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
        while self.evals < self.max_evals:
            width = a_hi - a_lo
            if abs(width) < 1e-16 * max(1.0, abs(a_lo)):
                break
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            left, right = sorted((a_lo, a_hi))
            margin = 0.1 * (right - left)
            if a is None or not np.isfinite(a) or not left + margin <= a <= right - margin:
                a = 0.5 * (a_lo + a_hi)
            f, g, dphi = self.phi(a)
            if not np.isfinite(f) or f > self.f0 + self.c1 * a * self.gtd0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, dphi
            else:
                if self.curvature_ok(dphi):
                    return a, f, g, True
                if dphi * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo = a, f, dphi
        return self.fallback()

    def fallback(self):
        if self.best is None:
            return None
        alpha, f, g = self.best
        return alpha, f, g, False


def strong_wolfe(fun: ValueAndGrad, x, d, f0, g0, alpha0=1.0, c1=1e-4, c2=0.9, max_evals=40):
    """Step length satisfying the strong Wolfe conditions along ``d``.

    Returns:
        ``(result, evals)`` where ``result`` is ``(alpha, f, g, wolfe_met)``;
        when only sufficient decrease could be certified ``wolfe_met`` is
        False, and when not even that was found ``result`` is None.
    """
    gtd0 = float(g0 @ d)
    if gtd0 >= 0:
        raise ValueError("line search direction is not a descent direction")
    ls = _LineSearch(fun, x, d, f0, gtd0, c1, c2, max_evals)
    return ls.run(alpha0), ls.evals


def _two_loop(g: np.ndarray, s_hist, y_hist) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        alphas.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def lbfgs(
    fun: ValueAndGrad,
    x0,
    config: LbfgsConfig = LbfgsConfig(),
    callback: Optional[Callable[[int, np.ndarray, float], bool]] = None,
) -> LbfgsResult:
    """Minimizes ``fun`` from ``x0``.

    Args:
        fun: returns ``(value, gradient)``; must be deterministic during the solve.
        x0: starting point.
        config: tolerances and line-search constants.
        callback: called as ``callback(k, x, f)`` after each accepted step;
            returning True stops the solve with status ``"stopped"``.

    Returns:
        the result. ``trace`` holds the accepted objective values, starting
        with ``f(x0)``, and is non-increasing. Status is one of ``gtol``,
        ``ftol``, ``max_iter``, ``line_search`` or ``stopped``.
    """
    x = np.array(x0, dtype=float, copy=True)
    f, g = fun(x)
    n_evals = 1
    trace = [float(f)]
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise FloatingPointError("objective or gradient is not finite at the starting point")

    s_hist: deque = deque(maxlen=config.history)
    y_hist: deque = deque(maxlen=config.history)
    status = "max_iter"
    iterations = 0
    ls_failures = 0
    restarted = False

    if np.linalg.norm(g) <= config.gtol:
        status = "gtol"
    else:
        while iterations < config.max_iter:
            d = -_two_loop(g, s_hist, y_hist)
            gtd = g @ d
            if not gtd < 0:
                s_hist.clear()
                y_hist.clear()
                d = -g
                gtd = g @ d
            alpha0 = 1.0 if s_hist else min(1.0, 1.0 / np.abs(g).sum())

            found, evals = strong_wolfe(
                fun, x, d, f, g, alpha0, config.c1, config.c2, config.max_ls
            )
            n_evals += evals
            if found is None:
                ls_failures += 1
                if restarted or not s_hist:
                    # steepest descent already failed
                    status = "line_search"
                    break
                s_hist.clear()
                y_hist.clear()
                restarted = True
                continue
            restarted = False

            alpha, f_new, g_new, _ = found
            s = alpha * d
            y = g_new - g
            if s @ y > 1e-10 * (y @ y):
                s_hist.append(s)
                y_hist.append(y)
            x = x + s
            f_old, f, g = f, f_new, g_new
            iterations += 1
            trace.append(float(f))

            if np.linalg.norm(g) <= config.gtol:
                status = "gtol"
                break
            if f_old - f <= config.ftol * max(abs(f_old), abs(f)):
                status = "ftol"
                break
            if callback is not None and callback(iterations, x, f):
                status = "stopped"
                break

    return LbfgsResult(
        x=x,
        f=float(f),
        grad_norm=float(np.linalg.norm(g)),
        iterations=iterations,
        n_evals=n_evals,
        status=status,
        trace=trace,
        ls_failures=ls_failures,
    )
