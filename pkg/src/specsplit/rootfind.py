"""Safeguarded scalar root finding: Newton steps inside a maintained
bisection bracket.

The solvers in `support` need roots of smooth functions on open intervals
between poles; brackets are always available, so each Newton iterate is
accepted only if it stays inside the current bracket and shrinks the
residual, and a bisection step is taken otherwise.  This keeps Newton's
quadratic tail while inheriting bisection's guaranteed convergence.
"""

from __future__ import annotations

from typing import Callable, Optional

from .errors import DomainError, NumericError

__all__ = ["newton_bisect"]


def newton_bisect(
    func: Callable[[float], float],
    dfunc: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    flo: Optional[float] = None,
    fhi: Optional[float] = None,
    xtol: float = 1e-12,
    rtol: float = 1e-14,
    max_iter: int = 200,
) -> float:
    """Find x in [lo, hi] with func(x) = 0; func(lo) and func(hi) must have
    opposite signs (either may be zero).

    Converges when the bracket width or the last step drops below
    ``xtol + rtol*|x|``, or the residual hits zero exactly.
    """
    if not lo < hi:
        raise DomainError(f"invalid bracket [{lo!r}, {hi!r}]")
    a, b = lo, hi
    fa = func(a) if flo is None else flo
    fb = func(b) if fhi is None else fhi
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise DomainError(f"no sign change on [{lo!r}, {hi!r}]: f={fa!r},{fb!r}")

    x = 0.5 * (a + b)
    fx = func(x)
    last_step = b - a
    for _ in range(max_iter):
        if fx == 0.0:
            return x
        # Shrink the bracket around the sign change.
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        if b - a <= xtol + rtol * max(abs(a), abs(b)):
            return 0.5 * (a + b)
        d = dfunc(x)
        # Newton must stay bracketed and at least halve the previous step;
        # otherwise bisect.  One-sided convergence (flat-derivative roots)
        # never shrinks the bracket, so the step-size exit below is the one
        # that fires there.
        newton_ok = d != 0.0 and abs(2.0 * fx) <= abs(last_step * d)
        if newton_ok:
            x_new = x - fx / d
            newton_ok = a < x_new < b
        if not newton_ok:
            x_new = 0.5 * (a + b)
        last_step = abs(x_new - x)
        if last_step <= xtol + rtol * abs(x_new):
            return x_new
        x = x_new
        fx = func(x)
    raise NumericError(
        "root refinement did not converge",
        bracket=(a, b),
        residual=fx,
        iterations=max_iter,
    )
