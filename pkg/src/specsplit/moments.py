"""Moment maps between a population spectral law and its sample-covariance
limit.

For a population distribution H with moments ``mu`` (mu[k-1] is the k-th
moment) and dimension-to-sample ratio ``y = p/n``, the limiting spectral law
of the sample covariance matrix has moments

    nu_k = sum_{w=1}^{k} y**(k-w) * sum  k! / (m_1! ... m_w! w!)
                                        * mu_1**m_1 ... mu_w**m_w,

the inner sum running over w-tuples of nonnegative integers (m_1, ..., m_w)
with sum m_i = k - w + 1 and sum i*m_i = k.  The coefficients
k!/(m_1!...m_w! w!) are integers (they count set partitions refined by block
sizes), so they are computed exactly and converted to float only in the final
multiply.

The map is triangular: mu_k enters nu_k with coefficient 1 and no higher
moment appears, so it inverts by forward substitution
(`population_moments_from_limit`).

The number of tuples grows like the partition function, and the coefficients
like k!, so orders are capped (default 20); raise ``order_cap`` explicitly for
more, at increasing float cost per term.

A classical determinacy aside: when H is compactly supported the nu sequence
grows slowly enough (Carleman's condition) that it pins the limit law
uniquely; this module relies on that fact but does not verify it numerically.
"""

from __future__ import annotations

from math import factorial, fsum

import numpy as np

from .dist import DiscreteSpectrum
from .errors import DomainError

__all__ = [
    "limit_moments_from_population",
    "population_moments_from_limit",
    "spectrum_moments",
]

DEFAULT_ORDER_CAP = 20


def _check_order(k: int, order_cap: int) -> None:
    if k < 1:
        raise DomainError("moment order must be >= 1")
    if k > order_cap:
        raise DomainError(
            f"moment order {k} exceeds cap {order_cap}; "
            "pass a larger order_cap to override"
        )


def _tuples(w: int, sum_m: int, sum_im: int):
    """Yield w-tuples of nonnegative ints with sum m_i = sum_m and
    sum i*m_i = sum_im."""
    if w == 1:
        # m_1 = sum_m must also satisfy 1*m_1 = sum_im.
        if sum_m == sum_im and sum_m >= 0:
            yield (sum_m,)
        return
    # Choose m_w last; remaining indices 1..w-1 carry what is left.
    max_mw = min(sum_m, sum_im // w)
    for m_w in range(max_mw + 1):
        for head in _tuples(w - 1, sum_m - m_w, sum_im - w * m_w):
            yield head + (m_w,)


def _limit_moment_terms(k: int, mu, y: float):
    """All summands of nu_k as floats (exact integer coefficient times
    float powers)."""
    kfact = factorial(k)
    terms = []
    for w in range(1, k + 1):
        ypow = y ** (k - w)
        wfact = factorial(w)
        for m in _tuples(w, k - w + 1, k):
            denom = wfact
            for mi in m:
                denom *= factorial(mi)
            coef = kfact // denom
            prod = float(coef) * ypow
            for i, mi in enumerate(m, start=1):
                if mi:
                    prod *= mu[i - 1] ** mi
            terms.append(prod)
    return terms


def limit_moments_from_population(
    mu, y: float, *, order_cap: int = DEFAULT_ORDER_CAP
) -> np.ndarray:
    """Map population moments mu_1..mu_K to limit moments nu_1..nu_K.

    Parameters
    ----------
    mu : sequence of float
        Population moments, 1-indexed by position (mu[0] is the mean).
    y : float
        Dimension-to-sample ratio, y >= 0.

    Returns
    -------
    np.ndarray of the same length K.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise DomainError("mu must be a nonempty 1-D sequence")
    if y < 0:
        raise DomainError("ratio y must be nonnegative")
    _check_order(mu.size, order_cap)
    out = np.empty(mu.size)
    for k in range(1, mu.size + 1):
        out[k - 1] = fsum(_limit_moment_terms(k, mu, y))
    return out


def population_moments_from_limit(
    nu, y: float, *, order_cap: int = DEFAULT_ORDER_CAP
) -> np.ndarray:
    """Invert `limit_moments_from_population` by forward substitution.

    mu_k appears in nu_k only through the single tuple (0, ..., 0, 1) at
    w = k, with coefficient 1, so mu_k = nu_k - (terms built from lower
    moments).
    """
    nu = np.asarray(nu, dtype=float)
    if nu.ndim != 1 or nu.size == 0:
        raise DomainError("nu must be a nonempty 1-D sequence")
    if y < 0:
        raise DomainError("ratio y must be nonnegative")
    _check_order(nu.size, order_cap)
    mu = np.zeros(nu.size)
    for k in range(1, nu.size + 1):
        partial = fsum(_limit_moment_terms(k, mu, y))  # mu[k-1] is still 0
        mu[k - 1] = nu[k - 1] - partial
    return mu


def spectrum_moments(spectrum: DiscreteSpectrum, order: int) -> np.ndarray:
    """Raw moments (1/m) sum lambda_i**k of a finite spectrum, k = 1..order."""
    if len(spectrum) == 0:
        raise DomainError("moments of an empty spectrum")
    if order < 1:
        raise DomainError("order must be >= 1")
    vals = spectrum.values
    return np.array([float(np.mean(vals**k)) for k in range(1, order + 1)])
