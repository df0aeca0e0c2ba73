"""Stieltjes-transform machinery for the limiting sample-covariance law.

For a population law H (here a `NoiseSignalModel`) and ratio y, the limiting
law F is reached through the companion law K = (1 - y) * delta-free part
+ y * F, whose Stieltjes transform A(z) solves the self-consistent equation

    A(z) = 1 / ( -z + y * integral x dH(x) / (1 + x A(z)) ),   Im z > 0,

with Im A(z) > 0 the physical (Herglotz) branch.  `solve_stieltjes` iterates
this map: plain fixed-point steps, damped by 0.5 whenever the residual grows,
then a Newton polish once the iterate is close (the fixed point is unique in
the upper half plane, so any converged iterate is the answer).

The transform of F itself is B(z) = (A(z) + (1 - y)/z) / y, and the density
follows by Stieltjes inversion

    F'(x) = lim_{eta -> 0} Im B(x + i eta) / pi.

`limiting_density` evaluates at eta and eta/2 and Richardson-extrapolates,
which cancels the O(eta) smoothing bias of the Poisson kernel (including its
leakage outside the support).  `interval_mass` integrates the density with
Gauss-Legendre cells refined geometrically toward the interval endpoints,
where the density has square-root edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import StepDF
from .errors import DomainError, NumericError
from .support import NoiseSignalModel, SupportLayout

__all__ = [
    "StieltjesSolution",
    "solve_stieltjes",
    "mp_density",
    "limiting_density",
    "interval_mass",
    "limiting_cdf",
    "eta_schedule",
]

RESIDUAL_TOL = 1e-12


@dataclass
class StieltjesSolution:
    """One solve of the self-consistent equation at a point z."""

    z: complex
    a_value: complex
    residual: float
    iterations: int


def _h_fraction(a: complex, model: NoiseSignalModel) -> complex:
    """integral x dH(x) / (1 + x a) for the noise-plus-atoms model."""
    s2 = model.sigma2
    out = (1.0 - model.y1) * s2 / (1.0 + s2 * a)
    b, w = model.signal_values, model.signal_weights
    if b.size:
        out = out + model.y1 * np.sum(w * b / (1.0 + b * a))
    return complex(out)


def _h_fraction_prime(a: complex, model: NoiseSignalModel) -> complex:
    s2 = model.sigma2
    out = -(1.0 - model.y1) * s2 * s2 / (1.0 + s2 * a) ** 2
    b, w = model.signal_values, model.signal_weights
    if b.size:
        out = out - model.y1 * np.sum(w * b * b / (1.0 + b * a) ** 2)
    return complex(out)


def _fixed_point_map(a: complex, z: complex, y: float, model) -> complex:
    return 1.0 / (-z + y * _h_fraction(a, model))


def _solve_at(
    z: complex, y: float, model: NoiseSignalModel, a_init: complex, tol: float, max_iter: int
):
    """Hybrid iteration at one z: damped fixed point plus a guarded Newton
    step (accepted only if it lowers the residual and keeps Im a > 0)."""
    a = a_init
    fa = _fixed_point_map(a, z, y, model)
    res = abs(fa - a)
    prev_res = math.inf
    iters = 0
    while iters < max_iter:
        if res <= tol:
            return a, res, iters
        if res < 0.3 * max(1.0, abs(a)):
            # Newton step on W(a) = a(-z + y S(a)) - 1 = 0.
            s = _h_fraction(a, model)
            denom = -z + y * s
            w_val = a * denom - 1.0
            w_prime = denom + a * y * _h_fraction_prime(a, model)
            if w_prime != 0:
                step = w_val / w_prime
                cand = a - step
                halvings = 0
                while cand.imag <= 0 and halvings < 60:
                    step *= 0.5
                    cand = a - step
                    halvings += 1
                if cand.imag > 0:
                    fc = _fixed_point_map(cand, z, y, model)
                    rc = abs(fc - cand)
                    if rc < res:
                        a, fa, prev_res, res = cand, fc, res, rc
                        iters += 1
                        continue
        # Fixed-point step; damp by 0.5 when the residual failed to shrink.
        damp = 0.5 if res >= prev_res else 1.0
        a_new = a + damp * (fa - a)
        if a_new.imag <= 0:
            a_new = complex(a_new.real, max(a.imag * 0.5, 1e-300))
        fa_new = _fixed_point_map(a_new, z, y, model)
        prev_res, res = res, abs(fa_new - a_new)
        a, fa = a_new, fa_new
        iters += 1
    raise NumericError(
        "Stieltjes solve did not reach tolerance",
        z=z,
        last_iterate=a,
        residual=res,
        iterations=iters,
    )


def solve_stieltjes(
    z: complex,
    y: float,
    model: NoiseSignalModel,
    *,
    a0: Optional[complex] = None,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 20000,
) -> StieltjesSolution:
    """Solve the self-consistent equation at z (Im z > 0).

    Returns the Herglotz solution (Im A > 0) with residual
    |A - 1/(-z + y integral ...)| below ``tol`` (1e-12 by default), or raises
    ``NumericError`` carrying the last iterate.

    Close to the real axis the plain iteration contracts like 1 - O(Im z),
    so cold starts descend a halving ladder of imaginary parts, warm-starting
    each rung from the last; a caller-provided ``a0`` (continuation along a
    grid) skips the ladder.  A stale ``a0`` can trap the iteration in the
    wrong basin, so warm starts that fail to converge quickly are retried
    cold (the ladder is a guaranteed path: any converged iterate with
    Im A > 0 is the unique Herglotz solution).
    """
    z = complex(z)
    if not (z.imag > 0):
        raise DomainError(f"need Im z > 0, got z = {z!r}")
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"ratio y must be positive and finite, got {y!r}")
    total = 0
    if a0 is not None and complex(a0).imag > 0:
        try:
            a, res, its = _solve_at(z, y, model, complex(a0), tol, min(500, max_iter))
            return StieltjesSolution(z, a, res, its)
        except NumericError:
            total += 500
    # Start high enough that the plain map is a global contraction
    # (factor <= y / (1 + sqrt(y))^4 once Im z >= 2 (1 + sqrt(y))^2 x_max),
    # then halve down to the target, warm-starting each rung.
    x_max = model.sigma2
    if model.atoms:
        x_max = max(x_max, float(model.signal_values[-1]))
    a = 1j
    rung = max(0.25, 2.0 * (1.0 + math.sqrt(y)) ** 2 * x_max)
    while rung > z.imag:
        a, _, its = _solve_at(
            complex(z.real, rung), y, model, a, max(tol, 1e-10), max_iter
        )
        total += its
        rung *= 0.5
    a, res, its = _solve_at(z, y, model, a, tol, max_iter)
    return StieltjesSolution(z, a, res, total + its)


def mp_density(x, y: float, sigma2: float):
    """Closed-form density of the pure-noise limit on
    [sigma2 (1 - sqrt(y))^2, sigma2 (1 + sqrt(y))^2]; zero outside.

    Integrates to 1 for y <= 1 and to 1/y for y > 1 (the rest of the mass
    sits in an atom at zero).
    """
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"ratio y must be positive and finite, got {y!r}")
    if not (sigma2 > 0):
        raise DomainError(f"sigma2 must be positive, got {sigma2!r}")
    xs = np.asarray(x, dtype=float)
    lo = sigma2 * (1.0 - math.sqrt(y)) ** 2
    hi = sigma2 * (1.0 + math.sqrt(y)) ** 2
    out = np.zeros_like(xs)
    inside = (xs > lo) & (xs < hi) & (xs > 0)
    xi = xs[inside]
    out[inside] = np.sqrt((xi - lo) * (hi - xi)) / (2.0 * math.pi * sigma2 * y * xi)
    return float(out) if np.isscalar(x) else out


def _transform_of_limit(a: complex, z: complex, y: float) -> complex:
    """Transform of F from the companion transform A."""
    return (a + (1.0 - y) / z) / y


def _density_batch(
    xs: np.ndarray, y: float, model: NoiseSignalModel, eta: float
) -> np.ndarray:
    """Richardson-extrapolated density on an ascending grid, warm-starting
    each solve from its neighbor."""
    out = np.empty(xs.size)
    warm_full: Optional[complex] = None
    warm_half: Optional[complex] = None
    for i, x in enumerate(xs):
        s_full = solve_stieltjes(complex(x, eta), y, model, a0=warm_full)
        s_half = solve_stieltjes(complex(x, 0.5 * eta), y, model, a0=warm_half)
        warm_full, warm_half = s_full.a_value, s_half.a_value
        d_full = _transform_of_limit(s_full.a_value, s_full.z, y).imag / math.pi
        d_half = _transform_of_limit(s_half.a_value, s_half.z, y).imag / math.pi
        out[i] = 2.0 * d_half - d_full
    return out


def limiting_density(x, y: float, model: NoiseSignalModel, eta: float = 1e-5):
    """Density of the limiting law via Stieltjes inversion; x scalar or array.

    Solves at x + i*eta and x + i*eta/2 and extrapolates; the result can be
    negative at the 1e-9 level outside the support (extrapolation residue),
    which callers integrate through rather than clip.  Array input is
    evaluated in ascending order so each solve warm-starts from its
    neighbor, then returned in the original order.
    """
    if not (eta > 0):
        raise DomainError(f"eta must be positive, got {eta!r}")
    xs = np.asarray(x, dtype=float)
    if xs.ndim == 0:
        return float(_density_batch(xs.reshape(1), y, model, eta)[0])
    if xs.ndim != 1:
        raise DomainError(f"x must be a scalar or 1-D array, got shape {xs.shape}")
    order = np.argsort(xs)
    out = np.empty_like(xs)
    out[order] = _density_batch(xs[order], y, model, eta)
    return out


def eta_schedule(lo: float, hi: float) -> float:
    """Inversion offset for work on [lo, hi]: 1e-3 of the 512-cell width,
    floored at 1e-7."""
    return max(1e-7, 1e-3 * (hi - lo) / 512.0)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_GL_NODES_LOW, _GL_WEIGHTS_LOW = np.polynomial.legendre.leggauss(6)


def _cell_quads(lo, hi, y, model, eta):
    """(gl12, |gl12 - gl6|) on one cell, sharing a single density sweep."""
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    xs_hi = mid + half * _GL_NODES
    xs_lo = mid + half * _GL_NODES_LOW
    xs = np.concatenate([xs_hi, xs_lo])
    order = np.argsort(xs)
    dens = np.empty_like(xs)
    dens[order] = _density_batch(xs[order], y, model, eta)
    q_hi = half * float(np.dot(_GL_WEIGHTS, dens[: xs_hi.size]))
    q_lo = half * float(np.dot(_GL_WEIGHTS_LOW, dens[xs_hi.size :]))
    return q_hi, abs(q_hi - q_lo)


def interval_mass(
    lo: float,
    hi: float,
    y: float,
    model: NoiseSignalModel,
    *,
    tol: float = 1e-6,
    eta: Optional[float] = None,
    max_cells: int = 4096,
) -> float:
    """Mass the limiting law gives [lo, hi], by adaptive quadrature of the
    inverted density.

    Cells are packed geometrically toward both endpoints (the density has
    square-root edges there when [lo, hi] is a support component) and each
    cell is Gauss-Legendre integrated with an embedded error estimate;
    worst cells are bisected until the estimate falls below ``tol``.
    """
    if not (lo < hi):
        raise DomainError(f"need lo < hi, got [{lo!r}, {hi!r}]")
    if eta is None:
        eta = eta_schedule(lo, hi)
    width = hi - lo
    # 0, 2^-44, ..., 1/2 and the mirror image: 88 initial cells.
    ts = np.concatenate(([0.0], 0.5 ** np.arange(44, -1, -1, dtype=float)))
    edges = np.unique(np.concatenate([lo + width * ts, hi - width * ts]))
    cells = []
    for a, b in zip(edges[:-1], edges[1:]):
        q, e = _cell_quads(a, b, y, model, eta)
        cells.append((e, a, b, q))
    while True:
        total = sum(c[3] for c in cells)
        err = sum(c[0] for c in cells)
        if err <= tol * max(1.0, abs(total)):
            return total
        if len(cells) >= max_cells:
            raise NumericError(
                "interval quadrature did not converge",
                interval=(lo, hi),
                estimate=total,
                error=err,
                cells=len(cells),
            )
        cells.sort(key=lambda c: c[0])
        e, a, b, q = cells.pop()
        m = 0.5 * (a + b)
        for aa, bb in ((a, m), (m, b)):
            qq, ee = _cell_quads(aa, bb, y, model, eta)
            cells.append((ee, aa, bb, qq))


def limiting_cdf(
    y: float,
    model: NoiseSignalModel,
    layout: SupportLayout,
    *,
    points_per_interval: int = 512,
) -> StepDF:
    """Sampled CDF of the limiting law for a computed support layout.

    Within each support component the density is sampled on a cosine-spaced
    grid (dense at the square-root edges), trapezoid-accumulated, and scaled
    so the component carries exactly its layout mass; the zero atom (y > 1)
    is attached as a point mass.
    """
    if points_per_interval < 8:
        raise DomainError("points_per_interval must be >= 8")
    grids = []
    cdfs = []
    running = 0.0
    t = np.linspace(0.0, 1.0, points_per_interval)
    shape = 0.5 * (1.0 - np.cos(math.pi * t))
    for iv in layout.intervals:
        xs = iv.lo + (iv.hi - iv.lo) * shape
        dens = np.clip(_density_batch(xs, y, model, eta_schedule(iv.lo, iv.hi)), 0.0, None)
        inc = 0.5 * (dens[1:] + dens[:-1]) * np.diff(xs)
        local = np.concatenate(([0.0], np.cumsum(inc)))
        if local[-1] <= 0:
            raise NumericError(
                "vanishing density over a support component",
                interval=(iv.lo, iv.hi),
            )
        local *= iv.mass / local[-1]
        local[-1] = iv.mass
        grids.append(xs)
        cdfs.append(running + local)
        running += iv.mass
    grid = np.concatenate(grids)
    cdf = np.concatenate(cdfs)
    if layout.atom_at_zero > 0:
        return StepDF(
            np.array([0.0]), np.array([layout.atom_at_zero]), grid, cdf
        )
    return StepDF(np.empty(0), np.empty(0), grid, cdf)
