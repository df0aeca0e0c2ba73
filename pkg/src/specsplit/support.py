"""Support geometry of the limiting spectral law for noise-plus-signal
population models.

The population spectral law considered here is

    H = (1 - y1) * point mass at sigma2  +  y1 * G,

G a finite discrete law on values b_1 < ... < b_J, all above sigma2.  With
dimension-to-sample ratio y, the support of the limiting sample-covariance
spectrum is characterized through the boundary curve

    edge_curve(a) = -1/a + y (1-y1) / (a + 1/sigma2)
                         + y y1 sum_j w_j / (a + 1/b_j),

whose local extrema over the real line (away from the poles
{0, -1/sigma2, -1/b_j}) are exactly the support endpoints.  The derivative
factors through the companion curve

    split_criterion(a) = y [ (1-y1) (a/(a + 1/sigma2))^2
                             + y1 sum_j w_j (a/(a + 1/b_j))^2 ],

via  edge_curve'(a) = (1 - split_criterion(a)) / a^2,  so endpoint hunting
reduces to sign analysis of ``split_criterion - 1`` between consecutive
poles.  The noise bulk separates from the signal part exactly when
``split_criterion`` dips below 1 somewhere on (-1/sigma2, -1/b_1); since the
criterion is linear in y, the largest ratio at which separation occurs is
``critical_y = 1 / min split_criterion(.; y=1)``.

Mass bookkeeping (``SupportLayout``): for y > 1 an atom of mass 1 - 1/y sits
at zero; when the support splits, the leftmost positive component carries
1 - y1 (or 1/y - y1 when y > 1) and the remainder sits to its right.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dist import DiscreteSpectrum
from .errors import DomainError, NumericError
from .rootfind import newton_bisect

__all__ = [
    "NoiseSignalModel",
    "SupportInterval",
    "SupportLayout",
    "edge_curve",
    "split_criterion",
    "find_support_layout",
    "split_exists",
    "critical_y",
    "single_spike_split",
    "single_spike_critical_y",
    "model_from_spectrum",
    "canonical_endpoints",
    "write_endpoints_csv",
]

# Relative interior margin used when evaluating near poles.
_EDGE_MARGIN = 1e-9


@dataclass
class NoiseSignalModel:
    """Population model: noise floor sigma2 with weight 1 - y1 plus signal
    atoms ``atoms = ((b_1, w_1), ..., (b_J, w_J))``, b_j ascending and above
    sigma2, weights positive summing to 1.  ``y1`` is the signal fraction of
    the population spectrum; y1 == 0 means pure noise (no atoms).
    """

    sigma2: float
    y1: float = 0.0
    atoms: tuple = ()

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError(f"sigma2 must be positive, got {self.sigma2!r}")
        if not (0.0 <= self.y1 < 1.0):
            raise DomainError(f"y1 must lie in [0, 1), got {self.y1!r}")
        atoms = tuple((float(b), float(w)) for b, w in self.atoms)
        if (self.y1 == 0.0) != (len(atoms) == 0):
            raise DomainError("y1 == 0 exactly when the atom list is empty")
        if atoms:
            b = np.array([a[0] for a in atoms])
            w = np.array([a[1] for a in atoms])
            if np.any(b <= self.sigma2):
                raise DomainError("signal values must exceed sigma2")
            if np.any(np.diff(b) <= 0):
                raise DomainError("signal values must be strictly increasing")
            if np.any(w <= 0):
                raise DomainError("signal weights must be positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise DomainError(f"signal weights sum to {w.sum()!r}, not 1")
            self._b = b
            self._w = w
        else:
            self._b = np.empty(0)
            self._w = np.empty(0)
        self.atoms = atoms

    @property
    def signal_values(self) -> np.ndarray:
        return self._b

    @property
    def signal_weights(self) -> np.ndarray:
        return self._w

    def moments(self, order: int) -> np.ndarray:
        """Population moments mu_1..mu_order of H."""
        if order < 1:
            raise DomainError("order must be >= 1")
        ks = np.arange(1, order + 1)[:, None]
        out = (1.0 - self.y1) * self.sigma2 ** ks[:, 0]
        if self._b.size:
            out = out + self.y1 * (self._w[None, :] * self._b[None, :] ** ks).sum(axis=1)
        return out

    def scaled(self, c: float) -> "NoiseSignalModel":
        """Model of the spectrum scaled by c > 0 (support scales by c)."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return NoiseSignalModel(
            self.sigma2 * c, self.y1, tuple((b * c, w) for b, w in self.atoms)
        )


@dataclass
class SupportInterval:
    lo: float
    hi: float
    mass: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise DomainError(f"interval endpoints out of order: {self.lo}, {self.hi}")
        if not (self.mass > 0):
            raise DomainError(f"interval mass must be positive, got {self.mass!r}")


@dataclass
class SupportLayout:
    """Support of the limiting law: optional atom at zero plus disjoint
    closed intervals in ascending order, masses summing to 1 (within 1e-10).
    """

    y: float
    atom_at_zero: float
    intervals: tuple

    def __post_init__(self):
        self.intervals = tuple(self.intervals)
        if not self.intervals:
            raise DomainError("layout needs at least one interval")
        if not (0.0 <= self.atom_at_zero < 1.0):
            raise DomainError(f"atom mass out of range: {self.atom_at_zero!r}")
        prev_hi = 0.0 if self.atom_at_zero > 0 else -math.inf
        for iv in self.intervals:
            if iv.lo < prev_hi:
                raise DomainError("intervals must be disjoint and ascending")
            prev_hi = iv.hi
        total = self.atom_at_zero + sum(iv.mass for iv in self.intervals)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"layout mass {total!r} differs from 1 beyond 1e-10")

    @property
    def n_components(self) -> int:
        return len(self.intervals)

    def span(self) -> tuple:
        return self.intervals[0].lo, self.intervals[-1].hi


def _weights_values(model: NoiseSignalModel):
    """Pole weights c_j and population values x_j of H as flat arrays,
    noise first."""
    xs = np.concatenate(([model.sigma2], model.signal_values))
    cs = np.concatenate(([1.0 - model.y1], model.y1 * model.signal_weights))
    return cs, xs


def edge_curve(alpha, y: float, model: NoiseSignalModel):
    """Boundary curve; local extrema over alpha are support endpoints.

    Vectorized over alpha; evaluates to +-inf at the poles.
    """
    a = np.asarray(alpha, dtype=float)
    cs, xs = _weights_values(model)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -1.0 / a + y * (cs / (a[..., None] + 1.0 / xs)).sum(axis=-1)
    return float(out) if np.isscalar(alpha) else out


def split_criterion(alpha, y: float, model: NoiseSignalModel):
    """Companion curve g; the support splits where g < 1 between poles.

    Satisfies edge_curve'(a) = (1 - g(a)) / a^2.  Linear in y.
    """
    a = np.asarray(alpha, dtype=float)
    cs, xs = _weights_values(model)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = a[..., None] / (a[..., None] + 1.0 / xs)
        out = y * (cs * t * t).sum(axis=-1)
    return float(out) if np.isscalar(alpha) else out


def _criterion_prime(alpha: float, y: float, model: NoiseSignalModel) -> float:
    cs, xs = _weights_values(model)
    c = 1.0 / xs
    return float(y * (cs * 2.0 * alpha * c / (alpha + c) ** 3).sum())


def _criterion_second(alpha: float, y: float, model: NoiseSignalModel) -> float:
    cs, xs = _weights_values(model)
    c = 1.0 / xs
    return float(y * (cs * 2.0 * c * (c - 2.0 * alpha) / (alpha + c) ** 4).sum())


def _interior_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Log-clustered grid on (lo, hi), dense toward both endpoints."""
    width = hi - lo
    t = np.geomspace(width * _EDGE_MARGIN, width / 2.0, max(n // 2, 8))
    return np.unique(np.concatenate([lo + t, hi - t]))


def _stationary_points(
    lo: float, hi: float, y: float, model: NoiseSignalModel, grid_points: int
) -> list:
    """Zeros of split_criterion' on the open pole interval (lo, hi)."""
    pts = _interior_grid(lo, hi, grid_points)
    gp = np.array([_criterion_prime(a, y, model) for a in pts])
    stats = [float(a) for a, v in zip(pts, gp) if v == 0.0]
    sign = np.sign(gp)
    idx = np.nonzero((sign[:-1] != 0) & (sign[1:] != 0) & (sign[:-1] != sign[1:]))[0]
    for i in idx:
        stats.append(
            newton_bisect(
                lambda a: _criterion_prime(a, y, model),
                lambda a: _criterion_second(a, y, model),
                float(pts[i]),
                float(pts[i + 1]),
                flo=float(gp[i]),
                fhi=float(gp[i + 1]),
            )
        )
    return sorted(stats)


def _crossing(a: float, b: float, ga: float, gb: float, y, model) -> float:
    """Root of split_criterion - 1 on [a, b] given end values ga, gb."""
    return newton_bisect(
        lambda t: split_criterion(t, y, model) - 1.0,
        lambda t: _criterion_prime(t, y, model),
        a,
        b,
        flo=ga - 1.0,
        fhi=gb - 1.0,
    )


def _left_branch_root(y: float, model: NoiseSignalModel) -> Optional[float]:
    """Root of g = 1 on (-inf, -1/sigma2); exists iff y < 1 (g rises
    monotonically from y to +inf there)."""
    if y >= 1.0:
        return None
    pole = -1.0 / model.sigma2
    scale = abs(pole)
    delta = scale * _EDGE_MARGIN
    while split_criterion(pole - delta, y, model) <= 1.0:
        delta *= 0.1
        if delta < scale * 1e-300:
            raise NumericError("cannot approach pole from the left", pole=pole)
    span = scale
    for _ in range(600):
        if split_criterion(pole - span, y, model) < 1.0:
            break
        span *= 2.0
    else:
        raise NumericError("no left bracket for the outer support edge", y=y)
    return _crossing(
        pole - span,
        pole - delta,
        split_criterion(pole - span, y, model),
        split_criterion(pole - delta, y, model),
        y,
        model,
    )


def _last_interval_root(y: float, model: NoiseSignalModel) -> float:
    """Unique root of g = 1 on (last negative pole, 0); g falls
    monotonically from +inf to 0 there."""
    cs, xs = _weights_values(model)
    pole = -1.0 / xs.max()
    scale = abs(pole)
    delta = scale * _EDGE_MARGIN
    while split_criterion(pole + delta, y, model) <= 1.0:
        delta *= 0.1
        if delta < scale * 1e-300:
            raise NumericError("cannot approach pole from the right", pole=pole)
    hi = -0.5 * scale
    for _ in range(2000):
        if split_criterion(hi, y, model) < 1.0:
            break
        hi *= 0.5
    else:
        raise NumericError("no bracket below zero for the top support edge", y=y)
    return _crossing(
        pole + delta,
        hi,
        split_criterion(pole + delta, y, model),
        split_criterion(hi, y, model),
        y,
        model,
    )


def _positive_branch_root(y: float, model: NoiseSignalModel) -> Optional[float]:
    """Root of g = 1 on (0, inf); exists iff y > 1 (g rises from 0 to y).

    For y barely above 1 the crossing escapes toward +inf and the edge it
    encodes collapses to 0; when the bracket search tops out, None is
    returned and the caller treats the configuration as y == 1.
    """
    if y <= 1.0:
        return None
    scale = model.sigma2
    lo = scale * _EDGE_MARGIN
    if split_criterion(lo, y, model) >= 1.0:
        raise NumericError("positive branch has no interior start", y=y)
    hi = scale
    for _ in range(1000):
        if split_criterion(hi, y, model) > 1.0:
            break
        hi *= 2.0
        if hi > 1e300:
            return None
    return _crossing(
        lo,
        hi,
        split_criterion(lo, y, model),
        split_criterion(hi, y, model),
        y,
        model,
    )


def _middle_interval_roots(
    lo: float, hi: float, y: float, model: NoiseSignalModel, grid_points: int
) -> list:
    """Roots of g = 1 on a pole interval where g -> +inf at both ends.

    Walks the sign of g - 1 across the interval's stationary points, so
    arbitrarily shallow dips below 1 are caught as long as the stationary
    point itself is found (the derivative's sign change is a wide feature
    even when the dip is narrow).
    """
    width = hi - lo
    nodes = [lo + width * _EDGE_MARGIN]
    nodes += _stationary_points(lo, hi, y, model, grid_points)
    nodes.append(hi - width * _EDGE_MARGIN)
    vals = [split_criterion(a, y, model) for a in nodes]
    roots = []
    for (a, ga), (b, gb) in zip(zip(nodes, vals), zip(nodes[1:], vals[1:])):
        if (ga - 1.0) == 0.0:
            continue  # tangency: no transversal crossing to refine
        if (ga - 1.0 > 0) != (gb - 1.0 > 0):
            roots.append(_crossing(a, b, ga, gb, y, model))
    return roots


def _negative_poles(model: NoiseSignalModel) -> np.ndarray:
    cs, xs = _weights_values(model)
    return -1.0 / xs  # ascending since xs ascends


def find_support_layout(
    y: float, model: NoiseSignalModel, *, grid_points: int = 256
) -> SupportLayout:
    """Compute the support intervals and their masses for ratio y.

    Endpoints are the values of `edge_curve` at the roots of
    ``split_criterion = 1``, paired after sorting; a lone unpaired edge
    (the y == 1 configuration) is closed with 0 on the left.  Masses follow
    the analytic rules for one or two components; for more components the
    interior ones are integrated numerically (Stieltjes inversion) and the
    last takes the exact remainder.
    """
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"ratio y must be positive and finite, got {y!r}")
    poles = _negative_poles(model)
    roots = []
    left = _left_branch_root(y, model)
    if left is not None:
        roots.append(left)
    for lo, hi in zip(poles[:-1], poles[1:]):
        roots.extend(_middle_interval_roots(lo, hi, y, model, grid_points))
    roots.append(_last_interval_root(y, model))
    pos = _positive_branch_root(y, model)
    if pos is not None:
        roots.append(pos)

    edges = sorted(max(float(edge_curve(r, y, model)), 0.0) for r in roots)
    if len(edges) % 2 == 1:
        edges.insert(0, 0.0)
    if not edges:
        raise NumericError("no support edges located", y=y)

    pairs = [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2)]
    atom = 1.0 - 1.0 / y if y > 1.0 else 0.0
    k = len(pairs)
    if k == 1:
        masses = [1.0 - atom]
    else:
        first = (1.0 / y if y > 1.0 else 1.0) - model.y1
        if first <= 0:
            raise NumericError(
                "leftmost component mass is not positive", y=y, first=first
            )
        rest = 1.0 - atom - first
        if k == 2:
            masses = [first, rest]
        else:
            from .stieltjes import interval_mass  # deferred: avoids cycle

            numeric = [
                interval_mass(lo, hi, y, model, tol=1e-6) for lo, hi in pairs[1:]
            ]
            total = sum(numeric)
            if total <= 0:
                raise NumericError("numeric component masses vanished", y=y)
            scaled = [m * rest / total for m in numeric[:-1]]
            masses = [first] + scaled + [rest - sum(scaled)]
    try:
        intervals = tuple(
            SupportInterval(float(lo), float(hi), float(m))
            for (lo, hi), m in zip(pairs, masses)
        )
        return SupportLayout(y=y, atom_at_zero=atom, intervals=intervals)
    except DomainError as exc:
        raise NumericError(f"inconsistent layout: {exc}", y=y, edges=edges) from exc


def _min_split_criterion(y: float, model: NoiseSignalModel, grid_points: int = 256):
    """Minimum of split_criterion over (-1/sigma2, -1/b_1) and its location."""
    if model.y1 == 0.0:
        raise DomainError("split window requires at least one signal atom")
    lo = -1.0 / model.sigma2
    hi = -1.0 / model.signal_values[0]
    stats = _stationary_points(lo, hi, y, model, grid_points)
    if not stats:
        stats = _stationary_points(lo, hi, y, model, grid_points * 8)
    if not stats:
        raise NumericError("no stationary point in the split window", y=y)
    vals = [split_criterion(a, y, model) for a in stats]
    i = int(np.argmin(vals))
    return vals[i], stats[i]


def split_exists(y: float, model: NoiseSignalModel) -> bool:
    """Does the noise bulk separate from the signal part at ratio y?"""
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"ratio y must be positive and finite, got {y!r}")
    if model.y1 == 0.0:
        return False
    gmin, _ = _min_split_criterion(y, model)
    return gmin < 1.0


def critical_y(model: NoiseSignalModel) -> float:
    """Largest ratio below which the noise/signal split exists.

    The split criterion is linear in y, so the threshold is the reciprocal
    of its minimum at y = 1.  Pure noise has nothing to split: +inf.
    """
    if model.y1 == 0.0:
        return math.inf
    gmin, _ = _min_split_criterion(1.0, model)
    return 1.0 / gmin


def single_spike_critical_y(model: NoiseSignalModel) -> float:
    """Closed-form critical ratio for a single signal atom."""
    if len(model.atoms) != 1:
        raise DomainError("closed form requires exactly one signal atom")
    b = model.signal_values[0]
    s2 = model.sigma2
    cube = ((b * b * model.y1) ** (1.0 / 3.0) + (s2 * s2 * (1.0 - model.y1)) ** (1.0 / 3.0)) ** 3
    return (b - s2) ** 2 / cube


def single_spike_split(y: float, model: NoiseSignalModel) -> bool:
    """Closed-form split test for a single signal atom."""
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"ratio y must be positive and finite, got {y!r}")
    return y < single_spike_critical_y(model)


def model_from_spectrum(
    spectrum: DiscreteSpectrum, sigma2: float, q: int, *, noise_tol: float = 1e-6
) -> NoiseSignalModel:
    """Build the population model from an exact covariance spectrum.

    The p - q smallest eigenvalues must equal sigma2 (within ``noise_tol``,
    relative to max(1, sigma2)); the q largest become signal atoms with
    weight 1/q each (exact duplicates merge).
    """
    p = len(spectrum)
    if not (0 <= q < p):
        raise DomainError(f"need 0 <= q < p, got q={q}, p={p}")
    vals = spectrum.values
    tol = noise_tol * max(1.0, sigma2)
    noise, signal = vals[: p - q], vals[p - q :]
    if noise.size and np.max(np.abs(noise - sigma2)) > tol:
        raise DomainError("noise eigenvalues deviate from sigma2 beyond tolerance")
    if q == 0:
        return NoiseSignalModel(sigma2, 0.0, ())
    if signal.min() <= sigma2:
        raise DomainError("signal eigenvalues must exceed sigma2")
    uniq, counts = np.unique(signal, return_counts=True)
    atoms = tuple((float(b), float(c) / q) for b, c in zip(uniq, counts))
    return NoiseSignalModel(sigma2, q / p, atoms)


def canonical_endpoints(layout: SupportLayout):
    """(x1, x2, x3, x4): noise interval bounds, first signal edge, top edge.

    For a single-component layout x2 and x3 are None.
    """
    ivs = layout.intervals
    x1, x4 = ivs[0].lo, ivs[-1].hi
    if len(ivs) == 1:
        return x1, None, None, x4
    return x1, ivs[0].hi, ivs[1].lo, x4


def write_endpoints_csv(
    layouts: Sequence[SupportLayout],
    fobj,
    *,
    zero_limit_model: Optional[NoiseSignalModel] = None,
) -> None:
    """Endpoint table, one row per ratio (descending), columns y, x1..x4.

    With ``zero_limit_model`` a final y = 0 row holds the analytic limits
    (sigma2, sigma2, b_1, b_J).
    """
    close = False
    if isinstance(fobj, (str, bytes)):
        fobj = open(fobj, "w", newline="")
        close = True
    try:
        w = csv.writer(fobj)
        w.writerow(["y", "x1", "x2", "x3", "x4"])

        def fmt(v):
            return "" if v is None else f"{v:.12g}"

        for lay in sorted(layouts, key=lambda l: -l.y):
            x1, x2, x3, x4 = canonical_endpoints(lay)
            w.writerow([f"{lay.y:.12g}", fmt(x1), fmt(x2), fmt(x3), fmt(x4)])
        if zero_limit_model is not None and zero_limit_model.y1 > 0:
            m = zero_limit_model
            w.writerow(
                [
                    "0",
                    fmt(m.sigma2),
                    fmt(m.sigma2),
                    fmt(float(m.signal_values[0])),
                    fmt(float(m.signal_values[-1])),
                ]
            )
    finally:
        if close:
            fobj.close()
