"""Spectra, distribution functions, and histograms.

The package works with three views of a spectrum:

* ``DiscreteSpectrum`` -- a sorted multiset of eigenvalues.
* ``StepDF`` -- a distribution function made of point masses plus an optional
  sampled continuous part (piecewise-linear between grid points).  This is
  rich enough to hold both empirical distribution functions and numerically
  inverted limiting laws.
* ``Histogram`` -- binned counts for reporting.

`sup_distance` computes the Kolmogorov (sup) distance between two ``StepDF``
objects exactly for this class of functions: both are piecewise linear with
jumps, so it suffices to compare values and left limits on the union of
breakpoints.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "DiscreteSpectrum",
    "StepDF",
    "Histogram",
    "empirical_df",
    "sup_distance",
    "histogram",
]

# Total mass of a StepDF must sit within this of 1.
MASS_TOL = 1e-12


@dataclass
class DiscreteSpectrum:
    """A finite multiset of nonnegative reals, stored sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise DomainError(f"spectrum must be 1-D, got shape {vals.shape}")
        if vals.size and not np.all(np.isfinite(vals)):
            raise DomainError("spectrum contains non-finite values")
        if vals.size and vals.min() < 0.0:
            raise DomainError(f"negative eigenvalue {vals.min()!r} in spectrum")
        self.values = np.sort(vals)

    @classmethod
    def from_eigenvalues(cls, values, *, clip_tol: float = 1e-9) -> "DiscreteSpectrum":
        """Build from raw eigensolver output.

        Accepts complex values with negligible imaginary parts and clips
        small negative reals to zero; anything beyond ``clip_tol`` (relative
        to the spectral scale) is a domain error.
        """
        vals = np.asarray(values)
        scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
        if np.iscomplexobj(vals):
            if vals.size and np.max(np.abs(vals.imag)) > clip_tol * scale:
                raise DomainError(
                    f"imaginary parts up to {np.max(np.abs(vals.imag)):.3e} "
                    f"exceed tolerance {clip_tol * scale:.3e}"
                )
            vals = vals.real.copy()
        else:
            vals = vals.astype(float).copy()
        if vals.size and vals.min() < -clip_tol * scale:
            raise DomainError(
                f"negative eigenvalue {vals.min():.3e} exceeds clip tolerance"
            )
        np.clip(vals, 0.0, None, out=vals)
        return cls(vals)

    def __len__(self):
        return self.values.size

    def scaled(self, c: float) -> "DiscreteSpectrum":
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return DiscreteSpectrum(self.values * c)


@dataclass
class StepDF:
    """Distribution function: point masses plus an optional sampled
    continuous part.

    Parameters
    ----------
    atom_locs, atom_masses : arrays
        Point masses; locations strictly increasing, masses positive.
    grid, grid_cdf : arrays or None
        Sampled cumulative mass of the continuous part.  ``grid`` is strictly
        increasing and ``grid_cdf`` is nondecreasing with ``grid_cdf[0] == 0``
        (the continuous part accumulates from its first grid point; the
        function is taken piecewise linear between samples and constant
        outside them).

    Total mass (atoms plus ``grid_cdf[-1]``) must equal 1 within 1e-12.
    """

    atom_locs: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    grid: Optional[np.ndarray] = None
    grid_cdf: Optional[np.ndarray] = None

    def __post_init__(self):
        locs = np.asarray(self.atom_locs, dtype=float)
        masses = np.asarray(self.atom_masses, dtype=float)
        if locs.shape != masses.shape or locs.ndim != 1:
            raise DomainError("atom locations/masses must be matching 1-D arrays")
        if locs.size:
            if np.any(np.diff(locs) <= 0):
                raise DomainError("atom locations must be strictly increasing")
            if masses.min() <= 0:
                raise DomainError("atom masses must be positive")
        if (self.grid is None) != (self.grid_cdf is None):
            raise DomainError("grid and grid_cdf must be given together")
        if self.grid is not None:
            grid = np.asarray(self.grid, dtype=float)
            gcdf = np.asarray(self.grid_cdf, dtype=float)
            if grid.ndim != 1 or grid.shape != gcdf.shape or grid.size < 2:
                raise DomainError("grid/grid_cdf must be 1-D arrays of equal length >= 2")
            if np.any(np.diff(grid) <= 0):
                raise DomainError("grid must be strictly increasing")
            if abs(gcdf[0]) > MASS_TOL:
                raise DomainError("continuous part must start at zero cumulative mass")
            if np.any(np.diff(gcdf) < -MASS_TOL):
                raise DomainError("grid_cdf must be nondecreasing")
            self.grid = grid
            self.grid_cdf = gcdf
        self.atom_locs = locs
        self.atom_masses = masses
        total = self.total_mass()
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"total mass {total!r} differs from 1 beyond 1e-12")
        self._atom_cum = np.cumsum(masses) if masses.size else np.empty(0)

    def total_mass(self) -> float:
        t = float(self.atom_masses.sum()) if self.atom_masses.size else 0.0
        if self.grid_cdf is not None:
            t += float(self.grid_cdf[-1])
        return t

    def _continuous_at(self, x):
        if self.grid is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.interp(x, self.grid, self.grid_cdf)

    def eval(self, x):
        """F(x), right-continuous."""
        xs = np.asarray(x, dtype=float)
        out = np.asarray(self._continuous_at(xs), dtype=float)
        if self.atom_locs.size:
            idx = np.searchsorted(self.atom_locs, xs, side="right")
            out = out + np.where(idx > 0, self._atom_cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.isscalar(x) else out

    def eval_left(self, x):
        """Left limit F(x-)."""
        xs = np.asarray(x, dtype=float)
        out = np.asarray(self._continuous_at(xs), dtype=float)
        if self.atom_locs.size:
            idx = np.searchsorted(self.atom_locs, xs, side="left")
            out = out + np.where(idx > 0, self._atom_cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.isscalar(x) else out

    def breakpoints(self) -> np.ndarray:
        parts = [self.atom_locs]
        if self.grid is not None:
            parts.append(self.grid)
        return np.unique(np.concatenate(parts)) if parts else np.empty(0)

    def max_grid_increment(self) -> float:
        """Largest CDF increment across one grid cell of the continuous part.

        Bounds how far the sampled continuous part can sit from the smooth
        function it discretizes, hence the resolution of `sup_distance`
        against such a function.
        """
        if self.grid_cdf is None or self.grid_cdf.size < 2:
            return 0.0
        return float(np.max(np.diff(self.grid_cdf)))

    # -- CSV serialization: two columns "x,cdf".  Atoms are written as two
    #    rows sharing one x (left limit, then value), which keeps the layout
    #    flat while remaining invertible.

    def to_csv(self, fobj) -> None:
        close = False
        if isinstance(fobj, (str, bytes)):
            fobj = open(fobj, "w", newline="")
            close = True
        try:
            w = csv.writer(fobj)
            w.writerow(["x", "cdf"])
            xs = self.breakpoints()
            atom_set = set(self.atom_locs.tolist())
            for x in xs:
                if x in atom_set:
                    w.writerow([f"{x:.17g}", f"{self.eval_left(x):.17g}"])
                w.writerow([f"{x:.17g}", f"{self.eval(x):.17g}"])
        finally:
            if close:
                fobj.close()

    @classmethod
    def from_csv(cls, fobj) -> "StepDF":
        close = False
        if isinstance(fobj, (str, bytes)):
            fobj = open(fobj, "r", newline="")
            close = True
        try:
            rows = list(csv.reader(fobj))
        finally:
            if close:
                fobj.close()
        if not rows or rows[0] != ["x", "cdf"]:
            raise DomainError("expected 'x,cdf' header")
        xs = np.array([float(r[0]) for r in rows[1:]])
        fs = np.array([float(r[1]) for r in rows[1:]])
        if xs.size == 0:
            raise DomainError("empty distribution file")
        # Duplicate consecutive x values encode jumps.
        atom_locs, atom_masses = [], []
        uniq_x, uniq_f = [], []
        i = 0
        while i < xs.size:
            j = i
            while j + 1 < xs.size and xs[j + 1] == xs[i]:
                j += 1
            jump = fs[j] - fs[i]
            if jump > 0:
                atom_locs.append(xs[i])
                atom_masses.append(jump)
            uniq_x.append(xs[i])
            uniq_f.append(fs[j])
            i = j + 1
        uniq_x = np.array(uniq_x)
        uniq_f = np.array(uniq_f)
        atom_locs = np.array(atom_locs)
        atom_masses = np.array(atom_masses)
        # Subtract accumulated atom mass to recover the continuous part.
        if atom_locs.size:
            acc = np.cumsum(atom_masses)
            idx = np.searchsorted(atom_locs, uniq_x, side="right")
            cont = uniq_f - np.where(idx > 0, acc[np.maximum(idx - 1, 0)], 0.0)
        else:
            cont = uniq_f
        has_cont = uniq_x.size >= 2 and (cont[-1] - cont[0]) > MASS_TOL
        if has_cont:
            cont = cont - cont[0]
            np.clip(cont, 0.0, None, out=cont)
            return cls(atom_locs, atom_masses, uniq_x, cont)
        return cls(atom_locs, atom_masses)


@dataclass
class Histogram:
    """Bin edges plus counts; bins are [lo, hi) with the last bin closed."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2:
            raise DomainError("need at least two bin edges")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("bin edges must be strictly increasing")
        if counts.shape != (edges.size - 1,):
            raise DomainError("counts length must be len(edges) - 1")
        if counts.size and counts.min() < 0:
            raise DomainError("counts must be nonnegative")
        self.edges = edges
        self.counts = counts

    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, fobj) -> None:
        close = False
        if isinstance(fobj, (str, bytes)):
            fobj = open(fobj, "w", newline="")
            close = True
        try:
            w = csv.writer(fobj)
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([f"{lo:.17g}", f"{hi:.17g}", int(c)])
        finally:
            if close:
                fobj.close()

    @classmethod
    def from_csv(cls, fobj) -> "Histogram":
        close = False
        if isinstance(fobj, (str, bytes)):
            fobj = open(fobj, "r", newline="")
            close = True
        try:
            rows = list(csv.reader(fobj))
        finally:
            if close:
                fobj.close()
        if not rows or rows[0] != ["bin_lo", "bin_hi", "count"]:
            raise DomainError("expected 'bin_lo,bin_hi,count' header")
        los = [float(r[0]) for r in rows[1:]]
        his = [float(r[1]) for r in rows[1:]]
        counts = [int(r[2]) for r in rows[1:]]
        if not los:
            raise DomainError("empty histogram file")
        edges = np.array(los + [his[-1]])
        return cls(edges, np.array(counts))


def empirical_df(spectrum: DiscreteSpectrum) -> StepDF:
    """Empirical distribution function: mass 1/m at each of the m values
    (exact duplicates merge)."""
    if len(spectrum) == 0:
        raise DomainError("empirical distribution of an empty spectrum")
    locs, counts = np.unique(spectrum.values, return_counts=True)
    return StepDF(locs, counts / len(spectrum))


def sup_distance(f: StepDF, g: StepDF, *, return_bound: bool = False):
    """Kolmogorov sup-distance between two StepDFs.

    Both functions are piecewise linear between the union of their
    breakpoints, with jumps only at atoms, so the supremum is attained at a
    breakpoint value or left limit; the evaluation below is exact for this
    class.  With ``return_bound=True`` also returns the larger of the two
    continuous parts' maximum grid increments, which bounds the additional
    error when either grid is itself a discretization of a smooth CDF.
    """
    xs = np.union1d(f.breakpoints(), g.breakpoints())
    if xs.size == 0:
        raise DomainError("both distribution functions are empty")
    d_right = np.max(np.abs(f.eval(xs) - g.eval(xs)))
    d_left = np.max(np.abs(f.eval_left(xs) - g.eval_left(xs)))
    d = float(max(d_right, d_left))
    if return_bound:
        return d, max(f.max_grid_increment(), g.max_grid_increment())
    return d


def histogram(spectrum: DiscreteSpectrum, edges: Sequence[float]) -> Histogram:
    """Bin a spectrum into [lo, hi) bins, last bin closed on the right.

    Every eigenvalue must land inside [edges[0], edges[-1]].
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("edges must be a strictly increasing 1-D array, >= 2 entries")
    vals = spectrum.values
    if vals.size == 0:
        raise DomainError("cannot bin an empty spectrum")
    if vals.min() < edges[0] or vals.max() > edges[-1]:
        raise DomainError(
            f"values outside histogram range [{edges[0]!r}, {edges[-1]!r}]"
        )
    idx = np.searchsorted(edges, vals, side="right") - 1
    idx[vals == edges[-1]] = edges.size - 2
    counts = np.bincount(idx, minlength=edges.size - 1)
    return Histogram(edges, counts)
