"""Signal-count detection from sample eigenvalues.

Two estimators over a sorted eigenvalue spectrum:

* model-based: requires the limiting support to split into at least two
  intervals; counts eigenvalues above the midpoint of the first gap.
* blind largest-gap: scans consecutive eigenvalue ratios from above and
  picks the largest relative jump, guarded so at least a fixed fraction of
  the spectrum is always attributed to noise.

Both return the estimated signal count together with a noise-power
estimate taken as the mean of the remaining small eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dist import DiscreteSpectrum
from .errors import DomainError
from .support import SupportLayout

__all__ = [
    "DetectionMethod",
    "DetectionResult",
    "detect_model_based",
    "detect_blind",
    "estimate_sigma2",
]


class DetectionMethod(str, Enum):
    MODEL_BASED = "model_based"
    BLIND_GAP = "blind_gap"


@dataclass
class DetectionResult:
    """Outcome of a detection pass.

    ``gap_index`` is the position k such that eigenvalues above index k-1
    (0-based, ascending order) were declared signal; ``gap_ratio`` is the
    eigenvalue ratio across that boundary (nan when the boundary sits at
    either end of the spectrum).  ``consistent`` is False when the rule
    degenerated (every eigenvalue classified as signal), in which case the
    noise power estimate is nan.
    """

    q_hat: int
    sigma2_hat: float
    gap_index: int
    gap_ratio: float
    method: DetectionMethod
    consistent: bool = field(default=True)


def estimate_sigma2(spectrum: DiscreteSpectrum, q_hat: int) -> float:
    """Mean of the p - q_hat smallest eigenvalues."""
    p = spectrum.values.size
    if not (0 <= q_hat < p):
        raise DomainError(f"need 0 <= q_hat < p={p}, got {q_hat!r}")
    return float(np.mean(spectrum.values[: p - q_hat]))


def _boundary_ratio(vals: np.ndarray, k: int) -> float:
    """Ratio across boundary k (noise below, signal above); nan at the ends."""
    p = vals.size
    if k <= 0 or k >= p:
        return math.nan
    lo = vals[k - 1]
    hi = vals[k]
    if lo <= 0:
        return math.inf if hi > 0 else 1.0
    return float(hi / lo)


def detect_model_based(spectrum: DiscreteSpectrum, layout: SupportLayout) -> DetectionResult:
    """Count eigenvalues above the first gap of a split limiting support.

    The threshold is the midpoint of (first interval upper edge, second
    interval lower edge).  A layout with fewer than two intervals carries
    no gap to threshold on: that is a domain error, and the blind detector
    is the fallback.  If every eigenvalue clears the threshold the result
    is flagged inconsistent (the split-support model cannot explain a
    spectrum with no noise bulk) and sigma2_hat is nan.
    """
    if layout.n_components < 2:
        raise DomainError(
            "support does not split: model-based detection needs at least "
            "two intervals; use the blind detector instead"
        )
    t = 0.5 * (layout.intervals[0].hi + layout.intervals[1].lo)
    vals = spectrum.values
    q_hat = int(np.sum(vals > t))
    p = vals.size
    k = p - q_hat
    if q_hat == p:
        return DetectionResult(
            q_hat=q_hat,
            sigma2_hat=math.nan,
            gap_index=k,
            gap_ratio=_boundary_ratio(vals, k),
            method=DetectionMethod.MODEL_BASED,
            consistent=False,
        )
    return DetectionResult(
        q_hat=q_hat,
        sigma2_hat=estimate_sigma2(spectrum, q_hat),
        gap_index=k,
        gap_ratio=_boundary_ratio(vals, k),
        method=DetectionMethod.MODEL_BASED,
    )


def detect_blind(
    spectrum: DiscreteSpectrum, *, min_noise_fraction: float = 0.1
) -> DetectionResult:
    """Largest relative gap detector.

    Scans boundaries k = k_min .. p-1 (ascending eigenvalues, so signal
    count q = p - k) and picks the k maximizing vals[k] / vals[k-1].
    k_min = max(1, ceil(min_noise_fraction * p)) keeps at least that
    fraction of the spectrum classified as noise.  Ties resolve toward
    larger k, i.e. fewer signals.  A flat spectrum (all values equal up to
    1e-12 relative) detects zero signals.
    """
    if not (0 < min_noise_fraction < 1):
        raise DomainError(
            f"min_noise_fraction must lie in (0, 1), got {min_noise_fraction!r}"
        )
    vals = spectrum.values
    p = vals.size
    if p < 2:
        raise DomainError("need at least two eigenvalues for gap detection")
    if vals[-1] - vals[0] <= 1e-12 * max(1.0, abs(vals[-1])):
        return DetectionResult(
            q_hat=0,
            sigma2_hat=float(np.mean(vals)),
            gap_index=p,
            gap_ratio=1.0,
            method=DetectionMethod.BLIND_GAP,
        )
    k_min = max(1, math.ceil(min_noise_fraction * p))
    best_k = None
    best_r = -math.inf
    for k in range(k_min, p):
        lo = vals[k - 1]
        hi = vals[k]
        if lo <= 0:
            r = math.inf if hi > 0 else 1.0
        else:
            r = hi / lo
        if r >= best_r:
            best_r = r
            best_k = k
    q_hat = p - best_k
    return DetectionResult(
        q_hat=q_hat,
        sigma2_hat=estimate_sigma2(spectrum, q_hat),
        gap_index=best_k,
        gap_ratio=float(best_r),
        method=DetectionMethod.BLIND_GAP,
    )
