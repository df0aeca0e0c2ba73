"""Sensor-array simulation: correlated sources through a uniform linear
array plus white noise.

The snapshot model is X(t) = B s(t) + noise, where B = A C couples q unit
sources through a mixing matrix C into a p-element half-wavelength array
with steering matrix A.  The population covariance is R = B B* + sigma2 I,
whose spectrum has the p - q smallest eigenvalues equal to sigma2 and the
rest determined by the mixed source powers.

Complex Gaussians follow the standardized convention: real and imaginary
parts independent with variance 1/2, so E|Y_ij|^2 = 1.

Randomness is fully keyed: every scenario or snapshot stream derives from a
seed sequence over (seed, stream tag, index), so any trial can be replayed
independently of execution order or thread count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import DiscreteSpectrum
from .errors import DomainError, NumericError

__all__ = [
    "Scenario",
    "SnapshotBatch",
    "steering_matrix",
    "build_scenario",
    "snapshots",
    "sample_covariance",
    "sample_covariance_equiv",
    "hermitian_eigenvalues",
]

# Stream tags keeping scenario-level and snapshot-level draws independent.
_STREAM_MIXING = 2

# Hadamard ratio |det C| / prod ||row|| below which C is regenerated.
_SINGULAR_TOL = 1e-12


def _seed_list(seed) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_seed_list(seed)))


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Standardized complex Gaussian array: Re, Im ~ N(0, 1/2) independent."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


@dataclass
class Scenario:
    """A fixed array/source configuration with its exact covariance."""

    p: int
    q: int
    angles: np.ndarray
    sigma2: float
    snr_db: np.ndarray
    bandwidth: int
    seed: int
    steering: np.ndarray      # p x q
    mixing: np.ndarray        # q x q
    transfer: np.ndarray      # p x q, steering @ mixing
    covariance: np.ndarray    # p x p Hermitian
    true_spectrum: DiscreteSpectrum


@dataclass
class SnapshotBatch:
    """n array snapshots (columns) with the seed key that generated them."""

    data: np.ndarray
    seed_key: tuple

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def to_csv(self, fobj) -> None:
        """Debug dump: rows = sensors, columns re_0,im_0,re_1,im_1,..."""
        close = False
        if isinstance(fobj, (str, bytes)):
            fobj = open(fobj, "w", newline="")
            close = True
        try:
            w = csv.writer(fobj)
            header = []
            for j in range(self.n):
                header += [f"re_{j}", f"im_{j}"]
            w.writerow(header)
            for row in self.data:
                out = []
                for v in row:
                    out += [f"{v.real:.17g}", f"{v.imag:.17g}"]
                w.writerow(out)
        finally:
            if close:
                fobj.close()


def steering_matrix(angles: Sequence[float], p: int) -> np.ndarray:
    """Steering matrix of a half-wavelength uniform linear array.

    Entry (k, i) = exp(-i pi k sin(angle_i)), k = 0..p-1; angles in radians,
    strictly inside (-pi/2, pi/2) and mutually distinct (a Vandermonde
    structure, so the matrix has full column rank when p >= q).
    """
    th = np.asarray(angles, dtype=float)
    if th.ndim != 1 or th.size == 0:
        raise DomainError("angles must be a nonempty 1-D sequence")
    if p < th.size:
        raise DomainError(f"need p >= q, got p={p}, q={th.size}")
    if np.any(np.abs(th) >= math.pi / 2):
        raise DomainError("angles must lie strictly inside (-pi/2, pi/2)")
    s = np.sin(th)
    if np.unique(s).size != s.size:
        raise DomainError("angles must have distinct sines (rank requirement)")
    k = np.arange(p)[:, None]
    return np.exp(-1j * math.pi * k * s[None, :])


def _banded_mixing(rng: np.random.Generator, q: int, bandwidth: int) -> np.ndarray:
    """Random banded C with a diagonal shift forcing strict diagonal
    dominance (hence nonsingularity)."""
    c = _crandn(rng, q, q)
    i, j = np.indices((q, q))
    c[np.abs(i - j) > bandwidth] = 0.0
    shift = 2.0 * np.abs(c).sum(axis=1)
    c[np.diag_indices(q)] += shift
    return c


def build_scenario(
    p: int,
    q: int,
    angles: Sequence[float],
    sigma2: float,
    snr_db: Sequence[float],
    bandwidth: int,
    seed: int,
    *,
    max_attempts: int = 10,
) -> Scenario:
    """Assemble a scenario with source powers pinned to the requested SNRs.

    The mixing matrix is banded complex Gaussian, diagonally shifted, then
    row-rescaled so source j has power sigma2 * 10**(snr_db[j]/10).  A draw
    whose Hadamard ratio |det C| / prod ||row|| falls below 1e-12 is
    regenerated from a fresh substream; ten failures is a domain error.
    """
    if not (0 < q <= p):
        raise DomainError(f"need 0 < q <= p, got p={p}, q={q}")
    if not (sigma2 > 0):
        raise DomainError(f"sigma2 must be positive, got {sigma2!r}")
    if not (0 <= bandwidth < q):
        raise DomainError(f"bandwidth must lie in [0, q), got {bandwidth!r}")
    snr = np.asarray(snr_db, dtype=float)
    if snr.shape != (q,):
        raise DomainError(f"snr_db must have length q={q}")
    a_mat = steering_matrix(angles, p)
    if a_mat.shape[1] != q:
        raise DomainError(f"angles length {a_mat.shape[1]} != q={q}")

    target = np.sqrt(sigma2 * 10.0 ** (snr / 10.0))
    c_mat = None
    for attempt in range(max_attempts):
        rng = _rng([seed, _STREAM_MIXING, attempt])
        cand = _banded_mixing(rng, q, bandwidth)
        rows = np.linalg.norm(cand, axis=1)
        cand = cand * (target / rows)[:, None]
        sign, logdet = np.linalg.slogdet(cand)
        lognorms = float(np.log(np.linalg.norm(cand, axis=1)).sum())
        if sign != 0 and logdet - lognorms > math.log(_SINGULAR_TOL):
            c_mat = cand
            break
    if c_mat is None:
        raise DomainError(
            f"mixing matrix singular after {max_attempts} attempts (seed {seed})"
        )

    b_mat = a_mat @ c_mat
    r_mat = b_mat @ b_mat.conj().T + sigma2 * np.eye(p)
    r_mat = 0.5 * (r_mat + r_mat.conj().T)
    spectrum = DiscreteSpectrum.from_eigenvalues(np.linalg.eigvalsh(r_mat))
    noise_part = spectrum.values[: p - q]
    tol = 1e-9 * max(1.0, sigma2)
    if noise_part.size and np.max(np.abs(noise_part - sigma2)) > tol:
        raise NumericError(
            "covariance noise eigenvalues deviate from sigma2",
            deviation=float(np.max(np.abs(noise_part - sigma2))),
        )
    return Scenario(
        p=p,
        q=q,
        angles=np.asarray(angles, dtype=float),
        sigma2=float(sigma2),
        snr_db=snr,
        bandwidth=int(bandwidth),
        seed=int(seed),
        steering=a_mat,
        mixing=c_mat,
        transfer=b_mat,
        covariance=r_mat,
        true_spectrum=spectrum,
    )


def snapshots(scenario: Scenario, n: int, seed) -> SnapshotBatch:
    """Draw n snapshots X = B V + sigma W with V, W standardized complex
    Gaussian; ``seed`` may be an int or a (master, ...) key tuple."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n!r}")
    rng = _rng(seed)
    v = _crandn(rng, scenario.q, n)
    w = _crandn(rng, scenario.p, n)
    data = scenario.transfer @ v + math.sqrt(scenario.sigma2) * w
    return SnapshotBatch(data=data, seed_key=tuple(_seed_list(seed)))


def sample_covariance(batch: SnapshotBatch) -> np.ndarray:
    """(1/n) X X*, Hermitian part enforced."""
    x = batch.data
    r = x @ x.conj().T / batch.n
    return 0.5 * (r + r.conj().T)


def sample_covariance_equiv(scenario: Scenario, n: int, seed) -> np.ndarray:
    """(1/n) Y Y* (B B* + sigma2 I) with Y standardized complex Gaussian.

    Not Hermitian, but similar to a Hermitian nonnegative matrix, so its
    eigenvalues are real and nonnegative (up to solver noise); its spectrum
    matches `sample_covariance` of the same scenario in distribution.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n!r}")
    rng = _rng(seed)
    y = _crandn(rng, scenario.p, n)
    return (y @ y.conj().T / n) @ scenario.covariance


def _offdiag_norm(m: np.ndarray) -> float:
    off = m - np.diag(np.diag(m))
    return float(np.linalg.norm(off))


def _jacobi_eigvalsh(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Kept as a self-contained fallback for the LAPACK route; O(n^3) per sweep
    with quadratic tail convergence.  Stops when the off-diagonal Frobenius
    norm falls below tol * ||M||.
    """
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= tol * scale:
            diag = np.real(np.diag(a))
            return np.sort(diag)
        for p_i in range(n - 1):
            for q_i in range(p_i + 1, n):
                apq = a[p_i, q_i]
                if abs(apq) <= 1e-300:
                    continue
                app = a[p_i, p_i].real
                aqq = a[q_i, q_i].real
                phase = apq / abs(apq)
                # Real symmetric 2x2 rotation after factoring the phase out;
                # smaller-magnitude root of t^2 - 2 tau t - 1 = 0.
                tau = (aqq - app) / (2.0 * abs(apq))
                t = -math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot_p = np.array([c, s * phase.conjugate()])
                rot_q = np.array([-s * phase, c])
                rows = a[[p_i, q_i], :].copy()
                a[p_i, :] = rot_p[0].conjugate() * rows[0] + rot_p[1].conjugate() * rows[1]
                a[q_i, :] = rot_q[0].conjugate() * rows[0] + rot_q[1].conjugate() * rows[1]
                cols = a[:, [p_i, q_i]].copy()
                a[:, p_i] = cols[:, 0] * rot_p[0] + cols[:, 1] * rot_p[1]
                a[:, q_i] = cols[:, 0] * rot_q[0] + cols[:, 1] * rot_q[1]
    raise NumericError(
        "Jacobi sweeps did not converge",
        offdiag=_offdiag_norm(a),
        sweeps=max_sweeps,
    )


def hermitian_eigenvalues(m: np.ndarray, *, method: str = "auto") -> DiscreteSpectrum:
    """Eigenvalues of a Hermitian matrix as a `DiscreteSpectrum`.

    ``method``: "auto"/"lapack" use the standard solver; "jacobi" runs the
    self-contained cyclic Jacobi fallback.  Non-Hermitian input (beyond
    1e-10 relative) is a domain error.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"need a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.linalg.norm(m - m.conj().T) > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian within 1e-10 relative")
    if method in ("auto", "lapack"):
        vals = np.linalg.eigvalsh(m)
    elif method == "jacobi":
        vals = _jacobi_eigvalsh(m)
    else:
        raise DomainError(f"unknown method {method!r}")
    return DiscreteSpectrum.from_eigenvalues(vals)
