"""End-to-end acceptance gate.

Ten checks covering the analytic layer (endpoints, moments, boundary-curve
identities, split threshold), the numeric layer (transform solver, density
inversion, interval masses), the simulation layer (matched covariance
constructions, uniform convergence of empirical spectra, extreme
eigenvalues), and the detection protocol at desk scale.  Tolerances are
frozen; every random quantity is seeded.
"""

import math

import numpy as np
import pytest

from specsplit import (
    DiscreteSpectrum,
    NoiseSignalModel,
    build_scenario,
    canonical_endpoints,
    critical_y,
    detect_blind,
    empirical_df,
    find_support_layout,
    interval_mass,
    limit_moments_from_population,
    limiting_cdf,
    limiting_density,
    model_from_spectrum,
    mp_density,
    population_moments_from_limit,
    sample_covariance,
    sample_covariance_equiv,
    single_spike_critical_y,
    snapshots,
    solve_stieltjes,
    sup_distance,
)
from specsplit.support import edge_curve, split_criterion


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def desk_scenario():
    """Frozen 50-sensor, 35-source scenario: SNRs span 0..10 dB."""
    q = 35
    return build_scenario(
        p=50,
        q=q,
        angles=np.deg2rad(np.linspace(-60.0, 60.0, q)),
        sigma2=1.0,
        snr_db=np.linspace(0.0, 10.0, q),
        bandwidth=2,
        seed=3,
    )


def test_pure_noise_endpoints_match_closed_form():
    """Support edges sigma2 (1 -/+ sqrt(y))^2 on a 6 x 3 grid; exact zero atom
    of 1 - 1/y whenever y > 1."""
    for y in (0.04, 0.25, 0.5, 1.0, 2.0, 4.0):
        for s2 in (0.5, 1.0, 3.0):
            lay = find_support_layout(y, NoiseSignalModel(s2))
            assert lay.n_components == 1
            lo = s2 * (1.0 - math.sqrt(y)) ** 2
            hi = s2 * (1.0 + math.sqrt(y)) ** 2
            assert abs(lay.intervals[0].lo - lo) < 1e-8
            assert abs(lay.intervals[0].hi - hi) < 1e-8
            if y > 1.0:
                assert lay.atom_at_zero == 1.0 - 1.0 / y
            else:
                assert lay.atom_at_zero == 0.0
    print("PASS: pure-noise endpoints on 18-cell grid within 1e-8, atoms exact")


def test_moment_map_known_values_and_round_trip():
    """Flat unit moments at y = 1 give Catalan numbers 1, 2, 5, 14, 42; the
    map inverts to better than 1e-9 at order 8 for 100 seeded draws."""
    nu = limit_moments_from_population((1.0,) * 5, 1.0)
    np.testing.assert_allclose(nu, [1.0, 2.0, 5.0, 14.0, 42.0], rtol=0, atol=1e-12)

    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        atoms = rng.uniform(0.1, 1.5, 4)
        weights = rng.dirichlet(np.ones(4))
        mu = np.array([np.sum(weights * atoms ** k) for k in range(1, 9)])
        y = rng.uniform(0.05, 1.0)
        back = population_moments_from_limit(limit_moments_from_population(mu, y), y)
        worst = max(worst, float(np.abs(back - mu).max()))
    assert worst < 1e-9
    print(f"PASS: Catalan values exact to 1e-12; order-8 round trip max err {worst:.2e}")


def test_boundary_curve_derivative_identity():
    """f'(a) = (1 - g(a)) / a^2 checked by central differences at 1000 seeded
    (a, y, model) samples with relative error < 1e-6.

    Samples where |1 - g| < 1e-2 are redrawn: there f' passes through zero
    and a relative comparison is ill-posed.
    """
    rng = np.random.default_rng(33)
    checked = 0
    worst = 0.0
    while checked < 1000:
        s2 = rng.uniform(0.5, 2.0)
        nsig = int(rng.integers(1, 4))
        vals = np.sort(s2 * (1.0 + rng.uniform(0.5, 8.0, nsig)))
        weights = rng.dirichlet(np.ones(nsig))
        model = NoiseSignalModel(s2, rng.uniform(0.05, 0.8), tuple(zip(vals, weights)))
        y = rng.uniform(0.02, 3.0)
        poles = -1.0 / np.concatenate(([model.sigma2], model.signal_values))
        alpha = rng.uniform(-3.0 / s2, 3.0 / s2)
        if alpha == 0.0 or np.min(np.abs(alpha - poles)) < 0.05 * abs(alpha):
            continue
        g = split_criterion(alpha, y, model)
        if abs(1.0 - g) < 1e-2:
            continue
        h = 1e-6 * max(1.0, abs(alpha))
        if np.min(np.abs(alpha + h - poles)) < h or np.min(np.abs(alpha - h - poles)) < h:
            continue
        fd = (edge_curve(alpha + h, y, model) - edge_curve(alpha - h, y, model)) / (2 * h)
        ident = (1.0 - g) / alpha ** 2
        worst = max(worst, abs(fd - ident) / abs(ident))
        checked += 1
    assert worst < 1e-6
    print(f"PASS: curve-derivative identity at 1000 samples, worst rel err {worst:.2e}")


def test_split_threshold_matches_closed_form():
    """Numeric critical ratio vs the single-spike closed form, relative error
    < 1e-6 over nine models; the split flips exactly at crit * (1 +- 1e-6)."""
    for b in (2.0, 5.0, 10.0):
        for y1 in (0.05, 0.2, 0.5):
            model = NoiseSignalModel(1.0, y1, ((b, 1.0),))
            closed = single_spike_critical_y(model)
            numeric = critical_y(model)
            assert abs(numeric - closed) / closed < 1e-6
            assert find_support_layout(closed * (1 - 1e-6), model).n_components == 2
            assert find_support_layout(closed * (1 + 1e-6), model).n_components == 1
    print("PASS: split threshold closed form within 1e-6, flips at the boundary")


def test_transform_solver_density_and_masses():
    """Solver residuals stay below 1e-12 on a z sweep; the inverted
    pure-noise density matches the closed form to 1e-6 at 100 interior
    points; numeric quadrature of the noise component recovers 1 - y1
    within 1e-4."""
    cases = [
        (0.25, NoiseSignalModel(1.0)),
        (2.5, NoiseSignalModel(0.5)),
        (0.1, NoiseSignalModel(1.0, 0.1, ((5.0, 1.0),))),
    ]
    worst_res = 0.0
    for y, model in cases:
        top = model.sigma2 * (1 + math.sqrt(y)) ** 2
        if model.atoms:
            top = float(model.signal_values[-1]) * (1 + math.sqrt(y)) ** 2
        for re in np.linspace(-1.0, top + 1.0, 8):
            for im in (1e-6, 1e-3, 0.1):
                sol = solve_stieltjes(complex(re, im), y, model)
                worst_res = max(worst_res, sol.residual)
    assert worst_res < 1e-12

    y, s2 = 0.36, 1.3
    lo = s2 * (1 - math.sqrt(y)) ** 2
    hi = s2 * (1 + math.sqrt(y)) ** 2
    xs = np.linspace(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo), 100)
    err = np.abs(
        limiting_density(xs, y, NoiseSignalModel(s2)) - mp_density(xs, y, s2)
    ).max()
    assert err < 1e-6

    spike = NoiseSignalModel(1.0, 0.1, ((5.0, 1.0),))
    lay = find_support_layout(0.1, spike)
    assert lay.n_components == 2
    mass = interval_mass(lay.intervals[0].lo, lay.intervals[0].hi, 0.1, spike)
    assert abs(mass - 0.9) < 1e-4
    print(
        f"PASS: residuals <= {worst_res:.2e}; density err {err:.2e}; "
        f"noise mass off by {abs(mass - 0.9):.2e}"
    )


def test_two_covariance_constructions_match_moments():
    """Direct sample covariance vs the product construction: first four
    spectral moments agree within three standard errors over 200 trials."""
    p, n, trials = 30, 60, 200
    sc = build_scenario(p, 4, np.deg2rad([-40.0, -10.0, 15.0, 45.0]), 1.0,
                        [3.0, 5.0, 7.0, 9.0], bandwidth=1, seed=5)
    m_direct = np.zeros((trials, 4))
    m_product = np.zeros((trials, 4))
    for t in range(trials):
        va = np.linalg.eigvalsh(sample_covariance(snapshots(sc, n, [5, 0, t])))
        vb = np.linalg.eigvals(sample_covariance_equiv(sc, n, [5, 1, t])).real
        for k in range(1, 5):
            m_direct[t, k - 1] = np.mean(va ** k)
            m_product[t, k - 1] = np.mean(vb ** k)
    diff = np.abs(m_direct.mean(0) - m_product.mean(0))
    se = np.sqrt(m_direct.var(0, ddof=1) / trials + m_product.var(0, ddof=1) / trials)
    assert np.all(diff <= 3.0 * se)
    print(f"PASS: construction moments within {np.max(diff / se):.2f} SE (limit 3)")


def test_empirical_spectra_converge_uniformly():
    """Median sup distance to the numeric limit at n = 3p drops below 0.08 at
    p = 100 and below 0.04 at p = 400, and decreases between the two."""
    model = NoiseSignalModel(1.0, 0.2, ((3.0, 0.5), (7.0, 0.5)))
    y = 1.0 / 3.0
    limit = limiting_cdf(y, model, find_support_layout(y, model))

    def distance(p, seed):
        n = 3 * p
        tdiag = np.concatenate([
            np.full(int(0.8 * p), 1.0),
            np.full(int(0.1 * p), 3.0),
            np.full(int(0.1 * p), 7.0),
        ])
        rng = np.random.default_rng(np.random.SeedSequence([404, p, seed]))
        x = np.sqrt(tdiag)[:, None] * crandn(rng, p, n)
        vals = np.linalg.eigvalsh(x @ x.conj().T / n)
        return sup_distance(empirical_df(DiscreteSpectrum.from_eigenvalues(vals)), limit)

    med100 = float(np.median([distance(100, s) for s in range(5)]))
    med400 = float(np.median([distance(400, s) for s in range(5)]))
    assert med100 < 0.08
    assert med400 < 0.04
    assert med400 < med100
    print(f"PASS: sup-distance medians {med100:.4f} (p=100) -> {med400:.4f} (p=400)")


def test_detection_protocol_desk_scale():
    """Frozen 50-sensor scenario: blind detection finds all 35 sources in
    >= 95% of 20 trials at n = 1500 and >= 90% at n = 250; noise eigenvalues
    stay inside the widened noise component in >= 90% of trials; the
    noise-to-signal gap widens as y falls through 1, 1/5, 1/30; endpoints
    approach (sigma2, sigma2, b_min, b_max) as y -> 0."""
    sc = desk_scenario()
    p, q = sc.p, sc.q
    model = model_from_spectrum(sc.true_spectrum, sc.sigma2, q)

    gaps = []
    layouts = {}
    for y in (1.0, 0.2, 1.0 / 30.0):
        lay = find_support_layout(y, model)
        layouts[y] = lay
        x1, x2, x3, _ = canonical_endpoints(lay)
        gaps.append(0.0 if x2 is None else x3 - x2)
    assert gaps[0] < gaps[1] < gaps[2]

    rates = {}
    coverage = 0
    for n_idx, n in enumerate((1500, 250)):
        lay = layouts[p / n] if p / n in layouts else find_support_layout(p / n, model)
        band_lo = lay.intervals[0].lo - 0.1
        band_hi = lay.intervals[0].hi + 0.1
        hits = 0
        for t in range(20):
            r = sample_covariance(snapshots(sc, n, [3, n_idx, t]))
            vals = np.linalg.eigvalsh(r)
            if detect_blind(DiscreteSpectrum.from_eigenvalues(vals)).q_hat == q:
                hits += 1
            if n == 1500:
                noise = vals[: p - q]
                if noise.min() >= band_lo and noise.max() <= band_hi:
                    coverage += 1
        rates[n] = hits
    assert rates[1500] >= 19  # 95% of 20
    assert rates[250] >= 18  # 90% of 20
    assert coverage >= 18  # 90% of 20

    b1 = float(model.signal_values[0])
    bj = float(model.signal_values[-1])
    devs = []
    for y in (1e-2, 1e-3):
        x1, x2, x3, x4 = canonical_endpoints(find_support_layout(y, model))
        devs.append((abs(x1 - 1.0), abs(x2 - 1.0), abs(x3 - b1), abs(x4 - bj)))
    assert all(b < a for a, b in zip(devs[0], devs[1]))
    assert devs[1][0] < 0.05 and devs[1][1] < 0.05
    assert devs[1][2] < 0.25 and devs[1][3] < 8.0
    print(
        f"PASS: detection {rates[1500]}/20 at n=1500, {rates[250]}/20 at n=250, "
        f"coverage {coverage}/20; gaps {gaps[0]:.3f} < {gaps[1]:.3f} < {gaps[2]:.3f}"
    )


def test_product_spectrum_counting_bound():
    """For nonnegative Hermitian A, B and thresholds alpha, beta > 0, the
    count of AB eigenvalues <= alpha * beta never exceeds the count of A
    eigenvalues <= alpha plus the count of B eigenvalues <= beta; 1000
    seeded draws, zero violations."""
    rng = np.random.default_rng(99)
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        a = crandn(rng, m, m)
        b = crandn(rng, m, m)
        a = a @ a.conj().T
        b = b @ b.conj().T
        alpha, beta = rng.uniform(0.05, 5.0, 2)
        wa, va = np.linalg.eigh(a)
        half = (va * np.sqrt(np.clip(wa, 0.0, None))) @ va.conj().T
        prod_vals = np.linalg.eigvalsh(half @ b @ half)
        n_ab = int(np.count_nonzero(prod_vals <= alpha * beta))
        n_a = int(np.count_nonzero(wa <= alpha))
        n_b = int(np.count_nonzero(np.linalg.eigvalsh(b) <= beta))
        assert n_ab <= n_a + n_b
    print("PASS: product-spectrum counting bound, 1000 draws, zero violations")


def test_extreme_eigenvalue_concentration():
    """Pure noise at p = 200, n = 800: the largest sample eigenvalue lands
    within 0.1 of (1 + sqrt(1/4))^2 = 2.25 in at least 18 of 20 seeds."""
    hits = 0
    for s in range(20):
        rng = np.random.default_rng(np.random.SeedSequence([606, s]))
        x = crandn(rng, 200, 800)
        lam = float(np.linalg.eigvalsh(x @ x.conj().T / 800.0).max())
        hits += abs(lam - 2.25) < 0.1
    assert hits >= 18
    print(f"PASS: largest eigenvalue within 0.1 of 2.25 in {hits}/20 seeds")
