"""Experiment driver: config files, Monte Carlo trials, report files.

Config grammar (shared by scenario and experiment files): one ``key = value``
per line, ``#`` starts a comment, blank lines ignored.  Lists are
comma-separated.  Two shorthands expand at parse time:

* ``angles_deg = uniform(lo, hi, count)`` -- count evenly spaced angles.
* ``snr_db = random(lo, hi)`` -- q i.i.d. uniform draws, keyed by the
  scenario seed so the expansion is reproducible.

Scenario keys: p, q, sigma2, angles_deg, snr_db, bandwidth, seed.
Experiment keys: scenario (path, relative to the experiment file), n (list),
trials, seed, out, and optional moment_order (8), min_noise_fraction (0.1),
detector (auto|model|blind), noise_margin (0.1), jobs (1).

Every trial draws from a stream keyed by (master seed, n index, trial
index), so reports are byte-identical for any jobs count and individual
trials can be replayed in isolation.  Report files carry no timestamps.
"""

from __future__ import annotations

import csv
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .arraysim import Scenario, build_scenario, hermitian_eigenvalues, sample_covariance, snapshots
from .detect import DetectionMethod, detect_blind, detect_model_based
from .dist import DiscreteSpectrum, histogram
from .errors import ConfigError, DomainError, NumericError
from .moments import limit_moments_from_population, spectrum_moments
from .support import (
    NoiseSignalModel,
    SupportLayout,
    canonical_endpoints,
    critical_y,
    find_support_layout,
    model_from_spectrum,
    write_endpoints_csv,
)

__all__ = [
    "ScenarioConfig",
    "ExperimentConfig",
    "TrialRecord",
    "NBlockResult",
    "ExperimentReport",
    "parse_scenario_config",
    "parse_experiment_config",
    "scenario_from_config",
    "run_experiment",
    "write_report",
    "emit_density_curve",
]

# Substream tag for the random(lo, hi) SNR shorthand; the mixing matrix
# uses tag 2 (see arraysim) so the two never collide.
_STREAM_SNR = 1

_UNIFORM_RE = re.compile(r"^uniform\(\s*([^,()]+)\s*,\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")
_RANDOM_RE = re.compile(r"^random\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")

_DETECTORS = ("auto", "model", "blind")


@dataclass
class ScenarioConfig:
    path: str
    p: int
    q: int
    sigma2: float
    angles_deg: np.ndarray
    snr_db: np.ndarray
    bandwidth: int
    seed: int


@dataclass
class ExperimentConfig:
    path: str
    scenario: ScenarioConfig
    n_values: list
    trials: int
    seed: int
    out: str
    moment_order: int = 8
    min_noise_fraction: float = 0.1
    detector: str = "auto"
    noise_margin: float = 0.1
    jobs: int = 1


@dataclass
class TrialRecord:
    n: int
    trial: int
    seed_key: tuple
    q_hat: Optional[int] = None
    sigma2_hat: float = math.nan
    gap_ratio: float = math.nan
    method: str = ""
    consistent: bool = True
    coverage: Optional[bool] = None
    error: str = ""
    eigenvalues: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.error == ""


@dataclass
class NBlockResult:
    n: int
    y: float
    layout: SupportLayout
    detector_used: str
    trials: list = field(default_factory=list)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    scenario: Scenario
    model: NoiseSignalModel
    critical_ratio: float
    blocks: list


# ---------------------------------------------------------------------------
# config parsing


def _read_pairs(path: str):
    """(lineno, key, value) triples; comments stripped, duplicates rejected."""
    try:
        with open(path) as f:
            raw_lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from None
    pairs = []
    seen = {}
    for lineno, raw in enumerate(raw_lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError("expected 'key = value'", path, lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first at line {seen[key]})", path, lineno)
        seen[key] = lineno
        pairs.append((lineno, key, value))
    return pairs


def _want_int(path, lineno, key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}", path, lineno) from None


def _want_float(path, lineno, key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}", path, lineno) from None


def _want_float_list(path, lineno, key, value):
    out = []
    for part in value.split(","):
        out.append(_want_float(path, lineno, key, part.strip()))
    return np.asarray(out, dtype=float)


def _want_int_list(path, lineno, key, value):
    return [_want_int(path, lineno, key, part.strip()) for part in value.split(",")]


def parse_scenario_config(path: str) -> ScenarioConfig:
    """Parse a scenario file, expanding the uniform/random shorthands."""
    fields = {}
    lines = {}
    known = {"p", "q", "sigma2", "angles_deg", "snr_db", "bandwidth", "seed"}
    for lineno, key, value in _read_pairs(path):
        if key not in known:
            raise ConfigError(f"unknown scenario key {key!r}", path, lineno)
        fields[key] = value
        lines[key] = lineno
    missing = sorted(known - fields.keys())
    if missing:
        raise ConfigError(f"missing scenario keys: {', '.join(missing)}", path)

    p = _want_int(path, lines["p"], "p", fields["p"])
    q = _want_int(path, lines["q"], "q", fields["q"])
    sigma2 = _want_float(path, lines["sigma2"], "sigma2", fields["sigma2"])
    bandwidth = _want_int(path, lines["bandwidth"], "bandwidth", fields["bandwidth"])
    seed = _want_int(path, lines["seed"], "seed", fields["seed"])

    m = _UNIFORM_RE.match(fields["angles_deg"])
    if m:
        lo = _want_float(path, lines["angles_deg"], "angles_deg", m.group(1))
        hi = _want_float(path, lines["angles_deg"], "angles_deg", m.group(2))
        count = _want_int(path, lines["angles_deg"], "angles_deg", m.group(3))
        if count < 1 or not lo < hi:
            raise ConfigError("angles_deg: need uniform(lo, hi, count) with lo < hi, count >= 1",
                              path, lines["angles_deg"])
        angles = np.linspace(lo, hi, count)
    else:
        angles = _want_float_list(path, lines["angles_deg"], "angles_deg", fields["angles_deg"])
    if angles.size != q:
        raise ConfigError(f"angles_deg: expected {q} angles, got {angles.size}",
                          path, lines["angles_deg"])

    m = _RANDOM_RE.match(fields["snr_db"])
    if m:
        lo = _want_float(path, lines["snr_db"], "snr_db", m.group(1))
        hi = _want_float(path, lines["snr_db"], "snr_db", m.group(2))
        if not lo <= hi:
            raise ConfigError("snr_db: need random(lo, hi) with lo <= hi", path, lines["snr_db"])
        rng = np.random.default_rng(np.random.SeedSequence([seed, _STREAM_SNR]))
        snr = rng.uniform(lo, hi, q)
    else:
        snr = _want_float_list(path, lines["snr_db"], "snr_db", fields["snr_db"])
    if snr.size != q:
        raise ConfigError(f"snr_db: expected {q} values, got {snr.size}", path, lines["snr_db"])

    return ScenarioConfig(path=path, p=p, q=q, sigma2=sigma2, angles_deg=angles,
                          snr_db=snr, bandwidth=bandwidth, seed=seed)


def parse_experiment_config(path: str) -> ExperimentConfig:
    """Parse an experiment file; the scenario path resolves relative to it."""
    fields = {}
    lines = {}
    known = {"scenario", "n", "trials", "seed", "out", "moment_order",
             "min_noise_fraction", "detector", "noise_margin", "jobs"}
    required = {"scenario", "n", "trials", "seed", "out"}
    for lineno, key, value in _read_pairs(path):
        if key not in known:
            raise ConfigError(f"unknown experiment key {key!r}", path, lineno)
        fields[key] = value
        lines[key] = lineno
    missing = sorted(required - fields.keys())
    if missing:
        raise ConfigError(f"missing experiment keys: {', '.join(missing)}", path)

    scen_path = fields["scenario"]
    if not os.path.isabs(scen_path):
        scen_path = os.path.join(os.path.dirname(os.path.abspath(path)), scen_path)
    scenario = parse_scenario_config(scen_path)

    n_values = _want_int_list(path, lines["n"], "n", fields["n"])
    if any(n < 1 for n in n_values):
        raise ConfigError("n: sample counts must be >= 1", path, lines["n"])
    if len(set(n_values)) != len(n_values):
        raise ConfigError("n: sample counts must be distinct", path, lines["n"])
    trials = _want_int(path, lines["trials"], "trials", fields["trials"])
    if trials < 1:
        raise ConfigError("trials: must be >= 1", path, lines["trials"])
    seed = _want_int(path, lines["seed"], "seed", fields["seed"])
    out = fields["out"]

    cfg = ExperimentConfig(path=path, scenario=scenario, n_values=n_values,
                           trials=trials, seed=seed, out=out)
    if "moment_order" in fields:
        cfg.moment_order = _want_int(path, lines["moment_order"], "moment_order",
                                     fields["moment_order"])
        if not (1 <= cfg.moment_order <= 20):
            raise ConfigError("moment_order: must lie in [1, 20]", path, lines["moment_order"])
    if "min_noise_fraction" in fields:
        cfg.min_noise_fraction = _want_float(path, lines["min_noise_fraction"],
                                             "min_noise_fraction", fields["min_noise_fraction"])
        if not (0 < cfg.min_noise_fraction < 1):
            raise ConfigError("min_noise_fraction: must lie in (0, 1)",
                              path, lines["min_noise_fraction"])
    if "detector" in fields:
        if fields["detector"] not in _DETECTORS:
            raise ConfigError(f"detector: expected one of {', '.join(_DETECTORS)}",
                              path, lines["detector"])
        cfg.detector = fields["detector"]
    if "noise_margin" in fields:
        cfg.noise_margin = _want_float(path, lines["noise_margin"], "noise_margin",
                                       fields["noise_margin"])
        if cfg.noise_margin < 0:
            raise ConfigError("noise_margin: must be >= 0", path, lines["noise_margin"])
    if "jobs" in fields:
        cfg.jobs = _want_int(path, lines["jobs"], "jobs", fields["jobs"])
        if cfg.jobs < 1:
            raise ConfigError("jobs: must be >= 1", path, lines["jobs"])
    return cfg


def scenario_from_config(cfg: ScenarioConfig) -> Scenario:
    return build_scenario(
        cfg.p, cfg.q, np.deg2rad(cfg.angles_deg), cfg.sigma2, cfg.snr_db,
        cfg.bandwidth, cfg.seed,
    )


# ---------------------------------------------------------------------------
# running


def _run_trial(
    scenario: Scenario,
    layout: SupportLayout,
    detector: str,
    cfg: ExperimentConfig,
    n: int,
    n_index: int,
    trial: int,
) -> TrialRecord:
    key = (cfg.seed, n_index, trial)
    rec = TrialRecord(n=n, trial=trial, seed_key=key)
    try:
        batch = snapshots(scenario, n, key)
        spec = hermitian_eigenvalues(sample_covariance(batch))
        if detector == "model":
            res = detect_model_based(spec, layout)
        else:
            res = detect_blind(spec, min_noise_fraction=cfg.min_noise_fraction)
    except NumericError as exc:
        rec.error = str(exc)
        return rec
    rec.q_hat = res.q_hat
    rec.sigma2_hat = res.sigma2_hat
    rec.gap_ratio = res.gap_ratio
    rec.method = res.method.value
    rec.consistent = res.consistent
    rec.eigenvalues = spec.values
    noise = spec.values[: scenario.p - scenario.q]
    lo = layout.intervals[0].lo - cfg.noise_margin
    hi = layout.intervals[0].hi + cfg.noise_margin
    rec.coverage = bool(noise.size == 0 or (noise[0] >= lo and noise[-1] <= hi))
    return rec


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run all (n, trial) cells and return the in-memory report.

    Per-trial numeric failures are recorded in the trial row and do not
    stop the run.  The detector choice "auto" resolves per n-block: model
    based when the limiting support splits, blind otherwise.  Requesting
    "model" on a non-split block is a domain error.
    """
    scenario = scenario_from_config(cfg.scenario)
    model = model_from_spectrum(scenario.true_spectrum, scenario.sigma2, scenario.q)
    crit = critical_y(model)
    blocks = []
    for n_index, n in enumerate(cfg.n_values):
        y = scenario.p / n
        layout = find_support_layout(y, model)
        if cfg.detector == "auto":
            detector = "model" if layout.n_components >= 2 else "blind"
        else:
            detector = cfg.detector
        if detector == "model" and layout.n_components < 2:
            raise DomainError(
                f"detector 'model' requested but the support does not split at "
                f"y = p/n = {y:.6g} (critical ratio {crit:.6g})"
            )
        block = NBlockResult(n=n, y=y, layout=layout, detector_used=detector)
        run_one = lambda t: _run_trial(scenario, layout, detector, cfg, n, n_index, t)
        if cfg.jobs == 1:
            block.trials = [run_one(t) for t in range(cfg.trials)]
        else:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                block.trials = list(pool.map(run_one, range(cfg.trials)))
        blocks.append(block)
    return ExperimentReport(config=cfg, scenario=scenario, model=model,
                            critical_ratio=crit, blocks=blocks)


# ---------------------------------------------------------------------------
# report files


def _fmt(v) -> str:
    return f"{v:.12g}"


def _writer(fobj):
    return csv.writer(fobj, lineterminator="\n")


def _write_spectra(block: NBlockResult, scenario: Scenario, out_dir: str) -> None:
    p = scenario.p
    path = os.path.join(out_dir, f"spectra_n{block.n}.csv")
    with open(path, "w", newline="") as f:
        w = _writer(f)
        w.writerow(["index", "true"] + [f"trial_{t.trial}" for t in block.trials])
        true_vals = scenario.true_spectrum.values
        for i in range(p):
            row = [str(i + 1), _fmt(true_vals[i])]
            for t in block.trials:
                row.append(_fmt(t.eigenvalues[i]) if t.ok else "")
            w.writerow(row)
    txt = os.path.join(out_dir, f"spectra_n{block.n}.txt")
    with open(txt, "w") as f:
        cols = ["index", "true"] + [f"trial_{t.trial}" for t in block.trials]
        f.write("  ".join(f"{c:>12}" for c in cols) + "\n")
        for i in range(p):
            cells = [f"{i + 1:>12}", f"{true_vals[i]:>12.6g}"]
            for t in block.trials:
                cells.append(f"{t.eigenvalues[i]:>12.6g}" if t.ok else f"{'-':>12}")
            f.write("  ".join(cells) + "\n")


def _write_histogram(block: NBlockResult, out_dir: str, bins: int = 60) -> None:
    pool = np.concatenate([t.eigenvalues for t in block.trials if t.ok]) if any(
        t.ok for t in block.trials) else np.empty(0)
    if pool.size == 0:
        return
    lo, hi = float(pool.min()), float(pool.max())
    if not lo < hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    h = histogram(DiscreteSpectrum(pool), edges)
    with open(os.path.join(out_dir, f"histogram_n{block.n}.csv"), "w", newline="") as f:
        h.to_csv(f)


def _write_endpoints(report: ExperimentReport, out_dir: str) -> None:
    blocks = sorted(report.blocks, key=lambda b: b.y, reverse=True)
    layouts = [b.layout for b in blocks]
    with open(os.path.join(out_dir, "endpoints.csv"), "w", newline="") as f:
        write_endpoints_csv(layouts, f, zero_limit_model=report.model)
    with open(os.path.join(out_dir, "endpoints.txt"), "w") as f:
        f.write("  ".join(f"{c:>14}" for c in ("y", "x1", "x2", "x3", "x4")) + "\n")
        for b in blocks:
            x1, x2, x3, x4 = canonical_endpoints(b.layout)
            cells = [f"{b.y:>14.6g}", f"{x1:>14.6g}"]
            for v in (x2, x3):
                cells.append(f"{v:>14.6g}" if v is not None else f"{'-':>14}")
            cells.append(f"{x4:>14.6g}")
            f.write("  ".join(cells) + "\n")
        m = report.model
        if m.atoms:
            row = (0.0, m.sigma2, m.sigma2, m.signal_values[0], m.signal_values[-1])
            f.write("  ".join(f"{v:>14.6g}" for v in row) + "\n")


def _write_detections(report: ExperimentReport, out_dir: str) -> None:
    q_true = report.scenario.q
    with open(os.path.join(out_dir, "detections.csv"), "w", newline="") as f:
        w = _writer(f)
        w.writerow(["master_seed", "n", "trial", "y", "q_true", "q_hat", "sigma2_hat",
                    "gap_ratio", "method", "consistent", "coverage", "error"])
        for block in report.blocks:
            for t in block.trials:
                if t.ok:
                    row = [str(report.config.seed), str(t.n), str(t.trial), _fmt(block.y),
                           str(q_true), str(t.q_hat), _fmt(t.sigma2_hat), _fmt(t.gap_ratio),
                           t.method, str(t.consistent).lower(), str(t.coverage).lower(), ""]
                else:
                    row = [str(report.config.seed), str(t.n), str(t.trial), _fmt(block.y),
                           str(q_true), "", "", "", "", "", "", t.error]
                w.writerow(row)


def _block_moment_table(block: NBlockResult, model: NoiseSignalModel, order: int):
    """(k, sample mean, limit) rows; sample side averaged over good trials."""
    theory = limit_moments_from_population(model.moments(order), block.y)
    good = [t for t in block.trials if t.ok]
    rows = []
    for k in range(1, order + 1):
        if good:
            mc = float(np.mean([np.mean(t.eigenvalues ** k) for t in good]))
        else:
            mc = math.nan
        rows.append((k, mc, theory[k - 1]))
    return rows


def _write_summary(report: ExperimentReport, out_dir: str) -> None:
    cfg = report.config
    sc = report.scenario
    with open(os.path.join(out_dir, "summary.txt"), "w") as f:
        f.write("array spectrum experiment\n")
        f.write("=========================\n\n")
        f.write(f"sensors p        = {sc.p}\n")
        f.write(f"sources q        = {sc.q}\n")
        f.write(f"noise power      = {_fmt(sc.sigma2)}\n")
        f.write(f"scenario seed    = {sc.seed}\n")
        f.write(f"master seed      = {cfg.seed}\n")
        f.write(f"trials per n     = {cfg.trials}\n")
        f.write(f"detector         = {cfg.detector}\n")
        f.write(f"critical ratio   = {_fmt(report.critical_ratio)}\n")
        for block in report.blocks:
            f.write(f"\nn = {block.n}  (y = {_fmt(block.y)})\n")
            lay = block.layout
            if lay.atom_at_zero > 0:
                f.write(f"  atom at zero: mass {_fmt(lay.atom_at_zero)}\n")
            for iv in lay.intervals:
                f.write(f"  interval [{_fmt(iv.lo)}, {_fmt(iv.hi)}]  mass {_fmt(iv.mass)}\n")
            f.write(f"  detector used: {block.detector_used}\n")
            good = [t for t in block.trials if t.ok]
            errs = len(block.trials) - len(good)
            total = len(block.trials)
            hits = sum(1 for t in good if t.q_hat == sc.q)
            cov = sum(1 for t in good if t.coverage)
            f.write(f"  detection rate: {hits}/{total}"
                    f" ({_fmt(hits / total)})\n")
            f.write(f"  coverage rate : {cov}/{total} ({_fmt(cov / total)})\n")
            if errs:
                f.write(f"  failed trials : {errs}\n")
            s2 = [t.sigma2_hat for t in good if not math.isnan(t.sigma2_hat)]
            if s2:
                f.write(f"  mean noise estimate: {_fmt(float(np.mean(s2)))}\n")
            f.write("  moments (sample mean vs limit):\n")
            for k, mc, th in _block_moment_table(block, report.model, cfg.moment_order):
                f.write(f"    k={k:<3d} {mc:>16.8g} {th:>16.8g}\n")


def write_report(report: ExperimentReport, out_dir: Optional[str] = None) -> str:
    """Write all report files into ``out_dir`` (default: the config's out)."""
    if out_dir is None:
        out_dir = report.config.out
    os.makedirs(out_dir, exist_ok=True)
    for block in report.blocks:
        _write_spectra(block, report.scenario, out_dir)
        _write_histogram(block, out_dir)
    _write_endpoints(report, out_dir)
    _write_detections(report, out_dir)
    _write_summary(report, out_dir)
    return out_dir


def emit_density_curve(
    model: NoiseSignalModel,
    y: float,
    fobj,
    *,
    points: int = 512,
    layout: Optional[SupportLayout] = None,
) -> None:
    """CSV of the limiting density over the support, next to the pure-noise
    reference density at the same ratio and noise power.

    Columns x, density, noise_reference; ``points`` spread across the
    support intervals proportionally to their lengths (min 16 each).
    """
    from .stieltjes import eta_schedule, limiting_density, mp_density

    if layout is None:
        layout = find_support_layout(y, model)
    lo_all = layout.intervals[0].lo
    hi_all = layout.intervals[-1].hi
    eta = eta_schedule(lo_all, hi_all)
    span = sum(iv.hi - iv.lo for iv in layout.intervals)
    xs = []
    for iv in layout.intervals:
        m = max(16, int(round(points * (iv.hi - iv.lo) / span)))
        xs.append(np.linspace(iv.lo, iv.hi, m))
    xs = np.concatenate(xs)
    dens = limiting_density(xs, y, model, eta=eta)
    ref = mp_density(xs, y, model.sigma2)
    close = False
    if isinstance(fobj, (str, bytes)):
        fobj = open(fobj, "w", newline="")
        close = True
    try:
        w = _writer(fobj)
        w.writerow(["x", "density", "noise_reference"])
        for x, d, r in zip(xs, dens, ref):
            w.writerow([_fmt(x), _fmt(d), _fmt(r)])
    finally:
        if close:
            fobj.close()
