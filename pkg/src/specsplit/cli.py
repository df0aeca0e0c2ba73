"""Command line front end.

Subcommands:

* ``run EXPERIMENT.cfg``       -- Monte Carlo run, writes the report files.
* ``endpoints SCENARIO.cfg``   -- support endpoint table for given ratios.
* ``density SCENARIO.cfg``     -- limiting density curve at one ratio.
* ``critical-y SCENARIO.cfg``  -- largest ratio at which the support splits.

Exit codes: 0 success, 1 config error, 2 domain/numeric error.  The
environment variables SPECSPLIT_SEED and SPECSPLIT_OUT override the config
file for ``run``; explicit flags beat both.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .errors import ConfigError, DomainError, NumericError
from .experiment import (
    emit_density_curve,
    parse_experiment_config,
    parse_scenario_config,
    run_experiment,
    scenario_from_config,
    write_report,
)
from .support import (
    critical_y,
    find_support_layout,
    model_from_spectrum,
    write_endpoints_csv,
)

__all__ = ["main"]


def _model_for(config_path: str):
    scfg = parse_scenario_config(config_path)
    scenario = scenario_from_config(scfg)
    return scenario, model_from_spectrum(
        scenario.true_spectrum, scenario.sigma2, scenario.q
    )


def _parse_ratio_list(text: str, *, as_int: bool = False):
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            out.append(int(part) if as_int else float(part))
        except ValueError:
            kind = "integer" if as_int else "number"
            raise ConfigError(f"expected a comma-separated {kind} list, got {text!r}",
                              "<args>") from None
    return out


def _open_out(path: Optional[str]):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _cmd_run(args) -> int:
    cfg = parse_experiment_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    elif "SPECSPLIT_SEED" in os.environ:
        raw = os.environ["SPECSPLIT_SEED"]
        try:
            cfg.seed = int(raw)
        except ValueError:
            raise ConfigError(f"SPECSPLIT_SEED: expected an integer, got {raw!r}",
                              "<env>") from None
    if args.out is not None:
        cfg.out = args.out
    elif "SPECSPLIT_OUT" in os.environ:
        cfg.out = os.environ["SPECSPLIT_OUT"]
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1", "<args>")
        cfg.trials = args.trials
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1", "<args>")
        cfg.jobs = args.jobs

    report = run_experiment(cfg)
    out_dir = write_report(report)
    q = report.scenario.q
    for block in report.blocks:
        good = [t for t in block.trials if t.ok]
        hits = sum(1 for t in good if t.q_hat == q)
        print(f"n={block.n} y={block.y:.6g} detector={block.detector_used} "
              f"correct={hits}/{len(block.trials)}")
    print(f"report written to {out_dir}")
    return 0


def _cmd_endpoints(args) -> int:
    scenario, model = _model_for(args.config)
    if args.y is not None:
        ys = _parse_ratio_list(args.y)
    else:
        ns = _parse_ratio_list(args.n, as_int=True)
        if any(n < 1 for n in ns):
            raise ConfigError("--n values must be >= 1", "<args>")
        ys = [scenario.p / n for n in ns]
    if any(not y > 0 for y in ys):
        raise ConfigError("--y values must be positive", "<args>")
    ys = sorted(set(ys), reverse=True)
    layouts = [find_support_layout(y, model) for y in ys]
    fobj, close = _open_out(args.out)
    try:
        write_endpoints_csv(layouts, fobj, zero_limit_model=model)
    finally:
        if close:
            fobj.close()
    return 0


def _cmd_density(args) -> int:
    _, model = _model_for(args.config)
    if not args.y > 0:
        raise ConfigError("--y must be positive", "<args>")
    if args.points < 8:
        raise ConfigError("--points must be >= 8", "<args>")
    fobj, close = _open_out(args.out)
    try:
        emit_density_curve(model, args.y, fobj, points=args.points)
    finally:
        if close:
            fobj.close()
    return 0


def _cmd_critical(args) -> int:
    _, model = _model_for(args.config)
    print(f"{critical_y(model):.12g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specsplit",
        description="Limiting spectra of large sample covariance matrices: "
                    "support layout, density, and signal-count detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo experiment from a config file")
    p_run.add_argument("config", help="experiment config file")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--trials", type=int, help="override the trial count")
    p_run.add_argument("--jobs", type=int, help="worker threads (default from config)")
    p_run.set_defaults(func=_cmd_run)

    p_end = sub.add_parser("endpoints", help="support endpoint table for given ratios")
    p_end.add_argument("config", help="scenario config file")
    grp = p_end.add_mutually_exclusive_group(required=True)
    grp.add_argument("--y", help="comma-separated dimension-to-sample ratios")
    grp.add_argument("--n", help="comma-separated sample counts (ratios p/n)")
    p_end.add_argument("--out", help="output CSV path (default: stdout)")
    p_end.set_defaults(func=_cmd_endpoints)

    p_den = sub.add_parser("density", help="limiting density curve at one ratio")
    p_den.add_argument("config", help="scenario config file")
    p_den.add_argument("--y", type=float, required=True, help="dimension-to-sample ratio")
    p_den.add_argument("--points", type=int, default=512, help="grid points (default 512)")
    p_den.add_argument("--out", help="output CSV path (default: stdout)")
    p_den.set_defaults(func=_cmd_density)

    p_cri = sub.add_parser("critical-y", help="largest ratio at which the support splits")
    p_cri.add_argument("config", help="scenario config file")
    p_cri.set_defaults(func=_cmd_critical)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
