"""Command-line front end.

Every subcommand reads an INI config (``--config``) and accepts ``--seed``,
``--steps`` and ``--out`` overrides. Artifacts go to the ``--out`` directory.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ecdsep.benchmarks import QuadraticBasin
from ecdsep.core import NumericalError, RngStream
from ecdsep.harness import io as hio
from ecdsep.harness.analysis import concentration_report, eta_monotonicity_report, is_nonincreasing
from ecdsep.harness.averaging import best_tail_average, swa_average
from ecdsep.harness.config import (
    ConfigError,
    _parse_number,
    build_hparams,
    parse_theta0,
    read_config,
    run_config_from_parser,
    sweep_spec_from_parser,
)
from ecdsep.harness.runner import SWEEP_HEADER, best_trials, run_single, run_sweep, sweep_rows

logger = logging.getLogger("ecdsep")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _apply_overrides(obj, args, steps_attr: str):
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        obj.seed = args.seed
    if args.steps is not None:
        if args.steps < 1:
            raise ConfigError("--steps must be at least 1")
        setattr(obj, steps_attr, args.steps)
    if args.out is not None:
        obj.out = args.out
    return obj


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _section(parser, name, required=True) -> dict:
    if not parser.has_section(name):
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    return dict(parser[name])


def _int(d, key, default):
    return int(_parse_number(d[key], int)) if key in d else default


def _float(d, key, default):
    return float(_parse_number(d[key])) if key in d else default


class _Settings:
    """Mutable bag of scalar settings so the common overrides apply uniformly."""

    def __init__(self, **kw):
        self.__dict__.update(kw)


# ---------------------------------------------------------------- subcommands


def cmd_run(args, parser) -> int:
    cfg = _apply_overrides(run_config_from_parser(parser), args, "max_steps")
    out = _outdir(cfg.out)
    outcome = run_single(cfg)
    hio.write_trajectory_csv(out / "trajectory.csv", outcome.log)
    summary = outcome.summary(args.timing)
    summary.update(problem=cfg.problem, optimizer=cfg.optimizer, seed=cfg.seed)
    hio.write_json(out / "summary.json", summary)
    if args.svg:
        hio.write_loss_svg(out / "loss.svg", outcome.log.steps, outcome.log.f)
    logger.info("%s on %s: final F %.6g, best F %.6g (%s)", cfg.optimizer, cfg.problem,
                outcome.final_f, outcome.best_f, outcome.status)
    return EXIT_NUMERICAL if outcome.failed else EXIT_OK


def cmd_sweep(args, parser) -> int:
    spec = _apply_overrides(sweep_spec_from_parser(parser), args, "steps")
    if args.workers is not None:
        spec.workers = max(1, args.workers)
    out = _outdir(spec.out)
    results = run_sweep(spec)
    hio.write_rows(out / "sweep.csv", SWEEP_HEADER, sweep_rows(results))
    best = {
        opt: {"trial": r.trial, "final_f": r.final_f, "best_f": r.best_f, "metric": r.metric,
              "status": r.status, "params": r.params}
        for opt, r in best_trials(results).items()
    }
    failed = {opt: sum(r.status in ("diverged", "invalid") for r in results if r.optimizer == opt)
              for opt in spec.optimizers}
    hio.write_json(out / "sweep_summary.json", {
        "problem": spec.problem, "trials": spec.trials, "steps": spec.steps, "metric": spec.metric,
        "seed": spec.seed, "best": best, "failed_trials": failed,
    })
    for opt, b in best.items():
        logger.info("best %s: %s = %.6g (trial %d)", opt, spec.metric, b["metric"], b["trial"])
    return EXIT_OK


def _basin(parser, section: dict) -> QuadraticBasin:
    prob = {**_section(parser, "problem", required=False), **section}
    try:
        return QuadraticBasin(_int(prob, "n", 4), _float(prob, "f2", 1.0), _float(prob, "f_min", 1.0))
    except ValueError as exc:
        raise ConfigError(f"bad basin parameters: {exc}") from exc


def cmd_concentrate(args, parser) -> int:
    sec = _section(parser, "concentrate")
    problem = _basin(parser, {k: v for k, v in sec.items() if k in ("n", "f2", "f_min")})
    hp = build_hparams("ecdsep", _section(parser, "ecdsep", required=False))
    st = _apply_overrides(_Settings(
        seed=_int(sec, "seed", 0), steps=_int(sec, "steps", 1_000_000),
        out=sec.get("out", "out")), args, "steps")
    if "burn_in" in sec and "burn_in_fraction" in sec:
        raise ConfigError("set burn_in or burn_in_fraction, not both")
    if "burn_in" in sec:
        burn_in = _int(sec, "burn_in", 0)
    else:
        frac = _float(sec, "burn_in_fraction", 0.1)
        if not 0 <= frac < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")
        burn_in = int(frac * st.steps)
    bins = _int(sec, "bins", 40)
    if not 0 <= burn_in < st.steps:
        raise ConfigError("burn_in must lie in [0, steps)")
    if bins < 1:
        raise ConfigError("bins must be positive")
    if not hp.nu > 0:
        raise ConfigError("concentrate needs nu > 0")
    theta0 = parse_theta0(sec.get("theta0"), "quadratic", problem)
    out = _outdir(st.out)
    rep = concentration_report(problem, hp, st.steps, burn_in, bins, theta0, RngStream(st.seed))
    hio.write_rows(out / "histogram.csv", ("r_low", "r_high", "count"), rep.histogram_rows())
    payload = rep.to_dict()
    payload.update(seed=st.seed, steps=st.steps, burn_in=burn_in, bins=bins)
    hio.write_json(out / "concentration.json", payload)
    logger.info("mode F %.4g vs predicted %.4g (rel. dev. %.3f)", rep.f_at_radius_mode,
                rep.predicted_f, rep.f_deviation)
    return EXIT_OK


def cmd_eta_scan(args, parser) -> int:
    sec = _section(parser, "eta_scan")
    problem = _basin(parser, {k: v for k, v in sec.items() if k in ("n", "f2", "f_min")})
    # eta is supplied per row of the scan
    hp = build_hparams("ecdsep", {"eta": "1", **_section(parser, "ecdsep", required=False)})
    st = _apply_overrides(_Settings(
        seed=_int(sec, "seed", 0), steps=_int(sec, "steps", 20_000),
        out=sec.get("out", "out")), args, "steps")
    etas = [float(_parse_number(e)) for e in sec.get("etas", "1,2,3").split(",") if e.strip()]
    if not etas or min(etas) < 1:
        raise ConfigError("etas must be a non-empty list of values >= 1")
    tail = _float(sec, "tail_fraction", 0.5)
    if not 0 < tail <= 1:
        raise ConfigError("tail_fraction must lie in (0, 1]")
    theta0 = parse_theta0(sec.get("theta0"), "quadratic", problem)
    out = _outdir(st.out)
    rows = eta_monotonicity_report(problem, etas, hp, st.steps, theta0, st.seed, tail)
    hio.write_rows(out / "eta_scan.csv", ("eta", "tail_mean_f", "final_f", "status"),
                   ((r.eta, r.tail_mean_f, r.final_f, r.status) for r in rows))
    mono = is_nonincreasing([r.tail_mean_f for r in rows])
    hio.write_json(out / "eta_scan.json", {
        "seed": st.seed, "steps": st.steps, "tail_fraction": tail, "nonincreasing": mono,
        "rows": [r.__dict__ for r in rows],
    })
    logger.info("tail-mean F nonincreasing in eta: %s", mono)
    return EXIT_OK


def cmd_swa(args, parser) -> int:
    cfg = _apply_overrides(run_config_from_parser(parser), args, "max_steps")
    sec = _section(parser, "swa", required=False)
    start = sec.get("start", "best").strip()
    out = _outdir(cfg.out)
    outcome = run_single(cfg, keep_theta=True)
    hio.write_trajectory_csv(out / "trajectory.csv", outcome.log)
    if outcome.failed:
        hio.write_json(out / "swa.json", {**outcome.summary(args.timing), "swa_f": None})
        return EXIT_NUMERICAL
    obj, _ = cfg.build()
    thetas = outcome.log.thetas
    if len(thetas) < 2:
        raise ConfigError("swa needs at least two recorded iterates")
    if start == "best":
        avg, idx = best_tail_average(thetas, obj)
    else:
        frac = float(_parse_number(start))
        if not 0 <= frac < 1:
            raise ConfigError("[swa] start must be 'best' or a fraction in [0, 1)")
        idx = int(frac * len(thetas))
        avg = swa_average(thetas, idx)
    swa_f = float(obj.evaluate(avg).value)
    hio.write_json(out / "swa.json", {
        **outcome.summary(args.timing),
        "swa_f": swa_f,
        "swa_start_step": int(outcome.log.steps[idx]),
        "swa_window": int(len(thetas) - idx),
        "swa_theta": [float(v) for v in avg],
    })
    logger.info("final F %.6g, averaged F %.6g", outcome.final_f, swa_f)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "concentrate": cmd_concentrate,
    "eta-scan": cmd_eta_scan,
    "swa": cmd_swa,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecdsep", description="Energy-conserving descent experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--steps", type=int, help="override the step budget")
        p.add_argument("--timing", action="store_true",
                       help="record wall time in summaries (makes artifacts run-dependent)")
        if name in ("run", "swa"):
            p.add_argument("--svg", action="store_true", help="also write loss.svg (run only)")
        if name == "sweep":
            p.add_argument("--workers", type=int, help="worker threads for trials")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        parser = read_config(args.config)
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](args, parser)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
