"""Command-line interface: ``mlgweibull {fit,select,risk,simulate}``.

Exit status: 0 success, 2 configuration error, 3 ingestion error,
4 numerical failure, 5 I/O failure. Set ``MLGWEIBULL_LOG_LEVEL`` (e.g.
``INFO``) for more logging on stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, io, risk, simstudy
from .errors import ConfigError, IngestError, NumericalError
from .model import Hyperparams, run_chain

log = logging.getLogger("mlgweibull")

EXIT_OK, EXIT_CONFIG, EXIT_INGEST, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5


def _hyper(s: io.RunSettings, k=None) -> Hyperparams:
    return Hyperparams(k=s.k if k is None else k, alpha_beta=s.alpha_beta, kappa_beta=s.kappa_beta,
                       alpha_w=s.alpha_w, kappa_w=s.kappa_w, phi_grid=s.phi_grid,
                       mh_step_sigma=s.mh_step_sigma, mh_step_sigma_w=s.mh_step_sigma_w,
                       w_basis=s.w_basis)


def _ingest(path, s):
    try:
        data, report = io.ingest(path, intercept=s.intercept, coord_mode=s.coord_mode)
    except ConfigError as exc:
        raise IngestError(str(exc)) from None
    log.info("ingested %d rows from %s (%d rejected)", report.n_rows, path, len(report.rejected))
    return data, report


def _write_ingest_report(out, report):
    with open(out / "ingest_report.txt", "w", encoding="utf-8") as fh:
        fh.write(f"rows={report.n_rows}\nrejected={len(report.rejected)}\n")
        for line_no, reason in report.rejected:
            fh.write(f"line {line_no}: {reason}\n")


def _write_summary(path, draws, level):
    rows = diagnostics.posterior_summary(draws, level)
    io.write_table(path, diagnostics.SUMMARY_COLUMNS,
                   [(r.name, r.mean, r.sd, r.hpd_lo, r.hpd_hi, r.eq_lo, r.eq_hi) for r in rows])


def cmd_fit(args, s: io.RunSettings):
    data, report = _ingest(args.data, s)
    draws = run_chain(data, _hyper(s), s.n_iter, s.n_burn, s.seed)
    out = args.out
    _write_ingest_report(out, report)
    io.write_draws(out / "draws.csv", draws)
    _write_summary(out / "summary.csv", draws, s.hpd_level)
    with open(out / "acceptance.txt", "w", encoding="utf-8") as fh:
        for key in ("accept_log_sigma", "accept_log_sigma_w", "step_log_sigma", "step_log_sigma_w"):
            fh.write(f"{key}={io.format_number(draws.meta[key])}\n")


def cmd_select(args, s: io.RunSettings):
    data, report = _ingest(args.data, s)
    rows = diagnostics.lpml_grid(data, _hyper(s), s.k_grid, s.n_iter, s.n_burn, s.seed,
                                 per_draw_w=s.cpo_per_draw_w, n_jobs=s.n_jobs)
    _write_ingest_report(args.out, report)
    io.write_table(args.out / "lpml.csv", ("k", "lpml", "best", "error"),
                   [(r.k, r.lpml, int(r.best), r.error) for r in rows])
    if not any(r.best for r in rows):
        raise NumericalError("every LPML fit failed")


def cmd_risk(args, s: io.RunSettings):
    if args.draws is None:
        raise ConfigError("risk needs --draws (a draws file written by 'fit')")
    draws = io.read_draws(args.draws)
    k = float(draws.meta.get("k", s.k))
    if s.x_star:
        x_star = np.array(s.x_star)
    elif args.data is not None:
        data, _ = _ingest(args.data, s)
        if not 0 <= s.site < data.n:
            raise ConfigError(f"site {s.site} out of range for {data.n} records")
        x_star = data.X[s.site]
    else:
        raise ConfigError("risk needs x_star in the config or --data to take covariates from the site")
    query = risk.PredictiveQuery(x_star, s.site, s.n_pred_per_draw)
    samples = risk.posterior_predictive_sample(draws, query, k, np.random.default_rng(s.seed))
    report = risk.risk_report(samples, s.risk_levels)
    io.write_table(args.out / "risk.csv", ("level", "var", "es", "tvar"), list(report.rows()))
    _write_summary(args.out / "summary.csv", draws, s.hpd_level)


def cmd_simulate(args, s: io.RunSettings):
    design = simstudy.SimDesign(
        n=s.sim_n, k=s.sim_k, beta_true=s.sim_beta_true, domain=s.sim_domain,
        phi_true=s.sim_phi_true, sigma_w_true=s.sim_sigma_w_true, w_law=s.sim_w_law,
        alpha_w=s.sim_alpha_w, kappa_w=s.sim_kappa_w, alpha_beta=s.sim_alpha_beta,
        kappa_beta=s.sim_kappa_beta, phi_grid=s.phi_grid, n_replicates=s.sim_replicates,
        n_iter=s.sim_n_iter, n_burn=s.sim_n_burn, seed=s.seed)
    metrics = simstudy.run_study(design, n_jobs=s.n_jobs)
    with open(args.out / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write(metrics.to_text())


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "risk": cmd_risk, "simulate": cmd_simulate}


def build_parser():
    parser = argparse.ArgumentParser(prog="mlgweibull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--data", type=Path, help="loss-record CSV")
        p.add_argument("--config", type=Path, help="key=value configuration file")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        if name == "risk":
            p.add_argument("--draws", type=Path, help="draws file written by 'fit'")
    return parser


def _configure_logging():
    level = os.environ.get("MLGWEIBULL_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        s = io.load_config(args.config) if args.config else io.RunSettings()
        if args.seed is not None:
            s.seed = args.seed
        if args.command in ("fit", "select") and args.data is None:
            raise ConfigError(f"{args.command} needs --data")
        for path in (args.data, args.config, getattr(args, "draws", None)):
            if path is not None and not path.is_file():
                raise OSError(f"no such file: {path}")
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, s)
    except IngestError as exc:
        print(f"mlgweibull: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except ConfigError as exc:
        print(f"mlgweibull: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"mlgweibull: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"mlgweibull: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None):
    _configure_logging()
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
