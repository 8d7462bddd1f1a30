"""``stealth-grid-lab`` command line entry point.

Exit codes: 0 success, 1 configuration error, 2 input-data error, 3 output error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import _backend
from .errors import ConfigError, DomainError, ModelError, NumericalError, ParseError
from .experiment import ExperimentConfig, emit_csv, resolve_case, run_sweep
from .gaussian import build_state_model, snr_to_noise_variance, toeplitz_cov
from .grid import Flow, build_jacobian

log = logging.getLogger("stealth_grid_lab")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_OUTPUT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stealth-grid-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sweep = sub.add_parser("sweep", help="greedy attack sweep over k and lambda")
    sweep.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    sweep.add_argument("--case", dest="case_path", help="MATPOWER case file or bundled name (case30)")
    sweep.add_argument("--snr-db", dest="snr_db", type=float)
    sweep.add_argument("--rho", type=float)
    sweep.add_argument("--tau", type=float)
    sweep.add_argument("--lambda", dest="lambdas", type=float, action="append")
    sweep.add_argument("--k-max", dest="k_max", type=int)
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", dest="output_dir")
    sweep.add_argument("--plots", action="store_true", help="also write SVG charts")
    sweep.add_argument("--threads", type=int, default=1, help="Monte Carlo worker threads")
    sweep.add_argument("--backend", choices=("cython", "python"), default=None)

    inspect = sub.add_parser("inspect", help="print model sizes, noise variance and diag(W)")
    inspect.add_argument("--case", dest="case_path", required=True)
    inspect.add_argument("--snr-db", dest="snr_db", type=float, default=30.0)
    inspect.add_argument("--rho", type=float, default=0.1)
    return parser


def _load_case(path):
    try:
        return resolve_case(path)
    except (OSError, ParseError, ModelError) as exc:
        raise _InputError(str(exc)) from None


class _InputError(Exception):
    pass


def _cmd_sweep(args) -> int:
    overrides = {
        name: getattr(args, name)
        for name in ("case_path", "snr_db", "rho", "tau", "lambdas", "k_max", "trials", "seed", "output_dir")
        if getattr(args, name) is not None
    }
    try:
        base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        merged = {**{f: getattr(base, f) for f in base.__dataclass_fields__}, **overrides}
        config = ExperimentConfig.from_mapping(merged)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        case = _load_case(config.case_path)
    except _InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    log.info("backend=%s threads=%d", args.backend or _backend.BACKEND, args.threads)
    try:
        report = run_sweep(config, case=case, n_threads=args.threads, backend=args.backend)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, NumericalError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for lam, reason in report.truncated.items():
        print(f"warning: lambda={lam:g} sweep truncated: {reason}", file=sys.stderr)

    try:
        paths = emit_csv(report, config.output_dir)
        if args.plots:
            from .plots import emit_plots

            paths += emit_plots(report, config.output_dir)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    for p in paths:
        print(p)
    return EXIT_OK


def _label(lbl) -> str:
    if isinstance(lbl, Flow):
        return f"flow {lbl.from_bus}-{lbl.to_bus}"
    return f"injection {lbl.bus_id}"


def _cmd_inspect(args) -> int:
    try:
        case = _load_case(args.case_path)
        meas = build_jacobian(case, 1.0)
    except _InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        sigma_xx = toeplitz_cov(meas.n, args.rho)
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    meas = meas.with_noise(snr_to_noise_variance(meas.jacobian, sigma_xx, args.snr_db))
    state = build_state_model(meas, args.rho)
    out = sys.stdout
    out.write(f"m,{meas.m}\nn,{meas.n}\nnoise_variance,{meas.noise_variance:.12g}\n\n")
    out.write("sensor,label,w_ii\n")
    for i, (lbl, w) in enumerate(zip(meas.labels, state.w.diagonal()), start=1):
        out.write(f"{i},{_label(lbl)},{w:.12g}\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_inspect(args)


if __name__ == "__main__":
    sys.exit(main())
