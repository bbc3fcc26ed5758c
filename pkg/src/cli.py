"""Command-line front end: qspec pg | smooth | sd | isd | plot | study-rimse | show"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.bootstrap import BootSpec, InvalidBlockLength
from src.config import QSpecConfig, load_config
from src.documents import (
    DocumentError,
    ResultDocument,
    build_metadata,
    from_quantity,
    read_document,
    write_document,
)
from src.evaluation import RIMSEStudy, StudyConfig, format_rimse_table
from src.freqrep import LevelOutOfRange, check_levels
from src.inference import InsufficientReplicates, WeightKindMismatch, ci
from src.models import (
    HERMITIAN,
    GridMismatch,
    InvalidTimeSeries,
    NonFourierFrequency,
    QSpecError,
    TimeSeries,
    UnknownLevel,
    snap_frequency,
)
from src.periodogram import QuantilePG, quantile_pg_from_series
from src.plotting import SCALINGS, plot_document
from src.quantreg import DegenerateDesign, SolverNotConverged
from src.simulation import (
    COPULA,
    LAPLACE,
    MODELS,
    CorruptState,
    StateMismatch,
    UnknownModel,
    get_model,
    increase_precision,
    integr_quantile_sd,
    load_state,
    quantile_sd,
    save_state,
)
from src.smoothing import (
    InvalidBandwidth,
    KernelWeight,
    SpecDistrWeight,
    UnknownKernel,
    smooth_pg,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_LEVELS = 3
EXIT_INCOMPATIBLE = 4
EXIT_STATE = 5

# Library errors and the exit code each one maps to
EXIT_CODES = [
    ((LevelOutOfRange,), EXIT_LEVELS),
    ((WeightKindMismatch, InsufficientReplicates), EXIT_INCOMPATIBLE),
    ((StateMismatch, CorruptState), EXIT_STATE),
    ((InvalidTimeSeries, DocumentError, UnknownLevel, NonFourierFrequency, GridMismatch,
      InvalidBandwidth, UnknownKernel, InvalidBlockLength, UnknownModel), EXIT_INPUT),
    ((DegenerateDesign, SolverNotConverged), EXIT_UNEXPECTED),
]


class CliError(Exception):
    """Error carrying the process exit code"""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ============================================================
# Input helpers
# ============================================================

def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "t", "yes", "1"):
        return True
    if lowered in ("false", "f", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"Expected true or false, got '{value}'")


def read_series(path: str) -> TimeSeries:
    """First CSV column as a series; a non-numeric first row is a header"""
    try:
        frame = pd.read_csv(
            path, header=None, usecols=[0], dtype=str,
            skip_blank_lines=True, encoding="utf-8"
        )
    except FileNotFoundError as e:
        raise CliError(EXIT_INPUT, f"Input file not found: {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError, ValueError) as e:
        raise CliError(EXIT_INPUT, f"Malformed CSV {path}: {e}") from e

    column = frame.iloc[:, 0].astype(str).str.strip()
    numbers = pd.to_numeric(column, errors="coerce")
    if len(numbers) and np.isnan(numbers.iloc[0]):
        column, numbers = column.iloc[1:], numbers.iloc[1:]
    bad = column[numbers.isna()]
    if len(bad):
        raise CliError(EXIT_INPUT, f"Malformed CSV {path}: non-numeric value '{bad.iloc[0]}'")
    return TimeSeries(numbers.to_numpy(dtype=np.float64))


def boot_spec(args) -> Optional[BootSpec]:
    if not args.boot_B:
        return None
    return BootSpec(B=args.boot_B, l=args.boot_l, seed=args.seed)


def weight_from_args(args, n: int):
    if args.weight == "specdistr":
        return SpecDistrWeight(n=n)
    return KernelWeight(args.kernel, args.bw, n=n)


def _write(doc: ResultDocument, out: Optional[str], quiet: bool) -> None:
    if out is None:
        print(doc.summary())
        return
    path = write_document(doc, out)
    if not quiet:
        print(f"  ✓ Saved {doc.kind} to {path}")


# ============================================================
# Commands
# ============================================================

def _periodogram_from_csv(args) -> QuantilePG:
    Y = read_series(args.input)
    levels = check_levels(args.levels, "(0,1)" if args.type == "qr" else ("[0,1]" if args.rank else None))
    config = args.config_obj
    return quantile_pg_from_series(
        Y, levels, type=args.type, rank_based=args.rank, boot=boot_spec(args), threads=args.threads,
        tol=config.solver.tolerance, max_iter=config.solver.max_iter, direct_limit=config.dft.direct_limit
    )


def cmd_pg(args, argv: Sequence[str]) -> int:
    pg = _periodogram_from_csv(args)
    extras = {"type": args.type, "rank": args.rank}
    if pg.freq_rep.boot is not None:
        extras["boot"] = pg.freq_rep.boot.to_dict()
    doc = from_quantity(pg, build_metadata(argv, args.seed), extras=extras)
    _write(doc, args.out, args.quiet)
    return EXIT_OK


def _load_periodogram(args) -> QuantilePG:
    if Path(args.input).suffix.lower() == ".json":
        doc = read_document(args.input)
        if doc.frequency_kind != HERMITIAN:
            raise CliError(EXIT_INPUT, f"{args.input} holds a {doc.kind}, not a periodogram")
        return QuantilePG(
            n=doc.n,
            grid=np.asarray(doc.grid),
            levels=doc.levels,
            values=doc.values,
            frequency_kind=HERMITIAN,
        )
    return _periodogram_from_csv(args)


def cmd_smooth(args, argv: Sequence[str]) -> int:
    if args.ci is not None and args.weight == "specdistr":
        raise CliError(EXIT_INCOMPATIBLE, "Confidence intervals need a kernel weight, not specdistr")
    pg = _load_periodogram(args)
    spg = smooth_pg(pg, weight_from_args(args, pg.n), method=args.method)
    band = ci(spg, alpha=args.alpha, method=args.ci) if args.ci is not None else None
    extras = {"weight": spg.weight.to_dict()}
    doc = from_quantity(spg, build_metadata(argv, args.seed), ci=band, extras=extras)
    _write(doc, args.out, args.quiet)
    return EXIT_OK


def _sd_document(state, argv: Sequence[str]) -> ResultDocument:
    extras: Dict = {
        "model": state.model,
        "params": state.params,
        "type": state.type,
        "R": state.R,
    }
    std_error = state.std_error
    if std_error is not None:
        extras["std_error"] = np.stack([std_error.real, std_error.imag], axis=-1).tolist()
    return from_quantity(state.to_quantity(), build_metadata(argv, state.seed), extras=extras)


def cmd_sd(args, argv: Sequence[str]) -> int:
    if args.action == "new":
        model = get_model(args.model)
        levels = check_levels(args.levels, "(0,1)" if args.type == COPULA else None)
        state = quantile_sd(
            model, args.N, levels, args.R, seed=args.seed, type=args.type,
            threads=args.threads, quiet=args.quiet
        )
    else:
        state = load_state(args.state)
        requested = {
            "N": args.N,
            "levels": tuple(check_levels(args.levels, None)) if args.levels else None,
            "model": args.model,
            "type": args.type,
            "seed": args.seed,
        }
        for name, value in requested.items():
            if value is not None and value != getattr(state, name):
                raise CliError(
                    EXIT_STATE,
                    f"State has {name}={getattr(state, name)}, requested {value}"
                )
        state = increase_precision(state, args.add_R, threads=args.threads, quiet=args.quiet)

    save_state(state, args.state)
    if not args.quiet:
        print(f"  ✓ State with R={state.R} saved to {args.state}")
    _write(_sd_document(state, argv), args.out, args.quiet)
    return EXIT_OK


def cmd_isd(args, argv: Sequence[str]) -> int:
    state = load_state(args.state)
    doc = from_quantity(
        integr_quantile_sd(state), build_metadata(argv, state.seed),
        extras={"model": state.model, "params": state.params, "type": state.type, "R": state.R}
    )
    _write(doc, args.out, args.quiet)
    return EXIT_OK


def cmd_plot(args, argv: Sequence[str]) -> int:
    doc = read_document(args.input)
    overlay = read_document(args.overlay) if args.overlay else None
    path = plot_document(
        doc, args.out,
        levels=args.levels,
        freq_min=args.freq_min,
        freq_max=args.freq_max,
        overlay=overlay,
        scaling=args.scaling,
        ribbon_alpha=args.alpha,
    )
    if not args.quiet:
        print(f"  ✓ Saved plot to {path}")
    return EXIT_OK


def cmd_study_rimse(args, argv: Sequence[str]) -> int:
    settings = args.config_obj.study
    frequencies = [
        2 * np.pi * k / settings.frequency_denominator
        for k in range(1, settings.frequency_count + 1)
    ]
    config = StudyConfig(
        model=args.model,
        N=args.N,
        R=args.R,
        bw=args.bw,
        kernel=args.kernel,
        levels=check_levels(args.levels, "(0,1)"),
        frequencies=frequencies,
        seed=args.seed,
        threads=args.threads,
    )
    truth = load_state(args.truth_state).to_quantity()
    study = RIMSEStudy(config, truth)
    results = study.run(quiet=args.quiet)

    if not args.quiet:
        print("\n" + "=" * 70)
        print("RIMSE")
        print("=" * 70)
        for line in format_rimse_table(results):
            print(line)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(results.table()).to_csv(out, index=False)

    E, R, J, K, _ = results.errors.shape
    errors_doc = ResultDocument(
        kind="RIMSEStudyErrors",
        n=config.N,
        grid=[snap_frequency(w, config.N) for w in config.frequencies],
        frequency_kind=HERMITIAN,
        levels1=list(config.levels),
        levels2=list(config.levels),
        values=results.errors.transpose(2, 3, 4, 0, 1).reshape(J, K, K, E * R),
        metadata=build_metadata(argv, config.seed),
        extras={
            "estimators": list(results.estimators),
            "replications": R,
            "layout": "replicate axis index = estimator * replications + replication",
            "rimse": results.table(),
            "study": config.to_dict(),
        },
    )
    errors_path = args.errors_out or str(out.with_suffix(".json"))
    write_document(errors_doc, errors_path)
    if not args.quiet:
        print(f"\n  ✓ RIMSE table saved to {out}")
        print(f"  ✓ Per-replication errors saved to {errors_path}")
    return EXIT_OK


def cmd_show(args, argv: Sequence[str]) -> int:
    print(read_document(args.input).summary(digits=args.digits))
    return EXIT_OK


# ============================================================
# Parser
# ============================================================

def _add_common(parser: argparse.ArgumentParser, config: QSpecConfig) -> None:
    parser.add_argument("--config", help="Configuration file (default: config.yaml or $QSPEC_CONFIG)")
    parser.add_argument("--threads", type=int, default=config.runtime.threads,
                        help="Worker threads (default: $QSPEC_THREADS or config)")
    parser.add_argument("--quiet", action="store_true", help="Suppress progress output")


def _add_estimation(parser: argparse.ArgumentParser, config: QSpecConfig) -> None:
    est, boot = config.estimation, config.bootstrap
    parser.add_argument("--type", choices=["clipped", "qr"], default=est.type)
    parser.add_argument("--levels", type=float, nargs="+", default=list(est.levels))
    parser.add_argument("--rank", type=parse_bool, default=est.rank, help="true for copula ranks")
    parser.add_argument("--boot-B", dest="boot_B", type=int, default=boot.B, help="Bootstrap replicates")
    parser.add_argument("--boot-l", dest="boot_l", type=int, default=boot.l, help="Block length")
    parser.add_argument("--seed", type=int, default=boot.seed)


def build_parser(config: QSpecConfig) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspec", description="Quantile spectral analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pg", help="Quantile periodogram of a CSV series")
    p.add_argument("input", help="CSV file, one numeric column")
    _add_estimation(p, config)
    p.add_argument("--out", help="Result document (JSON); prints a summary if omitted")
    _add_common(p, config)
    p.set_defaults(handler=cmd_pg)

    sm = config.smoothing
    p = sub.add_parser("smooth", help="Smoothed periodogram with optional confidence bands")
    p.add_argument("input", help="Periodogram document (.json) or CSV series")
    _add_estimation(p, config)
    p.add_argument("--weight", choices=["kernel", "specdistr"], default=sm.weight)
    p.add_argument("--kernel", default=sm.kernel, help="uniform | epanechnikov | biweight | triweight | W0..W3")
    p.add_argument("--bw", type=float, default=sm.bw, help="Bandwidth in (0, pi]")
    p.add_argument("--method", choices=["direct", "fft"], default=sm.method)
    p.add_argument("--ci", nargs="?", const=config.inference.method, choices=["normal", "boot.full"],
                   default=None, help="Add confidence bands (bare flag: config method)")
    p.add_argument("--alpha", type=float, default=config.inference.alpha)
    p.add_argument("--out")
    _add_common(p, config)
    p.set_defaults(handler=cmd_smooth)

    sim = config.simulation
    p = sub.add_parser("sd", help="Simulated model quantile spectral density")
    p.add_argument("action", choices=["new", "resume"])
    p.add_argument("--state", required=True, help="Binary state file")
    p.add_argument("--model", choices=sorted(MODELS), default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--R", type=int, default=sim.R)
    p.add_argument("--add-R", dest="add_R", type=int, default=0, help="Copies to add on resume")
    p.add_argument("--levels", type=float, nargs="+", default=None)
    p.add_argument("--type", choices=[COPULA, LAPLACE], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    _add_common(p, config)
    p.set_defaults(handler=cmd_sd)

    p = sub.add_parser("isd", help="Integrated model spectrum from a state file")
    p.add_argument("--state", required=True)
    p.add_argument("--out")
    _add_common(p, config)
    p.set_defaults(handler=cmd_isd)

    p = sub.add_parser("plot", help="K x K panel SVG of a result document")
    p.add_argument("input")
    p.add_argument("--levels", type=float, nargs="+", default=None)
    p.add_argument("--freq-min", dest="freq_min", type=float, default=None)
    p.add_argument("--freq-max", dest="freq_max", type=float, default=None,
                   help="Upper frequency; periodograms unfold past pi by conjugation (e.g. 4*pi)")
    p.add_argument("--overlay", help="Model spectrum document drawn over the estimate")
    p.add_argument("--scaling", choices=list(SCALINGS), default="individual")
    p.add_argument("--alpha", type=float, default=0.3, help="Opacity of CI ribbons")
    p.add_argument("--out", required=True, help="SVG file")
    _add_common(p, config)
    p.set_defaults(handler=cmd_plot)

    st = config.study
    p = sub.add_parser("study-rimse", help="RIMSE simulation study")
    p.add_argument("--model", choices=sorted(MODELS), default=st.model)
    p.add_argument("--N", type=int, default=st.N)
    p.add_argument("--R", type=int, default=st.R)
    p.add_argument("--bw", type=float, default=st.bw)
    p.add_argument("--kernel", default=st.kernel)
    p.add_argument("--levels", type=float, nargs="+", default=list(st.levels))
    p.add_argument("--truth-state", dest="truth_state", required=True)
    p.add_argument("--seed", type=int, default=sim.seed)
    p.add_argument("--out", required=True, help="RIMSE table (CSV)")
    p.add_argument("--errors-out", dest="errors_out", help="Per-replication errors document")
    _add_common(p, config)
    p.set_defaults(handler=cmd_study_rimse)

    p = sub.add_parser("show", help="Print a result document summary")
    p.add_argument("input")
    p.add_argument("--digits", type=int, default=3)
    _add_common(p, config)
    p.set_defaults(handler=cmd_show)

    return parser


def _config_path(argv: Sequence[str]) -> Optional[str]:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _fill_sd_defaults(args, config: QSpecConfig) -> None:
    """`sd new` takes unset options from config; `resume` keeps them unset for comparison"""
    if args.action != "new":
        return
    sim = config.simulation
    args.model = args.model or sim.model
    args.N = args.N or sim.N
    args.levels = args.levels or list(config.estimation.levels)
    args.type = args.type or sim.type
    args.seed = sim.seed if args.seed is None else args.seed


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = load_config(_config_path(argv))
    except (OSError, ValueError, TypeError) as e:
        print(f"ERROR: cannot load configuration: {e}", file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(level=config.logging.level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser(config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    args.config_obj = config
    args.threads = max(1, args.threads)
    if args.command == "sd":
        _fill_sd_defaults(args, config)

    try:
        return args.handler(args, argv)
    except CliError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.code
    except QSpecError as e:
        for types, code in EXIT_CODES:
            if isinstance(e, types):
                print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
                return code
        print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        print(f"ERROR: unexpected {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
