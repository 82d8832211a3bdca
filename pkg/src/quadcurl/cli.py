"""Command-line entry point: ``quadcurl verify-element | interp-study | convergence``."""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .local_spaces import SUPPORTED_ORDERS

log = logging.getLogger("quadcurl")

THREADS_ENV = "QUADCURL_THREADS"
DEFAULT_LEVELS = (8, 10, 12)
DESK_MAX_LEVEL = 12


@dataclass
class RunConfig:
    command: str
    order: int
    levels: list = field(default_factory=list)
    example: int = 1
    tol: float = 1e-10
    seed: int = 42
    threads: int | None = None
    out: str | None = None
    trials: int | None = None
    solver: str = "auto"

    def header(self):
        """Comment lines prepended to every output file; no timestamps so bytes are reproducible."""
        body = json.dumps(asdict(self), sort_keys=True)
        return f"# quadcurl {__version__}\n# config: {body}\n"


def parse_levels(text):
    try:
        levels = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers, got {text!r}")
    if not levels or min(levels) < 1:
        raise argparse.ArgumentTypeError("levels must be positive")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise argparse.ArgumentTypeError(f"levels must be strictly ascending, got {text!r}")
    return levels


def resolve_threads(flag):
    """``--threads`` beats the environment; neither means all cores."""
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise SystemExit(f"{THREADS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise SystemExit(f"{THREADS_ENV} must be >= 1")
        return value
    return None


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonnegative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="quadcurl", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, levels=True):
        p.add_argument("--order", type=int, choices=SUPPORTED_ORDERS, default=1)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=_positive, default=None,
                       help=f"thread count (default: all; env {THREADS_ENV})")
        if levels:
            p.add_argument("--levels", type=parse_levels, default=list(DEFAULT_LEVELS))
            p.add_argument("--example", type=int, choices=(1, 2), default=1)
            p.add_argument("--out", default=None, help="CSV path (markdown written next to it)")

    p = sub.add_parser("verify-element", help="local element checks on random tets")
    common(p, levels=False)
    p.add_argument("--trials", type=_nonnegative, default=100)

    p = sub.add_parser("interp-study", help="interpolation error rates")
    common(p)

    p = sub.add_parser("convergence", help="solve and tabulate discretization errors")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--solver", choices=("auto", "direct", "minres"), default="auto")
    p.add_argument("--large", action="store_true", help=f"allow levels above N={DESK_MAX_LEVEL}")
    p.add_argument("--gnuplot", action="store_true", help="also write one .dat file per error")
    return parser


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_verify_element(cfg):
    from .verification import verify_element

    if cfg.trials == 0:
        log.warning("--trials 0: nothing checked, passing vacuously")
        return True
    results = verify_element(cfg.order, cfg.trials, cfg.seed)
    print(f"k={cfg.order} trials={cfg.trials} seed={cfg.seed}")
    for r in results:
        print(r.line())
    return all(r.passed for r in results)


def _emit_report(cfg, report, gnuplot=False):
    csv_text = cfg.header() + report.to_csv()
    if cfg.out is None:
        sys.stdout.write(csv_text)
    else:
        out = Path(cfg.out)
        _write(out, csv_text)
        _write(out.with_suffix(".md"), report.to_markdown())
        if gnuplot:
            for key in ("E_L2", "E_curl", "E_gradcurl"):
                _write(out.with_name(f"{out.stem}_{key}.dat"), report.to_gnuplot(key))
        print(report.to_markdown(), end="")
        print(f"wrote {out}")


def cmd_interp_study(cfg):
    from .experiments import interpolation_study

    report = interpolation_study(cfg.example, cfg.order, cfg.levels)
    _emit_report(cfg, report)
    return True


def cmd_convergence(cfg, gnuplot=False):
    from .experiments import run_convergence

    def progress(row):
        d = row.diagnostics
        print(f"N={row.N}: E_L2={row.errors[0]:.4e} E_curl={row.errors[1]:.4e} "
              f"E_gradcurl={row.errors[2]:.4e} |p|_1/|||u|||={d['p_H1_ratio']:.2e} "
              f"max|b(u,psi)|/|||u|||={d['b_max_ratio']:.2e} solver={row.solver.get('method')}",
              file=sys.stderr)

    report = run_convergence(cfg.example, cfg.order, cfg.levels, tol=cfg.tol,
                             method=cfg.solver, on_level=progress)
    _emit_report(cfg, report, gnuplot)
    if not report.complete:
        print(f"error: {report.failure}", file=sys.stderr)
    return report.complete


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "convergence":
        if not args.large and max(args.levels) > DESK_MAX_LEVEL:
            parser.error(f"levels above {DESK_MAX_LEVEL} need --large")
        if not 1e-14 <= args.tol < 1:
            parser.error("--tol must lie in [1e-14, 1)")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = resolve_threads(args.threads)
    cfg = RunConfig(args.command, args.order, getattr(args, "levels", []),
                    getattr(args, "example", 1), getattr(args, "tol", 1e-10), args.seed,
                    threads, getattr(args, "out", None), getattr(args, "trials", None),
                    getattr(args, "solver", "auto"))

    from threadpoolctl import threadpool_limits

    try:
        with threadpool_limits(limits=threads):
            if cfg.command == "verify-element":
                ok = cmd_verify_element(cfg)
            elif cfg.command == "interp-study":
                ok = cmd_interp_study(cfg)
            else:
                ok = cmd_convergence(cfg, args.gnuplot)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        ok = False
    print(f"STATUS: {'ok' if ok else 'fail'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
