"""Command-line interface.

Subcommands::

    semitrans estimate     --data d.csv [--out fit.json]
    semitrans test         --data d.csv --bootstrap 200 --alpha 0.05 [--stat both]
    semitrans simulate     --table 1 --reps 200 [--n 100] [--out t1.json]
    semitrans export-curve --data d.csv [--out curve.csv]

Every flag can also be given through an environment variable named
``SEMITRANS_`` plus the flag in upper case with dashes as underscores
(``SEMITRANS_THETA_RANGE=-2:4``). Flags on the command line take precedence.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .bootstrap import BootstrapConfig, run_test
from .dataio import dumps_result, read_dataset, write_result, write_rows
from .estimator import EstimatorConfig, fit
from .exceptions import SemitransError
from .simulation import INFINITE_DOF, SimSpec, export_fit_curve, run_experiment, table_cells
from .testing import compute_statistics

__all__ = ["RunConfig", "UsageError", "build_parser", "parse_args", "main"]

log = logging.getLogger(__name__)

COMMANDS = ("estimate", "test", "simulate", "export-curve")
ENV_PREFIX = "SEMITRANS_"


class UsageError(Exception):
    """Invalid command line; maps to exit code 2."""


@dataclass
class RunConfig:
    """Validated settings of one command-line run."""

    command: str
    data: str = None
    out: str = None
    variant: str = "heteroscedastic"
    theta_range: tuple = (-2.0, 4.0)
    grid: int = 61
    degree: int = 1
    kernel: str = "gaussian"
    bandwidth: str = "plugin"
    bootstrap: int = 200
    alpha: float = 0.05
    stat: str = "both"
    table: int = None
    reps: int = 200
    n: int = None
    a: float = None
    nu: float = None
    eta: float = None
    skew: float = None
    seed: int = 0
    threads: int = 1
    extra: dict = field(default_factory=dict)

    def estimator_config(self):
        return EstimatorConfig(
            theta_interval=self.theta_range,
            grid_points=self.grid,
            degree=self.degree,
            kernel=self.kernel,
            variant=self.variant,
            bandwidth=self.bandwidth,
        )

    def bootstrap_config(self):
        return BootstrapConfig(
            B=self.bootstrap, alpha=self.alpha, variant=self.variant, seed=self.seed
        )

    def echo(self):
        d = asdict(self)
        d.pop("extra")
        d["theta_range"] = list(self.theta_range)
        return d


def _theta_range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
        raise argparse.ArgumentTypeError(f"need finite lo <= hi, got {text!r}")
    return (lo, hi)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text!r}")
    return v


def _dof(text):
    if text.strip().lower() in ("inf", "infinity"):
        return INFINITE_DOF
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common_flags(p):
    p.add_argument("--data", help="input CSV with header x1,...,xd,y")
    p.add_argument("--out", help="output path (JSON, or CSV for export-curve); stdout if omitted")
    p.add_argument("--variant", choices=("hetero", "homo"), default="hetero")
    p.add_argument("--theta-range", type=_theta_range, default=(-2.0, 4.0), metavar="LO:HI")
    p.add_argument("--grid", type=_positive_int, default=61, metavar="N")
    p.add_argument("--degree", type=int, default=1, metavar="P")
    p.add_argument("--kernel", choices=("gaussian", "epanechnikov"), default="gaussian")
    p.add_argument("--bandwidth", choices=("plugin", "rot"), default="plugin")
    p.add_argument("--bootstrap", type=_positive_int, default=200, metavar="B")
    p.add_argument("--alpha", type=_probability, default=0.05, metavar="A")
    p.add_argument("--stat", choices=("ks", "cm", "both"), default="both")
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--reps", type=_positive_int, default=200, metavar="R")
    p.add_argument("--n", type=_positive_int, metavar="N")
    p.add_argument("--a", type=float, metavar="A")
    p.add_argument("--nu", type=_dof, metavar="V")
    p.add_argument("--eta", type=_dof, metavar="E")
    p.add_argument("--skew", type=float, metavar="S")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--threads", type=_positive_int, default=1, metavar="T")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="semitrans", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    helps = {
        "estimate": "fit the transformation model",
        "test": "bootstrap test of the model",
        "simulate": "run a simulation table",
        "export-curve": "scatter and fitted curve for plotting",
    }
    for name in COMMANDS:
        _common_flags(sub.add_parser(name, help=helps[name]))
    return parser


_VALUE_FLAGS = (
    "data", "out", "variant", "theta-range", "grid", "degree", "kernel", "bandwidth",
    "bootstrap", "alpha", "stat", "table", "reps", "n", "a", "nu", "eta", "skew",
    "seed", "threads",
)


def _env_argv(environ):
    """Flags taken from ``SEMITRANS_*`` variables."""
    out = []
    for flag in _VALUE_FLAGS:
        key = ENV_PREFIX + flag.upper().replace("-", "_")
        if key in environ:
            out.append(f"--{flag}={environ[key]}")
    if environ.get(ENV_PREFIX + "VERBOSE", "").strip().lower() in ("1", "true", "yes", "on"):
        out.append("--verbose")
    return out


def _join_negative(argv):
    # let "--theta-range -2:4" through argparse, which takes "-2:4" for a flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--theta-range":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse_args(argv=None, environ=None):
    """Parse and validate a command line.

    Raises
    ------
    UsageError
        For unknown flags, invalid values, inconsistent combinations or a
        missing input file.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    environ = os.environ if environ is None else environ
    parser = build_parser()
    if not argv or argv[0] in ("-h", "--help"):
        parser.print_help()
        raise SystemExit(0 if argv else 2)
    command = argv[0]
    if command not in COMMANDS:
        raise UsageError(f"semitrans: unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    argv = [command] + _env_argv(environ) + _join_negative(argv[1:])
    ns = parser.parse_args(argv)

    variant = {"hetero": "heteroscedastic", "homo": "homoscedastic"}[ns.variant]
    cfg = RunConfig(
        command=command,
        data=ns.data,
        out=ns.out,
        variant=variant,
        theta_range=ns.theta_range,
        grid=ns.grid,
        degree=ns.degree,
        kernel=ns.kernel,
        bandwidth=ns.bandwidth,
        bootstrap=ns.bootstrap,
        alpha=ns.alpha,
        stat=ns.stat,
        table=ns.table,
        reps=ns.reps,
        n=ns.n,
        a=ns.a,
        nu=ns.nu,
        eta=ns.eta,
        skew=ns.skew,
        seed=ns.seed,
        threads=ns.threads,
        extra={"verbose": ns.verbose},
    )
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.grid < 5:
        raise UsageError(f"--grid must be at least 5, got {cfg.grid}")
    if cfg.degree < 0:
        raise UsageError(f"--degree must be non-negative, got {cfg.degree}")
    if cfg.command == "simulate":
        if cfg.table is None:
            raise UsageError("simulate needs --table")
        if cfg.data is not None:
            raise UsageError("--data is not used by simulate")
        if cfg.a is not None and cfg.table not in (1, 2):
            raise UsageError("--a applies to tables 1 and 2 only")
        if (cfg.nu is not None or cfg.skew is not None) and cfg.table != 3:
            raise UsageError("--nu and --skew apply to table 3 only")
        if cfg.eta is not None and cfg.table != 4:
            raise UsageError("--eta applies to table 4 only")
        if cfg.a is not None and cfg.a > 1:
            raise UsageError(f"--a must not exceed 1, got {cfg.a}")
        if cfg.nu is not None and not cfg.nu > 2:
            raise UsageError(f"--nu must exceed 2, got {cfg.nu}")
        if cfg.eta is not None and not cfg.eta >= 2:
            raise UsageError(f"--eta must be at least 2, got {cfg.eta}")
    else:
        if cfg.data is None:
            raise UsageError(f"{cfg.command} needs --data")
        if not os.path.isfile(cfg.data):
            raise UsageError(f"--data: no such file: {cfg.data}")
        for flag in ("table", "n", "a", "nu", "eta", "skew"):
            if getattr(cfg, flag) is not None:
                raise UsageError(f"--{flag} applies to simulate only")


def _simulation_cells(cfg):
    if cfg.table in (1, 2) and cfg.a is not None:
        ns = (cfg.n,) if cfg.n else ((100, 200, 400) if cfg.table == 1 else (100, 200))
        return [SimSpec("htm1", n=k, a=cfg.a) for k in ns]
    if cfg.table == 3 and (cfg.nu is not None or cfg.skew is not None):
        ns = (cfg.n,) if cfg.n else (100, 200)
        nu = INFINITE_DOF if cfg.nu is None else cfg.nu
        skew = 0.0 if cfg.skew is None else cfg.skew
        return [SimSpec("modelA", n=k, alpha_skew=skew, nu=nu, a=1.0) for k in ns]
    if cfg.table == 4 and cfg.eta is not None:
        ns = (cfg.n,) if cfg.n else (100, 200)
        return [SimSpec("modelB", n=k, eta=cfg.eta, a=1.0) for k in ns]
    return table_cells(cfg.table, n=cfg.n)


def _decisions(cfg, res):
    stats = ("ks", "cm") if cfg.stat == "both" else (cfg.stat,)
    return {s: bool(getattr(res, f"reject_{s}")) for s in stats}


def run(cfg):
    """Execute a parsed command and return the result document."""
    doc = {"command": cfg.command, "config": cfg.echo(), "seed": cfg.seed}
    if cfg.command == "simulate":
        exp = run_experiment(
            cfg.table,
            replications=cfg.reps,
            B=cfg.bootstrap,
            seed=cfg.seed,
            threads=cfg.threads,
            cells=_simulation_cells(cfg),
            est_cfg=cfg.estimator_config(),
        )
        doc["table"] = exp.rows
        doc["experiment"] = exp.config
        return doc

    data = read_dataset(cfg.data)
    est_cfg = cfg.estimator_config()
    if cfg.command == "export-curve":
        model = fit(data, est_cfg)
        doc["rows"] = export_fit_curve(model, data)
        doc["theta_hat"] = model.theta_hat
        return doc
    if cfg.command == "estimate":
        model = fit(data, est_cfg)
        st = compute_statistics(data.X, model.residuals)
        doc.update(
            n=data.n,
            d=data.d,
            variant=model.variant,
            theta_hat=model.theta_hat,
            loglik=model.loglik,
            bandwidths={"h": model.bandwidths.h, "g_relative": model.bandwidths.g},
            statistics={"ks": st.ks, "cm": st.cm},
        )
        return doc

    res = run_test(data, est_cfg, cfg.bootstrap_config(), threads=cfg.threads)
    boot = cfg.bootstrap_config()
    doc.update(
        n=data.n,
        d=data.d,
        variant=cfg.variant,
        theta_hat=res.theta_hat,
        alpha=res.alpha,
        statistics={"ks": res.observed.ks, "cm": res.observed.cm},
        critical_values={"ks": res.critical_ks, "cm": res.critical_cm},
        pvalue_ks=res.pvalue_ks,
        pvalue_cm=res.pvalue_cm,
        decisions=_decisions(cfg, res),
        bootstrap={
            "B": res.B,
            "a_n": boot.a_n(data.n),
            "failures": res.n_failures,
            "failure_messages": [msg for _, msg in res.failures],
        },
    )
    return doc


def _emit(cfg, doc):
    if cfg.command == "export-curve":
        rows = doc["rows"]
        if cfg.out:
            write_rows(rows, cfg.out)
        else:
            columns = list(rows[0]) if rows else []
            w = csv.DictWriter(sys.stdout, fieldnames=columns, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return
    if cfg.out:
        write_result(doc, cfg.out)
    else:
        sys.stdout.write(dumps_result(doc))


def main(argv=None):
    """Entry point; returns the process exit code."""
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        msg = str(exc)
        sys.stderr.write(f"{msg if msg.startswith('semitrans') else 'semitrans: ' + msg}\n")
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if cfg.extra.get("verbose") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        doc = run(cfg)
        _emit(cfg, doc)
    except SemitransError as exc:
        sys.stderr.write(f"semitrans {cfg.command}: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"semitrans {cfg.command}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
