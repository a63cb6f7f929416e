# mmopt/cli.py
"""
Command-line front end: ``mmopt <subcommand> [options]``.

Results go to stdout, diagnostics to stderr.  Exit status is 0 on success,
2 for invalid input and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config_file, merge_config
from .core.closed_form import (
    FAMILY_NAMES,
    FamilyKind,
    family_from_name,
    peak_relative_gap,
    profit_1d,
    profit_gap_table,
    separate_profit_2d,
)
from .core.distributions import UNIFORM, ValuationDistribution
from .core.errors import MmoptError, NumericalError, ValidationError
from .core.feasibility import check_feasibility
from .core.grid import no_trade_count, utility_grid
from .core.learner import extract_menu, save_checkpoint, train
from .core.measure import build_measure, integrate_u
from .core.mechanism import Menu, expected_profit_mc, format_menu, read_menu, write_menu
from .core.transport import bid_ask_certificate_1d, duality_gap, transport_cost_2d
from .render import (
    format_certificate,
    format_duality,
    format_estimate,
    format_feasibility,
    format_gap_table,
    format_masses,
    format_menu_table,
    write_grid_csv,
    write_training_log_csv,
)

log = logging.getLogger("mmopt")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# flag dest -> config key
_FLAG_KEYS = {
    "dist": "dist",
    "d": "d",
    "lam": "lambda",
    "c": "c",
    "menu_size": "menu_size",
    "temp": "temp",
    "lr": "lr",
    "batch": "batch",
    "steps": "steps",
    "seed": "seed",
    "grid": "grid",
    "out": "out",
    "n": "n",
    "log_every": "log_every",
}


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else (logging.ERROR if quiet else logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def run_config(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flags = {key: getattr(args, dest, None) for dest, key in _FLAG_KEYS.items()}
    return merge_config(file_values, flags)


# ------------------ Subcommands ------------------


def cmd_closed_form(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Build a closed-form menu: closed-form {bidask1d|symmetric2d|offcenter|separate2d}"
    family = family_from_name(args.family, c=cfg.c, lam=cfg.lam)
    menu = family.menu()
    profit = family.profit()
    if profit is None:
        measure = build_measure(ValuationDistribution.uniform(family.dim), family.update_model())
        profit = integrate_u(measure, menu).value
        summary = f"profit: {profit:.6f} (quadrature of the linearized objective)"
    else:
        summary = f"profit: {profit:.6f}"
    header = f"{family.describe()}\n{summary}"
    if cfg.out:
        write_menu(cfg.out, menu, header=header)
        print(format_menu_table(menu))
        print(summary)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(format_menu(menu, header=header))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Estimate the expected profit of a menu file: eval MENU"
    menu = read_menu(args.menu)
    dist = cfg.distribution(menu.dim)
    upd = cfg.update_model(menu.dim)
    est = expected_profit_mc(menu, dist, upd, cfg.n, seed=cfg.seed, n_jobs=args.threads)
    print(f"menu: {args.menu} ({len(menu)} items), values {dist}, c={upd.c} lambda={upd.lam:g}")
    print(format_estimate("profit", est))
    if dist.law.kind == UNIFORM and menu.dim <= 2:
        baseline = (
            profit_1d(upd.c[0], upd.lam) if menu.dim == 1 else separate_profit_2d(upd.c, upd.lam)
        )
        print(f"separate pricing baseline: {baseline:.6f} (difference {est.value - baseline:+.6f})")
    report = check_feasibility(menu, upd)
    print(format_feasibility(report))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Train a menu by gradient ascent and extract a compact menu: train --out PREFIX"
    config = cfg.learner_config(n_jobs=args.threads)
    prefix = cfg.out or "mmopt-train"
    params, history = train(config)
    header = (
        f"trained on {config.dist}, c={config.upd.c} lambda={config.upd.lam:g}, "
        f"K={config.menu_size} tau={config.temperature:g} steps={config.steps} seed={config.seed}"
    )
    save_checkpoint(prefix + ".checkpoint", params, header=header)
    menu = extract_menu(params, seed=config.seed)
    write_menu(prefix + ".menu", menu, header=header)
    try:
        with open(prefix + ".log.csv", "w", encoding="utf-8", newline="") as fh:
            write_training_log_csv(history, fh)
    except OSError as exc:
        raise ValidationError(f"cannot write {prefix}.log.csv: {exc}") from None
    final = history.final
    if final is not None:
        print(f"final hard profit: {final.hard_profit:.6f} +- {final.hard_stderr:.6f}")
        print(f"final soft objective: {final.soft_objective:.6f}")
    print(f"extracted menu ({len(menu)} items):")
    print(format_menu_table(menu))
    report = check_feasibility(menu, config.upd)
    if not report.ok:
        log.warning("extracted menu is not feasible: %s", "; ".join(f.detail for f in report.failures()))
    print(format_feasibility(report))
    print(f"wrote {prefix}.checkpoint, {prefix}.menu, {prefix}.log.csv")
    return EXIT_OK


def cmd_certify(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Compare a menu's profit with a transport certificate: certify (MENU | --family NAME)"
    if (args.menu is None) == (args.family is None):
        raise ValidationError("give exactly one of a menu file or --family")
    if args.family is not None:
        family = family_from_name(args.family, c=cfg.c, lam=cfg.lam)
        cert = family.certificate()
        if cert is None:
            raise ValidationError(f"no transport certificate is known for {family.kind.value}")
        menu = family.menu()
        upd = family.update_model()
    else:
        menu = read_menu(args.menu)
        upd = cfg.update_model(menu.dim)
        cert = _certificate_for(menu, upd)
    if cfg.dist.strip().lower() != UNIFORM:
        raise ValidationError("certificates exist for uniform values only")
    dist = ValuationDistribution.uniform(menu.dim)
    report = duality_gap(menu, cert, dist, upd, cfg.n, seed=cfg.seed, n_jobs=args.threads)
    print(format_certificate(cert))
    print(format_duality(report))
    return EXIT_OK if report.weak_duality_holds else EXIT_NUMERICAL


def _certificate_for(menu: Menu, upd):
    if menu.dim == 1:
        return bid_ask_certificate_1d(upd.c[0], upd.lam)
    if menu.dim == 2 and all(v == 0.5 for v in upd.c):
        return transport_cost_2d(upd.lam)
    raise ValidationError(f"no transport certificate is known for d={menu.dim}, c={upd.c}")


def _parse_slices(items: Optional[Sequence[str]]) -> Dict[int, float]:
    fixed: Dict[int, float] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError(item)
            axis = int(key.strip().lstrip("x")) - 1
            fixed[axis] = float(value)
        except ValueError:
            raise ValidationError(f"--slice expects k=v (e.g. 3=0.5), got {item!r}") from None
    return fixed


def cmd_heatmap(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Export the allocation/payment rule of a menu on a lattice as CSV: heatmap MENU"
    menu = read_menu(args.menu)
    grid = utility_grid(menu, cfg.grid, fixed=_parse_slices(args.slice))
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                rows = write_grid_csv(grid, fh)
        except OSError as exc:
            raise ValidationError(f"cannot write {cfg.out}: {exc}") from None
        print(f"wrote {rows} rows to {cfg.out} ({no_trade_count(grid)} no-trade cells)")
    else:
        write_grid_csv(grid, sys.stdout)
    return EXIT_OK


def cmd_measure(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Print the component masses of the transformed signed measure: measure"
    dim = cfg.dimension(1)
    dist = cfg.distribution(dim)
    upd = cfg.update_model(dim)
    measure = build_measure(dist, upd)
    print(f"signed measure for {dist}, c={upd.c} lambda={upd.lam:g}")
    print(format_masses(measure.component_masses()))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, cfg: RunConfig) -> int:
    "Tabulate the profit of bundling against separate pricing over lambda: compare"
    if args.lambdas:
        try:
            lams = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
        except ValueError:
            raise ValidationError(f"--lambdas expects comma-separated numbers, got {args.lambdas!r}") from None
    else:
        lams = list(np.linspace(0.0, 1.0, args.points))
    rows = profit_gap_table(lams)
    print(format_gap_table(rows, peak=peak_relative_gap()))
    return EXIT_OK


# ------------------ Parser ------------------


def _common(parser: argparse.ArgumentParser, *names: str) -> None:
    specs: Dict[str, Callable[[], None]] = {
        "dist": lambda: parser.add_argument("--dist", help="uniform | beta:a,b | truncnorm:mean,sd"),
        "d": lambda: parser.add_argument("--d", type=int, help="number of goods"),
        "lam": lambda: parser.add_argument("--lambda", dest="lam", type=float, help="belief retention in [0,1]"),
        "c": lambda: parser.add_argument("--c", help="belief, comma separated (e.g. 0.5,0.5)"),
        "n": lambda: parser.add_argument("--n", type=int, help="Monte Carlo samples"),
        "seed": lambda: parser.add_argument("--seed", type=int, help="random seed"),
        "out": lambda: parser.add_argument("--out", help="output path"),
        "grid": lambda: parser.add_argument("--grid", type=int, help="lattice points per axis"),
    }
    for name in names:
        specs[name]()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmopt", description="Optimal multi-good market-maker menus."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--threads", type=int, help="worker threads (default: MM_OPT_THREADS or all cores)")
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    noise.add_argument("-q", "--quiet", action="store_true", help="errors only on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("closed-form", help=cmd_closed_form.__doc__)
    p.add_argument("family", choices=FAMILY_NAMES)
    _common(p, "c", "lam", "out")
    p.set_defaults(handler=cmd_closed_form)

    p = sub.add_parser("eval", help=cmd_eval.__doc__)
    p.add_argument("menu")
    _common(p, "dist", "c", "lam", "n", "seed")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("train", help=cmd_train.__doc__)
    _common(p, "dist", "d", "c", "lam", "n", "seed", "out")
    p.add_argument("--menu-size", dest="menu_size", type=int, help="trainable items K")
    p.add_argument("--temp", type=float, help="softmax temperature")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--batch", type=int, help="batch size")
    p.add_argument("--steps", type=int, help="training steps")
    p.add_argument("--log-every", dest="log_every", type=int, help="steps between hard-profit evaluations")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("certify", help=cmd_certify.__doc__)
    p.add_argument("menu", nargs="?")
    p.add_argument("--family", choices=[FamilyKind.BIDASK_1D.value, FamilyKind.SYMMETRIC_2D.value])
    _common(p, "dist", "c", "lam", "n", "seed")
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("heatmap", help=cmd_heatmap.__doc__)
    p.add_argument("menu")
    p.add_argument("--slice", action="append", metavar="K=V", help="fix coordinate K (1-based) at V")
    _common(p, "grid", "out")
    p.set_defaults(handler=cmd_heatmap)

    p = sub.add_parser("measure", help=cmd_measure.__doc__)
    _common(p, "dist", "d", "c", "lam")
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser("compare", help=cmd_compare.__doc__)
    p.add_argument("--lambdas", help="comma-separated lambda values")
    p.add_argument("--points", type=int, default=11, help="evenly spaced lambda values in [0,1]")
    p.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(verbose=args.verbose, quiet=args.quiet)
    try:
        cfg = run_config(args)
        return args.handler(args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MmoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


