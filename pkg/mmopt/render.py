# mmopt/render.py
# Text and CSV rendering for the mmopt CLI.
#
# This module is read-only with respect to library objects: it formats menus,
# reports, grids and logs, and never computes anything itself.

from __future__ import annotations

import csv
from typing import IO, TYPE_CHECKING, Dict, List, Optional, Sequence

if TYPE_CHECKING:  # for type checkers only; avoids runtime import cycles
    from mmopt.core.closed_form import ProfitGap
    from mmopt.core.feasibility import FeasibilityReport
    from mmopt.core.grid import UtilityGrid
    from mmopt.core.learner import TrainingLog
    from mmopt.core.mechanism import Estimate, Menu
    from mmopt.core.transport import DualityReport, TransportCertificate


def _num(value: float, width: int = 12) -> str:
    return f"{value:>{width}.6f}"


def format_menu_table(menu: "Menu") -> str:
    """Aligned table of items, one per line, index first."""
    head = "  #" + "".join(f"{'a_' + str(k + 1):>10}" for k in range(menu.dim)) + f"{'price':>12}"
    lines = [head]
    for i, (alloc, price) in enumerate(zip(menu.allocs, menu.prices)):
        cols = "".join(f"{v:>10.4f}" for v in alloc)
        lines.append(f"{i:>3}{cols}{_num(price)}")
    return "\n".join(lines)


def format_estimate(label: str, est: "Estimate") -> str:
    return f"{label}: {est.value:.6f} +- {est.stderr:.6f}"


def format_feasibility(report: "FeasibilityReport") -> str:
    lines = ["feasibility: " + ("ok" if report.ok else "VIOLATED")]
    for check in report.checks:
        mark = "pass" if check.passed else "FAIL"
        lines.append(f"  {check.name:<20} {mark}  ({check.detail})")
    return "\n".join(lines)


def format_masses(masses: Dict[str, float]) -> str:
    lines = [f"  {name:<10} {value:+.9f}" for name, value in masses.items()]
    lines.append(f"  {'total':<10} {sum(masses.values()):+.3e}")
    return "\n".join(lines)


def format_certificate(cert: "TransportCertificate") -> str:
    params = ", ".join(f"{k}={v:.9g}" for k, v in cert.params.items())
    lines = [f"certificate {cert.kind.value}: {params}"]
    lines.extend(f"  {label:<12} {cost:.9f}" for label, cost in cert.regions)
    lines.append(f"  {'total':<12} {cert.total:.9f}")
    return "\n".join(lines)


def format_duality(report: "DualityReport") -> str:
    verdict = "certified" if report.certified else (
        "weak duality holds" if report.weak_duality_holds else "WEAK DUALITY VIOLATED"
    )
    return "\n".join(
        [
            f"profit: {report.profit:.6f} +- {report.stderr:.6f}",
            f"cost:   {report.cost:.6f}",
            f"gap:    {report.gap:+.6f}",
            f"verdict: {verdict}",
        ]
    )


def format_gap_table(rows: Sequence["ProfitGap"], peak: Optional["ProfitGap"] = None) -> str:
    lines = [f"{'lambda':>8}{'optimal':>12}{'separate':>12}{'gap':>12}{'relative':>10}"]
    for row in rows:
        lines.append(
            f"{row.lam:>8.4f}{row.optimal:>12.6f}{row.separate:>12.6f}"
            f"{row.gap:>12.6f}{100 * row.relative:>9.3f}%"
        )
    if peak is not None:
        lines.append(f"peak relative gap {100 * peak.relative:.3f}% at lambda={peak.lam:.6f}")
    return "\n".join(lines)


# ------------------ CSV output ------------------


def _g9(value: float) -> str:
    return "%.9g" % value


def grid_header(dim: int) -> List[str]:
    return (
        [f"x{k + 1}" for k in range(dim)]
        + ["item"]
        + [f"alloc{k + 1}" for k in range(dim)]
        + ["payment", "utility"]
    )


def write_grid_csv(grid: "UtilityGrid", fh: IO[str]) -> int:
    """Write one row per lattice cell, row-major; returns the row count."""
    dim = grid.points.shape[1]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(grid_header(dim))
    for k in range(len(grid)):
        writer.writerow(
            [_g9(v) for v in grid.points[k]]
            + [int(grid.items[k])]
            + [_g9(v) for v in grid.allocs[k]]
            + [_g9(grid.payments[k]), _g9(grid.utilities[k])]
        )
    return len(grid)


TRAINING_LOG_HEADER = ["step", "soft_objective", "hard_profit", "hard_stderr"]


def write_training_log_csv(history: "TrainingLog", fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRAINING_LOG_HEADER)
    for entry in history.entries:
        writer.writerow(
            [entry.step, _g9(entry.soft_objective), _g9(entry.hard_profit), _g9(entry.hard_stderr)]
        )


