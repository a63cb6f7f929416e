# mmopt/__init__.py
"""
mmopt: profit-maximizing menus for multi-good automated market makers
under adverse selection.
"""

__version__ = "0.1.0"

from .core.closed_form import (  # noqa: E402
    bid_ask_1d,
    offcenter_menu,
    profit_1d,
    profit_gap_2d,
    separate_menu_2d,
    symmetric_2d_menu,
)
from .core.distributions import ValuationDistribution, parse_distribution  # noqa: E402
from .core.errors import (  # noqa: E402
    ConvergenceError,
    InfeasibleMenuError,
    MmoptError,
    NumericalError,
    ValidationError,
)
from .core.feasibility import check_feasibility  # noqa: E402
from .core.mechanism import (  # noqa: E402
    Menu,
    MenuItem,
    UpdateModel,
    choose,
    expected_profit_mc,
    profit_at,
    read_menu,
    write_menu,
)

__all__ = [
    "__version__",
    "ConvergenceError",
    "InfeasibleMenuError",
    "Menu",
    "MenuItem",
    "MmoptError",
    "NumericalError",
    "UpdateModel",
    "ValidationError",
    "ValuationDistribution",
    "bid_ask_1d",
    "check_feasibility",
    "choose",
    "expected_profit_mc",
    "offcenter_menu",
    "parse_distribution",
    "profit_1d",
    "profit_at",
    "profit_gap_2d",
    "read_menu",
    "separate_menu_2d",
    "symmetric_2d_menu",
    "write_menu",
]
