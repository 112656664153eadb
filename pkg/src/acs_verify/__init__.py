"""Numerical certification of transverse-embedding constructions.

The library checks, at machine precision on torus examples, the linear
algebra and calculus behind induced almost complex structures: eigen
splittings, holomorphic distribution torsion, induced structures on
transverse submanifolds, the universal pointwise models, and the
combinatorial conditions for the moment-angle examples.
"""

from .checks import REGISTRY, all_checks, checks_for
from .config import DEFAULT, Tolerances
from .lvmb import LvmbData, check_condition_i, check_condition_ii
from .scenarios import (
    bundled_scenario_names,
    find_scenario,
    parse_scenario,
    run_scenario,
    serialize_report,
)
from .universal import dimension_symplectic, dimension_universal

__version__ = "0.1.0"

__all__ = [
    "REGISTRY",
    "all_checks",
    "checks_for",
    "DEFAULT",
    "Tolerances",
    "LvmbData",
    "check_condition_i",
    "check_condition_ii",
    "bundled_scenario_names",
    "find_scenario",
    "parse_scenario",
    "run_scenario",
    "serialize_report",
    "dimension_symplectic",
    "dimension_universal",
    "__version__",
]
