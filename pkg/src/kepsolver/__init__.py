"""Branch-and-price solver for kidney exchange with cycles and chains."""

from .bnp import BnbNode, Solution, SolverConfig, solve, verify_matching
from .instances import (Instance, InstanceFormatError, generate_random,
                        import_preflib, make_instance, parse_native,
                        write_native)
from .master import infinite_relaxation_bound, lagrangian_bound
from .mdd import Column, Mdd, MddBuildConfig
from .oracle import (OracleGuardError, eef_flaw_demo, enumerate_chains,
                     enumerate_cycles, ieef_solve, optimal_by_enumeration)

__version__ = "0.1.0"

__all__ = [
    "BnbNode", "Column", "Instance", "InstanceFormatError", "Mdd",
    "MddBuildConfig", "OracleGuardError", "Solution", "SolverConfig",
    "eef_flaw_demo", "enumerate_chains", "enumerate_cycles",
    "generate_random", "ieef_solve", "import_preflib",
    "infinite_relaxation_bound", "lagrangian_bound", "make_instance",
    "optimal_by_enumeration", "parse_native", "solve", "verify_matching",
    "write_native",
]
