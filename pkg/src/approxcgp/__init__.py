"""Evolutionary design of approximate multipliers guided by operand distributions."""
from __future__ import annotations

__version__ = "0.1.0"

from .cgp import CgpParams, Genome, Netlist, active_mask, area, decode, genome_size, validate
from .evolution import EvoConfig, ParetoSet, RunLog, evolve, fitness, mutate, pareto_sweep
from .gates import DEFAULT_GATES, GateFn, GateSet
from .generators import (gen_adder, gen_broken_array_multiplier, gen_exact_multiplier,
                         gen_truncated_multiplier)
from .metrics import (ErrorReport, Pmf, error_report, pmf_from_histogram, pmf_gaussian,
                      pmf_preset, pmf_uniform, wmed)
from .sim import TruthTables, simulate_all, simulate_naive
