"""Deterministic simulator of a fault-tolerant LAN switching fabric."""

from .scenario import Config, Scenario, load_bundled, load_scenario, parse_scenario
from .simulation import RunResult, Simulation, run_scenario
from .topology import (
    Path,
    Topology,
    build_topology,
    canonical_topology,
    disjoint_backup,
    equal_cost_paths,
    is_reachable,
    set_element_state,
    shortest_path,
)

__version__ = "0.1.0"

__all__ = [
    "Config",
    "Path",
    "RunResult",
    "Scenario",
    "Simulation",
    "Topology",
    "build_topology",
    "canonical_topology",
    "disjoint_backup",
    "equal_cost_paths",
    "is_reachable",
    "load_bundled",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "set_element_state",
    "shortest_path",
]
