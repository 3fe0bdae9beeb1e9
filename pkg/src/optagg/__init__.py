"""Optical-aggregation-aware routing for optical transport networks."""

from .exact_solver import alone_cost, encode_plan, paired_cost, solve
from .milp_model import build_model, decode_plan, read_solution, validate_solution, write_lp
from .plan import AggregationPlan, Pair
from .provisioning import assign_wavelengths_first_fit, extract_lightpaths, relative_gain, route_bypass
from .topology import Topology, load_topology, parse_topology
from .traffic import Demand, DemandSet, ScenarioConfig, generate_two_to_many, parse_demands

__version__ = "0.1.0"
