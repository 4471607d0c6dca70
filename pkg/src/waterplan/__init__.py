"""Deterministic simulator and evaluator for staged masterplanning of
regional water transport networks."""

from .engine import Masterplan, RunOutput, Simulation, parse_plan, validate_plan
from .instance import Instance, demo_instance, generate_instance, load_instance, parse_instance

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "Masterplan",
    "RunOutput",
    "Simulation",
    "demo_instance",
    "generate_instance",
    "load_instance",
    "parse_instance",
    "parse_plan",
    "validate_plan",
    "__version__",
]
