"""Interpreter for a process calculus of URL-addressed resources, RESTful
commands, component dispatch and session delegation."""
from .engine import (
    EngineState, enumerate_redexes, fresh_name, initial_state, normalize, run, step,
)
from .parser import parse_network, parse_term, parse_value
from .printer import show
from .urlalg import Config

__all__ = [
    "Config", "EngineState", "enumerate_redexes", "fresh_name", "initial_state",
    "normalize", "parse_network", "parse_term", "parse_value", "run", "show", "step",
]
__version__ = "0.1.0"
