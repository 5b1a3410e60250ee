"""Synthesis of conditional linear integer arithmetic functions and loop invariants."""

from .dispatch import Outcome, SolveOptions, solve
from .sygus import SynthProblem, parse, parse_file, print_solution

__all__ = ["Outcome", "SolveOptions", "SynthProblem", "parse", "parse_file", "print_solution", "solve"]
__version__ = "0.1.0"
