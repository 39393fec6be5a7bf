"""Termination analysis by decomposing a program into certified modules."""

from .driver import AnalysisConfig, AnalysisResult, analyze
from .frontend import parse_program

__all__ = ["AnalysisConfig", "AnalysisResult", "analyze", "parse_program"]
__version__ = "0.1.0"
