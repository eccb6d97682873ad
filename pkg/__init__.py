"""
Terrace Solver

Computes propagating terraces of reaction-diffusion equations with multistable
reactions that jump at their stable states, reconstructs the compact wave
profiles and checks them against a finite-difference simulation.
"""

__version__ = "1.0.0"
__author__ = "lucasvr39"

# Import the CLI entry point for easy access
from app.cli import run

__all__ = ["run"]
