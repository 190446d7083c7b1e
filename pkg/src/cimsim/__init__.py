"""Measurement-feedback coherent Ising machine simulator and Ising/QUBO toolchain."""

from cimsim.ising import (
    Graph,
    IsingModel,
    QuboModel,
    absorb_field,
    cut_value,
    ising_energy,
    maxcut_to_ising,
    qubo_to_ising,
    qubo_value,
)

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "IsingModel",
    "QuboModel",
    "absorb_field",
    "cut_value",
    "ising_energy",
    "maxcut_to_ising",
    "qubo_to_ising",
    "qubo_value",
]
