"""Application QUBO builders: docking pose sampling and feature selection."""
