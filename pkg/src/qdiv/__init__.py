"""Numerical toolkit for quantum Rényi divergences, second-order source coding
rates and strong-converse fidelity bounds."""

__version__ = "0.1.0"
