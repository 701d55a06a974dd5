"""Functional renormalization group flow of a stochastic rank-5 Abelian
tensorial group field theory in the local-potential approximation."""

__version__ = "0.1.0"
