"""Robust optimisation with decision-dependent information discovery."""
