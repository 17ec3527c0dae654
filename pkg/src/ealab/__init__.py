"""Exact and simulated runtime analysis of small crossover EAs."""
