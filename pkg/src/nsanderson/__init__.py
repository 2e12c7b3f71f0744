"""Numerical laboratory for the 1D Anderson model with independent,
non-identically distributed (and possibly unbounded) site potentials.

Modules, bottom up: ``ensembles`` (per-site laws and the assumption
audit), ``transfer`` (renormalized SL(2,R) cocycle products),
``charpoly`` (windowed determinants, Green's functions, regularity),
``spectrum`` (tridiagonal eigenproblem and time evolution), ``growth``
(Monte Carlo growth functions), ``deviations`` (large-deviation
statistics and sub-deviation interval scans), ``localization`` (decay
fits, semi-uniform localization constants, dynamical moments), and
``runner``/``cli`` (config-driven experiments).
"""

from . import (charpoly, deviations, ensembles, growth, localization,
               parallel, rng, runner, spectrum, transfer)

__all__ = ["charpoly", "deviations", "ensembles", "growth", "localization",
           "parallel", "rng", "runner", "spectrum", "transfer"]

__version__ = "0.1.0"
