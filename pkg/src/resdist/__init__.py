"""Residue-class distribution of the Alladi-Erdos function A(n) and Euler's phi(n).

Submodules: ``sieve_core`` (segmented factor-data sieve), ``characters``
(Dirichlet characters and prime-shift averages), ``meanvalue`` (mean-value
bound for multiplicative functions), ``experiments`` (distribution reports)
and ``cli``.
"""
from .characters import (DirichletCharacter, alpha, enumerate_characters, psi_special, ramanujan_rho,
                         rho_chi_bruteforce, rho_chi_closed, survey_rho)
from .errors import DomainError, PreconditionError, ResdistError, ResourceLimitError, UnsupportedModulusError
from .histograms import ResidueHistogram, histogram_A, histogram_phi
from .sieve_core import (PrimeTable, SegmentRecord, build_prime_table, decompose, psi_smooth_count,
                         sieve_segment)

__version__ = "0.1.0"
