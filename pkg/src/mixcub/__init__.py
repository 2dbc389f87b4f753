"""Fibonacci-lattice and Smolyak cubature on the unit square, with Besov-norm
tools, fooling-function lower bounds and a convergence-rate harness."""

from .cubature import (CubatureRule, Integrand, apply_rule, fibonacci_nonperiodic, fibonacci_qmc,
                       qmc_error)
from .errors import GuardError, MixcubError
from .fiblattice import dual_enumerate, fibonacci, fibonacci_lattice, zaremba_min_product
from .fooling import FoolingConfig, build_gk, build_gstar, build_smolyak_witnesses, witness_lower_bound
from .fourier import TrigPoly2, build_chi_s, fib_error_exact, fourier_besov_norm
from .harness import ExperimentSpec, compare_budget, converge, fit_rate, korobov_battery
from .smolyak import sampling_error, smolyak_cubature, smolyak_grid, smolyak_interpolate
from .splines import BesovParams, bspline_quasinorm, faber_decompose, faber_reconstruct

__version__ = "0.1.0"
