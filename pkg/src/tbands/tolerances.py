"""Numerical tolerances used across the package.

Every threshold lives here so that callers (and the acceptance suite) can
tighten them in one place. Functions take an optional ``tol`` argument that
defaults to :data:`DEFAULT`.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    real_root_imag: float = 1e-8        # |Im| / scale below which a polynomial root counts as real
    root_merge: float = 1e-6            # relative distance for merging clustered roots
    symbol_nullvector: float = 1e-6     # sigma_min threshold for "is an eigenvalue of the symbol"
    boundary_rate: float = 1e-6         # |r - beta_tilde| below which lambda is on sigma_det
    winding_initial_points: int = 512
    winding_max_points: int = 2 ** 20
    quadrature_rtol: float = 1e-10
    quadrature_max_points: int = 2 ** 20
    pseudoinverse_sigma: float = 1e-10  # switch Green's solves to the pseudoinverse below this
    dense_limit: int = 4096
    chebyshev_recursion_x: float = 1.5  # recursion used for |x| <= this and small n
    chebyshev_recursion_n: int = 64


DEFAULT = Tolerances()
