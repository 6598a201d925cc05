"""Complex band structures and localisation for tridiagonal k-Toeplitz operators.

The package is organised as

* :mod:`tbands.ktoeplitz` operator specs, symbols and finite truncations,
* :mod:`tbands.regions` reduced symbol data, spectral regions, band and gap functions,
* :mod:`tbands.modes` eigenmodes, pseudoeigenvectors, decay fits, pseudospectra,
* :mod:`tbands.numerics` eigensolvers, polynomial roots, Chebyshev U, quadrature,
* :mod:`tbands.capacitance` gauge capacitance matrices of resonator chains,
* :mod:`tbands.hatano_nelson` the Hatano-Nelson tight-binding chain,
* :mod:`tbands.cli` the ``tbands`` command line tool.
"""
__version__ = "0.1.0"

from .ktoeplitz import (  # noqa: E402
    BandedMatrix,
    ComplexQuasimomentum,
    DefectSpec,
    KToeplitzSpec,
    adjoint_spec,
    apply_defect,
    make_spec,
    symbol_eval,
    truncate_laurent,
    truncate_toeplitz,
)
from .regions import (  # noqa: E402
    FrequencyClassification,
    ReducedSymbolData,
    Region,
    SpectralRegions,
    band_functions,
    beta_tilde,
    classify,
    gap_functions,
    reduce,
    regions,
    winding_number,
)
from .capacitance import ResonatorChain, to_ktoeplitz  # noqa: E402
from .hatano_nelson import HNModel, hn_spec  # noqa: E402
