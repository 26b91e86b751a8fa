"""Resonances of explicit Anosov maps of the two-torus.

Composition operators of the Blaschke-type torus maps ``B_lambda``,
``T_lambda``, ``T_lambda o T_mu`` and their ``K``-indexed relatives are
realised on the monomial basis ``z**m * w**n``.  Their spectra are read off
finite degree blocks and checked against closed forms, weighted
Hilbert-Schmidt bounds and correlation decay.
"""

from .blaschke import (
    BlaschkeCoefficients,
    BlaschkeParam,
    alpha,
    blaschke_coefficients,
    contraction_factor,
    suggest_order,
    tail_energy,
)
from .lattice import (
    Block,
    MonomialIndex,
    SpaceConfig,
    WeightFamily,
    block_indices,
    deg1,
    degphi,
    weight,
    window_indices,
)
from .operators import (
    BlockMatrix,
    MapKind,
    MapSpec,
    SparseColumn,
    apply_B,
    apply_BK,
    apply_map,
    apply_T,
    apply_TK,
    block_matrix,
    windowed_matrix,
)
from .eigensolver import EigensolverError, dense_eigenvalues
from .spectral import (
    MatchReport,
    SpectrumEntry,
    SpectrumMultiset,
    block_spectrum,
    match,
    spectrum,
    theoretical_spectrum,
)
from .analysis import (
    DecayFit,
    LaurentPolynomial,
    compactness_violation,
    correlate,
    fit_decay,
    hs_norm,
    space_norm,
    unboundedness_witness,
)

__version__ = "0.1.0"
