"""interfacekit: spectral and index analysis of lattice interface operators.

Discrete interface operators are finite sums of lattice shifts with
matrix-valued coefficient profiles of prescribed spatial asymptotics.  The
toolkit extracts their bulk systems at infinity, computes essential spectra
as closed unions of bulk spectra, counts topological interface indices, and
verifies non-propagation bounds for the associated dynamics.
"""

from .operators import (
    Hopping,
    InterfaceOperator,
    Lattice,
    TruncationBox,
    fold_cocompact,
    identity_operator,
    zero_operator,
)
from .profiles import (
    Cap,
    CartesianProfile,
    CompactProfile,
    ConeProfile,
    ConstantProfile,
    DomainWall1DProfile,
    FaceFiberedSystem,
    RadialProfile,
    TranslationInvariantSystem,
    VanishingOscillationProfile,
    directional_limit,
    face_limit,
    quasi_orbits,
    sphere_directions,
)
from .spectra import (
    BlochGrid,
    SpectrumSet,
    bloch_symbol,
    bulk_spectrum,
    essential_spectrum,
    hausdorff_distance,
    spectral_gap,
)
from .truncation import EigenReport, convergence_study, in_gap_states, \
    spectrum_truncated
from .index import (
    ChiralSymmetry,
    IndexReport,
    chiral_interface_index,
    cone_decomposition,
    domain_wall_decomposition,
    fredholm_check,
    spectral_flow,
    winding_number,
)
from .dynamics import (
    Region,
    SpectralFilter,
    apply_filter,
    evolve,
    non_propagation_experiment,
    smooth_bump,
)
from .models import build, list_models

__version__ = "0.1.0"
