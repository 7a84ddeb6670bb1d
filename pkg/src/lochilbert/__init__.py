"""Finite-level locally Hilbert spaces and the direct integrals built over them."""

from .checks import Check, Report
from .dec_diag import (
    DecomposableOnly,
    Diagonalizable,
    LocallyBoundedOnly,
    check_dec_equals_diag_commutant,
    check_dilation_identity,
    classify,
    compress,
    decomposable,
    diag_commutant,
    diagonalizable,
    m_dec_level,
    m_diag_level,
)
from .direct_integral import DirectIntegralSpace, FiberFamily, Section, build_direct_integral
from .disintegration import (
    AbelianPresentation,
    build_fibers,
    build_isometry,
    build_spectrum,
    disintegrate,
    make_presentation,
    rn_density,
    verify_conjugation,
)
from .errors import LocHilbertError
from .linalg_core import commutant_solve, hermitian_eig, joint_diagonalize, joint_eigenspaces
from .loc_hilbert import HilbertChain, LocalOperator, LocalVector, make_local_operator, seminorm
from .measure_limits import (
    FiniteMeasurableSpace,
    MeasurableChain,
    MeasureChain,
    limit_measure,
    limit_sigma_algebra,
    locally_standard_space,
    validate_chain,
)
from .tolerances import Tolerances

__all__ = [
    "AbelianPresentation",
    "build_direct_integral",
    "build_fibers",
    "build_isometry",
    "build_spectrum",
    "Check",
    "check_dec_equals_diag_commutant",
    "check_dilation_identity",
    "classify",
    "commutant_solve",
    "compress",
    "decomposable",
    "DecomposableOnly",
    "diag_commutant",
    "Diagonalizable",
    "diagonalizable",
    "DirectIntegralSpace",
    "disintegrate",
    "FiberFamily",
    "FiniteMeasurableSpace",
    "hermitian_eig",
    "HilbertChain",
    "joint_diagonalize",
    "joint_eigenspaces",
    "limit_measure",
    "limit_sigma_algebra",
    "locally_standard_space",
    "LocallyBoundedOnly",
    "LocalOperator",
    "LocalVector",
    "LocHilbertError",
    "m_dec_level",
    "m_diag_level",
    "make_local_operator",
    "make_presentation",
    "MeasurableChain",
    "MeasureChain",
    "Report",
    "rn_density",
    "Section",
    "seminorm",
    "Tolerances",
    "validate_chain",
    "verify_conjugation",
]

__version__ = "0.1.0"
