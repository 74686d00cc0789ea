"""Error-probability bounds and resolution limits for entangled (quantum
illumination) versus coherent-state standoff sensing of one versus two
closely spaced point targets."""

from .discrimination import (
    BoundResult,
    NumericalError,
    bhattacharyya,
    exponent_advantage_db,
    gaussian_qs,
    pe_bound,
    qcb,
)
from .gaussian_states import (
    ChannelParams,
    GaussianState,
    Hypothesis,
    UnphysicalStateError,
    coherent_hypothesis_state,
    qi_hypothesis_state,
    spdc_source_state,
    symplectic_eigenvalues,
    validate_state,
)
from .modes import (
    DegenerateGeometryError,
    OverlapCoefficients,
    SceneGeometry,
    mode_value,
    normalization_constant,
    overlap_coefficients,
    quadrature_overlaps,
    sinc,
)
from .pc_receiver import StatisticMoments, pc_error_exponent, pc_error_probability, pc_statistic_moments

__version__ = "0.1.0"
