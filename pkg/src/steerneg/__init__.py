"""Remote Wigner negativity from Gaussian EPR steering and photon subtraction."""

__version__ = "0.1.0"

from .gaussian import (
    ChannelParams,
    NoThresholdError,
    PurityTriple,
    SqueezingSpec,
    TwoModeCovariance,
    UnphysicalStateError,
    cm_from_squeezing,
    db_to_variance,
    purities,
    steerability_b_to_a,
    steering_threshold_eta_b,
    variance_to_db,
)
from .wigner import (
    PhaseSpacePoint,
    SubtractedStateParams,
    marginal_pdf,
    negativity_closed_form,
    negativity_from_purities,
    negativity_numeric,
    wigner_subtracted,
)
from .fock import (
    DensityMatrix,
    apply_loss_fock,
    fidelity,
    populations_from_radial_wigner,
    wigner_from_density,
)
from .sampling import sample_gaussian_two_mode, sample_homodyne_subtracted
from .tomography import MleOptions, estimate_cm, mle_reconstruct
from .metrology import QfiReport, metrological_power, qfi_quadrature
