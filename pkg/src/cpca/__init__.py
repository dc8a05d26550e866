"""cpca: temporal-mode estimation for optical non-Gaussian states.

Simulates continuous-wave dual-homodyne measurement records of known
states, recovers complex temporal mode functions by principal component
analysis of the complex samples, and decomposes two-photon states into
their (generally non-orthogonal) mode pair.
"""

from .analysis import (
    PhotonDistribution,
    WignerGrid,
    antinormal_moments,
    joint_photon_distribution,
    joint_photon_distribution_from_moments,
    photon_distribution,
    photon_distribution_from_samples,
    wigner_grid,
)
from .engine import (
    CorrelationMatrix,
    ModeDecomposition,
    RealPcaDecomposition,
    accumulate_ct,
    degenerate_groups,
    eigendecompose,
    project,
    real_pca,
)
from .errors import (
    ConfigError,
    ContractViolationError,
    CpcaError,
    DataFormatError,
    DegenerateInputError,
    GridMismatchError,
    InconsistentMomentsError,
    LinearDependenceError,
    ModeCountError,
    NumericalError,
    SamplerConfigurationError,
    SingleModeStateError,
)
from .fock import DensityMatrix, FockState1, FockState2
from .modes import (
    TMF,
    TemporalModeFunction,
    TimeGrid,
    canonical_phase,
    gram_schmidt,
    inner_product,
    mode_match,
    normalize,
    superpose,
    timebin_pair,
)
from .simulate import (
    DetectorFilter,
    FrameSet,
    QSampler,
    apply_detector_filters,
    generate_frames,
    sample_q,
)
from .states import (
    ModalState,
    analytic_ct,
    analytic_fourth_moments,
    apply_loss,
    coherence_matrix,
    fock_mode_state,
    photon_subtracted_dualrail,
    photon_subtracted_epr,
    single_photon_qubit,
    squeezed_vacuum,
    two_photon_state,
    vacuum_state,
)
from .twophoton import (
    FourthMoments,
    TwoPhotonCoefficients,
    TwoPhotonSolution,
    build_D,
    decompose_two_photon_analytic,
    decompose_two_photon_frames,
    estimate_fourth_moments,
    loss_normalized_Q,
    recover_tmfs,
    solve_coefficients,
)

__version__ = "0.1.0"
