"""Capacity regions of pure-loss bosonic broadcast channels.

Gaussian covariance-matrix formalism, beam-splitter channel models,
rate-region geometry, and an independent truncated-Fock-space oracle that
cross-checks every entropy quantity.
"""

from .gaussian import (
    CovarianceState,
    SymplecticTransform,
    SymplecticPairingError,
    entropy_g,
    tmsv,
    thermal_state,
    beam_splitter,
    apply,
    reduce,
    permute_modes,
    symplectic_eigenvalues,
    von_neumann_entropy,
    conditional_entropy,
)
from .channel import (
    BroadcastChannelSpec,
    BeamSplitterNetwork,
    Stage,
    DegenerateSplitError,
    receiver_labels,
    output_labels,
    default_ordering,
    all_orderings,
    build_network,
    apply_channel,
    output_state_tmsv,
    implementations_equivalent,
)
from .region import (
    RateConstraint,
    CapacityRegion,
    UNCONSTRAINED,
    nonempty_subsets,
    inner_bound_finite,
    inner_bound_finite_gaussian,
    asymptotic_bound,
    capacity_region,
    contains,
    vertices,
    boundary_2d,
    merging_gain,
    merging_gain_gaussian,
    region_to_dict,
    region_from_dict,
)
from .fock import (
    FockState,
    DensityMatrix,
    TruncationBudget,
    InconclusiveVerificationError,
    thermal_weight,
    tail_mass,
    cutoff_for_tail,
    truncation_budget,
    tmsv_fock,
    split_with_vacuum,
    reduce_density,
    entropy_fock,
    channel_output_fock,
    verify_conditional_entropies,
    schmidt_spectrum_check,
)

__version__ = "0.1.0"
