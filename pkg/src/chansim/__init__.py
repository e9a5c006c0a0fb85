"""Stochastic electromagnetic channel simulation and capacity analysis for
dense multi-antenna (holographic) arrays.

The model splits every transmit/receive polarization entry into a
deterministic line-of-sight part (the real part of the free-space dyadic
propagation tensor) and a diffuse multipath part whose statistics follow the
closed-form moments of a wave-chaotic cavity kernel, optionally remixed
through a K-factor and passed through mutual-coupling matrices.
"""

from .capacity import (
    CapacityEstimate,
    RegionBoundary,
    correlation_vs_spacing,
    mc_capacity,
    miso_element_moments,
    miso_lower_bound,
    miso_upper_bound,
    polarization_eigenvalues,
    siso_capacity_bound,
    siso_farfield_bound,
    two_user_region_practical,
    two_user_region_theoretical,
)
from .channel import (
    ChannelRealization,
    ChannelSampler,
    CouplingMatrix,
    apply_coupling,
    baseline_iid_rayleigh,
    baseline_rician,
    build_synthetic_impedance,
    clarke_correlation,
    coupling_matrix,
    dump_realization,
    load_impedance,
    sample_isolated_channel,
    save_impedance,
)
from .geometry import (
    ArrayGeometry,
    CavityEnvironment,
    PairGeometry,
    PairTable,
    build_linear_array,
    build_planar_array,
    check_min_scatterer,
    pairwise_geometry,
)
from .greens import coherent_block, coherent_blocks, dyadic_green
from .moments import (
    MomentSet,
    SpectralParams,
    channel_moment_params,
    channel_moment_tables,
    closed_form_moments,
    copolar_longitudinal_moments,
    copolar_transverse_moments,
    crosspolar_variances,
    kfactor_constant,
    planewave_moments,
    spectral_params,
)
from .numerics import RandomStream, bessel_j0, hermitian_logdet2, sphere_kernels
from .radiation import (
    RadiationReport,
    average_radiated_power,
    directivity_gain,
    radiation_intensity,
    radiation_report,
)
from .scenario import Scenario, load_scenario, validate_config

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "CapacityEstimate",
    "CavityEnvironment",
    "ChannelRealization",
    "ChannelSampler",
    "CouplingMatrix",
    "MomentSet",
    "PairGeometry",
    "PairTable",
    "RadiationReport",
    "RandomStream",
    "RegionBoundary",
    "Scenario",
    "SpectralParams",
    "apply_coupling",
    "average_radiated_power",
    "baseline_iid_rayleigh",
    "baseline_rician",
    "bessel_j0",
    "build_linear_array",
    "build_planar_array",
    "build_synthetic_impedance",
    "channel_moment_params",
    "channel_moment_tables",
    "check_min_scatterer",
    "clarke_correlation",
    "closed_form_moments",
    "coherent_block",
    "coherent_blocks",
    "copolar_longitudinal_moments",
    "copolar_transverse_moments",
    "correlation_vs_spacing",
    "coupling_matrix",
    "crosspolar_variances",
    "directivity_gain",
    "dump_realization",
    "dyadic_green",
    "hermitian_logdet2",
    "kfactor_constant",
    "load_impedance",
    "load_scenario",
    "mc_capacity",
    "miso_element_moments",
    "miso_lower_bound",
    "miso_upper_bound",
    "pairwise_geometry",
    "planewave_moments",
    "polarization_eigenvalues",
    "radiation_intensity",
    "radiation_report",
    "sample_isolated_channel",
    "save_impedance",
    "siso_capacity_bound",
    "siso_farfield_bound",
    "spectral_params",
    "sphere_kernels",
    "two_user_region_practical",
    "two_user_region_theoretical",
    "validate_config",
]
