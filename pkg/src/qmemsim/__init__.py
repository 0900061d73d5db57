"""Gaussian simulation of a spatially multimode light-atom quantum memory.

Subpackages by responsibility:

* :mod:`qmemsim.gaussian` - Gaussian states, symplectic maps, sampling;
* :mod:`qmemsim.protocol` - write/readout stage maps and the memory channel;
* :mod:`qmemsim.squeezing` - squeezing spectra of the readout light;
* :mod:`qmemsim.pixels` - pixel-averaged noise covariance quadratures;
* :mod:`qmemsim.fidelity` - multipixel transfer fidelity;
* :mod:`qmemsim.experiments` - reproducible sweeps and the verification suite;
* :mod:`qmemsim.cli` - command-line entry point.
"""

from .gaussian import (
    GaussianState,
    ModeLabel,
    SymplecticMap,
    VACUUM_VARIANCE,
    apply_map,
    check_symplectic,
    make_squeezed_modes,
    make_vacuum,
    sample_state,
    symplectic_form,
)
from .protocol import (
    MemoryChannel,
    ProtocolParams,
    memory_channel,
    pass_map,
    rotation_map,
    stage_map,
    stage_map_closed_form,
    validity_report,
)
from .squeezing import (
    SqueezingSpectrum,
    flat_spectrum,
    green_x,
    lens_correct,
    load_spectrum_tables,
    opa_spectrum,
    tabulated_spectrum,
)
from .pixels import (
    DensityNoiseParams,
    NoiseCovariance,
    PixelGrid,
    assemble,
    cov_squeezed,
    density_noise_diag,
    pixel_kernel,
)
from .fidelity import (
    FidelityResult,
    classical_benchmark,
    fidelity_circulant,
    fidelity_n,
)

__all__ = [
    "GaussianState", "ModeLabel", "SymplecticMap", "VACUUM_VARIANCE",
    "apply_map", "check_symplectic", "make_squeezed_modes", "make_vacuum",
    "sample_state", "symplectic_form",
    "MemoryChannel", "ProtocolParams", "memory_channel", "pass_map",
    "rotation_map", "stage_map", "stage_map_closed_form", "validity_report",
    "SqueezingSpectrum", "flat_spectrum", "green_x", "lens_correct",
    "load_spectrum_tables", "opa_spectrum", "tabulated_spectrum",
    "DensityNoiseParams", "NoiseCovariance", "PixelGrid", "assemble",
    "cov_squeezed", "density_noise_diag", "pixel_kernel",
    "FidelityResult", "classical_benchmark", "fidelity_circulant", "fidelity_n",
]

__version__ = "0.1.0"
