"""Monte Carlo ensemble for Brownian vortex filaments.

Samples filament cores (Brownian motion, bridge, drifted SDE), computes the
spectral energies H and H~ over a nu-weighted wavenumber grid, estimates
Gibbs partition functions and energy spectra, and cross-validates the
kernel-space decompositions (intersection local time included) against the
spectral route.

The hot kernels run in a compiled extension when available, with a
pure-numpy fallback selected at import; see filament_mc.backend().
"""

from ._backend import BACKEND
from .cross_section import CrossSection, kernel_b, kernel_g, kernel_rho2, nu_mass, spherical_avg
from .energy import (EnergyReport, MultiVortexReport, SmoothCurve, area_lower_bound,
                     energy, energy_difference_closed_form, energy_report,
                     energy_smooth_curve, energy_tilde, interaction_energy, total_energy)
from .gibbs import (EnsembleRecord, EnsembleSpec, GibbsEstimate, GibbsValue,
                    energy_spectrum, gamma_thresholds, gibbs_expectation,
                    partition_function, run_ensemble)
from .integrals import (FilamentTransform, backward_ito_integral, ito_integral,
                        project_transverse, strat_integral, transform)
from .kgrid import KGrid, build_kgrid
from .local_time import (DecompositionReport, PointlikeReport,
                         energy_decomposed_projected, energy_tilde_decomposed,
                         pointlike_interaction, smoothed_self_intersection)
from .paths import (DriftModel, Path, SeedSpec, TimeGrid, drift_l1_moment,
                    sample_bm, sample_bridge, sample_sde_euler)

__version__ = "0.1.0"


def backend():
    """Name of the active kernel backend: "compiled" or "python"."""
    return BACKEND
