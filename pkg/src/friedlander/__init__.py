"""Numerics for the Friedlander model: Airy spectrum, glancing billiard
geodesics, mollified wave traces and symbol-class checks of the phase."""

from ._accel import backend
from .errors import (
    ConvergenceError,
    DomainError,
    FriedlanderError,
    SamplingError,
    TableExhaustedError,
)
from .geodesics import (
    ClosedGeodesic,
    LengthSpectrumTable,
    PhasePoint,
    closed_geodesic,
    exact_gap,
    free_flight,
    gap_below,
    integrate_flow,
    length_spectrum,
    stationary_length,
)
from .special_fn import AiryZeroTable, airy, airy_ai, airy_zero, tau, tau_asymptotic, theta, theta_inverse, zero_table
from .spectrum import (
    actions_from_energy,
    bohr_sommerfeld,
    eigenvalue,
    energy_from_actions,
    enumerate_below,
    sector_deviation,
    wkb_phase_residual,
)
from .symbols import check_classical_symbol, check_elliptic, check_sigma_bound, parse_claim, run_claim
from .trace import (
    ConePartition,
    TraceRequest,
    TraceResult,
    find_peaks,
    match_peaks,
    poisson_check,
    smoothness_asymmetry,
    windowed_trace,
)

__version__ = "0.1.0"
