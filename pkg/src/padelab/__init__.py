"""Exact Padé tables, ray sequences and convergence experiments for power series."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapabilityError,
    ConfigError,
    DomainError,
    GridError,
    InvariantViolation,
    NumericFailure,
    PadeLabError,
    ParameterError,
    PoleProximityError,
    ScheduleError,
)
from .pade import (  # noqa: E402
    A_coefficient,
    PadeEntry,
    block_scan,
    compute_entries,
    difference_identity_residual,
    normalize_denominator,
    order_of_contact,
    pade,
    tail_series_check,
)
from .poly import Polynomial  # noqa: E402
from .series import PowerSeries, catalog_make, resolve_radius  # noqa: E402
from .sequences import (  # noqa: E402
    DecayProfile,
    Window,
    build_schedule,
    decay_profile,
    detect_coeff_gaps,
    detect_decay_windows,
    detect_stationary_runs,
    psi,
    psi_window_search,
)
from .convergence import grid_errors, omega_disks, overconvergence_scan, pole_proximity  # noqa: E402

__all__ = [
    "__version__",
    "A_coefficient", "CapabilityError", "ConfigError", "DecayProfile", "DomainError", "GridError",
    "InvariantViolation", "NumericFailure", "PadeEntry", "PadeLabError", "ParameterError",
    "PoleProximityError", "Polynomial", "PowerSeries", "ScheduleError", "Window", "block_scan",
    "build_schedule", "catalog_make", "compute_entries", "decay_profile", "detect_coeff_gaps",
    "detect_decay_windows", "detect_stationary_runs", "difference_identity_residual", "grid_errors",
    "normalize_denominator", "omega_disks", "order_of_contact", "overconvergence_scan", "pade",
    "pole_proximity", "psi", "resolve_radius", "tail_series_check", "psi_window_search",
]
