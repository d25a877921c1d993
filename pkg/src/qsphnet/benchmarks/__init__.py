from .advection import (
    AdvectionSpec,
    AdvectionRun,
    advect_step,
    advection_particles,
    advection_velocity,
    initial_scalar,
    run_period,
)
from .metrics import error_metrics
from .vortex import (
    VortexFieldSpec,
    VortexParams,
    default_vortex_field,
    field_grid,
    total_field,
    vortex_component,
)

__all__ = [
    "VortexParams",
    "VortexFieldSpec",
    "default_vortex_field",
    "vortex_component",
    "total_field",
    "field_grid",
    "AdvectionSpec",
    "AdvectionRun",
    "advection_particles",
    "advection_velocity",
    "initial_scalar",
    "advect_step",
    "run_period",
    "error_metrics",
]
