"""Default tolerances and solver settings, grouped in named profiles.

Every verification threshold used by the command line lives here so that
reported numbers can be reproduced from the profile name alone. A job file
may override individual entries under its ``tolerances`` key.

=====================  ========  ========  ========  ==========================================
key                    default   strict    fast      meaning
=====================  ========  ========  ========  ==========================================
gradient_tolerance     1e-8      1e-11     1e-6      projected gradient / seed gradient at stop
refinement_schedule    128,512   128,512   64,128    grid sizes visited by the optimizer
n_times                1024      1024      256       time nodes of the periodic solution
energy_law             1e-8      1e-10     1e-6      max relative energy-law residual
constancy_spread       1e-6      1e-8      1e-4      relative spread of |q'|^2 (Z_h + 2hm)
ode_residual           1e-3      1e-4      1e-2      max-norm residual of dp/dt = grad V
period_return          1e-3      1e-4      1e-2      |x(T) - x(0)| after integrating one period
integrator_rtol        1e-11     1e-12     1e-9      relative tolerance of the Runge-Kutta pair
integrator_atol        1e-13     1e-14     1e-11     absolute tolerance of the Runge-Kutta pair
=====================  ========  ========  ========  ==========================================

The ``ode_residual`` and ``period_return`` defaults are empirical: the
forward-difference quadrature puts the discrete minimizer O(N_s^-2) away from
the continuum orbit, which is about 1.5e-4 at N_s = 512 for a two-centre
figure-eight. Circular minimizers carry no such error.
"""
from __future__ import annotations

PROFILES: dict[str, dict] = {
    "default": {
        "gradient_tolerance": 1e-8,
        "refinement_schedule": [128, 512],
        "n_times": 1024,
        "energy_law": 1e-8,
        "constancy_spread": 1e-6,
        "ode_residual": 1e-3,
        "period_return": 1e-3,
        "integrator_rtol": 1e-11,
        "integrator_atol": 1e-13,
    },
    "strict": {
        "gradient_tolerance": 1e-11,
        "refinement_schedule": [128, 512],
        "n_times": 1024,
        "energy_law": 1e-10,
        "constancy_spread": 1e-8,
        "ode_residual": 1e-4,
        "period_return": 1e-4,
        "integrator_rtol": 1e-12,
        "integrator_atol": 1e-14,
    },
    "fast": {
        "gradient_tolerance": 1e-6,
        "refinement_schedule": [64, 128],
        "n_times": 256,
        "energy_law": 1e-6,
        "constancy_spread": 1e-4,
        "ode_residual": 1e-2,
        "period_return": 1e-2,
        "integrator_rtol": 1e-9,
        "integrator_atol": 1e-11,
    },
}


def tolerance_profile(name: str = "default", overrides: dict | None = None) -> dict:
    if name not in PROFILES:
        raise KeyError(f"unknown tolerance profile {name!r}; choose from {sorted(PROFILES)}")
    out = dict(PROFILES[name])
    for key, value in (overrides or {}).items():
        if key not in out:
            raise KeyError(f"unknown tolerance key {key!r}")
        out[key] = value
    return out
