"""Periodic orbits of the relativistic N-centre problem via the Maupertuis principle."""
from .circular import (
    ModelConfig,
    classify_orbits,
    energy_of_radius,
    eta,
    nonrelativistic_limit,
    omega_from_radius,
    radius_from_energy,
)
from .homotopy import CutSystem, HomotopyWord, homotopy_word, push_off, same_class, winding_number
from .integrator import PhaseState, hamiltonian, integrate, momentum_from_velocity, velocity_from_momentum
from .loopspace import DiscreteLoop, evaluate_functionals, maupertuis_gradient, maupertuis_value
from .optimizer import SolveResult, SolveSettings, minimize_in_class, seed_loop
from .potentials import EnergyLevel, Perturbation, PotentialConfig, eval_V, grad_V
from .reparam import (
    PeriodicSolution,
    energy_param_to_time,
    maupertuis_to_energy_param,
    ode_residual,
    solution_from_minimizer,
    time_to_energy_param,
)

__version__ = "0.1.0"
