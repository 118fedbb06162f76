"""Forward integration of the relativistic Hamiltonian system.

Phase variables are position and relativistic momentum,

    dx/dt = p / (m sqrt(1 + |p|^2 / (m^2 c^2))),   dp/dt = grad V(x),

so the speed stays below ``c`` by construction. Time stepping uses scipy's
DOP853 (Dormand-Prince 8(5,3) embedded pair) with dense output; a terminal
event halts the run when the particle comes within ``collision_epsilon`` of
a centre.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CollisionApproach, StepUnderflow, SuperluminalInput
from .potentials import PotentialConfig, eval_V, grad_V


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(2)
        p = np.asarray(self.p, dtype=float).reshape(2)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("phase state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])


def lorentz_factor_from_momentum(cfg: PotentialConfig, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.sqrt(1.0 + np.sum(p * p, axis=-1) / (cfg.m * cfg.c) ** 2)


def velocity_from_momentum(cfg: PotentialConfig, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p / (cfg.m * lorentz_factor_from_momentum(cfg, p))[..., None]


def momentum_from_velocity(cfg: PotentialConfig, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    beta2 = np.sum(v * v, axis=-1) / cfg.c**2
    if np.any(beta2 >= 1.0):
        raise SuperluminalInput("|v| must be strictly below c")
    return cfg.m * v / np.sqrt(1.0 - beta2)[..., None]


def hamiltonian(cfg: PotentialConfig, state: PhaseState) -> float:
    """H = m c^2 sqrt(1 + |p|^2/(m^2 c^2)) - V(x)."""
    return float(cfg.rest_energy * lorentz_factor_from_momentum(cfg, state.p) - eval_V(cfg, state.x))


def angular_momentum(x, p, center=(0.0, 0.0)) -> np.ndarray:
    """L = (x - center) x p, the planar cross product."""
    w = np.asarray(x, float) - np.asarray(center, float)
    p = np.asarray(p, float)
    return w[..., 0] * p[..., 1] - w[..., 1] * p[..., 0]


@dataclass
class IntegrationResult:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    H: np.ndarray
    L: np.ndarray
    energy_drift: np.ndarray
    angular_momentum_drift: np.ndarray
    status: str
    nfev: int
    n_steps: int  # -1 when output was requested on t_eval
    min_center_distance: float
    dense: object = field(default=None, repr=False)

    @property
    def collided(self) -> bool:
        return self.status == "collision"

    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy_drift)))

    def max_angular_momentum_drift(self) -> float:
        return float(np.max(np.abs(self.angular_momentum_drift)))

    def state_at(self, t: float) -> PhaseState:
        y = self.dense(t)
        return PhaseState(y[:2], y[2:])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,y,px,py,H,L\n")
        for row in zip(self.t, self.x[:, 0], self.x[:, 1], self.p[:, 0], self.p[:, 1], self.H, self.L):
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "status": self.status,
            "t_final": float(self.t[-1]),
            "max_energy_drift": self.max_energy_drift(),
            "max_angular_momentum_drift": self.max_angular_momentum_drift(),
            "nfev": self.nfev,
            "n_steps": self.n_steps,
            "min_center_distance": self.min_center_distance,
        }


def integrate(cfg: PotentialConfig, initial: PhaseState, t_end: float,
              rtol: float = 1e-10, atol: float = 1e-12,
              collision_epsilon: float = 1e-6, t_eval=None,
              raise_on_collision: bool = False) -> IntegrationResult:
    """Integrate from ``initial`` over ``[0, t_end]``.

    Drift series are relative to the initial values: ``(H - H0)/|H0|`` and,
    about the first centre, ``(L - L0)/max(|L0|, 1)``. A close approach halts
    the run and returns the partial trajectory with ``status="collision"``
    (or raises CollisionApproach carrying it).
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    m2c2 = (cfg.m * cfg.c) ** 2

    def rhs(_t, y):
        p = y[2:]
        xdot = p / (cfg.m * np.sqrt(1.0 + (p @ p) / m2c2))
        return np.concatenate([xdot, grad_V(cfg, y[:2])])

    def near_center(_t, y):
        return float(np.min(np.linalg.norm(cfg.centers - y[:2], axis=1))) - collision_epsilon

    near_center.terminal = True
    near_center.direction = -1

    if near_center(0.0, initial.as_vector()) <= 0:
        raise CollisionApproach("initial position is inside the collision radius", None)
    sol = solve_ivp(
        rhs, (0.0, float(t_end)), initial.as_vector(), method="DOP853", rtol=rtol, atol=atol,
        events=near_center, dense_output=True, t_eval=t_eval,
    )
    if sol.status == -1:
        raise StepUnderflow(sol.message)
    x = sol.y[:2].T
    p = sol.y[2:].T
    H = cfg.rest_energy * lorentz_factor_from_momentum(cfg, p) - eval_V(cfg, x)
    L = angular_momentum(x, p, cfg.centers[0])
    H0 = hamiltonian(cfg, initial)
    L0 = float(angular_momentum(initial.x, initial.p, cfg.centers[0]))
    dist = np.min(np.linalg.norm(x[:, None, :] - cfg.centers[None], axis=-1))
    result = IntegrationResult(
        t=sol.t, x=x, p=p, H=H, L=L,
        energy_drift=(H - H0) / abs(H0) if H0 != 0 else H - H0,
        angular_momentum_drift=(L - L0) / max(abs(L0), 1.0),
        status="collision" if sol.status == 1 else "ok",
        nfev=int(sol.nfev), n_steps=len(sol.t) - 1 if t_eval is None else -1,
        min_center_distance=float(dist), dense=sol.sol,
    )
    if result.collided and raise_on_collision:
        raise CollisionApproach(f"trajectory came within {collision_epsilon:g} of a centre", result)
    return result


def return_distance(cfg: PotentialConfig, x0, v0, period: float,
                    rtol: float = 1e-11, atol: float = 1e-13) -> float:
    """|x(T) - x(0)| after integrating from position ``x0`` and velocity ``v0``."""
    state = PhaseState(x0, momentum_from_velocity(cfg, v0))
    res = integrate(cfg, state, period, rtol=rtol, atol=atol)
    if res.collided:
        return float("inf")
    return float(np.linalg.norm(res.state_at(period).x - state.x))
