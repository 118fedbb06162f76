"""Changes of variable between Maupertuis loops, energy loops and timed orbits.

Three parameterizations of the same closed curve appear here:

* a Maupertuis loop ``u(s)``: any critical point of the product functional;
* an energy loop ``q(sigma)`` with ``|q'|^2 (Z_h + 2hm)`` constant;
* a timed orbit ``x(t)`` on ``[0, T)`` solving the relativistic equation.

Every map works on the band-limited interpolant of the samples, so
derivatives and integrals are spectrally accurate for smooth loops.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLoop, EnergyLawViolated, NonMonotoneTime
from .fourier import PeriodicInterpolant, invert_monotone
from .loopspace import DiscreteLoop, kinetic
from .potentials import PotentialConfig, _h, eval_V, grad_V, metric_weight

ENERGY_LAW_LIMIT = 1e-6


@dataclass
class PeriodicSolution:
    """Periodic orbit sampled on a uniform time grid ``t_k = k T / n``."""

    T: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    E: float
    h: float
    lam: float
    m: float = 1.0
    c: float = 1.0
    lambda_spread: float = 0.0
    residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.t)

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.v, axis=1)

    def momenta(self) -> np.ndarray:
        beta2 = np.sum(self.v**2, axis=1) / self.c**2
        return self.m * self.v / np.sqrt(1.0 - beta2)[:, None]

    def energy_law_residual(self, cfg: PotentialConfig) -> float:
        """max_k |m c^2 / sqrt(1 - |v_k|^2/c^2) - V(x_k) - E| / |E|."""
        beta2 = np.sum(self.v**2, axis=1) / self.c**2
        energy = self.m * self.c**2 / np.sqrt(1.0 - beta2) - eval_V(cfg, self.x)
        return float(np.max(np.abs(energy - self.E)) / abs(self.E))

    def position(self, t) -> np.ndarray:
        """Band-limited interpolation of the orbit at arbitrary times."""
        return PeriodicInterpolant(self.x)(np.asarray(t, float) / self.T)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,y,vx,vy\n")
        for tk, (x, y), (vx, vy) in zip(self.t, self.x, self.v):
            buf.write(f"{tk:.17g},{x:.17g},{y:.17g},{vx:.17g},{vy:.17g}\n")
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "T": self.T,
            "h": self.h,
            "E": self.E,
            "lambda": self.lam,
            "lambda_spread": self.lambda_spread,
            "m": self.m,
            "c": self.c,
            "n_times": self.n,
            "max_speed_over_c": float(np.max(self.speeds()) / self.c),
            "residuals": dict(self.residuals),
        }

    def to_json(self) -> str:
        d = self.metadata()
        d["t"] = self.t.tolist()
        d["x"] = self.x.tolist()
        d["v"] = self.v.tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "PeriodicSolution":
        d = json.loads(text)
        return cls(
            T=d["T"], t=np.asarray(d["t"], float), x=np.asarray(d["x"], float),
            v=np.asarray(d["v"], float), E=d["E"], h=d["h"], lam=d["lambda"],
            m=d.get("m", 1.0), c=d.get("c", 1.0), lambda_spread=d.get("lambda_spread", 0.0),
            residuals=d.get("residuals", {}),
        )


def _sample_profile(interp: PeriodicInterpolant, s, cfg, h):
    pos = interp(s)
    vel = interp(s, derivative=1)
    speed = np.linalg.norm(vel, axis=1)
    return pos, vel, speed, metric_weight(cfg, h, pos)


def _reparameterize(interp: PeriodicInterpolant, density: np.ndarray, n_out: int) -> np.ndarray:
    """Parameters ``s_k`` with ``int_0^{s_k} density = k / n_out`` (normalized).

    ``density`` holds samples on the source grid; its band-limited interpolant
    is integrated exactly and the cumulative map inverted by Newton.
    """
    dens = PeriodicInterpolant(density)
    total = dens.mean()
    n = len(density)
    grid = np.arange(n + 1) / n
    table = np.append(dens.antiderivative(grid[:-1]), total) / total
    if np.any(np.diff(table) <= 0) or np.any(density <= 0):
        raise NonMonotoneTime("parameter change is not strictly increasing")
    targets = np.arange(n_out) / n_out
    s = invert_monotone(
        lambda x: dens.antiderivative(x) / total,
        lambda x: dens(x) / total,
        grid, table, targets,
    )
    s[0] = 0.0
    return s


def maupertuis_to_energy_param(u: DiscreteLoop, cfg: PotentialConfig, h,
                               n_out: int | None = None) -> DiscreteLoop:
    """Resample ``u`` so that ``|q'|^2 (Z_h + 2hm)`` is constant.

    The new parameter is the normalized Jacobi arclength
    ``int |u'| sqrt(Z_h + 2hm)``, which is the change of variable taking a
    Maupertuis critical point to an energy critical point.
    """
    if kinetic(u) == 0:
        raise DegenerateLoop("constant loop has no parameterization")
    n_out = n_out or u.n
    interp = PeriodicInterpolant(u.samples)
    s_grid = np.arange(u.n) / u.n
    _, _, speed, f = _sample_profile(interp, s_grid, cfg, h)
    if np.any(speed <= 0):
        raise DegenerateLoop("loop has a stationary point")
    s = _reparameterize(interp, speed * np.sqrt(f), n_out)
    return DiscreteLoop(interp(s))


def constancy_profile(q: DiscreteLoop, cfg: PotentialConfig, h) -> np.ndarray:
    """Nodal values of ``(1/2) |q'|^2 (Z_h + 2hm)`` with spectral derivatives."""
    interp = PeriodicInterpolant(q.samples)
    _, _, speed, f = _sample_profile(interp, np.arange(q.n) / q.n, cfg, h)
    return 0.5 * speed**2 * f


def energy_param_to_time(q: DiscreteLoop, cfg: PotentialConfig, h,
                         n_times: int | None = None) -> PeriodicSolution:
    """Timed orbit from an energy loop.

    ``dt/dsigma = (V + h + m c^2) |q'| / (c^2 sqrt(Z_h + 2hm))`` and the
    velocity is ``c^2 (q'/|q'|) sqrt(Z_h + 2hm) / (V + h + m c^2)``, which
    satisfies the energy law identically and is strictly below ``c``.
    """
    hv = _h(h)
    m, c = cfg.m, cfg.c
    n_times = n_times or q.n
    interp = PeriodicInterpolant(q.samples)
    sigma = np.arange(q.n) / q.n
    pos, _, speed, f = _sample_profile(interp, sigma, cfg, hv)
    if np.any(speed <= 0):
        raise DegenerateLoop("loop has a stationary point")
    lam_nodes = 0.5 * speed**2 * f
    lam = float(np.mean(lam_nodes))
    spread = float((lam_nodes.max() - lam_nodes.min()) / lam)
    gamma_e = eval_V(cfg, pos) + hv + m * c**2
    dt = gamma_e * speed / (c**2 * np.sqrt(f))
    T = float(PeriodicInterpolant(dt).mean())
    if not T > 0:
        raise NonMonotoneTime("period is not positive")
    s = _reparameterize(interp, dt, n_times)
    x = interp(s)
    dq = interp(s, derivative=1)
    fx = metric_weight(cfg, hv, x)
    ge = eval_V(cfg, x) + hv + m * c**2
    v = c**2 * dq / np.linalg.norm(dq, axis=1)[:, None] * (np.sqrt(fx) / ge)[:, None]
    sol = PeriodicSolution(
        T=T, t=T * np.arange(n_times) / n_times, x=x, v=v, E=hv + m * c**2, h=hv,
        lam=lam, m=m, c=c, lambda_spread=spread,
    )
    sol.residuals["energy_law"] = sol.energy_law_residual(cfg)
    sol.residuals["max_speed_over_c"] = float(np.max(sol.speeds()) / c)
    if sol.residuals["max_speed_over_c"] >= 1.0:
        raise NonMonotoneTime("velocity reached the speed of light")
    return sol


def time_to_energy_param(sol: PeriodicSolution, cfg: PotentialConfig, h,
                         n_samples: int | None = None) -> DiscreteLoop:
    """Energy loop from a timed orbit.

    ``dsigma/dt`` is proportional to ``(Z_h + 2hm) / (V + h + m c^2)``, with
    the constant (hence lambda) fixed by requiring ``sigma(T) = 1``.
    """
    hv = _h(h)
    res = sol.energy_law_residual(cfg)
    if res > ENERGY_LAW_LIMIT:
        raise EnergyLawViolated(f"energy law residual {res:.3e} exceeds {ENERGY_LAW_LIMIT:g}")
    n_samples = n_samples or sol.n
    interp = PeriodicInterpolant(sol.x)
    f = metric_weight(cfg, hv, sol.x)
    dens = f / (eval_V(cfg, sol.x) + hv + cfg.m * cfg.c**2)
    tau = _reparameterize(interp, dens, n_samples)
    return DiscreteLoop(interp(tau))


def part_b_lambda(sol: PeriodicSolution, cfg: PotentialConfig, h) -> float:
    """lambda with ``(c^2 / sqrt(2 lambda)) int_0^T (Z_h+2hm)/(V+h+mc^2) dt = 1``."""
    hv = _h(h)
    dens = metric_weight(cfg, hv, sol.x) / (eval_V(cfg, sol.x) + hv + cfg.m * cfg.c**2)
    integral = sol.T * float(np.mean(dens))
    return 0.5 * (cfg.c**2 * integral) ** 2


def ode_residual(sol: PeriodicSolution, cfg: PotentialConfig) -> float:
    """Max-norm residual of ``dp/dt = grad V(x)`` with 4th-order periodic differences."""
    p = sol.momenta()
    dt = sol.T / sol.n
    dp = (
        -np.roll(p, -2, axis=0) + 8.0 * np.roll(p, -1, axis=0)
        - 8.0 * np.roll(p, 1, axis=0) + np.roll(p, 2, axis=0)
    ) / (12.0 * dt)
    return float(np.max(np.linalg.norm(dp - grad_V(cfg, sol.x), axis=1)))


def solution_from_minimizer(u: DiscreteLoop, cfg: PotentialConfig, h,
                            n_times: int | None = None) -> PeriodicSolution:
    """Maupertuis minimizer -> energy loop -> timed orbit, with residuals filled in."""
    q = maupertuis_to_energy_param(u, cfg, h)
    sol = energy_param_to_time(q, cfg, h, n_times)
    sol.residuals["ode"] = ode_residual(sol, cfg)
    return sol
