"""Discrete closed loops and the length / energy / Maupertuis functionals.

Quadrature on a uniform grid of ``n`` samples ``u_j = u(j/n)``:

* kinetic  ``int |u'|^2``      -> ``n * sum_j |u_{j+1} - u_j|^2``
* potential ``int (Z_h + 2hm)`` -> ``sum_j f(u_j) / n``   with ``f = Z_h + 2hm``

The Maupertuis value is their product, and its gradient below is the exact
derivative of that discrete product. Energy and length functionals pair each
edge speed ``n |u_{j+1} - u_j|`` with the edge-averaged weight
``(f_j + f_{j+1}) / 2``, so both sums of squares reproduce kinetic and
potential parts exactly and the discrete Cauchy-Schwarz inequality
``length^2 <= maupertuis`` holds without quadrature slack.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import OutsideHillRegion
from .fourier import PeriodicInterpolant
from .potentials import PotentialConfig, _h, eval_V, grad_Zh, metric_weight

MIN_GRID = 8


@dataclass(frozen=True, eq=False)
class DiscreteLoop:
    """Closed polyline sampled on a uniform grid; the endpoint is not repeated."""

    samples: np.ndarray

    def __post_init__(self):
        u = np.array(self.samples, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ValueError("samples must have shape (n, 2)")
        if len(u) < MIN_GRID:
            raise ValueError(f"grid size must be >= {MIN_GRID}, got {len(u)}")
        if not np.all(np.isfinite(u)):
            raise ValueError("samples must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "samples", u)

    def __len__(self):
        return len(self.samples)

    @property
    def n(self) -> int:
        return len(self.samples)

    def __eq__(self, other):
        return isinstance(other, DiscreteLoop) and np.array_equal(self.samples, other.samples)

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0, n=64, turns=1, phase=0.0):
        s = np.arange(n) / n
        ang = phase + 2.0 * np.pi * turns * s
        return cls(np.asarray(center, float) + radius * np.column_stack([np.cos(ang), np.sin(ang)]))

    def translated(self, shift) -> "DiscreteLoop":
        return DiscreteLoop(self.samples + np.asarray(shift, float))

    def reversed(self) -> "DiscreteLoop":
        return DiscreteLoop(np.roll(self.samples[::-1], 1, axis=0))

    def refine(self) -> "DiscreteLoop":
        """Double the grid by inserting edge midpoints (geometry unchanged)."""
        u = self.samples
        mid = 0.5 * (u + np.roll(u, -1, axis=0))
        out = np.empty((2 * len(u), 2))
        out[0::2] = u
        out[1::2] = mid
        return DiscreteLoop(out)

    def resample(self, n: int) -> "DiscreteLoop":
        """Trigonometric interpolation onto a uniform grid of ``n`` samples."""
        if n == self.n:
            return self
        return DiscreteLoop(PeriodicInterpolant(self.samples).on_grid(n))

    # serialization -------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("j,x,y\n")
        for j, (x, y) in enumerate(self.samples):
            buf.write(f"{j},{x:.17g},{y:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteLoop":
        rows = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        order = np.argsort(rows[:, 0], kind="stable")
        return cls(rows[order, 1:3])

    def to_json(self) -> str:
        return json.dumps(
            {"grid_size": self.n, "samples": [[float(f"{x:.17g}"), float(f"{y:.17g}")] for x, y in self.samples]}
        )

    @classmethod
    def from_json(cls, text: str) -> "DiscreteLoop":
        d = json.loads(text)
        return cls(np.asarray(d["samples"], dtype=float))


@dataclass(frozen=True)
class FunctionalReport:
    kinetic: float
    potential_part: float
    maupertuis: float
    energy_functional: float
    length: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _weights(loop: DiscreteLoop, cfg: PotentialConfig, h) -> np.ndarray:
    """Per-sample ``Z_h + 2hm``; raises if a sample leaves the Hill region."""
    u = loop.samples
    v = eval_V(cfg, u)
    if np.any(v + _h(h) <= 0):
        raise OutsideHillRegion("loop sample violates V + h > 0")
    return metric_weight(cfg, h, u)


def _edges(u: np.ndarray) -> np.ndarray:
    return np.roll(u, -1, axis=0) - u


def kinetic(loop: DiscreteLoop) -> float:
    d = _edges(loop.samples)
    return float(loop.n * np.sum(d * d))


def evaluate_functionals(loop: DiscreteLoop, cfg: PotentialConfig, h) -> FunctionalReport:
    n = loop.n
    f = _weights(loop, cfg, h)
    d = _edges(loop.samples)
    speed2 = n**2 * np.sum(d * d, axis=1)
    f_edge = 0.5 * (f + np.roll(f, -1))
    kin = float(np.mean(speed2))
    pot = float(np.mean(f))
    return FunctionalReport(
        kinetic=kin,
        potential_part=pot,
        maupertuis=kin * pot,
        energy_functional=float(np.mean(speed2 * f_edge)),
        length=float(np.mean(np.sqrt(speed2 * f_edge))),
    )


def maupertuis_value(loop: DiscreteLoop, cfg: PotentialConfig, h) -> float:
    return kinetic(loop) * float(np.mean(_weights(loop, cfg, h)))


def maupertuis_gradient(loop: DiscreteLoop, cfg: PotentialConfig, h) -> np.ndarray:
    """Exact gradient of the discrete Maupertuis value, shape ``(n, 2)``."""
    u = loop.samples
    n = loop.n
    f = _weights(loop, cfg, h)
    d = _edges(u)
    kin = n * np.sum(d * d)
    dkin = 2.0 * n * (2.0 * u - np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0))
    return dkin * np.mean(f) + kin * grad_Zh(cfg, h, u) / n


def directional_derivative(loop: DiscreteLoop, cfg: PotentialConfig, h, direction) -> float:
    direction = np.asarray(direction, dtype=float)
    if direction.shape != loop.samples.shape:
        raise ValueError("direction needs one vector per sample")
    return float(np.sum(maupertuis_gradient(loop, cfg, h) * direction))


def h1_norm_to_center(loop: DiscreteLoop, center) -> float:
    """(int |u - sigma|^2 + int |u'|^2)^(1/2) under the loop quadrature."""
    w = loop.samples - np.asarray(center, float)
    return float(np.sqrt(np.mean(np.sum(w * w, axis=1)) + kinetic(loop)))


def sup_distance_to_center(loop: DiscreteLoop, center) -> tuple[float, float]:
    """Return ``(min_j |u_j - sigma|, max_j |u_j - sigma|)``."""
    r = np.linalg.norm(loop.samples - np.asarray(center, float), axis=1)
    return float(r.min()), float(r.max())


def distance_to_center(loop: DiscreteLoop, center, norm_choice: str = "sup_distance") -> float:
    """Loop-to-centre distance used by the collision margin.

    ``"sup_distance"`` is the pointwise minimum sample distance (the collision
    margin); ``"h1_distance"`` the H^1 norm of ``u - sigma``.
    """
    if norm_choice == "sup_distance":
        return sup_distance_to_center(loop, center)[0]
    if norm_choice == "h1_distance":
        return h1_norm_to_center(loop, center)
    raise ValueError(f"unknown norm choice {norm_choice!r}")
