"""N-centre potential, its relativistic Jacobi weight and their gradients.

All evaluators accept a single point of shape ``(2,)`` or a batch of shape
``(n, 2)`` and return a scalar / ``(n,)`` array (resp. vector / ``(n, 2)``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionPoint, ConfigError

DEFAULT_COLLISION_RADIUS = 1e-12


@dataclass(frozen=True)
class Perturbation:
    """Bounded smooth background term W.

    ``kind`` is one of ``"zero"``, ``"constant"`` or ``"gaussian"``; the
    gaussian shape is ``W(x) = offset + amplitude * exp(-|x|^2 / width^2)``.
    """

    kind: str = "zero"
    offset: float = 0.0
    amplitude: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "gaussian"):
            raise ConfigError(f"unknown perturbation kind {self.kind!r}", "perturbation.kind")
        if self.kind == "constant" and not self.offset > 0:
            raise ConfigError("constant perturbation needs value > 0", "perturbation.value")
        if self.kind == "gaussian":
            if not (self.amplitude > 0 and self.width > 0 and self.offset > 0):
                raise ConfigError(
                    "gaussian perturbation needs amplitude, width, offset > 0", "perturbation"
                )

    @classmethod
    def zero(cls) -> "Perturbation":
        return cls("zero")

    @classmethod
    def constant(cls, value: float) -> "Perturbation":
        return cls("constant", offset=float(value))

    @classmethod
    def gaussian(cls, amplitude: float, width: float, offset: float) -> "Perturbation":
        return cls("gaussian", offset=float(offset), amplitude=float(amplitude), width=float(width))

    @property
    def upper_bound(self) -> float:
        """Smallest M with W <= M everywhere."""
        return self.offset + self.amplitude if self.kind == "gaussian" else self.offset

    @property
    def strictly_positive(self) -> bool:
        return self.kind != "zero"

    def value(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(x.shape[:-1])
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.offset)
        r2 = np.sum(x * x, axis=-1)
        return self.offset + self.amplitude * np.exp(-r2 / self.width**2)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.kind != "gaussian":
            return np.zeros_like(x)
        r2 = np.sum(x * x, axis=-1)
        fac = -2.0 * self.amplitude / self.width**2 * np.exp(-r2 / self.width**2)
        return fac[..., None] * x

    def to_dict(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.offset}
        return {
            "kind": "gaussian",
            "amplitude": self.amplitude,
            "width": self.width,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "Perturbation":
        if d is None:
            return cls.zero()
        kind = d.get("kind", "zero")
        try:
            if kind == "zero":
                return cls.zero()
            if kind == "constant":
                return cls.constant(d["value"])
            if kind == "gaussian":
                return cls.gaussian(d["amplitude"], d["width"], d["offset"])
        except KeyError as exc:
            raise ConfigError(f"missing field {exc.args[0]!r}", "perturbation") from None
        raise ConfigError(f"unknown perturbation kind {kind!r}", "perturbation.kind")


@dataclass(frozen=True)
class PotentialConfig:
    """Centres, strengths, exponent, background term and physical constants."""

    centers: np.ndarray
    strengths: np.ndarray
    alpha: float
    perturbation: Perturbation = field(default_factory=Perturbation.zero)
    m: float = 1.0
    c: float = 1.0
    collision_radius: float = DEFAULT_COLLISION_RADIUS

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        strengths = np.atleast_1d(np.asarray(self.strengths, dtype=float))
        if centers.ndim != 2 or centers.shape[1] != 2 or len(centers) == 0:
            raise ConfigError("centers must be a non-empty list of [x, y] pairs", "centers")
        if strengths.shape != (len(centers),):
            raise ConfigError("need one strength per centre", "strengths")
        if np.any(strengths <= 0):
            raise ConfigError("strengths must be > 0", "strengths")
        if not (self.m > 0):
            raise ConfigError("m must be > 0", "m")
        if not (self.c > 0):
            raise ConfigError("c must be > 0", "c")
        n = len(centers)
        for i in range(n):
            for j in range(i + 1, n):
                if np.array_equal(centers[i], centers[j]):
                    raise ConfigError(f"centres {i} and {j} coincide", "centers")
        centers.setflags(write=False)
        strengths.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "strengths", strengths)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "c", float(self.c))

    @property
    def n_centers(self) -> int:
        return len(self.centers)

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2

    @property
    def min_center_gap(self) -> float:
        if self.n_centers < 2:
            return float("inf")
        d = np.linalg.norm(self.centers[:, None, :] - self.centers[None, :, :], axis=-1)
        return float(np.min(d[np.triu_indices(self.n_centers, 1)]))

    @classmethod
    def single(cls, kappa=1.0, alpha=2.0, m=1.0, c=1.0, center=(0.0, 0.0), perturbation=None):
        return cls(
            centers=[center],
            strengths=[kappa],
            alpha=alpha,
            perturbation=perturbation or Perturbation.zero(),
            m=m,
            c=c,
        )

    def with_c(self, c: float) -> "PotentialConfig":
        return PotentialConfig(
            self.centers, self.strengths, self.alpha, self.perturbation, self.m, c,
            self.collision_radius,
        )

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "strengths": self.strengths.tolist(),
            "alpha": self.alpha,
            "m": self.m,
            "c": self.c,
            "perturbation": self.perturbation.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialConfig":
        for key in ("centers", "strengths", "alpha"):
            if key not in d:
                raise ConfigError("required field missing", key)
        return cls(
            centers=d["centers"],
            strengths=d["strengths"],
            alpha=d["alpha"],
            perturbation=Perturbation.from_dict(d.get("perturbation")),
            m=d.get("m", 1.0),
            c=d.get("c", 1.0),
            collision_radius=d.get("collision_radius", DEFAULT_COLLISION_RADIUS),
        )

    @classmethod
    def from_json(cls, text: str) -> "PotentialConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EnergyLevel:
    """Energy excess ``h`` over the rest energy ``m c^2``."""

    h: float
    m: float = 1.0
    c: float = 1.0

    @property
    def E(self) -> float:
        return self.h + self.m * self.c**2

    @classmethod
    def from_total(cls, E: float, m: float = 1.0, c: float = 1.0) -> "EnergyLevel":
        return cls(E - m * c**2, m, c)


def _h(h) -> float:
    return float(h.h) if isinstance(h, EnergyLevel) else float(h)


def _offsets(cfg: PotentialConfig, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``x`` as an array, offsets to each centre and their norms."""
    x = np.asarray(x, dtype=float)
    diff = x[..., None, :] - cfg.centers
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist <= cfg.collision_radius):
        raise CollisionPoint("evaluation point coincides with a centre")
    return x, diff, dist


def eval_V(cfg: PotentialConfig, x) -> np.ndarray | float:
    """V(x) = sum_i kappa_i / (alpha |x - sigma_i|^alpha) + W(x)."""
    x, _, dist = _offsets(cfg, x)
    v = np.sum(cfg.strengths / (cfg.alpha * dist**cfg.alpha), axis=-1)
    v = v + cfg.perturbation.value(x)
    return v[()] if np.ndim(v) == 0 else v


def grad_V(cfg: PotentialConfig, x) -> np.ndarray:
    x, diff, dist = _offsets(cfg, x)
    w = cfg.strengths / dist ** (cfg.alpha + 2)
    return -np.sum(w[..., None] * diff, axis=-2) + cfg.perturbation.gradient(x)


def jacobi_weight_from_V(V, h, m, c):
    """Z_h as a function of the potential value: 2 m V + (V + h)^2 / c^2."""
    return 2.0 * m * V + (V + h) ** 2 / c**2


def eval_Zh(cfg: PotentialConfig, h, x):
    return jacobi_weight_from_V(eval_V(cfg, x), _h(h), cfg.m, cfg.c)


def grad_Zh(cfg: PotentialConfig, h, x) -> np.ndarray:
    v = np.asarray(eval_V(cfg, x))
    fac = 2.0 / cfg.c**2 * (v + _h(h) + cfg.m * cfg.c**2)
    return fac[..., None] * grad_V(cfg, x)


def metric_weight(cfg: PotentialConfig, h, x):
    """Z_h(x) + 2 h m, the weight appearing in every loop functional."""
    hv = _h(h)
    return eval_Zh(cfg, hv, x) + 2.0 * hv * cfg.m


def in_hill_region(cfg: PotentialConfig, h, x):
    """True where V(x) + h > 0 (strict)."""
    res = np.asarray(eval_V(cfg, x)) + _h(h) > 0
    return bool(res) if res.ndim == 0 else res
