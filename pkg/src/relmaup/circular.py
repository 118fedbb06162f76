"""Single-centre model problem: circular orbits, thresholds, radial admissibility.

With ``t = r^alpha`` and ``g = sqrt(kappa^2 + 4 m^2 c^4 t^2)`` the circular
orbit of radius ``r`` has

    omega^2 = 2 kappa c^2 / ((g + kappa) r^2),
    E(r)    = kappa f(t),   f(t) = (g + kappa) / (2 kappa t) - 1 / (alpha t).

The printed forms ``-kappa^2 + kappa g`` lose every digit as ``t -> 0``; all
expressions below use the conjugate ``g - kappa = 4 m^2 c^4 t^2 / (g + kappa)``
and ``g - 2 m c^2 t = kappa^2 / (g + 2 m c^2 t)`` instead.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import BracketFailure, InvalidExponent, NoCircularOrbit, RootNotBracketed

BISECT_RTOL = 1e-12
SCAN_PER_DECADE = 400
SCAN_RANGE = (1e-6, 1e6)

NO_BOUNDED = "NoBoundedOrbits"
CIRCULAR_ONLY = "CircularOnly"
ANNULUS = "AnnulusPresent"


@dataclass(frozen=True)
class ModelConfig:
    """Single centre at the origin, ``V = kappa / (alpha r^alpha)``, no background."""

    kappa: float = 1.0
    alpha: float = 2.0
    m: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.kappa > 0 and self.m > 0 and self.c > 0):
            raise ValueError("kappa, m and c must be > 0")
        if not self.alpha > 1:
            raise InvalidExponent(f"alpha must be > 1, got {self.alpha}")

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2

    def with_c(self, c: float) -> "ModelConfig":
        return ModelConfig(self.kappa, self.alpha, self.m, c)

    def potential_config(self):
        from .potentials import PotentialConfig

        return PotentialConfig.single(self.kappa, self.alpha, self.m, self.c)


# ----------------------------------------------------------------------------
# circular orbits

def _g(model: ModelConfig, t):
    return np.sqrt(model.kappa**2 + 4.0 * (model.rest_energy * t) ** 2)


def reduced_energy(t, kappa: float, alpha: float, m: float = 1.0, c: float = 1.0):
    """``f(t)`` without parameter validation (also usable at ``alpha = 1``)."""
    t = np.asarray(t, dtype=float)
    g = np.sqrt(kappa**2 + 4.0 * (m * c**2 * t) ** 2)
    return (g + kappa) / (2.0 * kappa * t) - 1.0 / (alpha * t)


def omega_from_radius(model: ModelConfig, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radius must be > 0")
    t = r**model.alpha
    return np.sqrt(2.0 * model.kappa * model.c**2 / ((_g(model, t) + model.kappa) * r**2))


def energy_of_radius(model: ModelConfig, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radius must be > 0")
    return model.kappa * reduced_energy(r**model.alpha, model.kappa, model.alpha, model.m, model.c)


def excess_of_t(model: ModelConfig, t):
    """``kappa f(t) - m c^2`` in cancellation-free form."""
    t = np.asarray(t, dtype=float)
    k, mc2 = model.kappa, model.rest_energy
    g = _g(model, t)
    return k**2 / (2.0 * t * (g + 2.0 * mc2 * t)) + k * (0.5 - 1.0 / model.alpha) / t


def excess_energy(model: ModelConfig, r):
    return excess_of_t(model, np.asarray(r, dtype=float) ** model.alpha)


def eta(model: ModelConfig, alpha: float | None = None) -> float:
    """Energy threshold for circular orbits: exist iff E > eta."""
    a = model.alpha if alpha is None else float(alpha)
    if not a > 1:
        raise InvalidExponent(f"alpha must be > 1, got {a}")
    if a >= 2:
        return model.rest_energy
    return 2.0 * model.rest_energy * np.sqrt(a - 1.0) / a


def t_min(model: ModelConfig) -> float:
    """Minimum point of ``f`` for ``alpha < 2``."""
    a = model.alpha
    if a >= 2:
        raise ValueError("f has an interior minimum only for alpha < 2")
    return model.kappa / model.rest_energy * np.sqrt(a - 1.0) / (2.0 - a)


def _bisect_decreasing(func, target, lo, hi):
    """Root of ``func(t) = target`` with ``func`` decreasing on ``[lo, hi]``."""
    return bisect(lambda t: func(t) - target, lo, hi, xtol=1e-300, rtol=BISECT_RTOL, maxiter=2000)


def _bracket_decreasing(func, target, lo=None, hi=None, start=1.0):
    """Expand by doubling until ``func(lo) > target > func(hi)``."""
    lo = start if lo is None else lo
    hi_fixed = hi is not None
    hi = start if hi is None else hi
    for _ in range(4000):
        if func(lo) > target:
            break
        lo *= 0.5
    else:
        raise BracketFailure("no lower bracket")
    for _ in range(4000):
        if func(hi) < target:
            break
        if hi_fixed:
            raise BracketFailure("target not reached on the branch")
        hi *= 2.0
    else:
        raise BracketFailure("no upper bracket")
    return lo, hi


def _t_from_excess(model: ModelConfig, h: float) -> list[float]:
    """All ``t`` with ``kappa f(t) - m c^2 = h``, ascending."""
    func = lambda t: float(excess_of_t(model, t))
    if model.alpha >= 2:
        if not h > 0:
            raise NoCircularOrbit(f"circular orbits need E > m c^2 (excess {h:g} <= 0)")
        lo, hi = _bracket_decreasing(func, h)
        return [_bisect_decreasing(func, h, lo, hi)]
    tm = t_min(model)
    h_min = float(excess_of_t(model, tm))
    if not h > h_min:
        raise NoCircularOrbit(f"E must exceed eta = {eta(model):.15g}")
    lo, _ = _bracket_decreasing(func, h, hi=tm, start=tm)
    roots = [_bisect_decreasing(func, h, lo, tm)]
    if h < 0:
        # increasing branch towards the asymptote m c^2 from below
        neg = lambda t: -func(t)
        hi = 2.0 * tm
        for _ in range(4000):
            if func(hi) > h:
                break
            hi *= 2.0
        else:
            raise BracketFailure("no bracket on the outer branch")
        roots.append(_bisect_decreasing(neg, -h, tm, hi))
    return roots


def radius_from_excess(model: ModelConfig, h: float) -> list[float]:
    return [t ** (1.0 / model.alpha) for t in _t_from_excess(model, float(h))]


def radius_from_energy(model: ModelConfig, E: float) -> list[float]:
    """Radii of all circular orbits of energy ``E``, ascending.

    Raises NoCircularOrbit when ``E <= eta``.
    """
    E = float(E)
    if not E > eta(model):
        raise NoCircularOrbit(f"E = {E:.17g} does not exceed eta = {eta(model):.17g}")
    return radius_from_excess(model, E - model.rest_energy)


@dataclass
class RadialProfile:
    r: np.ndarray
    omega: np.ndarray
    E: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,omega,E\n")
        for row in zip(self.r, self.omega, self.E):
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def radial_profile(model: ModelConfig, r_min: float = 1e-3, r_max: float = 1e3,
                   per_decade: int = 20) -> RadialProfile:
    n = int(round(np.log10(r_max / r_min) * per_decade)) + 1
    r = np.logspace(np.log10(r_min), np.log10(r_max), n)
    return RadialProfile(r, omega_from_radius(model, r), energy_of_radius(model, r))


def circular_state(model: ModelConfig, r: float, phase: float = 0.0):
    """Position, velocity and angular frequency of the counter-clockwise
    circular orbit of radius ``r``."""
    w = float(omega_from_radius(model, r))
    x = r * np.array([np.cos(phase), np.sin(phase)])
    v = w * r * np.array([-np.sin(phase), np.cos(phase)])
    return x, v, w


def circular_momentum(model: ModelConfig, r: float, phase: float = 0.0) -> np.ndarray:
    """Relativistic momentum on the circular orbit of radius ``r``.

    On the orbit ``1 - |v|^2/c^2 = (g - kappa)/(g + kappa)``, so the Lorentz
    factor is ``(g + kappa) / (2 m c^2 t)``; this avoids forming ``1 - |v|^2/c^2``
    by subtraction when the speed is close to ``c``.
    """
    t = r**model.alpha
    gamma = (_g(model, t) + model.kappa) / (2.0 * model.rest_energy * t)
    _, v, _ = circular_state(model, r, phase)
    return model.m * gamma * v


# ----------------------------------------------------------------------------
# radial admissibility

def effective_potential(model: ModelConfig, E: float, L: float, r):
    """Phi_{E,L}(r); motion at (E, L) is confined to ``Phi >= 0``."""
    r = np.asarray(r, dtype=float)
    k, a, c = model.kappa, model.alpha, model.c
    return (
        k**2 / (a**2 * r ** (2 * a)) - c**2 * L**2 / r**2 + 2.0 * E * k / (a * r**a)
        + E**2 - model.rest_energy**2
    ) / c**2


def phi_tilde(model: ModelConfig, E: float, L: float, r):
    """``c^2 L^2 r^(2a-2) - kappa^2/a - E kappa r^a``, the sign of Phi'."""
    r = np.asarray(r, dtype=float)
    k, a = model.kappa, model.alpha
    return model.c**2 * L**2 * r ** (2 * a - 2) - k**2 / a - E * k * r**a


def _phi_magnitude(model: ModelConfig, E: float, L: float, r: float) -> float:
    """Sum of the absolute terms of Phi at ``r``, the scale for 'Phi == 0'."""
    k, a, c = model.kappa, model.alpha, model.c
    return (
        k**2 / (a**2 * r ** (2 * a)) + c**2 * L**2 / r**2 + abs(2.0 * E * k / (a * r**a))
        + abs(E**2 - model.rest_energy**2)
    ) / c**2


def effective_potential_derivative(model: ModelConfig, E: float, L: float, r):
    r = np.asarray(r, dtype=float)
    return 2.0 / (model.c**2 * r ** (2 * model.alpha + 1)) * phi_tilde(model, E, L, r)


@dataclass
class P2Analysis:
    """Phi for alpha = 2 as a quadratic in ``x = r^2``: ``c^2 r^4 Phi = P2(r^2)``."""

    coefficients: tuple[float, float, float]  # constant, linear, quadratic
    positive_roots: list[float]
    bounded_positive_interval: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def p2_analysis(model: ModelConfig, E: float, L: float) -> P2Analysis:
    if model.alpha != 2:
        raise ValueError("the quadratic reduction holds for alpha = 2 only")
    k, a, c = model.kappa, model.alpha, model.c
    c0 = k**2 / a**2
    c1 = -(c**2 * L**2 - 2.0 * E * k / a)
    c2 = E**2 - model.rest_energy**2
    if c2 == 0:
        roots = [] if c1 == 0 else [-c0 / c1]
    else:
        roots = list(np.roots([c2, c1, c0]))
    pos = sorted(float(np.real(x)) for x in roots if abs(np.imag(x)) < 1e-14 and np.real(x) > 0)
    bounded = False
    for x1, x2 in zip(pos, pos[1:]):
        mid = 0.5 * (x1 + x2)
        if c0 + c1 * mid + c2 * mid**2 > 0:
            bounded = True
    return P2Analysis((c0, c1, c2), pos, bounded)


@dataclass
class OrbitClassification:
    E: float
    L: float
    alpha: float
    critical_points: list[float]
    critical_values: list[float]
    zeros: list[float]
    sign_pattern: str
    annuli: list[tuple[float, float]]
    verdict: str
    unique_critical_point: bool | None = None
    p2: P2Analysis | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def n_critical_points(self) -> int:
        return len(self.critical_points)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["p2"] = self.p2.as_dict() if self.p2 is not None else None
        d["annuli"] = [list(a) for a in self.annuli]
        d["n_critical_points"] = self.n_critical_points
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _scan_roots(func, grid):
    """Sign changes of ``func`` on ``grid`` refined by bisection."""
    vals = func(grid)
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        out.append(bisect(lambda r: float(func(r)), grid[i], grid[i + 1],
                          xtol=1e-300, rtol=BISECT_RTOL, maxiter=2000))
    out.extend(float(r) for r in grid[vals == 0])
    return sorted(out)


def scan_grid(per_decade: int = SCAN_PER_DECADE, r_range=SCAN_RANGE) -> np.ndarray:
    lo, hi = np.log10(r_range[0]), np.log10(r_range[1])
    return np.logspace(lo, hi, int(round((hi - lo) * per_decade)) + 1)


def classify_orbits(model: ModelConfig, E: float, L: float,
                    per_decade: int = SCAN_PER_DECADE, r_range=SCAN_RANGE,
                    double_zero_tol: float = 1e-10) -> OrbitClassification:
    """Critical points, zeros and bounded positivity intervals of Phi_{E,L}.

    Verdicts: AnnulusPresent if Phi is positive between two consecutive
    zeros; CircularOnly if a critical point is a double zero (a circular
    orbit at exactly this (E, L)); NoBoundedOrbits otherwise. For
    ``alpha >= 2`` the number of critical points is checked against one.
    """
    if not L > 0:
        raise ValueError("L must be > 0")
    grid = scan_grid(per_decade, r_range)
    crit = _scan_roots(lambda r: phi_tilde(model, E, L, r), grid)
    crit_vals = [float(effective_potential(model, E, L, r)) for r in crit]
    zeros = _scan_roots(lambda r: effective_potential(model, E, L, r), grid)
    phi_grid = effective_potential(model, E, L, grid)
    signs = np.sign(phi_grid)
    pattern = "".join("+" if s > 0 else "-" if s < 0 else "0" for s, prev in zip(signs, np.r_[np.nan, signs[:-1]]) if s != prev)
    annuli = []
    for r1, r2 in zip(zeros, zeros[1:]):
        if effective_potential(model, E, L, np.sqrt(r1 * r2)) > 0:
            annuli.append((r1, r2))
    double = [
        r for r, v in zip(crit, crit_vals)
        if abs(v) <= double_zero_tol * _phi_magnitude(model, E, L, r)
    ]
    if annuli:
        verdict = ANNULUS
    elif double:
        verdict = CIRCULAR_ONLY
    else:
        verdict = NO_BOUNDED
    notes = []
    unique = None
    if model.alpha >= 2:
        unique = len(crit) == 1
        if not unique:
            notes.append(f"Phi has {len(crit)} critical points on the scan range, expected exactly one")
    p2 = p2_analysis(model, E, L) if model.alpha == 2 else None
    return OrbitClassification(
        E=float(E), L=float(L), alpha=model.alpha, critical_points=crit,
        critical_values=crit_vals, zeros=zeros, sign_pattern=pattern, annuli=annuli,
        verdict=verdict, unique_critical_point=unique, p2=p2, notes=notes,
    )


# ----------------------------------------------------------------------------
# non-relativistic limit

def psi_theta(model: ModelConfig, x, h: float):
    """``psi(x) = kappa/2 + kappa^2/(2(g + 2x))`` with ``g = sqrt(kappa^2 + 4x^2)``
    and ``Theta(x) = h x + kappa/alpha``.

    A circular orbit of excess ``h`` solves ``psi(m c^2 t) = Theta(t)``.
    """
    x = np.asarray(x, dtype=float)
    k = model.kappa
    g = np.sqrt(k**2 + 4.0 * x**2)
    return k / 2.0 + k**2 / (2.0 * (g + 2.0 * x)), h * x + k / model.alpha


def classical_radius(model: ModelConfig, h: float) -> float:
    """Radius of the classical circular orbit of energy ``h`` (alpha > 2)."""
    a = model.alpha
    if not a > 2:
        raise ValueError("classical circular orbits of positive energy need alpha > 2")
    if not h > 0:
        raise ValueError("h must be > 0")
    return ((model.kappa / h) * (a - 2.0) / (2.0 * a)) ** (1.0 / a)


@dataclass
class LimitTable:
    c: list[float]
    r: list[float | None]
    errors: dict
    classical_radius: float | None
    strictly_decreasing: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("c,r_h\n")
        for c, r in zip(self.c, self.r):
            buf.write(f"{c:.17g},{'' if r is None else f'{r:.17g}'}\n")
        return buf.getvalue()

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def nonrelativistic_limit(model: ModelConfig, h: float, c_values) -> LimitTable:
    """Circular radius of excess ``h`` (on the inner branch) for each ``c``."""
    if not h > 0:
        raise ValueError("h must be > 0")
    c_values = [float(c) for c in c_values]
    if any(c <= 0 for c in c_values) or any(b <= a for a, b in zip(c_values, c_values[1:])):
        raise ValueError("c values must be positive and ascending")
    radii: list[float | None] = []
    errors = {}
    for c in c_values:
        mod = model.with_c(c)
        try:
            if not h + mod.rest_energy > eta(mod):
                raise RootNotBracketed(f"E = h + m c^2 does not exceed eta at c = {c:g}")
            radii.append(radius_from_excess(mod, h)[0])
        except (NoCircularOrbit, BracketFailure) as exc:
            radii.append(None)
            errors[c] = str(RootNotBracketed(str(exc)))
        except RootNotBracketed as exc:
            radii.append(None)
            errors[c] = str(exc)
    defined = [r for r in radii if r is not None]
    decreasing = all(b < a for a, b in zip(defined, defined[1:]))
    R = classical_radius(model, h) if model.alpha > 2 else None
    return LimitTable(c_values, radii, errors, R, decreasing)
