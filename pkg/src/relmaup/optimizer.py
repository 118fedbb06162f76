"""Minimization of the discrete Maupertuis functional in a homotopy class.

The admissible set is: loops in a prescribed free homotopy class whose
distance to every centre stays >= epsilon. Descent directions are
quasi-Newton (limited-memory BFGS) directions in the H^1 metric of the loop,
projected off the margin constraints; steps are accepted by Armijo
backtracking and rejected outright if they would leave the class or cross the
margin. A radial push-off about a centre is tried whenever an iterate comes
within ``push_off_lambda * epsilon`` of it.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassEscape,
    InvalidDilation,
    InvalidEnergy,
    InvalidExponent,
    NotConverged,
    RelMaupError,
    SampleOnCut,
    SeedConstructionFailed,
    TrivialClass,
)
from .homotopy import CutSystem, HomotopyWord, homotopy_word, push_off, same_class
from .loopspace import (
    DiscreteLoop,
    distance_to_center,
    kinetic,
    maupertuis_gradient,
    maupertuis_value,
)
from .potentials import PotentialConfig, _h

logger = logging.getLogger(__name__)

# relative size of a Maupertuis change that is indistinguishable from rounding
_ROUNDOFF = 1e-13
# sampling phase that keeps seed samples off the cut rays
_PHASE = 0.3183


@dataclass(frozen=True)
class SolveSettings:
    epsilon: float = 0.05
    norm_choice: str = "sup_distance"
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-8
    relative_tolerance: bool = True
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 60
    refinement_schedule: tuple[int, ...] = (128, 256)
    push_off_lambda: float = 1.5
    memory: int = 8
    stagnation_window: int = 20
    stagnation_rtol: float = 1e-12
    active_band: float = 1e-3

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.gradient_tolerance <= 0 or self.stagnation_rtol <= 0:
            raise ValueError("tolerances must be > 0")
        sched = tuple(int(n) for n in self.refinement_schedule)
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("refinement_schedule must be non-empty and strictly increasing")
        if sched[0] < 8:
            raise ValueError("grid sizes must be >= 8")
        if not 1.0 < self.push_off_lambda <= 2.0:
            raise ValueError("push_off_lambda must lie in (1, 2]")
        if self.norm_choice not in ("sup_distance", "h1_distance"):
            raise ValueError("norm_choice must be sup_distance or h1_distance")
        object.__setattr__(self, "refinement_schedule", sched)

    @classmethod
    def from_dict(cls, d: dict | None) -> "SolveSettings":
        d = dict(d or {})
        if "refinement_schedule" in d:
            d["refinement_schedule"] = tuple(d["refinement_schedule"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["refinement_schedule"] = list(self.refinement_schedule)
        return out


@dataclass
class SolveResult:
    minimizer: DiscreteLoop
    maupertuis_value: float
    gradient_norm: float
    gradient_tolerance: float
    iterations: int
    class_certificate: HomotopyWord
    margin_report: list[float]
    converged: bool
    reason: str
    log: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "maupertuis_value": self.maupertuis_value,
            "gradient_norm": self.gradient_norm,
            "gradient_tolerance": self.gradient_tolerance,
            "iterations": self.iterations,
            "class_certificate": str(self.class_certificate),
            "winding_vector": self.class_certificate.winding_vector(len(self.margin_report)),
            "margin_report": self.margin_report,
            "converged": self.converged,
            "reason": self.reason,
            "grid_size": self.minimizer.n,
        }


def poincare_bound_check(loop: DiscreteLoop, centers) -> tuple[float, float, bool]:
    """Compare ``max_j |u_j|`` against ``max_i |sigma_i| + ||u'||_L2``."""
    R = float(np.max(np.linalg.norm(np.atleast_2d(centers), axis=1)))
    lhs = float(np.max(np.linalg.norm(loop.samples, axis=1)))
    rhs = R + float(np.sqrt(kinetic(loop)))
    return lhs, rhs, lhs <= rhs


# ----------------------------------------------------------------------------
# seed construction

def _segment_clearance(a, b, point) -> float:
    ab = b - a
    t = np.clip(np.dot(point - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
    return float(np.linalg.norm(a + t * ab - point))


def _segment_hits_ray(a, b, s, d) -> bool:
    e = b - a
    den = d[0] * e[1] - d[1] * e[0]
    if abs(den) < 1e-14:
        return False
    w = a - s
    t_ray = (w[0] * e[1] - w[1] * e[0]) / den
    t_seg = (w[0] * d[1] - w[1] * d[0]) / den
    return t_ray >= 0 and -1e-12 <= t_seg <= 1 + 1e-12


def _find_hub(cfg, cuts, ports, clearance):
    centroid = cfg.centers.mean(axis=0)
    scale = max(cfg.min_center_gap, 1e-6)
    candidates = [centroid]
    for radius in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
        for phi in np.linspace(0, 2 * np.pi, 24, endpoint=False):
            candidates.append(centroid + radius * scale * np.array([np.cos(phi), np.sin(phi)]))
    for hub in candidates:
        ok = all(np.linalg.norm(hub - s) > clearance for s in cfg.centers)
        for i, port in enumerate(ports):
            if not ok:
                break
            for j, (s, d) in enumerate(zip(cuts.centers, cuts.directions)):
                if _segment_hits_ray(hub, port, s, d):
                    ok = False
                    break
                if _segment_clearance(hub, port, s) <= clearance and j != i:
                    ok = False
                    break
        if ok:
            return hub
    return None


def _split_counts(total: int, weights) -> list[int]:
    weights = np.asarray(weights, float)
    raw = total * weights / weights.sum()
    counts = np.floor(raw).astype(int)
    for k in np.argsort(raw - counts)[::-1][: total - counts.sum()]:
        counts[k] += 1
    return counts.tolist()


def seed_loop(cfg: PotentialConfig, word: HomotopyWord, epsilon: float, grid_size: int,
              cuts: CutSystem | None = None) -> DiscreteLoop:
    """Piecewise-circular loop realizing ``word``.

    One centre: ``|k|`` turns of a circle. Several centres: a lasso per letter
    (hub -> port, full circle about the centre, port -> hub), where the hub is
    a point from which every port is reachable without crossing a cut ray.
    """
    if word.is_trivial:
        raise TrivialClass("seed requested for the trivial class")
    if max(abs(g) for g in word.letters) > cfg.n_centers:
        raise SeedConstructionFailed("word uses a generator beyond the number of centres")
    cuts = cuts or CutSystem.default(cfg.centers)
    gap = cfg.min_center_gap
    if cfg.n_centers == 1:
        radius = max(2.0 * epsilon, 1.0)
        turns = sum(1 if g > 0 else -1 for g in word.letters)
        ang0 = np.arctan2(-cuts.directions[0][1], -cuts.directions[0][0])
        s = (np.arange(grid_size) + _PHASE) / grid_size
        ang = ang0 + 2.0 * np.pi * turns * s
        seed = DiscreteLoop(cfg.centers[0] + radius * np.column_stack([np.cos(ang), np.sin(ang)]))
    else:
        if epsilon >= 0.5 * gap:
            raise SeedConstructionFailed(
                f"epsilon={epsilon:g} is not below half the minimal centre gap ({gap:g})"
            )
        radius = max(2.0 * epsilon, 0.2 * gap)
        if radius + epsilon >= gap:
            raise SeedConstructionFailed("margin disks around neighbouring centres overlap")
        ports = [s - radius * d for s, d in zip(cuts.centers, cuts.directions)]
        hub = _find_hub(cfg, cuts, ports, clearance=max(1.05 * epsilon, 0.5 * radius))
        if hub is None:
            raise SeedConstructionFailed("no hub point reaches every centre without crossing a cut")
        per_letter = _split_counts(grid_size, [1.0] * len(word))
        pieces = []
        for g, n_letter in zip(word.letters, per_letter):
            i = abs(g) - 1
            n_in, n_circ, n_out = _split_counts(n_letter, [0.2, 0.6, 0.2])
            port = ports[i]
            t_in = (np.arange(n_in) + 0.5) / max(n_in, 1)
            pieces.append(hub + t_in[:, None] * (port - hub))
            ang0 = np.arctan2(port[1] - cuts.centers[i][1], port[0] - cuts.centers[i][0])
            t_c = (np.arange(n_circ) + _PHASE) / max(n_circ, 1)
            ang = ang0 + np.sign(g) * 2.0 * np.pi * t_c
            pieces.append(cuts.centers[i] + radius * np.column_stack([np.cos(ang), np.sin(ang)]))
            t_out = (np.arange(n_out) + 0.5) / max(n_out, 1)
            pieces.append(port + t_out[:, None] * (hub - port))
        seed = DiscreteLoop(np.vstack(pieces))
    try:
        got = read_class(seed, cuts)
    except RelMaupError as exc:
        raise SeedConstructionFailed(f"seed could not be certified: {exc}") from exc
    if not same_class(got, word):
        raise SeedConstructionFailed(f"seed realizes {got} instead of {word}; refine the grid")
    margins = _margins(seed, cfg, "sup_distance")
    if min(margins) < epsilon:
        raise SeedConstructionFailed("seed violates the collision margin")
    return seed


# ----------------------------------------------------------------------------
# minimization

def rotated_cuts(cuts: CutSystem, angle: float) -> CutSystem:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return CutSystem(cuts.centers, cuts.directions @ rot.T)


def read_class(loop: DiscreteLoop, cuts: CutSystem) -> HomotopyWord:
    """Word of ``loop``; if a sample sits on a cut, read it with rotated cuts.

    The free class does not depend on the cut system, so a tiny rigid rotation
    of the rays is a legitimate tie-break (the based word may change by
    conjugation only).
    """
    try:
        return homotopy_word(loop, cuts)
    except SampleOnCut:
        pass
    for k in (1, -1, 2, -2, 3, -3):
        try:
            return homotopy_word(loop, rotated_cuts(cuts, k * 1e-4))
        except SampleOnCut:
            continue
    return homotopy_word(loop, cuts)


def _margins(loop: DiscreteLoop, cfg: PotentialConfig, norm_choice: str) -> list[float]:
    return [distance_to_center(loop, s, norm_choice) for s in cfg.centers]


def _grad_norm(g: np.ndarray) -> float:
    # continuum-L2 scale: the discrete gradient times n is the L2 gradient density
    return float(np.sqrt(len(g) * np.sum(g * g)))


class _Preconditioner:
    """Inverse of the H^1 Gram operator of a loop, applied by FFT."""

    def __init__(self, n: int, weight: float):
        k = np.fft.fftfreq(n, 1.0 / n)
        self.symbol = 2.0 * n * weight * (4.0 * np.sin(np.pi * k / n) ** 2 + (2.0 * np.pi / n) ** 2)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifft(np.fft.fft(v, axis=0) / self.symbol[:, None], axis=0))


def _active_normals(u: np.ndarray, cfg: PotentialConfig, epsilon: float, band: float):
    """Unit outward normals at samples sitting on the margin (else zero)."""
    normals = np.zeros_like(u)
    for s in cfg.centers:
        w = u - s
        r = np.linalg.norm(w, axis=1)
        act = r < epsilon * (1.0 + band)
        normals[act] = w[act] / r[act, None]
    return normals


def _project(v: np.ndarray, normals: np.ndarray, inward_sign: float) -> np.ndarray:
    """Remove components of ``v`` that push active samples through the margin."""
    comp = np.sum(v * normals, axis=1)
    bad = inward_sign * comp < 0
    out = v.copy()
    out[bad] -= comp[bad, None] * normals[bad]
    return out


class _Run:
    def __init__(self, cfg, h, word, settings, cuts, log):
        self.cfg = cfg
        self.h = h
        self.word = word
        self.st = settings
        self.cuts = cuts
        self.log = log
        self.iteration = 0

    def feasible(self, loop: DiscreteLoop) -> bool:
        if min(_margins(loop, self.cfg, "sup_distance")) < self.st.epsilon:
            return False
        if self.st.norm_choice == "h1_distance" and min(
            _margins(loop, self.cfg, "h1_distance")
        ) < self.st.epsilon:
            return False
        try:
            return same_class(read_class(loop, self.cuts), self.word)
        except RelMaupError:
            return False

    def value_and_grad(self, loop):
        return maupertuis_value(loop, self.cfg, self.h), maupertuis_gradient(loop, self.cfg, self.h)

    def check_bounds(self, loop, value):
        hm = _h(self.h) * self.cfg.m
        if not value >= 2.0 * hm * kinetic(loop) * (1.0 - 1e-12):
            raise RuntimeError("coercivity bound M >= 2hm int|u'|^2 violated")
        lhs, rhs, ok = poincare_bound_check(loop, self.cfg.centers)
        if not ok:
            raise RuntimeError(f"Poincare bound violated: {lhs} > {rhs}")

    def try_push_off(self, loop, value):
        st = self.st
        for i, s in enumerate(self.cfg.centers):
            if distance_to_center(loop, s, st.norm_choice) >= st.push_off_lambda * st.epsilon:
                continue
            try:
                cand, k = push_off(loop, s, st.epsilon, st.push_off_lambda, st.norm_choice)
            except InvalidDilation:
                continue
            if not self.feasible(cand):
                continue
            v_new = maupertuis_value(cand, self.cfg, self.h)
            if v_new <= value:
                self.log.append({"iteration": self.iteration, "event": "push_off", "center": i + 1,
                                 "factor": k, "value": v_new})
                return cand, v_new
        return None

    def stage(self, loop: DiscreteLoop, g_tol: float | None):
        """Descend on one grid; returns (loop, value, grad, gnorm, g_tol, reason)."""
        st = self.st
        n = loop.n
        value, grad = self.value_and_grad(loop)
        normals = _active_normals(loop.samples, self.cfg, st.epsilon, st.active_band)
        gproj = _project(grad, normals, -1.0)
        gnorm = _grad_norm(gproj)
        if g_tol is None:
            g_tol = st.gradient_tolerance * gnorm if st.relative_tolerance else st.gradient_tolerance
        S: deque = deque(maxlen=st.memory)
        Y: deque = deque(maxlen=st.memory)
        history = deque([value], maxlen=st.stagnation_window + 1)
        step0 = st.initial_step
        self.check_bounds(loop, value)
        while True:
            if gnorm < g_tol:
                return loop, value, grad, gnorm, g_tol, "gradient"
            if len(history) > st.stagnation_window and (
                history[0] - history[-1] <= st.stagnation_rtol * abs(history[-1])
            ):
                return loop, value, grad, gnorm, g_tol, "stagnation"
            if self.iteration >= st.max_iterations:
                return loop, value, grad, gnorm, g_tol, "max_iterations"
            prec = _Preconditioner(n, value / max(kinetic(loop), 1e-300))
            d = self._direction(grad, prec, S, Y)
            d = _project(d, normals, 1.0)
            slope = float(np.sum(grad * d))
            if slope >= 0:
                S.clear()
                Y.clear()
                d = _project(-prec(grad), normals, 1.0)
                slope = float(np.sum(grad * d))
                if slope >= 0:
                    return loop, value, grad, gnorm, g_tol, "stagnation"
            accepted = None
            step = step0
            rejected_class = False
            for _ in range(st.max_backtracks):
                trial = DiscreteLoop(loop.samples + step * d)
                if not self.feasible(trial):
                    rejected_class = True
                    step *= st.shrink
                    continue
                v_trial = maupertuis_value(trial, self.cfg, self.h)
                if v_trial <= value + st.armijo * step * slope:
                    accepted = trial
                    break
                if abs(v_trial - value) <= _ROUNDOFF * abs(value):
                    g_trial = maupertuis_gradient(trial, self.cfg, self.h)
                    if (np.sum(g_trial * d) >= 0.9 * slope
                            and _grad_norm(g_trial) < _grad_norm(grad)):
                        accepted = trial
                        break
                step *= st.shrink
            if accepted is None:
                if rejected_class and gnorm > 1e3 * g_tol:
                    raise ClassEscape("step length underflow while keeping the homotopy class")
                return loop, value, grad, gnorm, g_tol, "stagnation"
            self.iteration += 1
            new_value, new_grad = self.value_and_grad(accepted)
            s_vec = accepted.samples - loop.samples
            y_vec = new_grad - grad
            if np.sum(s_vec * y_vec) > 1e-14 * np.sqrt(np.sum(s_vec**2) * np.sum(y_vec**2)):
                S.append(s_vec)
                Y.append(y_vec)
            loop, value, grad = accepted, new_value, new_grad
            pushed = self.try_push_off(loop, value)
            if pushed is not None:
                loop, value = pushed
                grad = maupertuis_gradient(loop, self.cfg, self.h)
                S.clear()
                Y.clear()
            self.check_bounds(loop, value)
            normals = _active_normals(loop.samples, self.cfg, st.epsilon, st.active_band)
            gproj = _project(grad, normals, -1.0)
            gnorm = _grad_norm(gproj)
            history.append(value)
            step0 = min(st.initial_step, 2.0 * step) if step < st.initial_step else st.initial_step
            self.log.append({
                "iteration": self.iteration,
                "grid_size": n,
                "value": value,
                "gradient_norm": gnorm,
                "min_margin": min(_margins(loop, self.cfg, "sup_distance")),
                "step": step,
            })

    @staticmethod
    def _direction(grad, prec, S, Y):
        q = grad.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            rho = 1.0 / np.sum(y * s)
            a = rho * np.sum(s * q)
            q = q - a * y
            alphas.append((a, rho, s, y))
        r = prec(q)
        if S:
            y = Y[-1]
            r = r * (np.sum(S[-1] * y) / np.sum(y * prec(y)))
        for a, rho, s, y in reversed(alphas):
            b = rho * np.sum(y * r)
            r = r + s * (a - b)
        return -r


def _validate(cfg: PotentialConfig, h, word: HomotopyWord):
    if not _h(h) > 0:
        raise InvalidEnergy(f"energy excess h must be > 0, got {_h(h)}")
    if not cfg.alpha > 1:
        raise InvalidExponent(f"strong-force exponent alpha must be > 1, got {cfg.alpha}")
    if word.is_trivial:
        raise TrivialClass("minimization needs a non-trivial homotopy class")
    if max(abs(g) for g in word.letters) > cfg.n_centers:
        raise ValueError("word uses a generator beyond the number of centres")


def minimize_in_class(cfg: PotentialConfig, h, word: HomotopyWord,
                      settings: SolveSettings | None = None,
                      initial: DiscreteLoop | None = None,
                      raise_on_failure: bool = True) -> SolveResult:
    """Minimize the discrete Maupertuis functional over the admissible loops.

    The grids in ``settings.refinement_schedule`` are visited in order, each
    stage starting from the trigonometric interpolation of the previous
    minimizer. The gradient tolerance is fixed relative to the seed gradient.
    """
    settings = settings or SolveSettings()
    _validate(cfg, h, word)
    cuts = CutSystem.default(cfg.centers)
    log: list[dict] = []
    loop = initial if initial is not None else seed_loop(
        cfg, word, settings.epsilon, settings.refinement_schedule[0], cuts
    )
    run = _Run(cfg, h, word, settings, cuts, log)
    if not run.feasible(loop):
        raise SeedConstructionFailed("initial loop is not admissible")
    g_tol = None
    reason = "gradient"
    value = gnorm = float("nan")
    for n in settings.refinement_schedule:
        loop = loop.resample(n)
        if not run.feasible(loop):
            raise ClassEscape(f"interpolation to grid {n} left the admissible set")
        loop, value, _, gnorm, g_tol, reason = run.stage(loop, g_tol)
        logger.info("grid %d: M=%.15g |g|=%.3e (%s)", n, value, gnorm, reason)
        if reason == "max_iterations":
            break
    cert = read_class(loop, cuts)
    result = SolveResult(
        minimizer=loop,
        maupertuis_value=value,
        gradient_norm=gnorm,
        gradient_tolerance=g_tol,
        iterations=run.iteration,
        class_certificate=cert,
        margin_report=_margins(loop, cfg, "sup_distance"),
        converged=reason in ("gradient", "stagnation"),
        reason=reason,
        log=log,
    )
    if not result.converged and raise_on_failure:
        raise NotConverged(f"no convergence after {run.iteration} iterations", result)
    return result
