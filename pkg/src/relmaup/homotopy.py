"""Homotopy classes of loops in the N-punctured plane.

A class is read as a word in the free group on generators ``a_1 .. a_N``:
every centre carries a cut ray running off to infinity, the rays are pairwise
disjoint, and each crossing of ray ``i`` contributes ``a_i`` (counter-clockwise
about the centre) or ``a_i^-1`` (clockwise). The complement of the rays is
simply connected, so the freely reduced crossing sequence identifies the
based class; cyclic reduction then gives the free (unbased) class.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AmbiguousCrossing,
    AmbiguousWinding,
    InvalidDilation,
    SampleOnCut,
)
from .loopspace import DiscreteLoop, distance_to_center


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def free_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for g in letters:
        if g == 0:
            raise ValueError("generator indices start at 1")
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(int(g))
    return tuple(out)


def cyclic_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    w = list(free_reduce(letters))
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return tuple(w)


_TOKEN = re.compile(r"^a_?(\d+)(?:\^(\{?)([+-]?\d+)\}?)?$")


@dataclass(frozen=True)
class HomotopyWord:
    """Freely reduced word; letters are signed 1-based generator indices."""

    letters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", free_reduce(self.letters))

    @classmethod
    def parse(cls, text: str) -> "HomotopyWord":
        """Parse strings like ``"a1 a2^-1"`` or ``"a1^2 a3"``; empty means trivial."""
        letters: list[int] = []
        for tok in text.replace("*", " ").split():
            m = _TOKEN.match(tok)
            if not m:
                raise ValueError(f"cannot parse homotopy letter {tok!r}")
            idx = int(m.group(1))
            power = int(m.group(3)) if m.group(3) is not None else 1
            if idx < 1:
                raise ValueError("generator indices start at 1")
            letters.extend([idx if power > 0 else -idx] * abs(power))
        return cls(tuple(letters))

    def __str__(self):
        return " ".join(f"a{abs(g)}" if g > 0 else f"a{abs(g)}^-1" for g in self.letters)

    def __len__(self):
        return len(self.letters)

    @property
    def is_trivial(self) -> bool:
        return not self.letters

    def winding_vector(self, n_centers: int | None = None) -> list[int]:
        n = n_centers if n_centers is not None else max((abs(g) for g in self.letters), default=0)
        vec = [0] * n
        for g in self.letters:
            vec[abs(g) - 1] += 1 if g > 0 else -1
        return vec

    def inverse(self) -> "HomotopyWord":
        return HomotopyWord(tuple(-g for g in reversed(self.letters)))

    def cyclically_reduced(self) -> "HomotopyWord":
        return HomotopyWord(cyclic_reduce(self.letters))

    def is_primitive(self) -> bool:
        """False when the cyclic reduction is a proper power of a shorter word."""
        w = cyclic_reduce(self.letters)
        n = len(w)
        for p in range(1, n):
            if n % p == 0 and w == w[:p] * (n // p):
                return False
        return n > 0

    def concat(self, other: "HomotopyWord") -> "HomotopyWord":
        return HomotopyWord(self.letters + other.letters)


def same_class(w1: HomotopyWord, w2: HomotopyWord) -> bool:
    """Free homotopy: equal cyclic reductions up to rotation."""
    a = cyclic_reduce(w1.letters)
    b = cyclic_reduce(w2.letters)
    if len(a) != len(b):
        return False
    if not a:
        return True
    doubled = a + a
    return any(doubled[k : k + len(b)] == b for k in range(len(a)))


def same_orbit_label(w1: HomotopyWord, w2: HomotopyWord) -> bool:
    """Class identity up to time reversal (word or its inverse)."""
    return same_class(w1, w2) or same_class(w1, w2.inverse())


# ----------------------------------------------------------------------------
# winding numbers

def winding_number(loop: DiscreteLoop, center, max_angle: float = np.pi - 0.1) -> int:
    """Net number of counter-clockwise turns of the loop about ``center``."""
    w = loop.samples - np.asarray(center, float)
    if np.any(np.linalg.norm(w, axis=1) == 0):
        raise AmbiguousWinding("loop passes through the centre")
    w_next = np.roll(w, -1, axis=0)
    dtheta = np.arctan2(_cross(w, w_next), np.sum(w * w_next, axis=1))
    if np.any(np.abs(dtheta) >= max_angle):
        raise AmbiguousWinding("consecutive samples subtend too large an angle; refine the grid")
    return int(round(np.sum(dtheta) / (2.0 * np.pi)))


def winding_vector(loop: DiscreteLoop, centers) -> list[int]:
    return [winding_number(loop, c) for c in np.atleast_2d(centers)]


# ----------------------------------------------------------------------------
# cut rays

def _ray_ray_hit(p, d, q, e, tol=1e-12) -> bool:
    """True if rays p + s d and q + t e (s, t >= 0) meet."""
    den = _cross(d, e)
    w = q - p
    if abs(den) < tol:
        if abs(_cross(w, d)) > tol * max(1.0, np.linalg.norm(w)):
            return False
        # collinear: they overlap iff one base point lies on the other ray
        return float(np.dot(w, d)) >= -tol or float(np.dot(-w, e)) >= -tol
    s = _cross(w, e) / den
    t = _cross(w, d) / den
    return s >= -tol and t >= -tol


def _ray_near_point(p, d, q, clearance) -> bool:
    """True if point q lies within ``clearance`` of the ray p + t d."""
    w = q - p
    along = float(np.dot(w, d))
    if along <= 0:
        return float(np.linalg.norm(w)) < clearance
    return abs(_cross(d, w)) < clearance


@dataclass(frozen=True)
class CutSystem:
    """One ray per centre: ``sigma_i + t * directions[i]`` for ``t >= 0``."""

    centers: np.ndarray
    directions: np.ndarray

    @classmethod
    def default(cls, centers, increment: float = 0.05, max_tries: int = 2000) -> "CutSystem":
        """Rays pointing away from the centroid, rotated in small increments
        (alternating sides) until pairwise disjoint and clear of other centres.

        "Clear" means every other centre keeps a distance of at least a
        quarter of the minimal centre gap from the ray.
        """
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        n = len(centers)
        if n > 1:
            gaps = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
            clearance = 0.25 * float(np.min(gaps[np.triu_indices(n, 1)]))
        else:
            clearance = 0.0
        centroid = centers.mean(axis=0)
        base = np.zeros(n)
        for i, s in enumerate(centers):
            off = s - centroid
            base[i] = np.arctan2(off[1], off[0]) if np.linalg.norm(off) > 1e-12 else 0.0
        angles = base.copy()
        for i in range(n):
            for k in range(max_tries):
                step = (k + 1) // 2 * (1 if k % 2 else -1)
                angles[i] = base[i] + step * increment
                d = np.array([np.cos(angles[i]), np.sin(angles[i])])
                ok = all(
                    not _ray_near_point(centers[i], d, centers[j], clearance) for j in range(n) if j != i
                )
                ok = ok and all(
                    not _ray_ray_hit(
                        centers[i], d, centers[j], np.array([np.cos(angles[j]), np.sin(angles[j])])
                    )
                    for j in range(i)
                )
                if ok:
                    break
            else:
                raise ValueError("could not place disjoint cut rays")
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        return cls(centers, dirs)

    def crossings(self, loop: DiscreteLoop, on_cut_tol: float = 1e-12):
        """Signed ray crossings in loop order as a list of letters."""
        u = loop.samples
        seg = np.roll(u, -1, axis=0) - u
        hits = []  # (segment index, parameter along segment, letter)
        for i, (s, d) in enumerate(zip(self.centers, self.directions)):
            w = u - s
            along = w @ d
            perp = _cross(d, w)
            scale = np.maximum(1.0, np.linalg.norm(w, axis=1))
            on = (np.abs(perp) <= on_cut_tol * scale) & (along > 0)
            if np.any(on):
                raise SampleOnCut(f"sample {int(np.argmax(on))} lies on cut ray {i + 1}")
            perp_next = np.roll(perp, -1)
            change = np.nonzero(np.sign(perp) != np.sign(perp_next))[0]
            for j in change:
                t = perp[j] / (perp[j] - perp_next[j])
                point = u[j] + t * seg[j]
                if np.dot(point - s, d) <= 0:
                    continue
                sign = 1 if perp_next[j] > perp[j] else -1
                hits.append((int(j), float(t), sign * (i + 1)))
        hits.sort()
        for a, b in zip(hits, hits[1:]):
            if a[0] == b[0] and abs(a[1] - b[1]) < 1e-12:
                raise AmbiguousCrossing(f"segment {a[0]} crosses two rays at the same point")
        return [g for _, _, g in hits]


def homotopy_word(loop: DiscreteLoop, cuts: CutSystem) -> HomotopyWord:
    return HomotopyWord(tuple(cuts.crossings(loop)))


# ----------------------------------------------------------------------------
# push-off

def push_off(
    loop: DiscreteLoop,
    center,
    epsilon: float,
    lam: float = 1.5,
    norm_choice: str = "sup_distance",
) -> tuple[DiscreteLoop, float]:
    """Dilate the loop about ``center`` so its distance becomes ``lam * epsilon``.

    Returns the new loop and the dilation factor ``k``.
    """
    if not 1.0 < lam <= 2.0:
        raise InvalidDilation("lambda must lie in (1, 2]")
    center = np.asarray(center, dtype=float)
    dist = distance_to_center(loop, center, norm_choice)
    if dist == 0:
        raise InvalidDilation("loop distance to centre is zero")
    k = lam * epsilon / dist
    if k <= 1.0:
        raise InvalidDilation(f"dilation factor {k:.6g} <= 1; loop already clear of the centre")
    return DiscreteLoop(center + k * (loop.samples - center)), k


def orbit_label(word: HomotopyWord) -> str:
    """Canonical name of a word up to rotation, free reduction and inversion.

    Two words get the same label iff ``same_orbit_label`` holds for them.
    """
    candidates = []
    for w in (cyclic_reduce(word.letters), cyclic_reduce(word.inverse().letters)):
        candidates.extend(w[k:] + w[:k] for k in range(max(len(w), 1)))
    best = min(candidates, key=lambda w: (len(w), [(abs(g), -g) for g in w]))
    return str(HomotopyWord(best)) or "1"
