"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line for its criterion (visible in the
pytest log) and then asserts. Running the file as a script prints all nine
lines without pytest.
"""
import sys
import time

import numpy as np
import pytest

from relmaup.circular import (
    NO_BOUNDED,
    ModelConfig,
    circular_momentum,
    classify_orbits,
    energy_of_radius,
    eta,
    nonrelativistic_limit,
    omega_from_radius,
    p2_analysis,
    radius_from_energy,
)
from relmaup.defaults import tolerance_profile
from relmaup.errors import NoCircularOrbit
from relmaup.homotopy import CutSystem, HomotopyWord, homotopy_word, push_off, winding_vector
from relmaup.integrator import PhaseState, hamiltonian, integrate, return_distance
from relmaup.loopspace import DiscreteLoop, maupertuis_gradient, maupertuis_value
from relmaup.optimizer import SolveSettings, minimize_in_class
from relmaup.potentials import PotentialConfig
from relmaup.reparam import (
    energy_param_to_time,
    maupertuis_to_energy_param,
    ode_residual,
)


def _emit(number: int, ok: bool, detail: str, capsys=None) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


# ----------------------------------------------------------------------------
# 1. gradient exactness

def criterion_1():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    n = 64
    step = 1e-6
    for i in range(50):
        n_centers = (1, 2, 3)[i % 3]
        alpha = (1.5, 2.0, 3.0)[(i // 3) % 3]
        centers = rng.uniform(-1.5, 1.5, size=(n_centers, 2))
        cfg = PotentialConfig(centers=centers, strengths=rng.uniform(0.5, 2.0, n_centers), alpha=alpha)
        # a wobbly loop that keeps at least 0.3 from every centre
        while True:
            s = np.arange(n) / n
            radius = 2.5 + 0.3 * np.sin(2 * np.pi * (s * rng.integers(1, 4) + rng.uniform()))
            pts = radius[:, None] * np.column_stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)])
            pts = pts + 0.05 * rng.normal(size=(n, 2))
            if np.min(np.linalg.norm(pts[:, None] - centers[None], axis=-1)) > 0.3:
                break
        loop = DiscreteLoop(pts)
        g = maupertuis_gradient(loop, cfg, 0.5)
        fd = np.zeros_like(g)
        for j in range(n):
            for k in range(2):
                up = pts.copy()
                dn = pts.copy()
                up[j, k] += step
                dn[j, k] -= step
                fd[j, k] = (maupertuis_value(DiscreteLoop(up), cfg, 0.5)
                            - maupertuis_value(DiscreteLoop(dn), cfg, 0.5)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(fd - g)) / np.max(np.abs(g))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 10.0
    return ok, f"gradient vs central differences, worst rel err {worst:.2e} (< 1e-6), {elapsed:.1f} s (< 10 s)"


# ----------------------------------------------------------------------------
# 2. variational / ODE equivalence on the model problem

def criterion_2():
    start = time.perf_counter()
    cfg = PotentialConfig.single()
    h = 0.5
    tol = tolerance_profile("strict")
    settings = SolveSettings(gradient_tolerance=tol["gradient_tolerance"],
                             refinement_schedule=tuple(tol["refinement_schedule"]))
    res = minimize_in_class(cfg, h, HomotopyWord.parse("a1"), settings)
    q = maupertuis_to_energy_param(res.minimizer, cfg, h)
    sols = {n: energy_param_to_time(q, cfg, h, n) for n in (256, 512, 1024)}
    resid = {n: ode_residual(s, cfg) for n, s in sols.items()}
    orders = [np.log2(resid[256] / resid[512]), np.log2(resid[512] / resid[1024])]
    sol = sols[1024]
    energy = sol.energy_law_residual(cfg)
    speed = float(np.max(sol.speeds()) / cfg.c)
    back = return_distance(cfg, sol.x[0], sol.v[0], sol.T,
                           rtol=tol["integrator_rtol"], atol=tol["integrator_atol"])
    elapsed = time.perf_counter() - start
    checks = {
        "a": energy < 1e-8,
        "b": speed < 1.0,
        "c": resid[1024] < 1e-4 and min(orders) >= 3.0,
        "d": back < 1e-4,
    }
    ok = all(checks.values()) and elapsed < 60.0
    detail = (f"(a) energy law {energy:.1e}, (b) max v/c {speed:.4f}, "
              f"(c) ode residual {resid[1024]:.2e} at N_t=1024 with orders "
              f"{orders[0]:.2f}, {orders[1]:.2f}, (d) return {back:.1e}; {elapsed:.1f} s")
    return ok, detail


# ----------------------------------------------------------------------------
# 3. circular-orbit consistency

def criterion_3():
    model = ModelConfig()
    cfg = model.potential_config()
    worst_h = 0.0
    for r in np.logspace(-3, 3, 200):
        H = hamiltonian(cfg, PhaseState([r, 0.0], circular_momentum(model, r)))
        E = float(energy_of_radius(model, r))
        worst_h = max(worst_h, abs(H - E) / abs(E))
    worst_close = 0.0
    for r in np.logspace(-3, 3, 13):
        state = PhaseState([r, 0.0], circular_momentum(model, r))
        T = 2 * np.pi / float(omega_from_radius(model, r))
        run = integrate(cfg, state, T, rtol=1e-12, atol=1e-14 * r)
        gap = np.inf if run.collided else float(np.linalg.norm(run.state_at(T).x - state.x))
        worst_close = max(worst_close, gap)
    ok = worst_h < 1e-10 and worst_close < 1e-6
    return ok, (f"energy_of_radius vs hamiltonian worst rel err {worst_h:.1e} (< 1e-10); "
                f"closure after 2 pi/omega worst {worst_close:.1e} (< 1e-6)")


# ----------------------------------------------------------------------------
# 4. threshold sharpness

def _exists(model, E) -> bool:
    try:
        return len(radius_from_energy(model, E)) > 0
    except NoCircularOrbit:
        return False


def criterion_4():
    bad = []
    for alpha in (2.0, 3.0):
        model = ModelConfig(alpha=alpha)
        mc2 = model.rest_energy
        if _exists(model, mc2):
            bad.append(f"alpha={alpha} E=mc^2")
        for k in range(1, 7):
            if not _exists(model, mc2 * (1 + 10.0**-k)):
                bad.append(f"alpha={alpha} E=mc^2(1+1e-{k})")
            if _exists(model, mc2 * (1 - 10.0**-k)):
                bad.append(f"alpha={alpha} E=mc^2(1-1e-{k})")
    model = ModelConfig(alpha=1.5)
    th = eta(model)
    if abs(th - 2 * np.sqrt(0.5) / 1.5) > 1e-15:
        bad.append("eta(1.5)")
    for k in range(1, 7):
        if not _exists(model, th * (1 + 10.0**-k)):
            bad.append(f"alpha=1.5 E=eta(1+1e-{k})")
        if _exists(model, th * (1 - 10.0**-k)):
            bad.append(f"alpha=1.5 E=eta(1-1e-{k})")
    for E in np.linspace(th, 1.0, 12)[1:-1]:
        roots = radius_from_energy(model, E)
        if len(roots) != 2:
            bad.append(f"alpha=1.5 E={E:.4f} gives {len(roots)} roots")
    for E in (1.0 + 1e-3, 1.5, 3.0):
        if len(radius_from_energy(model, E)) != 1:
            bad.append(f"alpha=1.5 E={E} not a single root")
    ok = not bad
    return ok, ("existence switches exactly at mc^2 (alpha 2, 3) and at eta = "
                f"{th:.10f} (alpha 1.5), two roots on (eta, mc^2)" + ("" if ok else f"; violations: {bad}"))


# ----------------------------------------------------------------------------
# 5. no bounded non-circular orbits for alpha >= 2

GRID_E = (0.5, 1.0, 1.5, 2.0)
GRID_L = (0.1, 0.5, 1.0, 2.0)


def criterion_5():
    parts = []
    ok = True
    for alpha in (2.0, 2.5, 3.0):
        model = ModelConfig(alpha=alpha)
        counts = []
        verdicts = set()
        for E in GRID_E:
            for L in GRID_L:
                oc = classify_orbits(model, E, L)
                counts.append(oc.n_critical_points)
                verdicts.add(oc.verdict)
        one = sum(c == 1 for c in counts)
        good = one == len(counts) and verdicts == {NO_BOUNDED}
        if alpha == 2.0:
            p2_ok = all(not p2_analysis(model, E, L).bounded_positive_interval
                        and p2_analysis(model, E, L).coefficients[0] > 0
                        for E in GRID_E for L in GRID_L)
            good = good and p2_ok
            # Phi' has the sign of (c^2 L^2 - E kappa) r^2 - kappa^2/2 here, so cells
            # with c^2 L^2 <= E kappa have no critical point at all
            flat = sum(model.c**2 * L**2 <= E * model.kappa for E in GRID_E for L in GRID_L)
            parts.append(f"alpha=2: {one}/16 cells with one critical point ({flat} cells have "
                         f"c^2 L^2 <= E kappa and hence none), verdicts {sorted(verdicts)}, "
                         f"P2 quadratic {'has no bounded positive interval' if p2_ok else 'FAILS'}")
        else:
            parts.append(f"alpha={alpha}: {one}/16 cells with one critical point, verdicts {sorted(verdicts)}")
        ok = ok and good
    return ok, "; ".join(parts)


# ----------------------------------------------------------------------------
# 6. non-relativistic limit

def criterion_6():
    cs = [2.0**k for k in range(11)]
    t3 = nonrelativistic_limit(ModelConfig(alpha=3.0), 1.0, cs)
    R = (1 / 6) ** (1 / 3)
    gap = abs(t3.r[-1] - R) if t3.r[-1] is not None else np.inf
    t15 = nonrelativistic_limit(ModelConfig(alpha=1.5), 1.0, cs)
    last = t15.r[-1] if t15.r[-1] is not None else np.inf
    ok = (all(r is not None for r in t3.r) and t3.strictly_decreasing and gap < 1e-4
          and t15.strictly_decreasing and last < 1e-2)
    return ok, (f"alpha=3: decreasing={t3.strictly_decreasing}, |r_h(2^10) - R_h| = {gap:.1e} (< 1e-4); "
                f"alpha=1.5: decreasing={t15.strictly_decreasing}, r_h(2^10) = {last:.1e} (< 1e-2)")


# ----------------------------------------------------------------------------
# 7. variational selection of the circular orbit

def _sup_to_uniform_circle(q: DiscreteLoop, radius: float) -> float:
    """Sup distance from ``q`` to the uniformly parameterized circle through ``q_0``."""
    theta0 = np.arctan2(q.samples[0, 1], q.samples[0, 0])
    a, b = q.samples[0], q.samples[1]
    turn = np.sign(a[0] * b[1] - a[1] * b[0])
    ang = theta0 + turn * 2 * np.pi * np.arange(q.n) / q.n
    ref = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return float(np.max(np.linalg.norm(q.samples - ref, axis=1)))


def criterion_7():
    h = 0.5
    parts = []
    ok = True
    for alpha in (2.0, 3.0):
        cfg = PotentialConfig.single(alpha=alpha)
        res = minimize_in_class(cfg, h, HomotopyWord.parse("a1"), SolveSettings(refinement_schedule=(128, 512)))
        q = maupertuis_to_energy_param(res.minimizer, cfg, h)
        (r_E,) = radius_from_energy(ModelConfig(alpha=alpha), h + 1.0)
        d = _sup_to_uniform_circle(q, r_E)
        ok = ok and d < 1e-3 and q.n == 512
        parts.append(f"alpha={alpha}: sup distance {d:.1e}")
    return ok, "; ".join(parts) + " (< 1e-3 at N_s=512)"


# ----------------------------------------------------------------------------
# 8. homotopy machinery

def _random_polygon(rng, centers, n_vertices=10, per_edge=40):
    verts = rng.uniform(-3, 3, size=(n_vertices, 2))
    t = (np.arange(per_edge) + 0.37) / per_edge
    pts = np.vstack([a + t[:, None] * (b - a) for a, b in zip(verts, np.roll(verts, -1, axis=0))])
    if np.min(np.linalg.norm(pts[:, None] - centers[None], axis=-1)) < 0.05:
        return None
    return DiscreteLoop(pts)


def criterion_8():
    rng = np.random.default_rng(88)
    centers = np.array([[-1.2, 0.0], [1.0, 0.3], [0.1, 1.4]])
    cuts = CutSystem.default(centers)
    agree = 0
    done = 0
    while done < 100:
        loop = _random_polygon(rng, centers)
        if loop is None:
            continue
        done += 1
        agree += homotopy_word(loop, cuts).winding_vector(3) == winding_vector(loop, centers)
    pushed_ok = 0
    eps = 0.05
    for i in range(20):
        alpha = (1.5, 2.0, 3.0)[i % 3]
        cfg = PotentialConfig(centers=centers, strengths=[1.0, 0.7, 1.3], alpha=alpha)
        idx = i % 3
        n = 128
        s = (np.arange(n) + 0.21) / n
        r = rng.uniform(0.2, 0.9) * 2 * eps
        radius = r * (1 + 0.4 * np.sin(2 * np.pi * (s * rng.integers(1, 5) + rng.uniform())) ** 2)
        turns = rng.choice([-1, 1])
        pts = centers[idx] + radius[:, None] * np.column_stack(
            [np.cos(2 * np.pi * turns * s), np.sin(2 * np.pi * turns * s)])
        loop = DiscreteLoop(pts)
        out, _ = push_off(loop, centers[idx], eps, lam=2.0)
        same = homotopy_word(out, cuts) == homotopy_word(loop, cuts)
        lower = maupertuis_value(out, cfg, 0.5) <= maupertuis_value(loop, cfg, 0.5)
        pushed_ok += same and lower
    ok = agree == 100 and pushed_ok == 20
    return ok, (f"abelianized words match winding vectors on {agree}/100 polygons; "
                f"push_off keeps the word and lowers M on {pushed_ok}/20 loops")


# ----------------------------------------------------------------------------
# 9. conservation

def criterion_9():
    states = [(2.0, 1.0), (2.0, 2.0), (3.0, 1.0)]  # (alpha, r)
    parts = []
    ok = True
    for alpha, r in states:
        model = ModelConfig(alpha=alpha)
        cfg = model.potential_config()
        T = 2 * np.pi / float(omega_from_radius(model, r))
        run = integrate(cfg, PhaseState([r, 0.0], circular_momentum(model, r)), 10 * T,
                        rtol=1e-11, atol=1e-11)
        dh = run.max_energy_drift()
        dl = run.max_angular_momentum_drift()
        ok = ok and not run.collided and dh < 1e-9 and dl < 1e-9
        parts.append(f"alpha={alpha} r={r}: H {dh:.1e}, L {dl:.1e}")
    return ok, "; ".join(parts) + " over 10 periods (< 1e-9)"


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    _emit(number, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, fn in CRITERIA.items():
        ok, detail = fn()
        _emit(number, ok, detail)
        failures += not ok
    sys.exit(1 if failures else 0)
