import numpy as np
import pytest

from relmaup.circular import ModelConfig, circular_momentum, omega_from_radius
from relmaup.errors import CollisionApproach, SuperluminalInput
from relmaup.integrator import (
    PhaseState,
    angular_momentum,
    hamiltonian,
    integrate,
    momentum_from_velocity,
    return_distance,
    velocity_from_momentum,
)
from relmaup.potentials import PotentialConfig

CFG = PotentialConfig.single()


def test_hamiltonian_examples():
    assert hamiltonian(CFG, PhaseState([1.0, 0.0], [0.0, 0.0])) == pytest.approx(0.5, rel=1e-15)
    # sqrt(1 + 3) = 2
    assert hamiltonian(CFG, PhaseState([1.0, 0.0], [np.sqrt(3.0), 0.0])) == pytest.approx(1.5, rel=1e-15)


def test_velocity_momentum_maps():
    p = momentum_from_velocity(CFG, [0.6, 0.0])
    np.testing.assert_allclose(p, [0.75, 0.0], rtol=1e-15)
    rng = np.random.default_rng(0)
    for v in rng.uniform(-0.7, 0.7, size=(50, 2)):
        back = velocity_from_momentum(CFG, momentum_from_velocity(CFG, v))
        np.testing.assert_allclose(back, v, atol=1e-14)
    with pytest.raises(SuperluminalInput):
        momentum_from_velocity(CFG, [1.0, 0.0])
    with pytest.raises(SuperluminalInput):
        momentum_from_velocity(CFG, [0.8, 0.8])


def test_momentum_grows_without_bound_towards_c():
    speeds = 1.0 - np.logspace(-1, -10, 30)
    p = [momentum_from_velocity(CFG, [s, 0.0])[0] for s in speeds]
    assert np.all(np.diff(p) > 0)
    assert p[-1] > 1e4
    assert np.all(np.linalg.norm(velocity_from_momentum(CFG, np.array([[1e4, 0.0]])), axis=1) < 1.0)


def test_angular_momentum():
    assert angular_momentum([1.0, 0.0], [0.0, 2.0]) == 2.0
    assert angular_momentum([2.0, 0.0], [0.0, 2.0], center=(1.0, 0.0)) == 2.0


def _circular(r=2.0):
    model = ModelConfig()
    omega = omega_from_radius(model, r)
    return PhaseState([r, 0.0], circular_momentum(model, r)), 2 * np.pi / omega


def test_drift_shrinks_with_tolerance():
    cfg = PotentialConfig(centers=[[-1, 0], [1, 0]], strengths=[1, 1], alpha=2)
    start = PhaseState([0.0, 3.0], [0.2, 0.5])
    drifts = [integrate(cfg, start, 20.0, rtol=tol, atol=tol * 1e-2).max_energy_drift()
              for tol in (1e-6, 1e-9, 1e-12)]
    assert drifts[2] < drifts[0]
    assert drifts[2] < 1e-11


def test_conservation_on_circle():
    state, T = _circular()
    res = integrate(CFG, state, 3 * T, rtol=1e-11, atol=1e-13)
    assert res.status == "ok"
    assert res.max_energy_drift() < 1e-9
    assert res.max_angular_momentum_drift() < 1e-9
    assert np.linalg.norm(res.state_at(T).x - state.x) < 1e-6


def test_time_reversal():
    cfg = PotentialConfig(centers=[[-1, 0], [1, 0]], strengths=[1, 1], alpha=2.5)
    start = PhaseState([0.2, 2.5], [0.4, 0.3])
    fwd = integrate(cfg, start, 5.0, rtol=1e-12, atol=1e-14)
    assert fwd.status == "ok"
    end = fwd.state_at(5.0)
    back = integrate(cfg, PhaseState(end.x, -end.p), 5.0, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(back.state_at(5.0).x, start.x, atol=1e-8)
    np.testing.assert_allclose(-back.state_at(5.0).p, start.p, atol=1e-8)


def test_collision_flag():
    start = PhaseState([1.0, 0.0], [0.0, 0.0])
    res = integrate(CFG, start, 10.0, collision_epsilon=1e-3)
    assert res.collided
    assert res.t[-1] < 10.0
    assert res.min_center_distance == pytest.approx(1e-3, rel=1e-6)
    with pytest.raises(CollisionApproach) as info:
        integrate(CFG, start, 10.0, collision_epsilon=1e-3, raise_on_collision=True)
    assert info.value.result is not None
    assert return_distance(CFG, [1.0, 0.0], [0.0, 0.0], 10.0) == float("inf")


def test_csv_and_t_eval():
    state, T = _circular()
    res = integrate(CFG, state, T, t_eval=np.linspace(0, T, 11))
    lines = res.to_csv().splitlines()
    assert lines[0] == "t,x,y,px,py,H,L"
    assert len(lines) == 12
    assert res.n_steps == -1
    with pytest.raises(ValueError):
        integrate(CFG, state, 0.0)
