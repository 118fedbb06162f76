import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmaup.errors import CollisionPoint, ConfigError
from relmaup.potentials import (
    EnergyLevel,
    Perturbation,
    PotentialConfig,
    eval_V,
    eval_Zh,
    grad_V,
    grad_Zh,
    in_hill_region,
    jacobi_weight_from_V,
    metric_weight,
)


def two_centres(**kw):
    return PotentialConfig(centers=[[-1, 0], [1, 0]], strengths=[1, 1], alpha=2, **kw)


def test_single_centre_value():
    assert eval_V(PotentialConfig.single(), [1.0, 0.0]) == pytest.approx(0.5, rel=1e-15)


def test_constant_background_adds():
    cfg = PotentialConfig.single(perturbation=Perturbation.constant(0.25))
    assert eval_V(cfg, [1.0, 0.0]) == pytest.approx(0.75, rel=1e-15)


def test_two_centre_midpoint():
    cfg = two_centres()
    assert eval_V(cfg, [0.0, 0.0]) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(grad_V(cfg, [0.0, 0.0]), [0.0, 0.0], atol=1e-15)


def test_gradient_points_to_centre():
    np.testing.assert_allclose(grad_V(PotentialConfig.single(), [1.0, 0.0]), [-1.0, 0.0], rtol=1e-15)


def test_collision_raises():
    with pytest.raises(CollisionPoint):
        eval_V(PotentialConfig.single(), [0.0, 0.0])
    with pytest.raises(CollisionPoint):
        grad_Zh(two_centres(), 0.5, [1.0, 0.0])


def test_batch_shapes():
    cfg = two_centres()
    x = np.array([[0.0, 1.0], [0.5, 0.5], [2.0, -1.0]])
    assert eval_V(cfg, x).shape == (3,)
    assert grad_V(cfg, x).shape == (3, 2)
    np.testing.assert_allclose(eval_V(cfg, x), [eval_V(cfg, p) for p in x])


@pytest.mark.parametrize(
    "V, h, m, c, expected",
    [(1.0, 0.0, 1.0, 1.0, 3.0), (1.0, 0.5, 1.0, 2.0, 2.5625)],
)
def test_jacobi_weight_arithmetic(V, h, m, c, expected):
    assert jacobi_weight_from_V(V, h, m, c) == pytest.approx(expected, rel=1e-15)


def test_metric_weight_vanishes_at_hill_boundary():
    # Z_h + 2hm = 2m(V+h) + (V+h)^2/c^2 is zero when V = -h
    h = 0.3
    assert jacobi_weight_from_V(-h, h, 1.0, 1.0) + 2 * h == pytest.approx(0.0, abs=1e-15)


def test_grad_zh_arithmetic():
    # at V = 1, h = 0, m = c = 1 the factor 2 (V + h + m c^2) is 4
    cfg = PotentialConfig.single()
    x = np.array([1.0, 0.0]) * 0.5 ** 0.5  # V = 1 for alpha = 2
    assert eval_V(cfg, x) == pytest.approx(1.0, rel=1e-14)
    g = grad_Zh(cfg, 0.0, x)
    np.testing.assert_allclose(g, 4.0 * grad_V(cfg, x), rtol=1e-14)


def test_identity_metric_weight():
    cfg = two_centres(m=1.3, c=1.7)
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 3, size=(100, 2))
    V = eval_V(cfg, x)
    h = 0.4
    np.testing.assert_allclose(
        metric_weight(cfg, h, x), 2 * cfg.m * (V + h) + (V + h) ** 2 / cfg.c**2, rtol=1e-14
    )


def _fd_grad(f, x, step=1e-6):
    out = np.zeros(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        out[k] = (f(x + e) - f(x - e)) / (2 * step)
    return out


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_gradients_match_finite_differences(alpha):
    cfg = PotentialConfig(
        centers=[[-1, 0], [1, 0.5], [0, 2]], strengths=[1, 2, 0.5], alpha=alpha,
        perturbation=Perturbation.gaussian(0.3, 1.5, 0.1), c=1.5,
    )
    rng = np.random.default_rng(1)
    for x in rng.uniform(-3, 3, size=(100, 2)):
        if np.min(np.linalg.norm(cfg.centers - x, axis=1)) < 0.2:
            continue
        np.testing.assert_allclose(grad_V(cfg, x), _fd_grad(lambda y: eval_V(cfg, y), x), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(
            grad_Zh(cfg, 0.5, x), _fd_grad(lambda y: eval_Zh(cfg, 0.5, y), x), rtol=1e-6, atol=1e-9
        )


def test_hill_region():
    cfg = two_centres()
    assert in_hill_region(cfg, 0.5, [3.0, 3.0])
    # V + h = 0 exactly is excluded
    v = float(eval_V(cfg, [3.0, 3.0]))
    assert not in_hill_region(cfg, -v, [3.0, 3.0])
    assert not in_hill_region(cfg, -2 * v, [3.0, 3.0])


def test_strong_force_lower_bound():
    cfg = PotentialConfig.single(alpha=1.5)
    beta = cfg.strengths[0] ** 2 / (cfg.alpha**2 * cfg.c**2)
    for r in np.logspace(-6, -1, 30):
        x = np.array([r, 0.0])
        scaled = eval_Zh(cfg, 0.5, x) * r**2
        assert scaled >= beta * r ** (2 - 2 * cfg.alpha) >= beta


def test_divergence_near_centre():
    cfg = PotentialConfig.single()
    x = np.array([1e-4, 0.0])
    val = eval_Zh(cfg, 0.5, x) + 0.5 * np.dot(grad_Zh(cfg, 0.5, x), x)
    assert val < -1e6


def test_config_validation_names_field():
    with pytest.raises(ConfigError, match="strengths"):
        PotentialConfig(centers=[[0, 0]], strengths=[-1.0], alpha=2)
    with pytest.raises(ConfigError, match="centers"):
        PotentialConfig(centers=[[0, 0], [0, 0]], strengths=[1, 1], alpha=2)
    with pytest.raises(ConfigError, match="c"):
        PotentialConfig(centers=[[0, 0]], strengths=[1], alpha=2, c=0)


def test_config_json_round_trip():
    cfg = PotentialConfig(
        centers=[[-1, 0], [1, 0]], strengths=[1, 2], alpha=2.5, m=2.0, c=3.0,
        perturbation=Perturbation.gaussian(0.5, 2.0, 0.1),
    )
    back = PotentialConfig.from_json(json.dumps(cfg.to_dict()))
    assert back.to_dict() == cfg.to_dict()


def test_perturbation_bounds():
    p = Perturbation.gaussian(0.5, 2.0, 0.1)
    assert p.upper_bound == pytest.approx(0.6)
    x = np.random.default_rng(2).normal(size=(50, 2)) * 3
    assert np.all(p.value(x) <= p.upper_bound)
    assert np.all(p.value(x) > 0)
    assert not Perturbation.zero().strictly_positive


def test_energy_level():
    lvl = EnergyLevel(0.5, m=2.0, c=3.0)
    assert lvl.E == 18.5
    assert EnergyLevel.from_total(18.5, 2.0, 3.0).h == pytest.approx(0.5)
    assert eval_Zh(PotentialConfig.single(), lvl, [1.0, 0.0]) == eval_Zh(PotentialConfig.single(), 0.5, [1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 10.0), st.floats(0.0, 2 * np.pi), st.floats(1.1, 4.0))
def test_single_centre_radial(r, phi, alpha):
    cfg = PotentialConfig.single(alpha=alpha)
    x = r * np.array([np.cos(phi), np.sin(phi)])
    assert eval_V(cfg, x) == pytest.approx(1.0 / (alpha * r**alpha), rel=1e-12)
