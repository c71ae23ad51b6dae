import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.compute.dynamics import (
    alignment_field,
    alignment_linear_flow,
    attention_field,
    closest_pair,
    discrete_layer_step,
    integrate,
    integrate_alignment,
    integrate_pairing_limit,
    pairing_clock_factor,
    pairing_limit_field,
    rescaled_heat_field,
)
from app.compute.metrics import interaction_energy
from app.compute.spectral import subspace_distance
from app.compute.sphere import angles_of, circle_points, sample_uniform
from app.core.exceptions import AssumptionViolation, ClockOverflowError, ConfigError
from app.experiments.rates import non_decreasing, strictly_decreasing
from app.experiments.sampling import embed_angles
from app.experiments.scenarios import scenario_defaults
from app.models.params import Clock, IntegratorConfig, ModelParams, Scheme, Subspace
from app.models.particles import ParticleState

ALIGN_V = np.diag([2.0, 1.0, 1.0])


def align_params(beta: float = 1.0) -> ModelParams:
    return ModelParams(Q=np.eye(3), K=np.eye(3), V=ALIGN_V, beta=beta)


def direct_field(points: np.ndarray, p: ModelParams) -> np.ndarray:
    out = np.empty_like(points)
    for i, x in enumerate(points):
        logits = p.beta * np.array([(p.Q @ x) @ (p.K @ y) for y in points])
        w = np.exp(logits - logits.max())
        avg = (w[:, None] * (points @ p.V.T)).sum(axis=0) / w.sum()
        out[i] = avg - (x @ avg) * x
    return out


# ---------------------------------------------------------------------------
# Поле самовнимания

def test_single_token_field():
    x = np.array([[0.6, 0.8, 0.0]])
    p = align_params(beta=3.0)
    vx = ALIGN_V @ x[0]
    assert_allclose(attention_field(ParticleState(points=x), p)[0], vx - (x[0] @ vx) * x[0], atol=1e-15)


def test_antipodal_pair_has_zero_field():
    s = ParticleState(points=[[1.0, 0.0], [-1.0, 0.0]])
    assert_allclose(attention_field(s, ModelParams.identity(2, beta=1.0)), 0.0, atol=1e-15)


def test_field_matches_direct_evaluation():
    s = ParticleState(points=circle_points([0.0, np.pi / 2, np.pi]))
    p = ModelParams.identity(2, beta=1.0)
    assert_allclose(attention_field(s, p), direct_field(s.points, p), atol=1e-14)


def test_field_is_tangent(rng):
    s = ParticleState(points=sample_uniform(rng, 4, 50))
    m = rng.standard_normal((3, 4, 4))
    p = ModelParams(Q=m[0], K=m[1], V=m[2], beta=2.0)
    f = attention_field(s, p)
    assert np.max(np.abs(np.sum(f * s.points, axis=1))) < 1e-12
    assert_allclose(f, direct_field(s.points, p), atol=1e-12)


def test_field_large_beta_is_finite(rng):
    s = ParticleState(points=sample_uniform(rng, 3, 30))
    assert np.all(np.isfinite(attention_field(s, ModelParams.identity(3, beta=1e4))))


def test_field_is_permutation_equivariant(rng):
    s = ParticleState(points=sample_uniform(rng, 3, 40))
    p = align_params(beta=5.0)
    perm = rng.permutation(40)
    assert_array_equal(attention_field(s.permuted(perm), p), attention_field(s, p)[perm])


# ---------------------------------------------------------------------------
# Дискретный слой

def test_discrete_layer_single_token():
    s = ParticleState(points=[[0.6, 0.8]])
    same = discrete_layer_step(s, ModelParams.identity(2, beta=1.0))
    assert_allclose(same.points, s.points, atol=1e-15)
    p = ModelParams(Q=np.eye(2), K=np.eye(2), V=np.zeros((2, 2)), beta=1.0)
    assert_allclose(discrete_layer_step(s, p).points, s.points, atol=1e-15)


def test_discrete_layer_uniform_weights():
    # Q = 0 делает веса softmax равными
    p = ModelParams(Q=np.zeros((2, 2)), K=np.eye(2), V=np.eye(2), beta=1.0)
    s = ParticleState(points=[[1.0, 0.0], [0.0, 1.0]])
    out = discrete_layer_step(s, p)
    expected = np.array([[1.5, 0.5], [0.5, 1.5]])
    assert_allclose(out.points, expected / np.linalg.norm(expected, axis=1, keepdims=True), atol=1e-15)
    assert out.step == 1


def test_discrete_layer_requires_plain_clock():
    s = ParticleState(points=[[1.0, 0.0]])
    cfg = IntegratorConfig(scheme=Scheme.DISCRETE_LAYER, clock=Clock.HEAT)
    with pytest.raises(ConfigError):
        integrate(s, ModelParams.identity(2, beta=1.0), cfg)


# ---------------------------------------------------------------------------
# Интеграторы

def test_zero_field_state_is_constant():
    s = ParticleState(points=[[1.0, 0.0], [-1.0, 0.0]])
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=0.1, max_steps=50, stride=10)
    traj = integrate(s, ModelParams.identity(2, beta=1.0), cfg)
    for snap in traj.snapshots:
        assert_allclose(snap.points, s.points, atol=1e-14)
    assert traj.steps == 50
    assert [snap.step for snap in traj.snapshots] == [0, 10, 20, 30, 40, 50]


def test_integrate_appends_last_state_off_stride(rng):
    s = ParticleState(points=sample_uniform(rng, 3, 5))
    cfg = IntegratorConfig(h=0.01, max_steps=7, stride=3)
    traj = integrate(s, align_params(), cfg, observers={"one": lambda st: 1.0})
    assert [snap.step for snap in traj.snapshots] == [0, 3, 6, 7]
    assert len(traj.series("one")) == 4


def _final(s0, p, scheme, h):
    cfg = IntegratorConfig(scheme=scheme, h=h, max_steps=int(round(1.0 / h)), stride=1000,
                           keep_snapshots=False)
    return integrate(s0, p, cfg).final.points


def test_scheme_convergence_orders(rng):
    s0 = ParticleState(points=sample_uniform(rng, 3, 16))
    p = align_params(beta=1.0)
    ref = _final(s0, p, Scheme.PROJECTED_RK4, 0.005)

    e1 = np.max(np.abs(_final(s0, p, Scheme.PROJECTED_EULER, 0.02) - ref))
    e2 = np.max(np.abs(_final(s0, p, Scheme.PROJECTED_EULER, 0.01) - ref))
    assert 1.6 < e1 / e2 < 2.5

    r1 = np.max(np.abs(_final(s0, p, Scheme.PROJECTED_RK4, 0.05) - ref))
    r2 = np.max(np.abs(_final(s0, p, Scheme.PROJECTED_RK4, 0.025) - ref))
    assert 10.0 < r1 / r2 < 22.0


def test_trajectory_is_permutation_equivariant(rng):
    s0 = ParticleState(points=sample_uniform(rng, 3, 32))
    p = align_params(beta=10.0)
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=0.01, max_steps=10, stride=10)
    perm = rng.permutation(32)
    a = integrate(s0, p, cfg).final.points
    b = integrate(s0.permuted(perm), p, cfg).final.points
    assert_array_equal(b, a[perm])


def test_norm_is_preserved(rng):
    s0 = ParticleState(points=sample_uniform(rng, 3, 20))
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=0.05, max_steps=40, stride=1)
    traj = integrate(s0, align_params(beta=4.0), cfg)
    for snap in traj.snapshots:
        assert np.max(np.abs(np.linalg.norm(snap.points, axis=1) - 1.0)) < 1e-12


def test_energy_grows_along_gradient_flow(rng):
    s0 = ParticleState(points=sample_uniform(rng, 3, 12))
    p = ModelParams.identity(3, beta=2.0)
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=0.01, max_steps=300, stride=1)
    traj = integrate(s0, p, cfg, observers={"energy": lambda s: interaction_energy(s, p).value})
    energy = traj.series("energy")
    assert len(energy) == 301
    assert non_decreasing(energy, tol=1e-12)
    assert energy[-1] > energy[0]


def test_heat_clock_advances_both_times(rng):
    s0 = ParticleState(points=sample_uniform(rng, 2, 10))
    cfg = IntegratorConfig(h=1e-3, clock=Clock.HEAT, max_steps=10, stride=5)
    traj = integrate(s0, ModelParams.identity(2, beta=50.0), cfg)
    assert traj.final.rescaled_time == pytest.approx(1e-2)
    assert traj.final.time == pytest.approx(0.5)


def test_pairing_clock_overflow():
    s0 = ParticleState(points=[[1.0, 0.0], [0.0, 1.0]])
    cfg = IntegratorConfig(h=1e-3, clock=Clock.PAIRING, max_steps=10)
    with pytest.raises(ClockOverflowError) as info:
        integrate(s0, ModelParams.identity(2, beta=1000.0), cfg)
    assert info.value.step == 1
    assert info.value.exit_code == 3


def test_pairing_clock_requires_unique_pair():
    s0 = ParticleState(points=circle_points([0.0, 2 * np.pi / 3, 4 * np.pi / 3]))
    cfg = IntegratorConfig(h=1e-3, clock=Clock.PAIRING, max_steps=10)
    with pytest.raises(ConfigError):
        integrate(s0, ModelParams.identity(2, beta=5.0), cfg)


def test_pairing_clock_factor():
    pts = circle_points([0.0, 0.5])
    assert pairing_clock_factor(pts, (0, 1), 4.0) == pytest.approx(np.exp(4.0 * (1.0 - np.cos(0.5))))


# ---------------------------------------------------------------------------
# Фаза выравнивания

def test_alignment_field_values():
    p = align_params()
    assert_allclose(alignment_field([0.0, 1.0, 0.0], p).vec, 0.0, atol=1e-16)
    x = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    assert_allclose(alignment_field(x, p).vec, np.array([1.0, -1.0, 0.0]) / (2.0 * np.sqrt(2.0)), atol=1e-15)
    assert_allclose(alignment_field(x, ModelParams.identity(3, beta=1.0)).vec, 0.0, atol=1e-15)


def test_alignment_field_singular_key_query():
    p = ModelParams(Q=np.diag([1.0, 1.0, 0.0]), K=np.eye(3), V=np.eye(3), beta=1.0)
    with pytest.raises(AssumptionViolation):
        alignment_field([0.0, 0.0, 1.0], p)


def test_alignment_distance_decreases(rng):
    s0 = ParticleState(points=sample_uniform(rng, 3, 50))
    emax = Subspace(basis=[[1.0, 0.0, 0.0]])
    traj = integrate_alignment(s0, align_params(), h=0.01, T=2.0, stride=10,
                               observers={"dist": lambda s: float(np.mean(subspace_distance(s.points, emax)))})
    assert strictly_decreasing(traj.series("dist"))


def test_alignment_matches_linear_flow(rng):
    x0 = sample_uniform(rng, 3, 10)
    p = align_params()
    traj = integrate_alignment(ParticleState(points=x0), p, h=0.01, T=1.0, keep_snapshots=False)
    assert_allclose(traj.final.points, alignment_linear_flow(x0, p, [1.0])[0], atol=1e-6)


def test_alignment_keeps_azimuth_for_diagonal_value(rng):
    scenario = scenario_defaults("2a")
    angles = rng.uniform(0, 2 * np.pi, 200)
    elevation = rng.uniform(-0.5 * np.pi + 1e-3, 0.5 * np.pi - 1e-3, 200)
    x0 = embed_angles(angles, 3, elevation)
    aligned = alignment_linear_flow(x0, scenario.params, [40.0])[0]
    # Доминантное подпространство - плоскость xy
    assert np.max(np.abs(aligned[:, 2])) < 1e-5
    diff = np.angle(np.exp(1j * (angles_of(aligned[:, :2]) - angles)))
    assert_allclose(diff, 0.0, atol=1e-12)


def test_alignment_stationary_inside_emax():
    s0 = ParticleState(points=[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    p = ModelParams(Q=np.eye(3), K=np.eye(3), V=np.diag([1.0, 0.0, 0.0]), beta=1.0)
    traj = integrate_alignment(s0, p, h=0.1, T=1.0)
    assert_allclose(traj.final.points, s0.points, atol=1e-15)


# ---------------------------------------------------------------------------
# Тепловая и парная фазы

def test_rescaled_heat_field_single_token():
    s = ParticleState(points=[[0.6, 0.8, 0.0]])
    p = align_params(beta=7.0)
    x = s.points[0]
    assert_allclose(rescaled_heat_field(s, p, 0).vec, 7.0 * (ALIGN_V @ x - (x @ ALIGN_V @ x) * x), atol=1e-14)


def test_rescaled_heat_field_sign_flip(rng):
    s = ParticleState(points=sample_uniform(rng, 3, 20))
    p = align_params(beta=20.0)
    flipped = p.model_copy(update={"V": -p.V})
    assert_array_equal(rescaled_heat_field(s, flipped, 3).vec, -rescaled_heat_field(s, p, 3).vec)


def test_closest_pair():
    assert closest_pair(ParticleState(points=[[1.0, 0.0], [0.0, 1.0]]))[:2] == (0, 1)
    tri = ParticleState(points=circle_points([0.0, 2 * np.pi / 3, 4 * np.pi / 3]))
    assert closest_pair(tri)[:2] == (0, 1)


def test_closest_pair_matches_scan(rng):
    s = ParticleState(points=sample_uniform(rng, 3, 10))
    best, arg = -np.inf, None
    for i in range(10):
        for j in range(i + 1, 10):
            v = s.points[i] @ s.points[j]
            if v > best:
                best, arg = v, (i, j)
    i, j, inner = closest_pair(s)
    assert (i, j) == arg
    assert inner == pytest.approx(best)


def test_pairing_limit_field():
    theta = 0.7
    s = ParticleState(points=circle_points([0.0, theta, 3.0]))
    f = pairing_limit_field(s, (0, 1))
    assert_array_equal(f[2], 0.0)
    assert_allclose(np.linalg.norm(f[:2], axis=1), np.sin(theta))
    assert f[0] @ (s.points[1] - s.points[0]) > 0

    antipodal = ParticleState(points=[[1.0, 0.0], [-1.0, 0.0]])
    assert_allclose(pairing_limit_field(antipodal, (0, 1)), 0.0, atol=1e-16)
    with pytest.raises(ValueError):
        pairing_limit_field(s, (1, 1))


def test_pairing_limit_stopping_time():
    theta0, eps = 1.0, 0.1
    s0 = ParticleState(points=circle_points([0.0, theta0, 3.5]))
    traj = integrate_pairing_limit(s0, h=1e-3, eps=eps, max_steps=10_000)
    assert traj.halted is not None
    i, j = 0, 1
    assert traj.final.points[i] @ traj.final.points[j] > 1.0 - eps
    # Угол пары подчиняется theta' = -2 sin(theta)
    theta_eps = np.arccos(1.0 - eps)
    expected = 0.5 * np.log(np.tan(theta0 / 2) / np.tan(theta_eps / 2))
    assert traj.final.rescaled_time == pytest.approx(expected, abs=2e-3)
    assert_allclose(traj.final.points[2], s0.points[2], atol=1e-12)
