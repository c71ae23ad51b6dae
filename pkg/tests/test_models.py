import pickle

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import (
    ClockOverflowError,
    ConfigError,
    HeatCollapseError,
    SchurConvergenceError,
    StorageError,
)
from app.models.mixture import CircleMixtureSpec, HeatMixture
from app.models.params import IntegratorConfig, ModelParams
from app.models.particles import EmpiricalMeasure, ParticleState
from app.models.run_config import OracleConfig, RunConfig, SweepConfig, VerifyConfig


def test_particle_state_requires_unit_points():
    with pytest.raises(ValidationError):
        ParticleState(points=[[1.0, 1.0]])
    with pytest.raises(ValidationError):
        ParticleState(points=[1.0, 0.0])


def test_particle_state_is_frozen_and_read_only():
    s = ParticleState(points=[[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        s.time = 1.0
    with pytest.raises(ValueError):
        s.points[0, 0] = 2.0


def test_particle_state_advanced_and_permuted():
    s = ParticleState(points=[[1.0, 0.0], [0.0, 1.0]], time=1.0, rescaled_time=0.5, step=3)
    nxt = s.advanced(s.points[::-1], dt=0.2, ds=0.1)
    assert (nxt.step, nxt.time, nxt.rescaled_time) == (4, pytest.approx(1.2), pytest.approx(0.6))
    assert np.array_equal(s.permuted(np.array([1, 0])).points, s.points[::-1])


def test_empirical_measure_weights():
    with pytest.raises(ValidationError):
        EmpiricalMeasure(points=[[1.0, 0.0], [0.0, 1.0]], weights=[0.5, 0.6])
    with pytest.raises(ValidationError):
        EmpiricalMeasure(points=[[1.0, 0.0]], weights=[0.5, 0.5])
    assert EmpiricalMeasure.uniform([[1.0, 0.0], [0.0, 1.0]]).is_uniform


def test_model_params_shapes():
    with pytest.raises(ValidationError):
        ModelParams(Q=np.eye(2), K=np.eye(3), V=np.eye(3), beta=1.0)
    with pytest.raises(ValidationError):
        ModelParams.identity(3, beta=0.0)
    p = ModelParams(Q=np.eye(2), K=[[0.0, 1.0], [1.0, 0.0]], V=2 * np.eye(2), beta=1.0)
    assert p.d == 2
    assert np.array_equal(p.interaction_matrix, [[0.0, 2.0], [2.0, 0.0]])
    assert p.with_beta(5.0).beta == 5.0


def test_model_params_dump_is_json_ready():
    data = ModelParams.identity(2, beta=3.0).model_dump(mode="json")
    assert data["Q"] == [[1.0, 0.0], [0.0, 1.0]]


def test_integrator_config_forbids_unknown_fields():
    with pytest.raises(ValidationError):
        IntegratorConfig(h=0.1, step_size=0.1)
    with pytest.raises(ValidationError):
        IntegratorConfig(h=-0.1)


def test_circle_mixture_spec():
    spec = CircleMixtureSpec(weights=[0.5, 0.5], means=[0.0, np.pi], heat_var=[0.04, 0.09])
    assert np.allclose(spec.stds, np.sqrt([0.08, 0.18]))
    m = spec.to_heat_mixture(d=3)
    assert m.d == 3 and not m.has_dirac
    with pytest.raises(ValidationError):
        CircleMixtureSpec(weights=[0.5, 0.6], means=[0.0, 1.0], heat_var=0.1)
    with pytest.raises(ValidationError):
        CircleMixtureSpec(weights=[1.0], means=[0.0, 1.0], heat_var=0.1)


def test_heat_mixture_zero_variance_is_dirac():
    m = HeatMixture.build([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.1], [0.5, 0.5])
    assert m.has_dirac
    assert m.t_min == pytest.approx(0.1)


def test_run_config_custom_requires_beta():
    with pytest.raises(ValidationError):
        RunConfig(scenario="custom", d=2, n=10)
    with pytest.raises(ValidationError):
        RunConfig(scenario="custom", beta=1.0)
    assert RunConfig(scenario="1a").beta is None


def test_oracle_config_validation():
    mixture = {"weights": [1.0], "means": [0.0], "heat_var": 0.04}
    with pytest.raises(ValidationError):
        OracleConfig(mixture=mixture, times=[0.1], gamma=2)
    with pytest.raises(ValidationError):
        OracleConfig(mixture=mixture, times=[])
    assert OracleConfig(mixture=mixture, times=[0.0, 0.1]).collapse == "error"


def test_sweep_and_verify_configs():
    with pytest.raises(ValidationError):
        SweepConfig(base={"scenario": "1a"}, betas=[-1.0], ns=[10])
    with pytest.raises(ValidationError):
        VerifyConfig(workers=0)
    with pytest.raises(ValidationError):
        VerifyConfig(report_formats=["pdf"])


# ---------------------------------------------------------------------------
# Ошибки

def test_exit_codes():
    assert ConfigError("x").exit_code == 2
    assert StorageError("x").exit_code == 1
    assert ClockOverflowError("x").exit_code == 3


def test_numerical_error_context():
    exc = ClockOverflowError("переполнение", step=12, particle=3)
    assert "шаг 12" in exc.detail and "частица 3" in exc.detail
    exc.add_context("pairing_limit")
    assert exc.detail.startswith("pairing_limit: ")
    assert str(exc) == exc.detail


def test_errors_survive_pickling():
    exc = HeatCollapseError("схлопывание", component=2).add_context("heat_backward_clusters")
    restored = pickle.loads(pickle.dumps(exc))
    assert type(restored) is HeatCollapseError
    assert restored.component == 2
    assert restored.detail == exc.detail

    schur = pickle.loads(pickle.dumps(SchurConvergenceError("не сошлось", residual=1.0)))
    assert schur.residual == 1.0
