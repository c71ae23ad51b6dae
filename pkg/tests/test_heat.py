import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.compute.heat import (
    heat_kernel_circle,
    heat_kernel_circle_dtheta,
    heat_kernel_circle_fourier,
    heat_kernel_circle_images,
    heat_kernel_sphere,
    mixture_density,
    mixture_density_circle,
    mixture_evolve,
    mixture_log_gradient_circle,
    mixture_split_circle,
)
from app.compute.sphere import circle_points
from app.core.exceptions import HeatCollapseError, NumericalError
from app.experiments.scenarios import SCENARIO_2A_MIXTURE
from app.models.mixture import CircleMixtureSpec, HeatMixture

GRID = 2.0 * np.pi * np.arange(4096) / 4096


def two_component(variances=(0.04, 0.09)) -> HeatMixture:
    return HeatMixture.build(circle_points([0.0, 2.0]), list(variances), [0.5, 0.5])


@pytest.mark.parametrize("t", [1e-3, 1e-1, 1.0])
def test_circle_kernel_normalization(t):
    assert np.sum(heat_kernel_circle(GRID, t)) * (2 * np.pi / GRID.size) == pytest.approx(1.0, abs=1e-10)


def test_circle_kernel_large_time_is_uniform():
    assert_allclose(heat_kernel_circle(GRID[::64], 20.0), 1.0 / (2 * np.pi), atol=1e-8)


def test_circle_kernel_representations_agree():
    theta = np.linspace(-np.pi, np.pi, 101)
    assert_allclose(heat_kernel_circle_images(theta, 0.5), heat_kernel_circle_fourier(theta, 0.5), atol=1e-12)


def test_circle_kernel_derivative():
    theta, h = np.array([0.3, 1.7, -2.5]), 1e-5
    for t in (0.05, 2.0):
        fd = (heat_kernel_circle(theta + h, t) - heat_kernel_circle(theta - h, t)) / (2 * h)
        assert_allclose(heat_kernel_circle_dtheta(theta, t), fd, rtol=1e-6, atol=1e-9)


def test_circle_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        heat_kernel_circle(0.0, 0.0)


def test_sphere_kernel_normalization():
    x, w = np.polynomial.legendre.leggauss(200)
    total = 2 * np.pi * np.sum(w * heat_kernel_sphere(x, 0.1, 3))
    assert total == pytest.approx(1.0, abs=1e-8)


def test_sphere_kernel_large_time():
    assert heat_kernel_sphere(0.3, 20.0, 3) == pytest.approx(1.0 / (4 * np.pi), rel=1e-12)


def test_sphere_kernel_legendre_series():
    # При d = 3: K = sum (2l + 1) e^{-l(l+1)t} P_l(x) / 4pi
    x, t = np.array([-0.7, 0.1, 0.95]), 0.2
    ells = np.arange(60)
    legendre = np.array([np.polynomial.legendre.legval(x, np.eye(60)[ell]) for ell in ells])
    expected = ((2 * ells + 1) * np.exp(-ells * (ells + 1) * t)) @ legendre / (4 * np.pi)
    assert_allclose(heat_kernel_sphere(x, t, 3), expected, rtol=1e-10, atol=1e-13)


def test_sphere_kernel_limits():
    with pytest.raises(ValueError):
        heat_kernel_sphere(0.5, 0.1, 2)
    with pytest.raises(NumericalError):
        heat_kernel_sphere(0.5, 1e-8, 3)


def test_mixture_evolve_identity_at_zero():
    m = two_component()
    assert mixture_evolve(m, 0.0, 1) is m


def test_mixture_evolve_forward():
    m = HeatMixture.build(circle_points([1.0]), [0.04], [1.0])
    assert mixture_evolve(m, 0.06, -1).variances[0] == pytest.approx(0.10)


def test_mixture_evolve_backward_collapse():
    m = two_component()
    with pytest.raises(HeatCollapseError) as info:
        mixture_evolve(m, 0.04, 1)
    assert info.value.component == 0
    assert "компоненту 1" in info.value.detail
    assert_allclose(mixture_evolve(m, 0.039, 1).variances, [0.001, 0.051], atol=1e-15)
    assert m.t_min == pytest.approx(0.04)


def test_mixture_evolve_validates_arguments():
    with pytest.raises(ValueError):
        mixture_evolve(two_component(), 0.1, 0)
    with pytest.raises(ValueError):
        mixture_evolve(two_component(), -0.1, 1)


def test_mixture_semigroup_on_dyadic_times():
    m = two_component()
    once = mixture_evolve(m, 0.375, -1)
    twice = mixture_evolve(mixture_evolve(m, 0.125, -1), 0.25, -1)
    np.testing.assert_array_equal(once.variances, twice.variances)
    back = mixture_evolve(mixture_evolve(m, 0.0625, -1), 0.0625, 1)
    np.testing.assert_array_equal(back.variances, m.variances)


def test_mixture_collapse_to_dirac():
    m = two_component()
    collapsed = mixture_evolve(m, 0.05, 1, collapse="dirac")
    assert collapsed.has_dirac
    assert_allclose(collapsed.variances, [0.0, 0.04], atol=1e-15)
    with pytest.raises(HeatCollapseError):
        mixture_density_circle(collapsed, GRID)

    dens, atoms = mixture_split_circle(collapsed, GRID)
    assert atoms == [(0.0, 0.5)]
    assert np.sum(dens) * (2 * np.pi / GRID.size) == pytest.approx(0.5, abs=1e-10)

    # Дирак снова расплывается при прямой эволюции
    spread = mixture_evolve(collapsed, 0.02, -1)
    assert not spread.has_dirac
    assert_allclose(spread.variances, [0.02, 0.06], atol=1e-15)


def test_mixture_density_peak_and_mass():
    m = HeatMixture.build(circle_points([1.0]), [0.05], [1.0])
    dens = mixture_density_circle(m, GRID)
    assert GRID[np.argmax(dens)] == pytest.approx(1.0, abs=2 * np.pi / GRID.size)
    assert np.sum(dens) * (2 * np.pi / GRID.size) == pytest.approx(1.0, abs=1e-6)
    assert_allclose(mixture_density(m, circle_points(GRID[:50])), dens[:50], rtol=1e-10)


def test_scenario_mixture_is_wrapped_normal():
    m = SCENARIO_2A_MIXTURE.to_heat_mixture()
    expected = np.zeros_like(GRID)
    var = 2 * 0.04
    for w, mu in zip(SCENARIO_2A_MIXTURE.weights, SCENARIO_2A_MIXTURE.means):
        for k in range(-3, 4):
            expected += w * np.exp(-(GRID - mu + 2 * np.pi * k) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)
    assert_allclose(mixture_density_circle(m, GRID), expected, atol=1e-10)


def test_mixture_density_on_sphere_is_normalized():
    m = CircleMixtureSpec(weights=[0.3, 0.7], means=[0.0, 2.0], heat_var=0.1).to_heat_mixture(d=3)
    # Интеграл по S^2 в сферических координатах: Гаусс-Лежандр по z, трапеции по азимуту
    z, wz = np.polynomial.legendre.leggauss(128)
    phi = 2 * np.pi * np.arange(256) / 256
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1 - zz**2)
    pts = np.stack([r * np.cos(pp), r * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    total = np.sum(mixture_density(m, pts).reshape(zz.shape) * wz[:, None]) * (2 * np.pi / 256)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_log_gradient_matches_finite_difference():
    m = two_component()
    theta, h = np.array([0.4, 1.2, 3.0]), 1e-6
    dens = lambda a: mixture_density_circle(m, a)
    fd = (np.log(dens(theta + h)) - np.log(dens(theta - h))) / (2 * h)
    assert_allclose(mixture_log_gradient_circle(m, theta), fd, rtol=1e-6)
