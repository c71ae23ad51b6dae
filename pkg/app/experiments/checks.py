"""
Набор численных проверок асимптотических утверждений о динамике.

Каждая проверка - функция (ctx, knobs) -> CheckReport, зарегистрированная в
CHECKS. Параметры по умолчанию зависят от ctx.desk_scale и переопределяются
словарём overrides.
"""
import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.stats import linregress

from ..core.dependencies import RunContext, get_run_context
from ..core.exceptions import ConfigError, NumericalError
from ..compute.dynamics import (
    alignment_linear_flow,
    attention_field,
    closest_pair,
    integrate,
    integrate_alignment,
    integrate_pairing_limit,
)
from ..compute.heat import (
    mixture_density,
    mixture_density_circle,
    mixture_evolve,
    mixture_log_gradient_circle,
)
from ..compute.metrics import (
    cluster_detect,
    interaction_energy,
    kernel_field_quadrature,
    sliced_w1_sphere,
    w1_circle,
    w1_circle_to_density,
)
from ..compute.special import (
    central_moment_tensors,
    sample_vmf,
    surface_integral_estimate,
    vmf_A_prime,
    vmf_mean_resultant,
)
from ..compute.spectral import dominant_invariant_subspace, subspace_distance
from ..compute.sphere import angles_of, circle_points, sample_uniform
from ..models.params import Clock, IntegratorConfig, ModelParams, Scheme, VmfParams
from ..models.particles import ParticleState, Trajectory
from ..models.scenario import CheckReport, VerifyReport
from .rates import count_plateau_jumps, fit_rate, non_decreasing, strictly_decreasing
from .sampling import sample_initial
from .scenarios import SCENARIO_2A_MIXTURE, scenario_defaults

logger = logging.getLogger(__name__)

Knobs = Dict[str, Any]
CheckFn = Callable[[RunContext, Knobs], CheckReport]

CHECKS: Dict[str, CheckFn] = {}
DEFAULTS: Dict[str, Dict[bool, Knobs]] = {}


def register(check_id: str, desk: Knobs, full: Optional[Knobs] = None):
    """Регистрирует проверку с параметрами настольного и полного масштаба"""
    def wrap(fn: CheckFn) -> CheckFn:
        CHECKS[check_id] = fn
        DEFAULTS[check_id] = {True: desk, False: {**desk, **(full or {})}}
        return fn
    return wrap


def _snapshot_at(traj: Trajectory, step: int) -> ParticleState:
    for s in traj.snapshots:
        if s.step == step:
            return s
    raise ConfigError(f"Нет снимка на шаге {step}: шаг не кратен stride")


def _series(xs, ys, x_name: str = "x") -> List[Dict[str, float]]:
    return [{x_name: float(x), "value": float(y)} for x, y in zip(xs, ys)]


# ---------------------------------------------------------------------------
# Специальные функции

@register("vmf_asymptotics", desk={"dims": [2, 3, 5], "beta_lo": 1e2, "beta_hi": 1e4, "points": 9,
                                   "slope": -2.0, "slope_tol": 0.2, "closed_form_tol": 1e-10})
def check_vmf_asymptotics(ctx: RunContext, k: Knobs) -> CheckReport:
    grid = np.linspace(0.1, 500.0, 400)
    langevin = 1.0 / np.tanh(grid) - 1.0 / grid
    closed_err = float(np.max(np.abs(vmf_mean_resultant(grid, 3) - langevin)))
    passed = closed_err <= k["closed_form_tol"]

    betas = np.logspace(np.log10(k["beta_lo"]), np.log10(k["beta_hi"]), k["points"])
    values: Dict[str, Any] = {"closed_form_err": closed_err}
    fits = {}
    for d in k["dims"]:
        resid = np.abs(vmf_mean_resultant(betas, d) - (1.0 - (d - 1) / (2.0 * betas)))
        if np.max(resid) < 1e-13:
            # Второй член разложения равен нулю (d = 3): остаток на уровне округления
            values[f"A_residual_d{d}"] = "exact"
        else:
            fit = fit_rate(betas, resid)
            fits[f"A_residual_d{d}"] = fit
            passed &= abs(fit.slope - k["slope"]) <= k["slope_tol"]
        fit = fit_rate(betas, vmf_A_prime(betas, d))
        fits[f"A_prime_d{d}"] = fit
        passed &= abs(fit.slope - k["slope"]) <= k["slope_tol"]

    return CheckReport(
        check_id="vmf_asymptotics", passed=bool(passed), values=values, fits=fits,
        tolerances={"slope": k["slope"], "slope_tol": k["slope_tol"], "closed_form_tol": k["closed_form_tol"]},
    )


@register("integral_asymptotics", desk={"d": 3, "ks": [0, 1, 2, 3], "beta_lo": 50.0, "beta_hi": 800.0,
                                        "points": 9, "slope_tol": 0.05})
def check_integral_asymptotics(ctx: RunContext, k: Knobs) -> CheckReport:
    d = k["d"]
    betas = np.logspace(np.log10(k["beta_lo"]), np.log10(k["beta_hi"]), k["points"])
    passed = True
    fits, values = {}, {}
    for kk in k["ks"]:
        scaled = np.array([surface_integral_estimate(kk, b, d, scaled=True) for b in betas])
        fit = fit_rate(betas, scaled)
        expected = -(d - 1 + kk) / 2.0
        fits[f"k{kk}"] = fit
        values[f"expected_k{kk}"] = expected
        passed &= abs(fit.slope - expected) <= k["slope_tol"]
    return CheckReport(check_id="integral_asymptotics", passed=bool(passed), values=values, fits=fits,
                       tolerances={"slope_tol": k["slope_tol"]})


def _forbidden_third(d: int):
    # Индекс оси - 0; запрещены элементы с нечётной кратностью любого индекса вне оси
    for idx in itertools.product(range(d), repeat=3):
        counts = np.bincount(idx, minlength=d)
        if np.any(counts[1:] % 2 == 1):
            yield idx


@register("tensor_symmetry", desk={"samples": 1_000_000, "kappa": 20.0, "d": 4, "n_se": 5.0})
def check_tensor_symmetry(ctx: RunContext, k: Knobs) -> CheckReport:
    d, kappa = k["d"], k["kappa"]
    mean_dir = np.eye(d)[0]
    samples = sample_vmf(ctx.rng("tensor_symmetry"), VmfParams(mean_dir=mean_dir, kappa=kappa), k["samples"])
    m2, se2, m3, se3 = central_moment_tensors(samples)

    worst = 0.0
    for i, j in itertools.product(range(d), repeat=2):
        if i != j:
            worst = max(worst, abs(m2[i, j]) / max(se2[i, j], 1e-300))
    for idx in _forbidden_third(d):
        worst = max(worst, abs(m3[idx]) / max(se3[idx], 1e-300))

    a = vmf_mean_resultant(kappa, d)
    ap = vmf_A_prime(kappa, d)
    beta2 = (1.0 - ap - a * a) / (d - 1)
    diag_z = [abs(m2[0, 0] - ap) / se2[0, 0]] + [abs(m2[i, i] - beta2) / se2[i, i] for i in range(1, d)]
    passed = worst <= k["n_se"] and max(diag_z) <= k["n_se"]
    return CheckReport(
        check_id="tensor_symmetry", passed=bool(passed),
        values={"max_forbidden_z": worst, "max_diagonal_z": float(max(diag_z)),
                "trace_cov": float(np.trace(m2)), "expected_trace": float(1.0 - a * a)},
        tolerances={"n_se": k["n_se"]},
    )


# ---------------------------------------------------------------------------
# Тепловая фаза

@register("heat_field_limit", desk={"beta_lo": 1e2, "beta_hi": 1e4, "points": 5, "n_eval": 24,
                                    "max_slope": -0.45})
def check_heat_field_limit(ctx: RunContext, k: Knobs) -> CheckReport:
    mixture = SCENARIO_2A_MIXTURE.to_heat_mixture(d=2)
    gamma = 1
    thetas = 2.0 * np.pi * (np.arange(k["n_eval"]) + 0.25) / k["n_eval"]
    oracle = gamma * mixture_log_gradient_circle(mixture, thetas)
    betas = np.logspace(np.log10(k["beta_lo"]), np.log10(k["beta_hi"]), k["points"])

    errors = []
    for beta in betas:
        p = ModelParams.identity(2, beta=beta)
        err = 0.0
        for theta, target in zip(thetas, oracle):
            x = circle_points(theta)
            field = kernel_field_quadrature(lambda pts: mixture_density(mixture, pts), p, x)
            tangent = np.array([-np.sin(theta), np.cos(theta)])
            err = max(err, abs(beta * float(field.vec @ tangent) - target))
        errors.append(err)
        logger.debug("heat_field_limit beta=%g err=%.3e", beta, err)

    fit = fit_rate(betas, errors)
    return CheckReport(
        check_id="heat_field_limit", passed=fit.slope <= k["max_slope"],
        fits={"sup_error": fit}, series={"sup_error": _series(betas, errors, "beta")},
        tolerances={"max_slope": k["max_slope"]},
    )


def _heat_run(scenario, beta: float, s0: ParticleState, steps: int, stride: int) -> Trajectory:
    cfg = scenario.cfg.model_copy(update={"max_steps": steps, "stride": stride, "keep_snapshots": True})
    return integrate(s0, scenario.params.with_beta(beta), cfg)


@register("heat_forward", desk={"n": 5000, "betas": [10.0, 50.0], "checkpoints": [0.02, 0.05, 0.1],
                                "h": 1e-3, "noise_factor": 3.0},
          full={"n": 50_000})
def check_heat_forward(ctx: RunContext, k: Knobs) -> CheckReport:
    scenario = scenario_defaults("2b")
    scenario = scenario.model_copy(update={"cfg": scenario.cfg.model_copy(update={"h": k["h"]})})
    init = scenario.init.model_copy(update={"n": k["n"]})
    s0 = sample_initial(init, ctx.rng("heat_forward/init"))
    mixture = init.mixture.to_heat_mixture(d=2)

    def oracle_error(state: ParticleState, s: float) -> float:
        evolved = mixture_evolve(mixture, s, gamma=-1)
        return w1_circle_to_density(state, lambda th: mixture_density_circle(evolved, th))

    baseline = oracle_error(s0, 0.0)
    marks = [int(round(s / k["h"])) for s in k["checkpoints"]]
    stride = int(np.gcd.reduce(marks))

    errors: Dict[float, List[float]] = {}
    for beta in k["betas"]:
        traj = _heat_run(scenario, beta, s0, max(marks), stride)
        errors[beta] = [oracle_error(_snapshot_at(traj, m), s) for m, s in zip(marks, k["checkpoints"])]

    betas = sorted(k["betas"])
    passed = all(errors[betas[-1]][i] < errors[b][i] for b in betas[:-1] for i in range(len(k["checkpoints"])))
    passed &= all(e < k["noise_factor"] * baseline for e in errors[betas[-1]])
    return CheckReport(
        check_id="heat_forward", passed=bool(passed),
        values={"sampling_error_t0": baseline, "errors": {str(b): errors[b] for b in betas}},
        series={f"w1_beta{b:g}": _series(k["checkpoints"], errors[b], "s") for b in betas},
        tolerances={"noise_factor": k["noise_factor"]},
    )


@register("heat_backward_clusters", desk={"n": 5000, "align_T": 40.0, "steps": 500, "h": 1e-3,
                                          "angle_tol": 0.05, "weight_tol": 0.05})
def check_heat_backward_clusters(ctx: RunContext, k: Knobs) -> CheckReport:
    scenario = scenario_defaults("2a")
    init = scenario.init.model_copy(update={"n": k["n"]})
    s0 = sample_initial(init, ctx.rng("heat_backward_clusters/init"))
    # Фаза выравнивания раньше тепловой: точки переносятся на E_max замкнутым
    # решением предельного потока, при диагональной V азимуты не меняются
    aligned = ParticleState(points=alignment_linear_flow(s0.points, scenario.params, [k["align_T"]])[0])
    elevation = float(np.max(np.abs(aligned.points[:, 2])))
    cfg = scenario.cfg.model_copy(update={"h": k["h"], "max_steps": k["steps"], "keep_snapshots": False})
    traj = integrate(aligned, scenario.params, cfg)

    clusters = cluster_detect(traj.final)
    targets = list(zip(init.mixture.means, init.mixture.weights))
    found = [(float(angles_of(c.centroid[:2])), c.weight) for c in clusters.clusters]

    passed = len(found) == len(targets)
    matches = []
    for mean, weight in targets:
        if not found:
            passed = False
            break
        dist = [abs(np.angle(np.exp(1j * (a - mean)))) for a, _ in found]
        j = int(np.argmin(dist))
        matches.append({"target_angle": mean, "angle": found[j][0], "target_weight": weight,
                        "weight": found[j][1]})
        passed &= dist[j] <= k["angle_tol"] and abs(found[j][1] - weight) <= k["weight_tol"]
    return CheckReport(
        check_id="heat_backward_clusters", passed=bool(passed),
        values={"clusters": len(clusters), "matches": matches, "aligned_max_elevation": elevation,
                "final_rescaled_time": traj.final.rescaled_time},
        tolerances={"angle_tol": k["angle_tol"], "weight_tol": k["weight_tol"]},
    )


# ---------------------------------------------------------------------------
# Фаза выравнивания

def _alignment_setup(ctx: RunContext, check_id: str, n: int):
    scenario = scenario_defaults("1a")
    s0 = sample_initial(scenario.init.model_copy(update={"n": n}), ctx.rng(f"{check_id}/init"))
    return scenario.params, s0


@register("alignment_limit", desk={"n": 2000, "betas": [10.0, 20.0, 40.0], "T": 2.0, "h": 1e-2,
                                   "times": [0.5, 1.0, 2.0]},
          full={"h": 1e-3})
def check_alignment_limit(ctx: RunContext, k: Knobs) -> CheckReport:
    p, s0 = _alignment_setup(ctx, "alignment_limit", k["n"])
    h = k["h"]
    stride = int(round(min(k["times"]) / h))
    steps = int(round(k["T"] / h))
    limit = integrate_alignment(s0, p, h, k["T"], stride=stride)

    dists: Dict[float, List[float]] = {t: [] for t in k["times"]}
    for beta in k["betas"]:
        cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=h, max_steps=steps, stride=stride)
        traj = integrate(s0, p.with_beta(beta), cfg)
        for t in k["times"]:
            step = int(round(t / h))
            value, _ = sliced_w1_sphere(_snapshot_at(traj, step), _snapshot_at(limit, step),
                                        rng=ctx.rng(f"alignment_limit/proj/{t}"))
            dists[t].append(value)

    passed = all(strictly_decreasing(dists[t]) for t in k["times"])
    return CheckReport(
        check_id="alignment_limit", passed=passed,
        values={"sliced_w1": {str(t): v for t, v in dists.items()}},
        series={f"t{t:g}": _series(k["betas"], v, "beta") for t, v in dists.items()},
    )


@register("emax_collapse", desk={"n": 1000, "T": 10.0, "h": 1e-2, "beta": 30.0,
                                 "limit_tol": 0.05, "finite_tol": 0.1},
          full={"n": 2000})
def check_emax_collapse(ctx: RunContext, k: Knobs) -> CheckReport:
    p, s0 = _alignment_setup(ctx, "emax_collapse", k["n"])
    emax = dominant_invariant_subspace(p.interaction_matrix)
    steps = int(round(k["T"] / k["h"]))

    limit = integrate_alignment(s0, p, k["h"], k["T"], stride=steps, keep_snapshots=False)
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=k["h"], max_steps=steps, stride=steps,
                           keep_snapshots=False)
    finite = integrate(s0, p.with_beta(k["beta"]), cfg)

    limit_dist = float(np.mean(subspace_distance(limit.final.points, emax)))
    finite_dist = float(np.mean(subspace_distance(finite.final.points, emax)))
    return CheckReport(
        check_id="emax_collapse",
        passed=limit_dist < k["limit_tol"] and finite_dist < k["finite_tol"],
        values={"limit_mean_distance": limit_dist, "finite_mean_distance": finite_dist, "emax_dim": emax.dim},
        tolerances={"limit_tol": k["limit_tol"], "finite_tol": k["finite_tol"]},
    )


# ---------------------------------------------------------------------------
# Парная фаза

FOUR_DIRACS = np.array([
    [1.0, 0.0, 0.0],
    [np.cos(0.6), np.sin(0.6), 0.0],
    [0.0, 0.0, 1.0],
    [-0.6, -0.8, 0.0],
])


@register("pairing_limit", desk={"betas": [20.0, 40.0, 80.0], "eps": 0.1, "h": 1e-3, "max_steps": 20_000})
def check_pairing_limit(ctx: RunContext, k: Knobs) -> CheckReport:
    s0 = ParticleState(points=FOUR_DIRACS)
    i, j, _ = closest_pair(s0)
    others = [m for m in range(s0.n) if m not in (i, j)]
    limit = integrate_pairing_limit(s0, k["h"], k["eps"], k["max_steps"], stride=1)
    horizon = limit.steps

    deviations, displacements = [], []
    for beta in k["betas"]:
        cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=k["h"], clock=Clock.PAIRING,
                               max_steps=max(horizon, 1), stride=1)
        traj = integrate(s0, ModelParams.identity(3, beta=beta), cfg)
        dev = max(float(np.max(np.linalg.norm(a.points - b.points, axis=1)))
                  for a, b in zip(traj.snapshots, limit.snapshots))
        disp = max(float(np.max(np.linalg.norm(s.points[others] - s0.points[others], axis=1)))
                   for s in traj.snapshots)
        deviations.append(dev)
        displacements.append(max(disp, np.finfo(float).tiny))

    slope = float(linregress(k["betas"], np.log(displacements)).slope)
    passed = strictly_decreasing(deviations) and slope < 0
    return CheckReport(
        check_id="pairing_limit", passed=bool(passed),
        values={"pair": [i, j], "T_eps": limit.final.rescaled_time, "deviation": deviations,
                "non_pair_displacement": displacements, "log_displacement_slope": slope},
        series={"deviation": _series(k["betas"], deviations, "beta"),
                "non_pair_displacement": _series(k["betas"], displacements, "beta")},
    )


# ---------------------------------------------------------------------------
# Сходимость по N

@register("dobrushin", desk={"ns": [250, 500, 1000, 2000], "n_ref": 4000, "seeds": 5, "beta": 5.0,
                             "T": 1.0, "h": 5e-2})
def check_dobrushin(ctx: RunContext, k: Knobs) -> CheckReport:
    p = scenario_defaults("1a").params.with_beta(k["beta"])
    steps = int(round(k["T"] / k["h"]))
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=k["h"], max_steps=steps, stride=steps,
                           keep_snapshots=False)

    totals = np.zeros(len(k["ns"]))
    for seed in range(k["seeds"]):
        rng = ctx.rng(f"dobrushin/seed{seed}")
        ref = integrate(ParticleState(points=sample_uniform(rng, 3, k["n_ref"])), p, cfg).final
        for idx, n in enumerate(k["ns"]):
            run = integrate(ParticleState(points=sample_uniform(rng, 3, n)), p, cfg).final
            value, _ = sliced_w1_sphere(run, ref, rng=ctx.rng("dobrushin/proj"))
            totals[idx] += value
    means = totals / k["seeds"]
    return CheckReport(
        check_id="dobrushin", passed=strictly_decreasing(means),
        values={"sliced_w1": means.tolist()},
        series={"sliced_w1": _series(k["ns"], means, "n")},
    )


# ---------------------------------------------------------------------------
# Инварианты и сквозной сценарий

def _brute_force_w1(a: np.ndarray, b: np.ndarray) -> float:
    best = np.inf
    for perm in itertools.permutations(range(b.size)):
        diff = np.abs(a - b[list(perm)])
        best = min(best, float(np.mean(np.minimum(diff, 2.0 * np.pi - diff))))
    return best


@register("invariants", desk={"n": 64, "steps": 20, "energy_n": 100, "energy_steps": 200})
def check_invariants(ctx: RunContext, k: Knobs) -> CheckReport:
    rng = ctx.rng("invariants")
    p = scenario_defaults("1a").params
    s0 = ParticleState(points=sample_uniform(rng, 3, k["n"]))
    cfg = IntegratorConfig(scheme=Scheme.PROJECTED_RK4, h=1e-2, max_steps=k["steps"], stride=1)
    traj = integrate(s0, p, cfg)

    norm_dev = max(float(np.max(np.abs(np.linalg.norm(s.points, axis=1) - 1.0))) for s in traj.snapshots)
    tangency = float(np.max(np.abs(np.sum(attention_field(s0, p) * s0.points, axis=1))))

    perm = rng.permutation(k["n"])
    shuffled = integrate(s0.permuted(perm), p, cfg).final
    equivariant = bool(np.array_equal(shuffled.points, traj.final.points[perm]))

    hot = ModelParams.identity(3, beta=600.0)
    overflow_safe = bool(np.all(np.isfinite(attention_field(s0, hot))))

    pe = ModelParams.identity(3, beta=5.0)
    ecfg = IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=1e-3, max_steps=k["energy_steps"], stride=1,
                            keep_snapshots=False)
    es = ParticleState(points=sample_uniform(rng, 3, k["energy_n"]))
    energy = integrate(es, pe, ecfg, observers={"energy": lambda s: interaction_energy(s, pe).value})
    monotone = non_decreasing(energy.series("energy"), tol=1e-9)

    m = SCENARIO_2A_MIXTURE.to_heat_mixture()
    semigroup = bool(np.array_equal(
        mixture_evolve(mixture_evolve(m, 0.125, -1), 0.25, -1).variances,
        mixture_evolve(m, 0.375, -1).variances,
    ))
    inverse = bool(np.array_equal(mixture_evolve(mixture_evolve(m, 0.0625, -1), 0.0625, 1).variances, m.variances))

    w1_err = 0.0
    for size in (3, 4, 5):
        a = rng.uniform(0, 2 * np.pi, size)
        b = rng.uniform(0, 2 * np.pi, size)
        w1_err = max(w1_err, abs(w1_circle(circle_points(a), circle_points(b)) - _brute_force_w1(a, b)))

    values = {
        "norm_deviation": norm_dev, "tangency": tangency, "permutation_equivariant": equivariant,
        "overflow_safe": overflow_safe, "energy_monotone": monotone, "heat_semigroup": semigroup,
        "heat_inverse": inverse, "w1_brute_force_err": w1_err,
    }
    passed = (norm_dev < 1e-12 and tangency < 1e-10 and equivariant and overflow_safe and monotone
              and semigroup and inverse and w1_err < 1e-12)
    return CheckReport(check_id="invariants", passed=passed, values=values)


# Ступени шага по логарифмической оси времени: (h, шагов, stride)
FULL_STORY_STAGES = [(1e-2, 100, 5), (5e-2, 180, 10), (0.25, 360, 20), (0.5, 199_800, 500)]


@register("full_story", desk={"n": 200, "min_alternations": 2, "energy_tol": 1e-9}, full={"n": 400})
def check_full_story(ctx: RunContext, k: Knobs) -> CheckReport:
    scenario = scenario_defaults("full_story")
    p = scenario.params
    state = sample_initial(scenario.init.model_copy(update={"n": k["n"]}), ctx.rng("full_story/init"))
    observers = {"energy": lambda s: interaction_energy(s, p).value}

    times: List[float] = []
    energy: List[float] = []
    for h, steps, stride in FULL_STORY_STAGES:
        cfg = IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=h, max_steps=steps, stride=stride,
                               keep_snapshots=False)
        traj = integrate(state, p, cfg, observers=observers)
        start = 1 if times else 0
        times.extend(traj.times("energy")[start:].tolist())
        energy.extend(traj.series("energy")[start:].tolist())
        state = traj.final

    monotone = non_decreasing(energy, tol=k["energy_tol"])
    alternations = count_plateau_jumps(times, energy)
    return CheckReport(
        check_id="full_story", passed=monotone and alternations >= k["min_alternations"],
        values={"energy_monotone": monotone, "plateau_jumps": alternations,
                "final_clusters": len(cluster_detect(state).major(0.02))},
        series={"energy": _series(times, energy, "t")},
        tolerances={"min_alternations": k["min_alternations"], "energy_tol": k["energy_tol"]},
    )


@register("performance", desk={"n_small": 5000, "n_large": 10_000, "steps": 3, "ratio_lo": 3.5,
                               "ratio_hi": 4.5, "full_steps": 0, "budget_s": 120.0},
          full={"full_steps": 400})
def check_performance(ctx: RunContext, k: Knobs) -> CheckReport:
    scenario = scenario_defaults("1a")
    rng = ctx.rng("performance")
    p = scenario.params

    def timed(n: int, steps: int) -> float:
        s0 = ParticleState(points=sample_uniform(rng, 3, n))
        cfg = scenario.cfg.model_copy(update={"max_steps": steps, "stride": steps, "keep_snapshots": False})
        start = time.perf_counter()
        integrate(s0, p, cfg)
        return time.perf_counter() - start

    timed(64, 1)
    small = timed(k["n_small"], k["steps"])
    large = timed(k["n_large"], k["steps"])
    ratio = large / small
    passed = k["ratio_lo"] <= ratio <= k["ratio_hi"]
    values = {"time_small_s": small, "time_large_s": large, "ratio": ratio}
    if k["full_steps"]:
        full = timed(k["n_large"], k["full_steps"])
        values["full_scale_s"] = full
        passed &= full < k["budget_s"]
    return CheckReport(check_id="performance", passed=bool(passed), values=values,
                       tolerances={"ratio": [k["ratio_lo"], k["ratio_hi"]], "budget_s": k["budget_s"]})


# ---------------------------------------------------------------------------

def check_ids() -> List[str]:
    return list(CHECKS)


def resolve_knobs(check_id: str, overrides: Optional[Knobs], desk_scale: bool) -> Knobs:
    defaults = DEFAULTS[check_id][desk_scale]
    overrides = overrides or {}
    unknown = sorted(set(overrides) - set(defaults))
    if unknown:
        raise ConfigError(f"Неизвестные параметры проверки {check_id}: {', '.join(unknown)}")
    return {**defaults, **overrides}


def run_verification(check_id: str, overrides: Optional[Knobs] = None,
                     ctx: Optional[RunContext] = None) -> CheckReport:
    """Запускает одну проверку и возвращает отчёт со временем выполнения"""
    if check_id not in CHECKS:
        raise ConfigError(f"Неизвестная проверка: {check_id}")
    ctx = ctx or get_run_context()
    knobs = resolve_knobs(check_id, overrides, ctx.desk_scale)
    logger.info("Проверка %s", check_id)

    start = time.perf_counter()
    try:
        report = CHECKS[check_id](ctx, knobs)
    except NumericalError as exc:
        raise exc.add_context(check_id)
    report.runtime_s = time.perf_counter() - start
    logger.info("Проверка %s: %s за %.2f с", check_id, "OK" if report.passed else "FAIL", report.runtime_s)
    return report


def run_all(ids: List[str], ctx: RunContext, overrides: Optional[Dict[str, Knobs]] = None,
            workers: int = 1) -> VerifyReport:
    """
    Запускает проверки по очереди или, при workers > 1, в пуле процессов.
    Каждая проверка берёт свой поток случайных чисел из корневого зерна,
    поэтому результат не зависит от порядка выполнения.
    """
    overrides = overrides or {}
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise ConfigError(f"Неизвестные проверки: {', '.join(unknown)}")
    for check_id in ids:
        resolve_knobs(check_id, overrides.get(check_id), ctx.desk_scale)

    report = VerifyReport(seed=ctx.seed, threads=ctx.threads, desk_scale=ctx.desk_scale)
    if workers > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.checks = list(pool.map(run_verification, ids, [overrides.get(c) for c in ids],
                                          [ctx] * len(ids)))
    else:
        for check_id in ids:
            report.checks.append(run_verification(check_id, overrides.get(check_id), ctx))
    return report
