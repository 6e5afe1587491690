"""Derivative-free and quasi-Newton minimizers for the compression step.

Both minimizers stop as soon as the best objective value reaches
``config.tolerance`` or the evaluation budget is spent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]


class OptimizerKind(str, Enum):
    CMA_ES = "cma_es"
    QUASI_NEWTON = "quasi_newton"


@dataclass(frozen=True)
class OptimizerConfig:
    kind: OptimizerKind = OptimizerKind.CMA_ES
    tolerance: float = 5e-3
    max_evaluations: int = 5000
    population: int = 0  # 0 selects 4 + floor(3 ln N)
    initial_step: float = 0.1
    fd_step: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", OptimizerKind(self.kind))
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.population < 0:
            raise ValueError("population must be >= 0")
        if self.max_evaluations < max(self.population, 1):
            raise ValueError("max_evaluations must be >= population")
        if self.initial_step <= 0 or self.fd_step <= 0:
            raise ValueError("initial_step and fd_step must be > 0")

    def with_(self, **changes) -> OptimizerConfig:
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return OptimizerConfig(**fields)


@dataclass
class OptResult:
    best_params: np.ndarray
    best_value: float
    evaluations: int
    converged: bool
    history: list[tuple[int, float]] = field(default_factory=list)


class _Counted:
    def __init__(self, objective: Objective):
        self.objective = objective
        self.count = 0

    def __call__(self, x: np.ndarray) -> float:
        self.count += 1
        value = float(self.objective(np.array(x, dtype=float)))
        if not math.isfinite(value):
            raise ValueError(f"objective returned non-finite value {value}")
        return value


def finite_difference_gradient(objective: Objective, x: Sequence[float], h: float) -> np.ndarray:
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    if h <= 0:
        raise ValueError("h must be > 0")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        fp, fm = float(objective(x + step)), float(objective(x - step))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ValueError(f"non-finite objective value near coordinate {i}")
        grad[i] = (fp - fm) / (2 * h)
    return grad


def default_population(dim: int) -> int:
    return 4 + int(math.floor(3 * math.log(max(dim, 1))))


def minimize(
    objective: Objective,
    x0: Sequence[float],
    config: OptimizerConfig,
    *,
    gradient: Callable[[np.ndarray], np.ndarray] | None = None,
    reevaluate: Objective | None = None,
    jobs: int = 1,
) -> OptResult:
    """Minimize ``objective`` from ``x0``.

    ``gradient`` replaces finite differences in the quasi-Newton method.
    ``reevaluate`` guards noisy objectives: a candidate below tolerance only
    counts as converged if a fresh evaluation also is.  ``jobs > 1``
    evaluates each CMA-ES generation on a thread pool (order preserved).
    """
    x0 = np.array(x0, dtype=float).ravel()
    if x0.size == 0:
        f = _Counted(objective)
        value = f(x0)
        return OptResult(x0, value, 1, value <= config.tolerance, [(1, value)])
    if config.kind is OptimizerKind.CMA_ES:
        return _cma_es(objective, x0, config, reevaluate, jobs)
    return _bfgs(objective, x0, config, gradient, reevaluate)


def _confirm(reevaluate, x, value, tolerance, counter) -> tuple[bool, float]:
    if reevaluate is None:
        return True, value
    counter.count += 1
    fresh = float(reevaluate(np.array(x)))
    return fresh <= tolerance, fresh


def _cma_es(objective, x0, config, reevaluate, jobs) -> OptResult:
    """(mu/mu_w, lambda)-CMA-ES with restarts.

    When the search stagnates (step size collapsed, or no improvement of the
    best value for ``10 + 30 n / lambda`` generations) the distribution is
    reset around the best point with twice the previous initial step.
    """
    f = _Counted(objective)
    rng = np.random.default_rng(config.seed)
    n = x0.size
    lam = config.population or default_population(n)
    mu = lam // 2
    weights = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights /= weights.sum()
    mueff = 1.0 / np.sum(weights**2)

    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

    mean = x0.copy()
    sigma = config.initial_step
    cov = np.eye(n)
    basis, scales = np.eye(n), np.ones(n)
    pc, ps = np.zeros(n), np.zeros(n)

    best_x, best_f = mean.copy(), f(mean)
    history = [(f.count, best_f)]
    converged = False
    if best_f <= config.tolerance:
        converged, best_f = _confirm(reevaluate, best_x, best_f, config.tolerance, f)
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    generation = 0
    patience = 10 + int(math.ceil(30 * n / lam))
    restart_step = config.initial_step
    last_gain = 0
    try:
        while not converged and f.count < config.max_evaluations:
            z = rng.standard_normal((lam, n))
            y = (z * scales) @ basis.T
            xs = mean + sigma * y
            values = np.array(list(pool.map(f, xs)) if pool else [f(x) for x in xs])
            order = np.argsort(values, kind="stable")
            if values[order[0]] < best_f:
                if values[order[0]] < best_f - 1e-12 * max(1.0, abs(best_f)):
                    last_gain = generation
                best_f, best_x = float(values[order[0]]), xs[order[0]].copy()
                if best_f <= config.tolerance:
                    converged, best_f = _confirm(reevaluate, best_x, best_f, config.tolerance, f)
            history.append((f.count, best_f))

            y_sel = y[order[:mu]]
            y_w = weights @ y_sel
            mean = mean + sigma * y_w
            inv_sqrt = basis @ np.diag(1 / scales) @ basis.T
            ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ y_w)
            generation += 1
            hsig = (
                np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * generation)) / chi_n
                < 1.4 + 2 / (n + 1)
            )
            pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * y_w
            rank_mu = (y_sel * weights[:, None]).T @ y_sel
            cov = (
                (1 - c1 - cmu) * cov
                + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * cov)
                + cmu * rank_mu
            )
            sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))

            cov = (cov + cov.T) / 2
            eigvals, basis = np.linalg.eigh(cov)
            scales = np.sqrt(np.maximum(eigvals, 1e-300))
            collapsed = sigma * scales.max() < 1e-12 or not math.isfinite(sigma)
            if collapsed or generation - last_gain > patience:
                restart_step = min(2 * restart_step, math.pi)
                mean, sigma = best_x.copy(), restart_step
                cov, basis, scales = np.eye(n), np.eye(n), np.ones(n)
                pc, ps = np.zeros(n), np.zeros(n)
                generation = last_gain = 0
    finally:
        if pool:
            pool.shutdown()
    return OptResult(best_x, best_f, f.count, converged, history)


def _bfgs(objective, x0, config, gradient, reevaluate, stall_window=100, stall_rtol=1e-2) -> OptResult:
    """BFGS with Armijo backtracking.

    Stops early when the gradient vanishes, when the line search fails from a
    steepest-descent direction, or when the best value improved by less than
    ``stall_rtol`` (relative) over the last ``stall_window`` iterations.
    """
    f = _Counted(objective)
    if gradient is None:
        grad = lambda x: finite_difference_gradient(f, x, config.fd_step)  # noqa: E731
    else:
        grad = lambda x: np.asarray(gradient(x), dtype=float)  # noqa: E731

    x = x0.copy()
    fx = f(x)
    g = grad(x)
    n = x.size
    hinv = np.eye(n)
    fresh_hessian = True
    history = [(f.count, fx)]
    converged = False
    if fx <= config.tolerance:
        converged, fx = _confirm(reevaluate, x, fx, config.tolerance, f)
    trail = [fx]

    while not converged and f.count < config.max_evaluations:
        if not np.all(np.isfinite(g)) or np.linalg.norm(g) < 1e-12:
            break
        d = -hinv @ g
        slope = g @ d
        if slope >= 0:
            hinv, fresh_hessian = np.eye(n), True
            d, slope = -g, -(g @ g)
        step, accepted = 1.0, False
        while f.count < config.max_evaluations and step > 1e-12:
            trial = x + step * d
            ft = f(trial)
            if ft <= fx + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if fresh_hessian:
                break
            hinv, fresh_hessian = np.eye(n), True
            continue

        g_new = grad(trial)
        s, yv = trial - x, g_new - g
        sy = s @ yv
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            if fresh_hessian:
                hinv = np.eye(n) * (sy / (yv @ yv))
            rho = 1.0 / sy
            hy = hinv @ yv
            hinv = (
                hinv
                - rho * (np.outer(s, hy) + np.outer(hy, s))
                + (rho * rho * (yv @ hy) + rho) * np.outer(s, s)
            )
            fresh_hessian = False
        x, fx, g = trial, ft, g_new
        history.append((f.count, min(fx, history[-1][1])))
        if fx <= config.tolerance:
            converged, fx = _confirm(reevaluate, x, fx, config.tolerance, f)
        trail.append(fx)
        if len(trail) > stall_window:
            old = trail[-stall_window - 1]
            if old - fx <= stall_rtol * abs(old):
                break
    return OptResult(x, fx, f.count, converged, history)
