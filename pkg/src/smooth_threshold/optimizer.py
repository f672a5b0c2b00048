"""Path-following proximal gradient solver for the l1-penalized smoothed risk.

The penalized objective is f_lam(theta) = risk(theta) + lam * ||theta||_1,
minimized over an l2 ball of radius ``omega_radius``.  A stage solves one
penalty level with proximal gradient steps (gradient step, soft threshold,
ball projection); the path starts at a penalty large enough that the zero
vector is optimal and shrinks it geometrically, warm starting every stage at
the previous solution.

Stage accuracy is measured by the subgradient optimality gap

    omega(theta) = min over xi in the l1 subdifferential at theta of
                   || grad risk(theta) + lam * xi ||_inf,

which is zero exactly at interior stationary points.  The ball constraint is
deliberately ignored in this measure even when an iterate sits on the
boundary; boundary contact is reported as a warning instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceWarning, InputError
from .risk import SmoothedRiskSpec, empirical_gradient, objective, _check_theta

_TRACE_TOL = 1e-12
_BACKTRACK_SLACK = 1e-15
_MAX_HALVINGS = 60


def soft_threshold(v, tau: float) -> np.ndarray:
    """Elementwise shrinkage toward zero by tau; |v| <= tau maps to exactly 0."""
    if not (np.isfinite(tau) and tau >= 0):
        raise InputError(f"threshold must be a nonnegative real, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def project_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the l2 ball; rescaling keeps the sparsity pattern."""
    if not radius > 0:
        raise InputError(f"ball radius must be positive, got {radius}")
    v = np.asarray(v, dtype=float)
    if math.isinf(radius):
        return v.copy()
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v.copy()
    return v * (radius / norm)


def _subopt_from_grad(g: np.ndarray, theta: np.ndarray, lam: float) -> float:
    on_support = theta != 0.0
    vals = np.where(on_support,
                    np.abs(g + lam * np.sign(theta)),
                    np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(vals))


def suboptimality(spec: SmoothedRiskSpec, theta, lam: float) -> float:
    """Optimality gap omega_lam(theta); exactly 0 at theta = 0 when lam >= ||grad||_inf."""
    if not (np.isfinite(lam) and lam >= 0):
        raise InputError(f"penalty level must be a nonnegative real, got {lam}")
    theta = _check_theta(theta, spec.data.d)
    return _subopt_from_grad(empirical_gradient(spec, theta), theta, lam)


def prox_step(spec: SmoothedRiskSpec, theta, lam: float, eta: float,
              radius: float = math.inf) -> np.ndarray:
    """One proximal gradient update of theta at step size eta."""
    if not (np.isfinite(eta) and eta > 0):
        raise InputError(f"step size must be a positive real, got {eta}")
    theta = _check_theta(theta, spec.data.d)
    g = empirical_gradient(spec, theta)
    return project_ball(soft_threshold(theta - eta * g, lam * eta), radius)


@dataclass(frozen=True)
class PathConfig:
    """Solver settings for one penalized fit.

    Exactly one of ``num_stages`` / ``phi`` drives the stage schedule; with
    both unset the path uses num_stages = 10.  ``lambda0 = None`` resolves to
    ||grad risk(0)||_inf, the smallest penalty whose solution is exactly 0.
    ``eps_tgt = None`` resolves to 0.1 * nu * lambda_tgt.  ``backtrack`` halves
    the step size whenever a step would increase the objective, preserving the
    monotone stage trace at any eta.
    """

    lambda_tgt: float
    lambda0: float | None = None
    num_stages: int | None = None
    phi: float | None = None
    nu: float = 0.25
    eta: float = 1.0
    eps_tgt: float | None = None
    omega_radius: float = 10.0
    max_inner_iters: int = 10000
    backtrack: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.lambda_tgt) and self.lambda_tgt > 0):
            raise InputError(f"lambda_tgt must be positive, got {self.lambda_tgt}")
        if self.lambda0 is not None and not (np.isfinite(self.lambda0)
                                             and self.lambda0 >= 0):
            raise InputError(f"lambda0 must be a nonnegative real when given, "
                             f"got {self.lambda0}")
        if self.num_stages is not None and self.phi is not None:
            raise InputError("set num_stages or phi, not both")
        if self.num_stages is not None and self.num_stages < 1:
            raise InputError(f"num_stages must be >= 1, got {self.num_stages}")
        if self.phi is not None and not (0.0 < self.phi < 1.0):
            raise InputError(f"phi must lie in (0, 1), got {self.phi}")
        if not (0.0 < self.nu < 1.0):
            raise InputError(f"nu must lie in (0, 1), got {self.nu}")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InputError(f"eta must be positive, got {self.eta}")
        if self.eps_tgt is not None and not self.eps_tgt > 0:
            raise InputError(f"eps_tgt must be positive when given, got {self.eps_tgt}")
        if not self.omega_radius > 0:
            raise InputError(f"omega_radius must be positive, got {self.omega_radius}")
        if self.max_inner_iters < 1:
            raise InputError("max_inner_iters must be >= 1")


@dataclass(frozen=True)
class StageRecord:
    """Solution and trace of one penalty stage."""

    stage_index: int
    lam: float
    iterations: int
    exit_omega: float
    theta: np.ndarray
    objective_trace: np.ndarray
    nnz: int
    status: str  # "initial" | "converged" | "max_iter" | "stalled"


@dataclass(frozen=True)
class SolutionPath:
    """Ordered stage records, the final iterate, and the fully resolved config."""

    stages: tuple
    theta_final: np.ndarray
    config_echo: PathConfig
    notes: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class InnerResult:
    theta: np.ndarray
    iterations: int
    exit_omega: float
    objective_trace: np.ndarray
    status: str
    gradient: np.ndarray
    eta_final: float
    boundary_hit: bool


def _inner_loop(spec, theta0, lam, eps, *, eta, radius, max_iters, backtrack,
                g0=None) -> InnerResult:
    theta = np.array(theta0, dtype=float)
    f = objective(spec, theta, lam)
    trace = [f]
    g = empirical_gradient(spec, theta) if g0 is None else g0
    omega = _subopt_from_grad(g, theta, lam)
    step = eta
    status = "converged"
    boundary_hit = False
    iterations = 0

    while omega > eps:
        if iterations >= max_iters:
            status = "max_iter"
            warnings.warn(
                f"proximal loop at lambda={lam:.6g} stopped after {max_iters} "
                f"iterations with omega={omega:.3e} > eps={eps:.3e}",
                ConvergenceWarning, stacklevel=3)
            break
        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            shrunk = soft_threshold(theta - step * g, lam * step)
            cand = project_ball(shrunk, radius)
            if math.isfinite(radius) and float(np.linalg.norm(shrunk)) > radius:
                boundary_hit = True
            f_cand = objective(spec, cand, lam)
            if not backtrack or f_cand <= f + _BACKTRACK_SLACK * max(1.0, abs(f)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "stalled"
            warnings.warn(
                f"proximal loop at lambda={lam:.6g} could not decrease the "
                f"objective after {_MAX_HALVINGS} step halvings; stopping with "
                f"omega={omega:.3e}", ConvergenceWarning, stacklevel=3)
            break
        theta, f = cand, f_cand
        trace.append(f)
        iterations += 1
        g = empirical_gradient(spec, theta)
        omega = _subopt_from_grad(g, theta, lam)

    trace = np.asarray(trace)
    # monotone stage contract: each accepted step may not increase the objective
    assert np.all(np.diff(trace) <= _TRACE_TOL), "objective trace increased"
    return InnerResult(theta=theta, iterations=iterations, exit_omega=omega,
                       objective_trace=trace, status=status, gradient=g,
                       eta_final=step, boundary_hit=boundary_hit)


def proximal_gradient(spec: SmoothedRiskSpec, theta0, lam: float, eps: float,
                      *, eta: float = 1.0, radius: float = math.inf,
                      max_iters: int = 10000, backtrack: bool = True) -> InnerResult:
    """Run proximal gradient at a single penalty level until omega <= eps.

    Returns the first iterate whose own optimality gap meets ``eps`` (checked
    after each update, and before the first), so a warm start that already
    satisfies the tolerance is returned unchanged with 0 iterations.
    """
    if not (np.isfinite(lam) and lam >= 0):
        raise InputError(f"penalty level must be a nonnegative real, got {lam}")
    if not eps >= 0:
        raise InputError(f"tolerance must be nonnegative, got {eps}")
    theta0 = _check_theta(theta0, spec.data.d)
    return _inner_loop(spec, theta0, lam, eps, eta=eta, radius=radius,
                       max_iters=max_iters, backtrack=backtrack)


def _stage_schedule(lambda0: float, cfg: PathConfig) -> tuple[list, float, int]:
    """Penalty levels for stages 1..N (stage 0 is the zero solution at lambda0)."""
    ratio = cfg.lambda_tgt / lambda0
    if cfg.phi is not None:
        num = max(int(math.ceil(math.log(ratio) / math.log(cfg.phi))), 1)
        phi = cfg.phi
    else:
        num = cfg.num_stages if cfg.num_stages is not None else 10
        phi = ratio ** (1.0 / num)
    lams = [lambda0 * phi ** t for t in range(1, num)]
    lams.append(cfg.lambda_tgt)
    return lams, phi, num


def path_following(spec: SmoothedRiskSpec, config: PathConfig) -> SolutionPath:
    """Solve the penalized problem along a geometric penalty schedule.

    Stage 0 is the exact zero solution at lambda0; intermediate stages run to
    tolerance nu * lambda_t; the final stage runs at lambda_tgt to eps_tgt.
    Warm-start quality is checked between stages and reported in ``notes``
    when the carried iterate exceeds half the next penalty level.
    """
    d = spec.data.d
    zero = np.zeros(d)
    notes = []
    g0 = empirical_gradient(spec, zero)
    lambda0 = config.lambda0 if config.lambda0 is not None \
        else float(np.max(np.abs(g0)))
    eps_tgt = config.eps_tgt if config.eps_tgt is not None \
        else 0.1 * config.nu * config.lambda_tgt

    common = dict(eta=config.eta, radius=config.omega_radius,
                  max_iters=config.max_inner_iters, backtrack=config.backtrack)

    if lambda0 <= config.lambda_tgt:
        if lambda0 < config.lambda_tgt:
            notes.append(
                f"lambda_tgt={config.lambda_tgt:.6g} exceeds the zero-solution "
                f"penalty lambda0={lambda0:.6g}; running a single stage at lambda_tgt")
            warnings.warn(notes[-1], ConvergenceWarning, stacklevel=2)
        res = _inner_loop(spec, zero, config.lambda_tgt, eps_tgt, g0=g0, **common)
        stages = [StageRecord(stage_index=0, lam=config.lambda_tgt,
                              iterations=res.iterations, exit_omega=res.exit_omega,
                              theta=res.theta, objective_trace=res.objective_trace,
                              nnz=int(np.count_nonzero(res.theta)),
                              status=res.status)]
        if res.boundary_hit:
            notes.append("stage 0: iterate touched the feasible ball boundary")
        echo = replace(config, lambda0=lambda0, eps_tgt=eps_tgt)
        return SolutionPath(stages=tuple(stages), theta_final=res.theta,
                            config_echo=echo, notes=tuple(notes))

    lams, phi, num = _stage_schedule(lambda0, config)
    stages = [StageRecord(stage_index=0, lam=lambda0, iterations=0,
                          exit_omega=_subopt_from_grad(g0, zero, lambda0),
                          theta=zero.copy(), objective_trace=np.array(
                              [objective(spec, zero, lambda0)]),
                          nnz=0, status="initial")]
    theta = zero
    grad = g0
    for t, lam in enumerate(lams, start=1):
        warm_omega = _subopt_from_grad(grad, theta, lam)
        if warm_omega > 0.5 * lam + 1e-12:
            notes.append(f"stage {t}: warm-start omega {warm_omega:.3e} exceeds "
                         f"lambda/2 = {0.5 * lam:.3e}")
        eps = config.nu * lam if t < num else eps_tgt
        res = _inner_loop(spec, theta, lam, eps, g0=grad, **common)
        stages.append(StageRecord(stage_index=t, lam=lam,
                                  iterations=res.iterations,
                                  exit_omega=res.exit_omega, theta=res.theta,
                                  objective_trace=res.objective_trace,
                                  nnz=int(np.count_nonzero(res.theta)),
                                  status=res.status))
        if res.boundary_hit:
            notes.append(f"stage {t}: iterate touched the feasible ball boundary")
        theta, grad = res.theta, res.gradient

    if config.phi is not None:
        echo = replace(config, lambda0=lambda0, eps_tgt=eps_tgt)
    else:
        echo = replace(config, lambda0=lambda0, num_stages=num, eps_tgt=eps_tgt)
    return SolutionPath(stages=tuple(stages), theta_final=theta,
                        config_echo=echo, notes=tuple(notes))
