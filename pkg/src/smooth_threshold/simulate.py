"""Synthetic data generators, a closed-form toy risk table, error metrics,
and a repetition benchmark harness.

Two model classes generate (x, y, z) with a known unit-norm target:

* binary response: y = sign(x - theta'z + u) with Gaussian or logistic
  noise u, plus a noiseless variant (one_bit_noiseless),
* conditional mean: x = mu y + theta'z + u with balanced labels.

``toy_population_risks`` evaluates the scalar toy problem (Z on two atoms)
where hinge and exponential surrogates point away from the 0-1 minimizer.

All generators are pure functions of ``SimSpec``: the counter-based Philox
generator keyed by ``spec.seed`` makes outputs bit-identical across runs
and platforms.  Benchmark repetitions derive child seeds through
``numpy.random.SeedSequence(entropy=seed, spawn_key=...)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from ._parallel import run_tasks
from .errors import InputError, NumericError
from .kernels import Kernel, SurrogateLoss
from .optimizer import PathConfig, path_following
from .risk import Dataset, SmoothedRiskSpec, WeightScheme
from .tuning import (
    TuningSchedule,
    cross_validate_lambda,
    default_lambda_grid,
    target_lambda,
    theoretical_bandwidth,
)

__all__ = [
    "SimSpec",
    "ToyRiskTable",
    "BenchmarkRow",
    "BenchmarkResult",
    "gen_binary_response",
    "gen_conditional_mean",
    "generate",
    "toy_population_risks",
    "estimation_error",
    "top_support",
    "derive_seed",
    "run_benchmark",
]

_MODELS = ("binary_response", "conditional_mean", "one_bit_noiseless")
_NOISES = ("gaussian", "logistic")


@dataclass(frozen=True, eq=False)
class SimSpec:
    """Full description of one synthetic dataset.

    ``theta_star`` defaults to the first ``s`` coordinates equal and
    positive, normalized to unit Euclidean norm.  ``noise`` selects the
    binary-response noise law: "gaussian" draws noise_sd * N(0,1),
    "logistic" draws noise_sd times a standard logistic variate (so
    noise_sd=1 gives the standard logistic distribution).  ``noise_sd``
    is ignored by one_bit_noiseless.
    """

    model: str
    n: int
    d: int
    s: int
    mu: float = 2.0
    noise_sd: float = 0.1
    noise: str = "gaussian"
    theta_star: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in _MODELS:
            raise InputError(f"model must be one of {_MODELS}, got {self.model!r}")
        for name in ("n", "d", "s"):
            val = getattr(self, name)
            if not float(val).is_integer() or int(val) < 1:
                raise InputError(f"{name} must be a positive integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if self.s > self.d:
            raise InputError(f"s must not exceed d, got s={self.s}, d={self.d}")
        mu = float(self.mu)
        if not math.isfinite(mu):
            raise InputError(f"mu must be a finite real, got {self.mu!r}")
        object.__setattr__(self, "mu", mu)
        sd = float(self.noise_sd)
        if not math.isfinite(sd) or sd < 0.0 or (sd == 0.0 and self.model != "one_bit_noiseless"):
            raise InputError(f"noise_sd must be a positive real, got {self.noise_sd!r}")
        object.__setattr__(self, "noise_sd", sd)
        if self.noise not in _NOISES:
            raise InputError(f"noise must be one of {_NOISES}, got {self.noise!r}")
        seed = self.seed
        if not float(seed).is_integer() or int(seed) < 0 or int(seed) >= 2 ** 64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        object.__setattr__(self, "seed", int(seed))
        if self.theta_star is None:
            theta = np.zeros(self.d)
            theta[: self.s] = 1.0 / math.sqrt(self.s)
        else:
            theta = np.array(self.theta_star, dtype=float)
            if theta.shape != (self.d,):
                raise InputError(
                    f"theta_star must have shape ({self.d},), got {theta.shape}"
                )
            if not np.all(np.isfinite(theta)):
                raise InputError("theta_star must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)


@dataclass(frozen=True, eq=False)
class ToyRiskTable:
    """Population risks of the scalar toy problem on a grid of thresholds."""

    theta_grid: np.ndarray
    risk01: np.ndarray
    risk_hinge: np.ndarray
    risk_exp: np.ndarray

    def __post_init__(self):
        arrays = (self.theta_grid, self.risk01, self.risk_hinge, self.risk_exp)
        if len({a.shape for a in arrays}) != 1:
            raise InputError("risk table columns must have equal length")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise NumericError("risk table contains non-finite values")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _margins(x: np.ndarray, z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return x - (z * theta).sum(axis=1)


def gen_binary_response(spec: SimSpec) -> Tuple[Dataset, np.ndarray]:
    """Draw the sign-response model y = sign(x - theta*'z + u).

    Draw order per attempt: z (row-major), then x, then u.  Rows with a
    zero margin (probability zero under continuous noise) are redrawn.
    one_bit_noiseless sets u = 0, so y depends on (x, z) alone.
    """
    if spec.model not in ("binary_response", "one_bit_noiseless"):
        raise InputError(f"expected a sign-response model, got {spec.model!r}")
    noiseless = spec.model == "one_bit_noiseless"
    rng = _rng(spec.seed)

    def draw(count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        z = rng.standard_normal((count, spec.d))
        x = rng.standard_normal(count)
        if noiseless:
            u = np.zeros(count)
        elif spec.noise == "gaussian":
            u = spec.noise_sd * rng.standard_normal(count)
        else:
            u = spec.noise_sd * rng.logistic(size=count)
        return z, x, u

    z, x, u = draw(spec.n)
    y = np.sign(_margins(x, z, spec.theta_star) + u)
    tied = np.flatnonzero(y == 0.0)
    while tied.size:
        z_new, x_new, u_new = draw(tied.size)
        z[tied], x[tied], u[tied] = z_new, x_new, u_new
        y[tied] = np.sign(_margins(x_new, z_new, spec.theta_star) + u_new)
        tied = np.flatnonzero(y == 0.0)
    return Dataset(x=x, y=y, z=z), spec.theta_star


def gen_conditional_mean(spec: SimSpec) -> Tuple[Dataset, np.ndarray]:
    """Draw the shifted-measurement model x = mu y + theta*'z + u.

    Labels are uniform on {-1, +1}; draw order: y, then z (row-major),
    then u.
    """
    if spec.model != "conditional_mean":
        raise InputError(f"expected model 'conditional_mean', got {spec.model!r}")
    rng = _rng(spec.seed)
    y = rng.integers(0, 2, size=spec.n).astype(float) * 2.0 - 1.0
    z = rng.standard_normal((spec.n, spec.d))
    u = spec.noise_sd * rng.standard_normal(spec.n)
    x = spec.mu * y + (z * spec.theta_star).sum(axis=1) + u
    return Dataset(x=x, y=y, z=z), spec.theta_star


def generate(spec: SimSpec) -> Tuple[Dataset, np.ndarray]:
    """Dispatch to the generator matching ``spec.model``."""
    if spec.model == "conditional_mean":
        return gen_conditional_mean(spec)
    return gen_binary_response(spec)


_TOY_ATOMS = (0.5, 5.0)
_SQRT_E = math.exp(0.5)


def _phi(t: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def toy_population_risks(theta_grid: Sequence[float]) -> ToyRiskTable:
    """Population 0-1, hinge and exponential risks of the scalar toy
    problem: X ~ N(0,1), Z uniform on {1/2, 5}, Y = sign(X - Z), with
    predictions sign(X - theta Z).

    The label is a deterministic function of (X, Z), so each risk splits
    at X = Z and reduces to Gaussian integrals with closed forms; each
    value is exact to machine precision, well inside the 1e-6 contract.
    Per atom with a = theta z:

    * 0-1:      |Phi(a) - Phi(z)|,
    * hinge:    integral of (1 + a - x) phi(x) over [z, 1 + a] plus
                (1 - a + x) phi(x) over [a - 1, z] (empty ranges drop),
    * exp:      e^a sqrt(e) Phi(-(z+1)) + e^{-a} sqrt(e) Phi(z - 1).
    """
    grid = np.asarray(theta_grid, dtype=float).ravel()
    if grid.size == 0:
        raise InputError("theta grid must be non-empty")
    if not np.all(np.isfinite(grid)):
        raise InputError("theta grid must be finite")

    risk01 = np.zeros_like(grid)
    hinge = np.zeros_like(grid)
    rexp = np.zeros_like(grid)
    with np.errstate(over="ignore"):
        for z in _TOY_ATOMS:
            a = grid * z
            risk01 += 0.5 * np.abs(ndtr(a) - ndtr(z))

            upper = np.maximum(1.0 + a, z)
            plus = (1.0 + a) * (ndtr(upper) - ndtr(z)) - _phi(z) + _phi(upper)
            lower = np.minimum(a - 1.0, z)
            minus = (1.0 - a) * (ndtr(z) - ndtr(lower)) + _phi(lower) - _phi(z)
            hinge += 0.5 * (plus + minus)

            rexp += 0.5 * _SQRT_E * (np.exp(a) * ndtr(-(z + 1.0)) + np.exp(-a) * ndtr(z - 1.0))

    table = ToyRiskTable(theta_grid=grid.copy(), risk01=risk01, risk_hinge=hinge, risk_exp=rexp)
    for arr in (table.theta_grid, table.risk01, table.risk_hinge, table.risk_exp):
        arr.setflags(write=False)
    return table


_NORM_ORDERS = {"l1": 1, "l2": 2, "linf": np.inf}


def estimation_error(theta_hat: np.ndarray, theta_star: np.ndarray, norm: str = "l2") -> float:
    """Norm of theta_hat - theta_star; ``norm`` is one of l1, l2, linf."""
    if norm not in _NORM_ORDERS:
        raise InputError(f"norm must be one of {tuple(_NORM_ORDERS)}, got {norm!r}")
    hat = np.asarray(theta_hat, dtype=float).ravel()
    star = np.asarray(theta_star, dtype=float).ravel()
    if hat.shape != star.shape:
        raise InputError(f"length mismatch: {hat.shape[0]} vs {star.shape[0]}")
    return float(np.linalg.norm(hat - star, ord=_NORM_ORDERS[norm]))


def top_support(theta: np.ndarray, s: int) -> np.ndarray:
    """Indices of the s largest-magnitude coordinates, ascending.

    Ties are broken toward the smaller index, so the result is a pure
    function of the input.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if not float(s).is_integer() or not (1 <= int(s) <= theta.size):
        raise InputError(f"s must be an integer in [1, {theta.size}], got {s!r}")
    order = np.lexsort((np.arange(theta.size), -np.abs(theta)))
    return np.sort(order[: int(s)])


@dataclass(frozen=True)
class BenchmarkRow:
    """One repetition: errors, sparsity, wall time, and tuned parameters.

    ``messages`` aggregates structured solver notes and any stage that
    ended without converging.
    """

    repetition: int
    l1: float
    l2: float
    linf: float
    nnz: int
    runtime: float
    lambda_used: float
    delta_used: float
    messages: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class BenchmarkResult:
    """All repetition rows plus the configuration actually used."""

    rows: Tuple[BenchmarkRow, ...]
    tune: str
    kernel_name: str

    def errors(self, norm: str) -> np.ndarray:
        if norm not in _NORM_ORDERS:
            raise InputError(f"norm must be one of {tuple(_NORM_ORDERS)}, got {norm!r}")
        return np.array([getattr(row, norm) for row in self.rows])

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Mean and standard deviation (ddof=1 when possible) per norm."""
        out = {}
        for norm in _NORM_ORDERS:
            vals = self.errors(norm)
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out[norm] = {"mean": float(vals.mean()), "sd": sd}
        return out


def derive_seed(root: int, *key: int) -> int:
    """Child seed via SeedSequence spawn keys, the documented stream split."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def _path_messages(path) -> Tuple[str, ...]:
    issues = tuple(path.notes)
    issues += tuple(
        f"stage {rec.stage_index}: {rec.status}"
        for rec in path.stages
        if rec.status not in ("initial", "converged")
    )
    return issues


def run_benchmark(
    spec: SimSpec,
    kernel: Kernel,
    tune: str = "cv",
    delta: Optional[float] = None,
    lambda_tgt: Optional[float] = None,
    beta: Optional[float] = None,
    c_delta: float = 1.0,
    c_lambda: float = 1.0,
    folds: int = 5,
    cv_grid: Optional[Sequence[float]] = None,
    path_cfg: Optional[PathConfig] = None,
    repetitions: int = 1,
    seed: int = 0,
    reuse_tuning: bool = False,
    weights: Optional[WeightScheme] = None,
    threads: int = 1,
) -> BenchmarkResult:
    """Repeat generate -> tune -> fit -> score with derived seeds.

    ``tune`` selects how (delta, lambda_tgt) are found per repetition:

    * "fixed": both supplied by the caller (delta defaults to 1),
    * "cv": K-fold cross-validation of lambda at the fixed delta using the
      one-standard-error rule; the grid defaults to a geometric sweep from
      the gradient sup-norm at zero,
    * "theory": closed-form schedules from (s, beta) and the constants.

    Repetition i draws data with seed spawn_key (i, 0) and cross-validates
    with spawn_key (i, 1) off the benchmark seed.  ``reuse_tuning`` is a
    fast mode that cross-validates once on the first repetition's data and
    reuses that lambda everywhere (default: re-tune per repetition).
    Solver warnings never abort a repetition; structured notes land in the
    row's ``messages``.  Runtime covers tuning plus fitting.
    """
    if tune not in ("fixed", "cv", "theory"):
        raise InputError(f"tune must be one of ('fixed', 'cv', 'theory'), got {tune!r}")
    if not float(repetitions).is_integer() or int(repetitions) < 1:
        raise InputError(f"repetitions must be a positive integer, got {repetitions!r}")
    repetitions = int(repetitions)
    if tune == "fixed" and lambda_tgt is None:
        raise InputError("tune='fixed' requires lambda_tgt")
    if tune == "theory":
        if beta is None:
            raise InputError("tune='theory' requires beta")
        if delta is not None:
            raise InputError("tune='theory' computes delta; do not supply one")
        sched = TuningSchedule(
            n=spec.n, d=spec.d, s=spec.s, beta=float(beta), c_delta=c_delta, c_lambda=c_lambda
        )
        delta_res = theoretical_bandwidth(sched)
        lambda_res = target_lambda(spec.n, spec.d, delta_res, c_lambda)
    else:
        delta_res = 1.0 if delta is None else float(delta)
        lambda_res = None if tune == "cv" else float(lambda_tgt)

    scheme = weights if weights is not None else WeightScheme.unit()
    base = path_cfg if path_cfg is not None else PathConfig(lambda_tgt=1.0)

    shared_lambda = None
    if tune == "cv" and reuse_tuning:
        data0, _ = generate(replace(spec, seed=derive_seed(seed, 0, 0)))
        grid0 = cv_grid if cv_grid is not None else default_lambda_grid(
            data0, kernel, delta_res, weights=scheme
        )
        cv0 = cross_validate_lambda(
            data0, kernel, delta_res, folds, grid0, derive_seed(seed, 0, 1),
            weights=scheme, path_cfg=base,
        )
        shared_lambda = cv0.lambda_1se

    def one_rep(i: int) -> BenchmarkRow:
        data, theta_star = generate(replace(spec, seed=derive_seed(seed, i, 0)))
        messages: Tuple[str, ...] = ()
        t0 = time.perf_counter()
        if tune == "cv":
            if shared_lambda is not None:
                lam = shared_lambda
            else:
                grid = cv_grid if cv_grid is not None else default_lambda_grid(
                    data, kernel, delta_res, weights=scheme
                )
                cv = cross_validate_lambda(
                    data, kernel, delta_res, folds, grid, derive_seed(seed, i, 1),
                    weights=scheme, path_cfg=base,
                )
                lam = cv.lambda_1se
        else:
            lam = lambda_res
        fit_spec = SmoothedRiskSpec(
            data=data,
            loss=SurrogateLoss(kernel=kernel, bandwidth=delta_res),
            weights=scheme,
        )
        path = path_following(fit_spec, replace(base, lambda_tgt=lam))
        runtime = time.perf_counter() - t0
        messages += _path_messages(path)
        theta = path.theta_final
        return BenchmarkRow(
            repetition=i,
            l1=estimation_error(theta, theta_star, "l1"),
            l2=estimation_error(theta, theta_star, "l2"),
            linf=estimation_error(theta, theta_star, "linf"),
            nnz=int(np.count_nonzero(theta)),
            runtime=runtime,
            lambda_used=float(lam),
            delta_used=float(delta_res),
            messages=messages,
        )

    rows = run_tasks(one_rep, range(repetitions), threads)
    rows = tuple(sorted(rows, key=lambda row: row.repetition))
    return BenchmarkResult(rows=rows, tune=tune, kernel_name=kernel.name)
