"""Bandwidth and penalty selection.

Three routes to the pair (delta, lambda_tgt):

* closed-form schedules ``theoretical_bandwidth`` / ``target_lambda`` for
  known smoothness and sparsity,
* K-fold cross-validation of lambda_tgt at a fixed bandwidth with the
  one-standard-error rule,
* two Lepski-style procedures on dyadic grids: ``lepski_bandwidth`` adapts
  delta when the smoothness is unknown, ``lepski_sparsity`` adapts the
  sparsity input when the support size is unknown.

All logarithms are natural.  Every formula involving log d requires d >= 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._parallel import run_tasks
from .errors import InputError
from .kernels import Kernel, SurrogateLoss
from .optimizer import PathConfig, path_following
from .risk import (
    Dataset,
    SmoothedRiskSpec,
    WeightScheme,
    empirical_gradient,
    empirical_risk,
)

__all__ = [
    "TuningSchedule",
    "LepskiGrid",
    "CvResult",
    "LepskiFit",
    "theoretical_bandwidth",
    "target_lambda",
    "default_lambda_grid",
    "cross_validate_lambda",
    "build_lepski_grid",
    "lepski_bandwidth",
    "lepski_sparsity",
    "select_lepski_bandwidth",
    "select_lepski_sparsity",
]


def _positive_int(value, name: str) -> int:
    if not float(value).is_integer() or int(value) < 1:
        raise InputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _nonneg_int(value, name: str) -> int:
    if not float(value).is_integer() or int(value) < 0:
        raise InputError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TuningSchedule:
    """Problem sizes and constants feeding the closed-form schedules.

    ``s`` and ``beta`` are the anticipated sparsity and smoothness.
    ``c_delta`` scales the bandwidth, ``c_lambda`` scales the penalty
    target.  The adaptive sparsity procedure additionally requires
    c_delta**(beta + 1/2) <= c_lambda, checked at its call site.
    """

    n: int
    d: int
    s: int
    beta: float
    c_delta: float = 1.0
    c_lambda: float = 1.0

    def __post_init__(self):
        for name in ("n", "d", "s"):
            object.__setattr__(self, name, _positive_int(getattr(self, name), name))
        for name in ("beta", "c_delta", "c_lambda"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val <= 0.0:
                raise InputError(f"{name} must be a positive real, got {val!r}")
            object.__setattr__(self, name, val)


@dataclass(frozen=True)
class LepskiGrid:
    """Dyadic grid for one of the adaptive procedures.

    ``kind`` is "bandwidth" (values 1, 1/2, ..., 2**-m, descending) or
    "sparsity" (values 1, 2, ..., 2**m, ascending).
    """

    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in ("bandwidth", "sparsity"):
            raise InputError(f"unknown grid kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise InputError("grid must be non-empty")


@dataclass(frozen=True)
class CvResult:
    """Cross-validation summary over a penalty grid (sorted descending)."""

    lambda_grid: np.ndarray
    mean_cv_loss: np.ndarray
    se_cv_loss: np.ndarray
    lambda_min: float
    lambda_1se: float
    fold_assignment: np.ndarray

    def __post_init__(self):
        if not (self.lambda_grid.shape == self.mean_cv_loss.shape == self.se_cv_loss.shape):
            raise InputError("grid and loss vectors must have equal length")
        if self.lambda_1se < self.lambda_min:
            raise InputError("lambda_1se must be at least lambda_min")


@dataclass(frozen=True)
class LepskiFit:
    """One grid-point fit inside an adaptive procedure.

    ``grid_value`` is the grid coordinate (a bandwidth, or a sparsity
    level).  ``theta`` is None when the fit failed; ``detail`` then holds
    the error message.  Entries appended by the empty-feasible-set
    fallback carry ``grid_value`` outside the original grid.
    """

    grid_value: float
    delta: float
    lam: float
    theta: Optional[np.ndarray]
    status: str
    detail: str = ""


def theoretical_bandwidth(sched: TuningSchedule) -> float:
    """Closed-form bandwidth c_delta * (s log(d) / n)**(1 / (2 beta + 1))."""
    if sched.d < 2:
        raise InputError("d must be at least 2 so that log d is positive")
    base = sched.s * math.log(sched.d) / sched.n
    return sched.c_delta * base ** (1.0 / (2.0 * sched.beta + 1.0))


def target_lambda(n: int, d: int, delta: float, c_lambda: float = 1.0) -> float:
    """Closed-form penalty target c_lambda * sqrt(log(d) / (n delta))."""
    n = _positive_int(n, "n")
    d = _positive_int(d, "d")
    if d < 2:
        raise InputError("d must be at least 2 so that log d is positive")
    delta = float(delta)
    if not math.isfinite(delta) or delta <= 0.0:
        raise InputError(f"delta must be a positive real, got {delta!r}")
    c_lambda = float(c_lambda)
    if not math.isfinite(c_lambda) or c_lambda < 0.0:
        raise InputError(f"c_lambda must be a nonnegative real, got {c_lambda!r}")
    return c_lambda * math.sqrt(math.log(d) / (n * delta))


def build_lepski_grid(kind: str, size: int) -> LepskiGrid:
    """Dyadic grid whose exponent m is pinned by a sandwich inequality.

    bandwidth: 2**-m <= 1/n <= 2**-(m-1), values {1, 1/2, ..., 2**-m}.
    sparsity:  2**m <= d <= 2**(m+1), values {1, 2, ..., 2**m}.
    When both sides admit two exponents (size a power of two) the smaller
    m is used.
    """
    size = _positive_int(size, "size")
    if size < 2:
        raise InputError(f"{kind} grid requires size >= 2, got {size}")
    if kind == "bandwidth":
        m = (size - 1).bit_length()
        return LepskiGrid(kind=kind, values=tuple(2.0 ** -k for k in range(m + 1)))
    if kind == "sparsity":
        m = (size - 1).bit_length() - 1
        return LepskiGrid(kind=kind, values=tuple(2 ** k for k in range(m + 1)))
    raise InputError(f"unknown grid kind {kind!r}")


def default_lambda_grid(
    data: Dataset,
    kernel: Kernel,
    delta: float,
    num: int = 20,
    min_ratio: float = 0.01,
    weights: Optional[WeightScheme] = None,
) -> np.ndarray:
    """Geometric penalty grid from lambda0 = ||grad R(0)||_inf down to
    ``min_ratio * lambda0``, descending, with ``num`` points.

    At the top value the zero vector is already stationary, so the grid
    brackets the whole path from the null model downward.
    """
    num = _positive_int(num, "num")
    if num < 2:
        raise InputError("num must be at least 2")
    min_ratio = float(min_ratio)
    if not (0.0 < min_ratio < 1.0):
        raise InputError(f"min_ratio must lie in (0, 1), got {min_ratio!r}")
    scheme = weights if weights is not None else WeightScheme.unit()
    spec = SmoothedRiskSpec(data=data, loss=SurrogateLoss(kernel=kernel, bandwidth=delta), weights=scheme)
    lambda0 = float(np.max(np.abs(empirical_gradient(spec, np.zeros(data.d)))))
    if lambda0 <= 0.0:
        raise InputError(
            "cannot build a default penalty grid: the risk gradient at the "
            "zero vector is identically zero; supply an explicit grid"
        )
    expo = np.arange(num) / (num - 1.0)
    return lambda0 * min_ratio ** expo


def _stratified_folds(y: np.ndarray, folds: int, seed: int, max_retries: int = 100) -> np.ndarray:
    """Random fold ids, shuffled per class so every fold sees both labels.

    Assignment is resampled up to ``max_retries`` times; failure means a
    class has fewer samples than folds.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = y.shape[0]
    for _ in range(max_retries):
        fold_id = np.full(n, -1, dtype=np.int64)
        for cls in (-1.0, 1.0):
            idx = np.flatnonzero(y == cls)
            perm = idx[rng.permutation(idx.size)]
            fold_id[perm] = np.arange(perm.size) % folds
        ok = all(
            np.any((fold_id == k) & (y == 1.0)) and np.any((fold_id == k) & (y == -1.0))
            for k in range(folds)
        )
        if ok:
            return fold_id
    raise InputError(
        f"could not assign {folds} folds each containing both classes; "
        "a class has fewer samples than folds"
    )


def cross_validate_lambda(
    data: Dataset,
    kernel: Kernel,
    delta: float,
    folds: int,
    grid: Sequence[float],
    seed: int,
    weights: Optional[WeightScheme] = None,
    path_cfg: Optional[PathConfig] = None,
    threads: int = 1,
) -> CvResult:
    """K-fold cross-validation of lambda_tgt at a fixed bandwidth.

    For each grid value a full path is fit on every training split and the
    held-out weighted surrogate loss is averaged.  ``lambda_min`` minimizes
    the mean curve; ``lambda_1se`` is the largest grid value whose mean is
    within one standard error of that minimum.  Per-sample weights are
    resolved once on the full dataset so both splits of a fold weight
    observations consistently.
    """
    folds = _positive_int(folds, "folds")
    if folds < 2:
        raise InputError(f"folds must be at least 2, got {folds}")
    seed = _nonneg_int(seed, "seed")
    grid_arr = np.asarray(grid, dtype=float).ravel()
    if grid_arr.size == 0:
        raise InputError("lambda grid must be non-empty")
    if not np.all(np.isfinite(grid_arr)) or np.any(grid_arr <= 0.0):
        raise InputError("lambda grid values must be positive finite reals")
    grid_desc = np.sort(grid_arr)[::-1].copy()

    scheme = weights if weights is not None else WeightScheme.unit()
    wfull = scheme.resolve(data)
    fold_id = _stratified_folds(data.y, folds, seed)
    loss = SurrogateLoss(kernel=kernel, bandwidth=delta)

    splits = []
    for k in range(folds):
        te = fold_id == k
        tr = ~te
        train = SmoothedRiskSpec(
            data=Dataset(x=data.x[tr], y=data.y[tr], z=data.z[tr]),
            loss=loss,
            weights=WeightScheme.samples(wfull[tr]),
        )
        test = SmoothedRiskSpec(
            data=Dataset(x=data.x[te], y=data.y[te], z=data.z[te]),
            loss=loss,
            weights=WeightScheme.samples(wfull[te]),
        )
        splits.append((train, test))

    base = path_cfg if path_cfg is not None else PathConfig(lambda_tgt=1.0)

    def run(task: Tuple[int, int]) -> float:
        i, k = task
        train, test = splits[k]
        cfg = replace(base, lambda_tgt=float(grid_desc[i]))
        path = path_following(train, cfg)
        return empirical_risk(test, path.theta_final)

    tasks = [(i, k) for i in range(grid_desc.size) for k in range(folds)]
    # The top of a sensible grid reaches the null model on purpose, so the
    # fold fits' "lambda_tgt exceeds lambda0" notices are routine here.
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*exceeds the zero-solution penalty.*")
        losses = np.array(run_tasks(run, tasks, threads), dtype=float).reshape(grid_desc.size, folds)

    mean = losses.mean(axis=1)
    se = losses.std(axis=1, ddof=1) / math.sqrt(folds)
    i_min = int(np.argmin(mean))
    cutoff = mean[i_min] + se[i_min]
    i_1se = int(np.flatnonzero(mean <= cutoff)[0])
    return CvResult(
        lambda_grid=_readonly(grid_desc, float),
        mean_cv_loss=_readonly(mean, float),
        se_cv_loss=_readonly(se, float),
        lambda_min=float(grid_desc[i_min]),
        lambda_1se=float(grid_desc[i_1se]),
        fold_assignment=_readonly(fold_id, np.int64),
    )


def select_lepski_bandwidth(
    fits: Sequence[LepskiFit], n: int, d: int, s: int, c_sel: float
) -> Optional[float]:
    """Largest bandwidth whose fit stays within the deviation bound of all
    fits at smaller (or equal) bandwidths.

    The bound for comparator delta' is c_sel * sqrt(s log(d) / (n delta')).
    Failed fits are ignored.  Returns None when no successful fit is
    feasible, which (since a fit is always within bound of itself when
    c_sel >= 0) only happens when every fit failed.
    """
    ok = [f for f in fits if f.status == "ok"]
    log_d = math.log(d)
    for cand in sorted(ok, key=lambda f: -f.grid_value):
        feasible = True
        for other in ok:
            if other.grid_value > cand.grid_value:
                continue
            dist = float(np.linalg.norm(cand.theta - other.theta))
            bound = c_sel * math.sqrt(s * log_d / (n * other.grid_value))
            if dist > bound:
                feasible = False
                break
        if feasible:
            return float(cand.grid_value)
    return None


def select_lepski_sparsity(
    fits: Sequence[LepskiFit], n: int, d: int, beta: float, c_bar: float
) -> Optional[int]:
    """Smallest sparsity level whose fit stays within the deviation bound
    of all fits at larger (or equal) levels.

    The bound for comparator s' is c_bar * (s' log(d) / n)**(beta / (2 beta + 1)).
    Failed fits are ignored; None means every fit failed.
    """
    ok = [f for f in fits if f.status == "ok"]
    log_d = math.log(d)
    expo = beta / (2.0 * beta + 1.0)
    for cand in sorted(ok, key=lambda f: f.grid_value):
        feasible = True
        for other in ok:
            if other.grid_value < cand.grid_value:
                continue
            dist = float(np.linalg.norm(cand.theta - other.theta))
            bound = c_bar * (other.grid_value * log_d / n) ** expo
            if dist > bound:
                feasible = False
                break
        if feasible:
            return int(cand.grid_value)
    return None


def _fit_grid_point(
    data: Dataset,
    kernel: Kernel,
    scheme: WeightScheme,
    base_cfg: PathConfig,
    grid_value: float,
    delta: float,
    lam: float,
) -> LepskiFit:
    try:
        spec = SmoothedRiskSpec(
            data=data, loss=SurrogateLoss(kernel=kernel, bandwidth=delta), weights=scheme
        )
        path = path_following(spec, replace(base_cfg, lambda_tgt=lam))
    except Exception as exc:  # noqa: BLE001 - any failure excludes the point
        return LepskiFit(
            grid_value=grid_value, delta=delta, lam=lam, theta=None,
            status="failed", detail=str(exc),
        )
    theta = path.theta_final.copy()
    theta.setflags(write=False)
    return LepskiFit(grid_value=grid_value, delta=delta, lam=lam, theta=theta, status="ok")


def _warn_failed(fits: Sequence[LepskiFit], label: str) -> None:
    for fit in fits:
        if fit.status == "failed":
            warnings.warn(
                f"{label} {fit.grid_value:g}: fit failed and is excluded from "
                f"selection ({fit.detail})",
                stacklevel=3,
            )


def lepski_bandwidth(
    data: Dataset,
    kernel: Kernel,
    s: int,
    c_sel: float = 2.0,
    c_lambda: float = 1.0,
    path_cfg: Optional[PathConfig] = None,
    weights: Optional[WeightScheme] = None,
    threads: int = 1,
) -> Tuple[float, np.ndarray, List[LepskiFit]]:
    """Adaptive bandwidth selection over the dyadic grid {1, ..., 2**-m}.

    Fits one path per grid bandwidth with penalty
    c_lambda * sqrt(log(d) / (n delta)), then keeps the largest bandwidth
    consistent with all smaller ones (``select_lepski_bandwidth``).  The
    selection step reuses the stored fits and computes only pairwise
    distances.  If every fit failed, falls back to delta = 1/n with a
    fresh fit, appended to the returned list.

    Returns ``(delta_hat, theta, per_delta_fits)``.
    """
    s = _positive_int(s, "s")
    c_sel = float(c_sel)
    if not math.isfinite(c_sel) or c_sel < 0.0:
        raise InputError(f"c_sel must be a nonnegative real, got {c_sel!r}")
    c_lambda = float(c_lambda)
    if not math.isfinite(c_lambda) or c_lambda <= 0.0:
        raise InputError(f"c_lambda must be a positive real, got {c_lambda!r}")
    if data.d < 2:
        raise InputError("d must be at least 2 so that log d is positive")

    n, d = data.n, data.d
    grid = build_lepski_grid("bandwidth", n)
    scheme = weights if weights is not None else WeightScheme.unit()
    base = path_cfg if path_cfg is not None else PathConfig(lambda_tgt=1.0)

    def fit_one(delta: float) -> LepskiFit:
        lam = target_lambda(n, d, delta, c_lambda)
        return _fit_grid_point(data, kernel, scheme, base, delta, delta, lam)

    fits = run_tasks(fit_one, grid.values, threads)
    _warn_failed(fits, "bandwidth")

    delta_hat = select_lepski_bandwidth(fits, n=n, d=d, s=s, c_sel=c_sel)
    if delta_hat is None:
        delta_hat = 1.0 / n
        warnings.warn(
            f"no feasible bandwidth on the grid; falling back to 1/n = {delta_hat:g}",
            stacklevel=2,
        )
        lam = target_lambda(n, d, delta_hat, c_lambda)
        spec = SmoothedRiskSpec(
            data=data, loss=SurrogateLoss(kernel=kernel, bandwidth=delta_hat), weights=scheme
        )
        path = path_following(spec, replace(base, lambda_tgt=lam))
        theta = path.theta_final.copy()
        theta.setflags(write=False)
        fits = list(fits) + [
            LepskiFit(grid_value=delta_hat, delta=delta_hat, lam=lam, theta=theta,
                      status="ok", detail="fallback fit at 1/n")
        ]
    else:
        theta = next(f.theta for f in fits if f.status == "ok" and f.grid_value == delta_hat)
    return float(delta_hat), theta, list(fits)


def lepski_sparsity(
    data: Dataset,
    kernel: Kernel,
    beta: float,
    c_delta: float = 1.0,
    c_lambda: float = 1.0,
    c_bar: float = 2.0,
    path_cfg: Optional[PathConfig] = None,
    weights: Optional[WeightScheme] = None,
    threads: int = 1,
) -> Tuple[int, np.ndarray, List[LepskiFit]]:
    """Adaptive sparsity selection over the dyadic grid {1, 2, ..., 2**m}.

    Each level s gets the closed-form bandwidth
    delta_s = c_delta * (s log(d) / n)**(1 / (2 beta + 1)) and penalty
    c_lambda * sqrt(log(d) / (n delta_s)); the smallest level consistent
    with all larger ones wins (``select_lepski_sparsity``).  Requires
    c_delta**(beta + 1/2) <= c_lambda.  If every fit failed, falls back to
    the largest grid level with a fresh fit, appended to the returned list.

    Returns ``(s_hat, theta, per_s_fits)``.
    """
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise InputError(f"beta must be a positive real, got {beta!r}")
    c_delta = float(c_delta)
    if not math.isfinite(c_delta) or c_delta <= 0.0:
        raise InputError(f"c_delta must be a positive real, got {c_delta!r}")
    c_lambda = float(c_lambda)
    if not math.isfinite(c_lambda) or c_lambda <= 0.0:
        raise InputError(f"c_lambda must be a positive real, got {c_lambda!r}")
    c_bar = float(c_bar)
    if not math.isfinite(c_bar) or c_bar < 0.0:
        raise InputError(f"c_bar must be a nonnegative real, got {c_bar!r}")
    if c_delta ** (beta + 0.5) > c_lambda:
        raise InputError(
            "c_delta**(beta + 1/2) must not exceed c_lambda "
            f"({c_delta ** (beta + 0.5):g} > {c_lambda:g})"
        )
    if data.d < 2:
        raise InputError("d must be at least 2 so that log d is positive")
    if kernel.order < math.floor(beta):
        warnings.warn(
            f"kernel order {kernel.order} is below floor(beta) = {math.floor(beta)}; "
            "the adaptation guarantee assumes a matching higher-order kernel",
            stacklevel=2,
        )

    n, d = data.n, data.d
    grid = build_lepski_grid("sparsity", d)
    scheme = weights if weights is not None else WeightScheme.unit()
    base = path_cfg if path_cfg is not None else PathConfig(lambda_tgt=1.0)

    def schedule_for(level: int) -> Tuple[float, float]:
        sched = TuningSchedule(n=n, d=d, s=level, beta=beta, c_delta=c_delta, c_lambda=c_lambda)
        delta = theoretical_bandwidth(sched)
        return delta, target_lambda(n, d, delta, c_lambda)

    def fit_one(level: int) -> LepskiFit:
        delta, lam = schedule_for(level)
        return _fit_grid_point(data, kernel, scheme, base, level, delta, lam)

    fits = run_tasks(fit_one, grid.values, threads)
    _warn_failed(fits, "sparsity level")

    s_hat = select_lepski_sparsity(fits, n=n, d=d, beta=beta, c_bar=c_bar)
    if s_hat is None:
        s_hat = int(grid.values[-1])
        warnings.warn(
            f"no feasible sparsity level on the grid; falling back to 2**m = {s_hat}",
            stacklevel=2,
        )
        delta, lam = schedule_for(s_hat)
        spec = SmoothedRiskSpec(
            data=data, loss=SurrogateLoss(kernel=kernel, bandwidth=delta), weights=scheme
        )
        path = path_following(spec, replace(base, lambda_tgt=lam))
        theta = path.theta_final.copy()
        theta.setflags(write=False)
        fits = list(fits) + [
            LepskiFit(grid_value=s_hat, delta=delta, lam=lam, theta=theta,
                      status="ok", detail="fallback fit at the largest level")
        ]
    else:
        theta = next(f.theta for f in fits if f.status == "ok" and f.grid_value == s_hat)
    return int(s_hat), theta, list(fits)
