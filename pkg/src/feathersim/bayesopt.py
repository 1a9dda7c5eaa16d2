"""Sequential Gaussian-process optimization over the log-ratio controller space.

The surrogate is an anisotropic squared-exponential GP with a constant prior
mean equal to the mean of the observations. Proposals maximize a blend of
expected improvement and posterior standard deviation; ``exploration_ratio``
sets the weight of the standard-deviation term.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, optimize as sopt
from scipy.stats import norm, qmc

log = logging.getLogger(__name__)

LOG_02 = math.log(0.2)
LOG_5 = math.log(5.0)


class GPError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    bounds: np.ndarray  # shape (d, 2)
    period_s: float = 1.5

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must have shape (d, 2)")
        if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError(f"bounds must be finite with lower < upper, got {b.tolist()}")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def default(cls, period_s: float = 1.5) -> "SearchSpace":
        return cls(np.array([[LOG_02, LOG_5]] * 3), period_s)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[:, 1]

    def scale(self, unit: np.ndarray) -> np.ndarray:
        return self.lower + unit * (self.upper - self.lower)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def to_dict(self) -> dict:
        return {"bounds": self.bounds.tolist(), "period_s": self.period_s}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        unknown = set(d) - {"bounds", "period_s"}
        if unknown:
            raise ValueError(f"unknown search space keys: {sorted(unknown)}")
        if "bounds" not in d:
            return cls.default(d.get("period_s", 1.5))
        return cls(np.asarray(d["bounds"], dtype=float), d.get("period_s", 1.5))


@dataclass(frozen=True)
class Hyperparams:
    signal_var: float = 1.0
    length_scales: tuple[float, ...] = (1.0, 1.0, 1.0)
    noise_var: float = 1e-4

    def __post_init__(self):
        vals = (self.signal_var, self.noise_var, *self.length_scales)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ValueError(f"hyperparameters must be positive, got {vals}")
        object.__setattr__(self, "length_scales", tuple(float(v) for v in self.length_scales))

    def to_vector(self) -> np.ndarray:
        return np.log([self.signal_var, *self.length_scales, self.noise_var])

    @classmethod
    def from_vector(cls, v) -> "Hyperparams":
        e = np.exp(np.asarray(v, dtype=float))
        return cls(float(e[0]), tuple(e[1:-1]), float(e[-1]))

    def to_dict(self) -> dict:
        return {
            "signal_var": self.signal_var,
            "length_scales": list(self.length_scales),
            "noise_var": self.noise_var,
        }


@dataclass
class Observation:
    x: np.ndarray
    y: float  # internal (maximization) units
    trace_ref: str | None = None
    failed: bool = False


@dataclass
class OptimizationState:
    observations: list[Observation] = field(default_factory=list)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    rng_seed: int = 0
    jitter: float = 1e-8
    direction: str = "max"
    log: list[dict] = field(default_factory=list)

    @property
    def X(self) -> np.ndarray:
        if not self.observations:
            return np.zeros((0, len(self.hyperparams.length_scales)))
        return np.array([o.x for o in self.observations], dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.array([o.y for o in self.observations], dtype=float)

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "max" else -1.0

    @property
    def incumbent(self) -> tuple[np.ndarray, float]:
        """Best point and its objective value, in the caller's units."""
        if not self.observations:
            raise ValueError("no observations")
        k = int(np.argmax(self.y))
        return self.observations[k].x.copy(), self.sign * self.observations[k].y


def se_kernel(A: np.ndarray, B: np.ndarray, hp: Hyperparams) -> np.ndarray:
    ls = np.asarray(hp.length_scales)
    d = (A[:, None, :] - B[None, :, :]) / ls
    return hp.signal_var * np.exp(-0.5 * np.sum(d * d, axis=-1))


class _Posterior:
    """Cached Cholesky factorization for repeated queries."""

    def __init__(self, X: np.ndarray, y: np.ndarray, hp: Hyperparams, jitter: float):
        self.X = X
        self.hp = hp
        self.mean0 = float(np.mean(y)) if len(y) else 0.0
        if len(y) == 0:
            self.chol = None
            return
        K = se_kernel(X, X, hp) + (hp.noise_var + jitter) * np.eye(len(X))
        try:
            self.chol = linalg.cho_factor(K, lower=True, check_finite=True)
        except linalg.LinAlgError:
            raise GPError(
                f"covariance matrix is not positive definite (jitter={jitter:g}); "
                "increase the jitter"
            ) from None
        self.alpha = linalg.cho_solve(self.chol, y - self.mean0)

    def __call__(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Xq = np.atleast_2d(Xq)
        if self.chol is None:
            return np.full(len(Xq), self.mean0), np.full(len(Xq), self.hp.signal_var)
        Ks = se_kernel(Xq, self.X, self.hp)
        mean = self.mean0 + Ks @ self.alpha
        v = linalg.solve_triangular(self.chol[0], Ks.T, lower=True)
        var = self.hp.signal_var - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def with_grad(self, x: np.ndarray):
        """Mean, sd and their gradients at a single point."""
        ls2 = np.asarray(self.hp.length_scales) ** 2
        if self.chol is None:
            sd = math.sqrt(self.hp.signal_var)
            return self.mean0, sd, np.zeros_like(x), np.zeros_like(x)
        ks = se_kernel(x[None, :], self.X, self.hp)[0]
        dk = -ks[:, None] * (x[None, :] - self.X) / ls2  # (n, d)
        mean = self.mean0 + ks @ self.alpha
        dmean = self.alpha @ dk
        kinv_k = linalg.cho_solve(self.chol, ks)
        var = self.hp.signal_var - ks @ kinv_k
        if var <= 1e-300:
            return mean, 0.0, dmean, np.zeros_like(x)
        sd = math.sqrt(var)
        dsd = -(kinv_k @ dk) / sd
        return mean, sd, dmean, dsd


def gp_posterior(state: OptimizationState, x_query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance at ``x_query`` (internal units)."""
    return _Posterior(state.X, state.y, state.hyperparams, state.jitter)(x_query)


def log_marginal_likelihood(X, y, hp: Hyperparams, jitter: float = 1e-8) -> float:
    n = len(y)
    K = se_kernel(X, X, hp) + (hp.noise_var + jitter) * np.eye(n)
    try:
        c, low = linalg.cho_factor(K, lower=True)
    except linalg.LinAlgError:
        return -math.inf
    r = y - np.mean(y)
    a = linalg.cho_solve((c, low), r)
    return float(-0.5 * r @ a - np.sum(np.log(np.diag(c))) - 0.5 * n * math.log(2 * math.pi))


def _hyper_bounds(y: np.ndarray, dim: int) -> np.ndarray:
    var = max(float(np.var(y)), 1e-12)
    return np.log(np.array(
        [[1e-3 * var, 1e2 * var]]
        + [[0.05, 20.0]] * dim
        + [[1e-8 * var, 1.0 * var]]
    ))


def refit_hyperparams(
    state: OptimizationState, n_starts: int = 6, rng: np.random.Generator | None = None
) -> OptimizationState:
    """Maximize the log marginal likelihood; never returns a worse fit than the current one."""
    if len(state.observations) < 4:
        raise ValueError(f"need at least 4 observations to refit, have {len(state.observations)}")
    X, y = state.X, state.y
    rng = rng if rng is not None else np.random.default_rng(state.rng_seed)
    bounds = _hyper_bounds(y, X.shape[1])
    prev = state.hyperparams
    best_v = prev.to_vector()
    best_lml = log_marginal_likelihood(X, y, prev, state.jitter)

    def nll(v):
        v = np.clip(v, bounds[:, 0], bounds[:, 1])
        val = log_marginal_likelihood(X, y, Hyperparams.from_vector(v), state.jitter)
        return 1e300 if not math.isfinite(val) else -val

    starts = [np.clip(best_v, bounds[:, 0], bounds[:, 1])]
    for _ in range(n_starts - 1):
        starts.append(rng.uniform(bounds[:, 0], bounds[:, 1]))
    improved = False
    for s in starts:
        try:
            res = sopt.minimize(nll, s, method="Nelder-Mead", bounds=bounds,
                                options={"maxiter": 400, "xatol": 1e-4, "fatol": 1e-8})
        except (ValueError, np.linalg.LinAlgError):
            continue
        v = np.clip(res.x, bounds[:, 0], bounds[:, 1])
        val = -nll(v)
        if math.isfinite(val) and val > best_lml:
            best_lml, best_v, improved = val, v, True
    if not improved and not math.isfinite(best_lml):
        log.warning("hyperparameter refit failed from every start; keeping previous values")
    if improved:
        state.hyperparams = Hyperparams.from_vector(best_v)
    return state


def expected_improvement(mean, var, best: float) -> np.ndarray:
    sd = np.sqrt(var)
    gain = mean - best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, gain / sd, 0.0)
        ei = np.where(sd > 0, gain * norm.cdf(z) + sd * norm.pdf(z), np.maximum(gain, 0.0))
    return np.maximum(ei, 0.0)


def _start_points(space: SearchSpace, n: int, seed: int) -> np.ndarray:
    sob = qmc.Sobol(space.dim, scramble=True, seed=seed)
    return space.scale(sob.random(n))


def acquisition_function(
    state: OptimizationState, exploration_ratio: float, reference: np.ndarray
) -> Callable[[np.ndarray], np.ndarray]:
    """Blend of EI and posterior sd with scales fixed from ``reference`` points.

    The sd term is rescaled so its maximum over ``reference`` matches the
    maximum EI there, keeping both terms in the same units.
    """
    if not 0.0 <= exploration_ratio <= 1.0:
        raise ValueError(f"exploration_ratio must be in [0, 1], got {exploration_ratio}")
    post = _Posterior(state.X, state.y, state.hyperparams, state.jitter)
    best = float(np.max(state.y)) if len(state.y) else 0.0
    mu, var = post(reference)
    ei_ref = float(np.max(expected_improvement(mu, var, best)))
    sd_ref = float(np.max(np.sqrt(var)))
    eps = exploration_ratio
    if ei_ref <= 1e-300 or sd_ref <= 1e-300:
        # degenerate posterior: fall back to pure uncertainty sampling
        w_ei, w_sd = 0.0, 1.0
    else:
        w_ei, w_sd = 1.0 - eps, eps * ei_ref / sd_ref

    def alpha(X):
        m, v = post(X)
        ei = expected_improvement(m, v, best) if w_ei else 0.0
        return w_ei * ei + w_sd * np.sqrt(v)

    def value_and_grad(x):
        m, sd, dm, dsd = post.with_grad(np.asarray(x, dtype=float))
        if sd > 0:
            z = (m - best) / sd
            ei = (m - best) * norm.cdf(z) + sd * norm.pdf(z)
            dei = dm * norm.cdf(z) + dsd * norm.pdf(z)
        else:
            ei = max(m - best, 0.0)
            dei = dm if m > best else np.zeros_like(dm)
        return w_ei * ei + w_sd * sd, w_ei * dei + w_sd * dsd

    alpha.value_and_grad = value_and_grad
    return alpha


def acquire(
    state: OptimizationState,
    exploration_ratio: float,
    space: SearchSpace | None = None,
    n_starts: int = 64,
    seed: int | None = None,
) -> np.ndarray:
    """Next point to evaluate: multi-start L-BFGS-B on the blended acquisition."""
    space = space or SearchSpace.default()
    seed = state.rng_seed * 7919 + len(state.observations) if seed is None else seed
    starts = _start_points(space, n_starts, seed)
    alpha = acquisition_function(state, exploration_ratio, starts)
    bounds = list(map(tuple, space.bounds))

    def neg(x):
        v, g = alpha.value_and_grad(x)
        return -v, -g

    vals = alpha(starts)
    best_x = starts[int(np.argmax(vals))]
    best_val = float(np.max(vals))
    for s in starts:
        res = sopt.minimize(neg, s, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"ftol": 1e-12, "gtol": 1e-9, "maxiter": 200})
        x = np.clip(res.x, space.lower, space.upper)
        v = float(alpha(x[None, :])[0])
        if v > best_val:
            best_val, best_x = v, x
    return np.clip(best_x, space.lower, space.upper)


def latin_hypercube(space: SearchSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    lhs = qmc.LatinHypercube(space.dim, seed=rng)
    return space.scale(lhs.random(n))


def optimize(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace | None = None,
    budget: int = 30,
    seed: int = 0,
    direction: str = "max",
    exploration_ratio: float = 0.6,
    n_initial: int = 5,
    noise_std: float = 0.0,
    callback: Callable[[dict], None] | None = None,
) -> OptimizationState:
    """Latin-hypercube initial design followed by GP-guided proposals.

    Failed evaluations (exceptions or non-finite values) are recorded with a
    penalty of the worst observed value minus three standard deviations.
    """
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    if budget < n_initial:
        raise ValueError(f"budget {budget} is smaller than the initial design ({n_initial})")
    space = space or SearchSpace.default()
    rng = np.random.default_rng(seed)
    state = OptimizationState(rng_seed=seed, direction=direction,
                              hyperparams=Hyperparams(length_scales=(1.0,) * space.dim))
    sign = state.sign
    pending: list[int] = []

    def evaluate(x: np.ndarray) -> tuple[float | None, bool]:
        try:
            val = float(objective(x))
        except Exception as exc:  # noqa: BLE001 - any evaluation failure is penalized
            log.warning("objective failed at x=%s: %s", np.round(x, 4).tolist(), exc)
            return None, True
        if not math.isfinite(val):
            log.warning("objective returned non-finite value at x=%s", np.round(x, 4).tolist())
            return None, True
        if noise_std > 0:
            val += float(rng.normal(0.0, noise_std))
        return sign * val, False

    def fill_penalties():
        good = [o.y for o in state.observations if not o.failed]
        if not good:
            return
        penalty = min(good) - 3.0 * float(np.std(good))
        for k in pending:
            state.observations[k].y = penalty
        pending.clear()

    def record(it: int, x: np.ndarray, y: float | None, failed: bool):
        state.observations.append(Observation(np.asarray(x, dtype=float), y if y is not None else math.nan,
                                              failed=failed))
        if failed:
            pending.append(len(state.observations) - 1)
        fill_penalties()
        ys = [o.y for o in state.observations if math.isfinite(o.y)]
        entry = {
            "iter": it,
            "x": [float(v) for v in x],
            "y": None if y is None else sign * y,
            "incumbent_y": None if not ys else sign * max(ys),
            "hyperparams": state.hyperparams.to_dict(),
            "failed": failed,
        }
        state.log.append(entry)
        if callback is not None:
            callback(entry)

    for it, x in enumerate(latin_hypercube(space, n_initial, rng)):
        y, failed = evaluate(x)
        record(it, x, y, failed)

    for it in range(n_initial, budget):
        if pending:
            # no successful evaluation yet; keep sampling uniformly
            x = space.scale(rng.random(space.dim))
        else:
            if len(state.observations) >= 4:
                refit_hyperparams(state, rng=rng)
            x = acquire(state, exploration_ratio, space, seed=int(rng.integers(2**31)))
        y, failed = evaluate(x)
        record(it, x, y, failed)
    return state
