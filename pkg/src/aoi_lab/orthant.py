"""Gaussian tail (orthant) probabilities for stationary Gauss-Markov chains.

Computes Pr(Z_0 > a_0, ..., Z_{n-1} > a_{n-1}) for a zero-mean,
unit-variance stationary AR(1) chain with one-step correlation ``rho`` by
propagating the conditional density of the current state through the
transition kernel N(rho*u, 1 - rho^2), one truncated quadrature per stage.
Closed forms cover the independent and fully-frozen limits, and a plain
Monte-Carlo estimator over arbitrary stationary covariances serves as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erfc

from .errors import EvaluationError, QuadratureError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

# Below this running probability the chain is treated as extinct.
_TINY_PROB = 1e-300

# Minimum quadrature nodes assigned to any panel of a split grid.
_MIN_PANEL_NODES = 12


def std_normal_tail(x):
    """Standard normal tail Phi_bar(x) = Pr(Z > x), accurate to ~1e-16.

    Accepts scalars or arrays; -inf maps to 1 and +inf to 0.
    """
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def _std_normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization controls for the stagewise tail recursion.

    m is the number of nodes per stage, L the truncation half-width in
    standard-normal units.
    """

    m: int = 400
    L: float = 8.0
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.m < 16:
            raise ValueError(f"m must be >= 16, got {self.m}")
        if not self.L >= 4:
            raise ValueError(f"L must be >= 4, got {self.L}")
        if self.rule not in ("gauss-legendre", "trapezoid"):
            raise ValueError(f"unknown rule {self.rule!r}")


_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _gl_cache:
        _gl_cache[n] = np.polynomial.legendre.leggauss(n)
    return _gl_cache[n]


def _panel_nodes(lo: float, hi: float, n: int, rule: str):
    if rule == "gauss-legendre":
        x, w = _gauss_legendre(n)
        half = 0.5 * (hi - lo)
        return lo + half * (x + 1.0), half * w
    # Trapezoid: uniform nodes including both endpoints.
    nodes = np.linspace(lo, hi, n)
    h = (hi - lo) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return nodes, w


def _split_grid(breaks: Sequence[float], m: int, rule: str):
    """Composite quadrature grid over [breaks[0], breaks[-1]].

    Nodes are allocated to panels proportionally to panel length, with a
    floor so that thin panels (used to isolate near-discontinuities) stay
    resolved.
    """
    breaks = np.asarray(breaks, dtype=float)
    lengths = np.diff(breaks)
    counts = np.maximum(
        _MIN_PANEL_NODES, np.rint(m * lengths / lengths.sum()).astype(int)
    )
    nodes_parts, weight_parts = [], []
    for lo, hi, n in zip(breaks[:-1], breaks[1:], counts):
        nodes, w = _panel_nodes(lo, hi, int(n), rule)
        nodes_parts.append(nodes)
        weight_parts.append(w)
    return np.concatenate(nodes_parts), np.concatenate(weight_parts)


@dataclass(frozen=True)
class ConditionalTail:
    """One stage's conditional law on a truncated grid.

    density integrates to 1 over the grid; tail[j] = integral of the
    density from nodes[j] to the top of the grid.
    """

    nodes: np.ndarray
    density: np.ndarray
    tail: np.ndarray

    def __post_init__(self):
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")
        if np.any(np.diff(self.tail) > 1e-12):
            raise ValueError("tail must be non-increasing")


class OuChain:
    """Stagewise evaluation of Pr(Z_0 > a_0, ..., Z_{n-1} > a_{n-1}).

    Each call to extend() conditions on one more event {Z_n > a_n} and
    returns the updated joint probability.  The conditional density of the
    newest state given all prior events is carried on a truncated,
    panel-split quadrature grid; thresholds of -inf are clamped to -L and
    contribute a factor that integrates to 1.
    """

    def __init__(self, rho: float, spec: QuadratureSpec | None = None):
        if not (np.isfinite(rho) and 0.0 < rho < 1.0):
            raise ValueError(f"rho must lie strictly in (0, 1), got {rho}")
        self.rho = float(rho)
        self.sd = float(np.sqrt(1.0 - rho * rho))
        self.spec = spec if spec is not None else QuadratureSpec()
        self.prob = 1.0
        self.n = 0
        self._nodes: np.ndarray | None = None
        self._weights: np.ndarray | None = None
        self._density: np.ndarray | None = None
        self._lo: float | None = None
        # The u-form stage update resolves the transition kernel on the
        # previous grid only while its width sd/rho exceeds several node
        # spacings; below that we integrate over the innovation instead.
        self._kernel_width_floor = 8.0 * (2.0 * self.spec.L / self.spec.m)

    def extend(self, a: float) -> float:
        spec = self.spec
        if np.isnan(a):
            raise ValueError("threshold must not be NaN")
        if a > spec.L:
            raise QuadratureError(
                f"threshold {a} exceeds truncation half-width L={spec.L}; "
                "enlarge L"
            )
        lo_new = max(float(a), -spec.L)
        self.n += 1
        if self.prob == 0.0:
            return 0.0
        if self.n == 1:
            tail = float(std_normal_tail(a))
            self.prob = tail
            if tail < _TINY_PROB:
                self.prob = 0.0
                return 0.0
            nodes, weights = _split_grid([lo_new, spec.L], spec.m, spec.rule)
            density = _std_normal_pdf(nodes) / tail
        else:
            breaks = [lo_new]
            edge = self.rho * self._lo
            if lo_new + 1e-9 < edge < spec.L - 1e-9:
                breaks.append(edge)
            breaks.append(spec.L)
            nodes, weights = _split_grid(breaks, spec.m, spec.rule)
            raw = self._propagate(nodes)
            tail = float(weights @ raw)
            tail = min(max(tail, 0.0), 1.0)
            self.prob *= tail
            if self.prob < _TINY_PROB or tail == 0.0:
                self.prob = 0.0
                return 0.0
            density = raw / tail
        self._nodes, self._weights, self._density = nodes, weights, density
        self._lo = lo_new
        return self.prob

    def _propagate(self, targets: np.ndarray) -> np.ndarray:
        """Density of the next state at the target nodes, given the events
        accumulated so far (normalized over the whole real line)."""
        rho, sd = self.rho, self.sd
        if sd / rho >= self._kernel_width_floor:
            # Direct integration over the previous state u.
            k = _std_normal_pdf((targets[:, None] - rho * self._nodes) / sd) / sd
            return k @ (self._weights * self._density)
        # Near-frozen regime: integrate over the innovation v with the
        # previous density interpolated, so the kernel never gets narrower
        # than the grid can resolve.  u = (y - sd*v)/rho must stay within
        # the previous support [lo, L].
        spline = CubicSpline(self._nodes, self._density)
        spec = self.spec
        v_hi = np.minimum(spec.L, (targets - rho * self._lo) / sd)
        v_lo = np.maximum(-spec.L, (targets - rho * spec.L) / sd)
        span = np.maximum(v_hi - v_lo, 0.0)
        x, w = _gauss_legendre(min(spec.m, 256))
        half = 0.5 * span[:, None]
        v = v_lo[:, None] + half * (x + 1.0)
        u = np.clip((targets[:, None] - sd * v) / rho, self._lo, spec.L)
        f = np.clip(spline(u), 0.0, None)
        raw = (half * w) * _std_normal_pdf(v) * f
        return raw.sum(axis=1) / rho

    def conditional_tail(self, n_resample: int | None = None) -> ConditionalTail:
        """Snapshot of the current stage as a ConditionalTail on a uniform
        grid (density renormalized; tail by cumulative trapezoid)."""
        if self._nodes is None:
            raise EvaluationError("chain has no stage yet")
        n = n_resample if n_resample is not None else 4 * self.spec.m
        grid = np.linspace(self._lo, self.spec.L, n)
        dens = np.clip(CubicSpline(self._nodes, self._density)(grid), 0.0, None)
        h = grid[1] - grid[0]
        cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (dens[1:] + dens[:-1]))])
        total = cum[-1]
        if total <= 0.0:
            raise EvaluationError("degenerate stage density")
        return ConditionalTail(
            nodes=grid, density=dens / total, tail=(total - cum) / total
        )


def ou_orthant(a, rho: float, spec: QuadratureSpec | None = None) -> float:
    """Pr(Z_i > a_i for all i) for the stationary AR(1) chain with one-step
    correlation rho in (0, 1).  Entries of -inf are vacuous."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    chain = OuChain(rho, spec)
    p = 1.0
    for ai in a:
        p = chain.extend(float(ai))
    return p


def orthant_iid(a) -> float:
    """Product-form tail probability for independent standard normals."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    return float(np.prod(std_normal_tail(a)))


def orthant_frozen(a) -> float:
    """Tail probability when all coordinates are the same normal draw."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    return float(std_normal_tail(np.max(a)))


@dataclass
class CovarianceSpec:
    """Stationary covariance on a finite set of sample times.

    autocov must satisfy autocov(0) = 1 (unit-variance process).
    """

    times: np.ndarray
    autocov: Callable[[float], float]
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be a non-empty increasing 1-D array")
        self.times = t
        lags = np.abs(t[:, None] - t[None, :])
        self.matrix = np.vectorize(self.autocov)(lags).astype(float)
        if not np.allclose(np.diag(self.matrix), 1.0, atol=1e-12):
            raise ValueError("autocov(0) must equal 1")


def ou_covariance(rho: float, n: int, tau: float = 1.0) -> CovarianceSpec:
    """Covariance of n consecutive AR(1) samples with lag-tau correlation rho."""
    kappa = -np.log(rho) / tau
    return CovarianceSpec(
        times=np.arange(n) * tau,
        autocov=lambda t: float(np.exp(-kappa * abs(t))),
    )


def mvn_orthant_mc(
    cov: CovarianceSpec,
    a,
    n_samples: int,
    seed: int,
    chunk: int = 1 << 17,
) -> tuple[float, float]:
    """Monte-Carlo estimate of Pr(Z > a componentwise) for Z ~ N(0, cov).

    Returns (estimate, binomial standard error).  Deterministic given the
    seed; the covariance may be singular (tolerance-clipped eigenfactor).
    """
    a = np.asarray(a, dtype=float)
    sigma = cov.matrix
    if a.shape != (sigma.shape[0],):
        raise ValueError("threshold vector length must match covariance size")
    w, v = np.linalg.eigh(sigma)
    if w.min() < -1e-8 * max(w.max(), 1.0):
        raise EvaluationError(
            f"covariance matrix is indefinite (min eigenvalue {w.min():.3e})"
        )
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    remaining = int(n_samples)
    while remaining > 0:
        k = min(chunk, remaining)
        z = rng.standard_normal((k, a.size)) @ factor.T
        hits += int(np.all(z > a, axis=1).sum())
        remaining -= k
    p = hits / n_samples
    return p, float(np.sqrt(p * (1.0 - p) / n_samples))
