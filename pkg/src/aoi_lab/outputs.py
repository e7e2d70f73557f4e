"""Exact CCDF grids and derived reports (heat maps, time averages,
percentiles, dominance), plus CSV/JSON serialization.

The exact engine evaluates Pr(A_t > x) as a Gaussian joint-tail
probability of the threshold vector g_inverse(j*tau + phi), j = 0..n-1.
By stationarity (and time-reversibility of the Gauss-Markov chain) that
probability depends on (t, x) only through the phase phi_t and the block
length n, so grid cells are grouped into phase classes and each class is
served by a single chain sweep whose prefixes yield every block length at
once.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import CcdfGrid, decompose_time
from .errors import EvaluationError, QuadratureError
from .links import DelayModel, g_inverse
from .orthant import (
    OuChain,
    QuadratureSpec,
    orthant_frozen,
    orthant_iid,
    ou_orthant,
    std_normal_tail,
)

# Joint tails are bounded by the smallest single-coordinate tail; once a
# threshold's own tail drops below this, the block probability is zero at
# double precision and no quadrature is attempted.
_TAIL_FLOOR = 1e-15

# Number of decimals of phi/tau used to identify a phase class.
_PHASE_DECIMALS = 10


def _phase_key(phi: float, tau: float) -> float:
    return round(phi / tau, _PHASE_DECIMALS)


def ccdf_profile(
    model: DelayModel,
    phi: float,
    n_max: int,
    spec: QuadratureSpec,
) -> np.ndarray:
    """Plateau values Q[0..n_max] of the AoI CCDF at phase phi.

    Q[n] is the joint probability that the n most recent packets are all
    late, i.e. the Gaussian tail over thresholds g_inverse(j*tau + phi),
    j = 0..n-1; Q[0] = 1.  Computed in one chain sweep (thresholds in
    non-decreasing order, valid by time-reversibility), so every prefix
    length is a byproduct.
    """
    tau = model.schedule.tau
    args = np.arange(n_max) * tau + phi
    a = g_inverse(model.link, args) if n_max > 0 else np.empty(0)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    q = np.ones(n_max + 1)
    kind = model.correlation.kind
    if kind == "iid":
        q[1:] = np.cumprod(std_normal_tail(a))
        return q
    if kind == "frozen":
        # Thresholds are non-decreasing, so the running max is the last one.
        q[1:] = std_normal_tail(np.maximum.accumulate(a))
        return q
    rho = model.step_correlation()
    # Cut the sweep where a single coordinate already forces zero mass.
    dead = std_normal_tail(a) < _TAIL_FLOOR
    n_alive = int(np.argmax(dead)) if dead.any() else n_max
    if n_alive > 0 and np.max(a[:n_alive]) > spec.L:
        grow = float(np.max(a[:n_alive])) + 4.0
        spec = QuadratureSpec(
            m=int(math.ceil(spec.m * grow / spec.L)), L=grow, rule=spec.rule
        )
    chain = OuChain(rho, spec)
    for j in range(n_alive):
        q[j + 1] = chain.extend(float(a[j]))
    q[n_alive + 1 :] = 0.0
    return q


def exact_oracle(model: DelayModel, spec: QuadratureSpec | None = None):
    """JointTailOracle over delay thresholds for an exact Gaussian model."""
    spec = spec if spec is not None else QuadratureSpec()

    def oracle(start: int, b: Sequence[float]) -> float:
        a = np.atleast_1d(np.asarray(g_inverse(model.link, np.asarray(b)), dtype=float))
        if a.size == 0:
            return 1.0
        kind = model.correlation.kind
        if kind == "iid":
            return orthant_iid(a)
        if kind == "frozen":
            return orthant_frozen(a)
        if np.min(std_normal_tail(a)) < _TAIL_FLOOR:
            return 0.0
        # Reversed order gives non-decreasing thresholds for the usual
        # Theorem-1 blocks; the joint law is reversal-invariant.
        return ou_orthant(a[::-1], model.step_correlation(), spec)

    return oracle


def _block_length(x: float, phi: float, k: int, tau: float) -> int:
    """Number of most-recent packets whose lateness the event {A_t > x}
    requires, for x >= phi; capped at k+1 (all packets ever generated)."""
    return min(k + 1, int(math.floor((x - phi) / tau)) + 1)


def exact_ccdf_grid(
    model: DelayModel,
    t_grid: Sequence[float],
    x_grid: Sequence[float],
    spec: QuadratureSpec | None = None,
    threads: int = 1,
) -> CcdfGrid:
    """Exact Pr(A_t > x) over the grid, one chain sweep per phase class."""
    spec = spec if spec is not None else QuadratureSpec()
    t_grid = np.asarray(t_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0) or np.any(np.diff(x_grid) < 0):
        raise ValueError("grids must be sorted ascending")
    tau = model.schedule.tau
    decs = [decompose_time(float(t), tau) for t in t_grid]
    # Group rows by phase class and find the longest block each class needs.
    needs: dict[float, int] = {}
    for dec in decs:
        key = _phase_key(dec.phi, tau)
        phi = key * tau
        n_row = 0
        for x in x_grid:
            if x >= phi:
                n_row = max(n_row, _block_length(float(x), phi, dec.k, tau))
        needs[key] = max(needs.get(key, 0), n_row)

    def compute(key: float) -> tuple[float, np.ndarray]:
        try:
            return key, ccdf_profile(model, key * tau, needs[key], spec)
        except QuadratureError as exc:
            raise QuadratureError(f"phase class phi={key * tau}: {exc}") from exc

    keys = sorted(needs)
    if threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            profiles = dict(pool.map(compute, keys))
    else:
        profiles = dict(compute(k) for k in keys)

    p = np.empty((t_grid.size, x_grid.size))
    for i, dec in enumerate(decs):
        key = _phase_key(dec.phi, tau)
        phi = key * tau
        q = profiles[key]
        for j, x in enumerate(x_grid):
            if x < phi:
                p[i, j] = 1.0
            else:
                p[i, j] = q[_block_length(float(x), phi, dec.k, tau)]
    meta = {
        "link": model.link.kind,
        "x_min": model.link.x_min,
        "mu_hat": model.link.mu_hat,
        "s_hat": model.link.s_hat,
        "correlation": model.correlation.kind,
        "kappa": model.correlation.kappa,
        "tau": tau,
        "quadrature": {"m": spec.m, "L": spec.L, "rule": spec.rule},
    }
    return CcdfGrid(t_values=t_grid, x_values=x_grid, p=p, kind="exact", meta=meta)


@dataclass
class HeatmapGrid:
    """Per-cell mass Pr(A_t > x) - Pr(A_t > x + delta)."""

    t_values: np.ndarray
    x_values: np.ndarray
    mass: np.ndarray
    delta: float


def heatmap(grid: CcdfGrid, delta: float) -> HeatmapGrid:
    """Finite-difference mass of the CCDF grid at lag delta in x.

    The x grid must be uniform with delta an integer multiple of its step.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    x = grid.x_values
    if x.size < 2:
        raise ValueError("x grid too small for a heatmap")
    steps = np.diff(x)
    step = steps[0]
    if not np.allclose(steps, step, rtol=0, atol=1e-9 * max(step, 1.0)):
        raise ValueError("x grid must be uniformly spaced")
    lag = int(round(delta / step))
    if lag < 1 or abs(lag * step - delta) > 1e-9 * max(delta, 1.0):
        raise ValueError(
            f"delta={delta} is not a multiple of the x grid step {step}"
        )
    if lag >= x.size:
        raise ValueError("delta exceeds the x grid span")
    mass = grid.p[:, :-lag] - grid.p[:, lag:]
    if np.any(mass < -1e-12):
        raise EvaluationError("CCDF grid is not non-increasing in x")
    return HeatmapGrid(
        t_values=grid.t_values,
        x_values=x[:-lag],
        mass=np.clip(mass, 0.0, None),
        delta=delta,
    )


class TimeAverageEvaluator:
    """Time-averaged CCDF F_avg(x) = (1/tau) * integral over one period of
    Pr(A_t > x) dt, t in [x, x+tau].

    The integrand is periodic in t (stationary delays), so a composite
    midpoint rule over the phase with a fixed node set is used; chain
    profiles per phase node are cached and grown lazily, making repeated
    evaluation (percentile searches) cheap.
    """

    def __init__(
        self,
        model: DelayModel,
        spec: QuadratureSpec | None = None,
        n_phase_nodes: int = 64,
    ):
        if n_phase_nodes < 8:
            raise ValueError(f"n_phase_nodes must be >= 8, got {n_phase_nodes}")
        self.model = model
        self.spec = spec if spec is not None else QuadratureSpec()
        tau = model.schedule.tau
        self.phases = (np.arange(n_phase_nodes) + 0.5) * tau / n_phase_nodes
        self._profiles: dict[int, np.ndarray] = {}

    def _profile(self, idx: int, n: int) -> np.ndarray:
        q = self._profiles.get(idx)
        if q is None or q.size <= n:
            grown = max(n, 2 * (q.size - 1) if q is not None else 8)
            q = ccdf_profile(self.model, float(self.phases[idx]), grown, self.spec)
            self._profiles[idx] = q
        return q

    def value(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"x must be non-negative, got {x}")
        tau = self.model.schedule.tau
        total = 0.0
        for idx, phi in enumerate(self.phases):
            if x < phi:
                total += 1.0
            else:
                n = int(math.floor((x - phi) / tau)) + 1
                total += float(self._profile(idx, n)[n])
        return total / self.phases.size


def time_averaged_ccdf(
    model: DelayModel,
    x: float,
    spec: QuadratureSpec | None = None,
    n_phase_nodes: int = 64,
) -> float:
    """One-shot evaluation of the time-averaged CCDF at age x."""
    return TimeAverageEvaluator(model, spec, n_phase_nodes).value(x)


@dataclass
class PercentileRow:
    """Percentiles of the time-averaged AoI law for one model setting."""

    link: str
    c: float
    tau: float
    s: float
    levels: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        finite = [v for v in self.values if math.isfinite(v)]
        if any(b < a for a, b in zip(finite, finite[1:])):
            raise ValueError("percentile values must be non-decreasing in level")


DEFAULT_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)


def percentiles(
    model: DelayModel,
    levels: Sequence[float] = DEFAULT_LEVELS,
    spec: QuadratureSpec | None = None,
    n_phase_nodes: int = 64,
    x_ceiling: float | None = None,
    evaluator: TimeAverageEvaluator | None = None,
) -> np.ndarray:
    """Generalized inverses inf{x >= 0 : F_avg(x) <= 1 - p} for each level.

    Returns +inf for levels whose quantile lies beyond the search ceiling
    (default 50*tau + 20*mean delay).
    """
    if any(not 0 < p < 1 for p in levels):
        raise ValueError("levels must lie strictly in (0, 1)")
    from .links import marginal_moments

    ev = evaluator or TimeAverageEvaluator(model, spec, n_phase_nodes)
    tau = model.schedule.tau
    mean_delay, _ = marginal_moments(model.link)
    ceiling = x_ceiling if x_ceiling is not None else 50.0 * tau + 20.0 * mean_delay
    tol = 1e-4 * tau
    out = np.empty(len(levels))
    for i, p in enumerate(levels):
        target = 1.0 - p
        if ev.value(0.0) <= target:
            out[i] = 0.0
            continue
        lo, hi = 0.0, tau + mean_delay
        while ev.value(hi) > target:
            lo = hi
            hi *= 2.0
            if hi > ceiling:
                break
        if ev.value(hi) > target:
            out[i] = np.inf
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ev.value(mid) > target:
                lo = mid
            else:
                hi = mid
        out[i] = hi
    return out


@dataclass
class DominanceReport:
    """Pointwise comparison of two CCDF grids (stochastic-order check)."""

    passed: bool
    max_violation: float
    worst_t: float
    worst_x: float
    tol: float


def dominance_check(
    grid_low: CcdfGrid, grid_high: CcdfGrid, tol: float = 1e-6
) -> DominanceReport:
    """Verify grid_low <= grid_high + tol cellwise (low = less correlated)."""
    if grid_low.p.shape != grid_high.p.shape or not (
        np.allclose(grid_low.t_values, grid_high.t_values)
        and np.allclose(grid_low.x_values, grid_high.x_values)
    ):
        raise ValueError("dominance check requires identical (t, x) grids")
    diff = grid_low.p - grid_high.p
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    worst = float(diff[idx])
    return DominanceReport(
        passed=worst <= tol,
        max_violation=max(worst, 0.0),
        worst_t=float(grid_low.t_values[idx[0]]),
        worst_x=float(grid_low.x_values[idx[1]]),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Serialization.  All writes are atomic (temp file + rename).


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


def write_ccdf_csv(grid: CcdfGrid, path: str, stderr: np.ndarray | None = None) -> None:
    header = "t,x,ccdf,stderr" if stderr is not None else "t,x,ccdf"
    lines = [header]
    for i, t in enumerate(grid.t_values):
        for j, x in enumerate(grid.x_values):
            row = f"{_fmt(t)},{_fmt(x)},{_fmt(grid.p[i, j])}"
            if stderr is not None:
                row += f",{_fmt(stderr[i, j])}"
            lines.append(row)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_heatmap_csv(hm: HeatmapGrid, path: str) -> None:
    lines = ["t,x,pmf"]
    for i, t in enumerate(hm.t_values):
        for j, x in enumerate(hm.x_values):
            lines.append(f"{_fmt(t)},{_fmt(x)},{_fmt(hm.mass[i, j])}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_timeavg_csv(x_values: Sequence[float], values: Sequence[float], path: str) -> None:
    lines = ["x,ccdf_avg"]
    for x, v in zip(x_values, values):
        lines.append(f"{_fmt(x)},{_fmt(v)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_percentiles_csv(rows: Iterable[PercentileRow], path: str) -> None:
    rows = list(rows)
    levels = rows[0].levels if rows else DEFAULT_LEVELS
    cols = ",".join(f"p{int(round(100 * p))}" for p in levels)
    lines = [f"link,c,tau,s,{cols}"]
    for r in rows:
        vals = ",".join(_fmt(v) for v in r.values)
        lines.append(f"{r.link},{_fmt(r.c)},{_fmt(r.tau)},{_fmt(r.s)},{vals}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_meta_json(meta: dict, path: str) -> None:
    _atomic_write(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
