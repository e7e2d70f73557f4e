"""Model-agnostic age-of-information machinery.

A source emits packet n at time n*tau; packet n reaches the monitor after
a delay D_n.  The age at time t is t minus the generation time of the
newest packet that has arrived.  Everything here is expressed against an
abstract joint-tail oracle Pr(D_i > b_i for i in a contiguous index
range), so the same code serves exact Gaussian models, degenerate
deterministic sequences, and empirical checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

# Relative slack used when snapping a phase that lands at tau - epsilon
# due to floating-point division.
_PHASE_RTOL = 1e-12


@dataclass(frozen=True)
class GenerationSchedule:
    """Constant inter-generation interval; packet n is generated at n*tau."""

    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be a positive finite number, got {self.tau}")

    def generation_time(self, n: int) -> float:
        return n * self.tau


@dataclass(frozen=True)
class TimeDecomposition:
    """Index of the latest generated packet and the phase within the slot."""

    t: float
    k: int
    phi: float


def decompose_time(t: float, tau: float) -> TimeDecomposition:
    """Split t into (k, phi) with t = k*tau + phi and 0 <= phi < tau.

    Phases within a relative tolerance of the slot boundary are snapped to
    the boundary, since downstream branches are discontinuous there.
    """
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"t must be a finite non-negative number, got {t}")
    if not (math.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be a positive finite number, got {tau}")
    k = int(math.floor(t / tau))
    phi = t - k * tau
    if phi >= tau * (1.0 - _PHASE_RTOL):
        k += 1
        phi = 0.0
    elif phi < 0.0:
        phi = 0.0
    return TimeDecomposition(t=t, k=k, phi=phi)


def theta(t: float, x: float, tau: float) -> int:
    """Index of the oldest packet whose arrival status matters for
    Pr(A_t > x): max(0, ceil((t - x)/tau)).  Equals k_t + 1 iff x < phi_t."""
    if not (math.isfinite(x) and x >= 0):
        raise ValueError(f"x must be a finite non-negative number, got {x}")
    dec = decompose_time(t, tau)
    if x < dec.phi:
        return dec.k + 1
    return max(0, dec.k - int(math.floor((x - dec.phi) / tau)))


class JointTailOracle(Protocol):
    """Joint upper-tail probability of a contiguous block of delays.

    Called as oracle(start, thresholds) and must return
    Pr(D_{start+j} > thresholds[j] for all j), a value in [0, 1].
    An empty threshold sequence means probability 1.
    """

    def __call__(self, start: int, thresholds: Sequence[float]) -> float: ...


def _tail_thresholds(k: int, phi: float, tau: float, start: int) -> np.ndarray:
    """Thresholds b_i = (k - i)*tau + phi for i = start..k."""
    i = np.arange(start, k + 1)
    return (k - i) * tau + phi


def aoi_ccdf(
    t: float,
    x: float,
    schedule: GenerationSchedule,
    oracle: JointTailOracle,
) -> float:
    """Pr(A_t > x): 1 below the current phase, otherwise the joint
    probability that every packet recent enough to beat age x is late."""
    tau = schedule.tau
    dec = decompose_time(t, tau)
    start = theta(t, x, tau)
    if start > dec.k:
        return 1.0
    b = _tail_thresholds(dec.k, dec.phi, tau, start)
    p = float(oracle(start, b))
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class AoiSupport:
    """Finite support of A_t: candidate ages n*tau + phi_t plus infinity."""

    t: float
    atoms: np.ndarray
    masses: np.ndarray
    p_infinity: float
    j_star: int

    def __post_init__(self):
        if self.atoms.size and np.any(np.diff(self.atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")


def aoi_support(
    t: float,
    schedule: GenerationSchedule,
    d_min: Sequence[float],
    oracle: JointTailOracle,
) -> AoiSupport:
    """Atom locations and masses of the (discrete + infinite) law of A_t.

    d_min[i] is the left endpoint of the support of D_i; it determines the
    smallest achievable age index j_star.  Masses come out as differences
    of adjacent CCDF plateau values; p_infinity is the probability that no
    packet has arrived by t.
    """
    tau = schedule.tau
    dec = decompose_time(t, tau)
    k, phi = dec.k, dec.phi
    if len(d_min) < k + 1:
        raise ValueError(
            f"d_min must cover packets 0..{k}, got length {len(d_min)}"
        )
    # Plateau values C_n = Pr(A_t > x) for x in ((n-1)*tau+phi, n*tau+phi).
    c = np.empty(k + 2)
    c[0] = 1.0
    for n in range(1, k + 2):
        start = k - n + 1
        b = _tail_thresholds(k, phi, tau, start)
        c[n] = min(max(float(oracle(start, b)), 0.0), 1.0)
    j_star = k + 1
    for j in range(k + 1):
        if d_min[k - j] < j * tau + phi:
            j_star = j
            break
    ns = np.arange(j_star, k + 1)
    atoms = ns * tau + phi
    masses = np.clip(c[ns] - c[ns + 1], 0.0, None)
    return AoiSupport(
        t=t, atoms=atoms, masses=masses, p_infinity=float(c[k + 1]), j_star=j_star
    )


def aoi_path_matrix(
    delays: np.ndarray,
    schedule: GenerationSchedule,
    t_grid: Sequence[float],
) -> np.ndarray:
    """Ages at the given observation times for a batch of delay sequences.

    delays has shape (n_paths, n_packets); the result has shape
    (n_paths, len(t_grid)) with +inf where no packet has arrived yet.
    Arrival ties (arrival time exactly t) count as arrived.
    """
    delays = np.atleast_2d(np.asarray(delays, dtype=float))
    if np.any(delays < 0) or not np.all(np.isfinite(delays)):
        raise ValueError("delays must be finite and non-negative")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be sorted ascending")
    tau = schedule.tau
    n_packets = delays.shape[1]
    k_max = decompose_time(float(t_grid[-1]), tau).k if t_grid.size else -1
    if k_max >= n_packets:
        raise ValueError(
            f"delays cover {n_packets} packets but the horizon needs {k_max + 1}"
        )
    beta = np.arange(n_packets) * tau + delays
    ages = np.empty((delays.shape[0], t_grid.size))
    for j, t in enumerate(t_grid):
        k = min(decompose_time(float(t), tau).k, n_packets - 1)
        arrived = beta[:, : k + 1] <= t
        any_arrived = arrived.any(axis=1)
        latest = k - np.argmax(arrived[:, ::-1], axis=1)
        ages[:, j] = np.where(any_arrived, t - latest * tau, np.inf)
    return ages


def aoi_path(
    delays: Sequence[float],
    schedule: GenerationSchedule,
    t_grid: Sequence[float],
) -> np.ndarray:
    """Age sample path for a single delay sequence (see aoi_path_matrix)."""
    return aoi_path_matrix(np.asarray(delays, dtype=float)[None, :], schedule, t_grid)[0]


def point_mass_oracle(delays: Sequence[float]) -> JointTailOracle:
    """Degenerate oracle for a fixed, known delay sequence (0/1 valued)."""
    d = np.asarray(delays, dtype=float)

    def oracle(start: int, thresholds: Sequence[float]) -> float:
        b = np.asarray(thresholds, dtype=float)
        if b.size == 0:
            return 1.0
        block = d[start : start + b.size]
        if block.size != b.size:
            raise ValueError("oracle asked beyond the known delay sequence")
        return 1.0 if np.all(block > b) else 0.0

    return oracle


@dataclass
class CcdfGrid:
    """Pr(A_t > x) tabulated over a (t, x) grid."""

    t_values: np.ndarray
    x_values: np.ndarray
    p: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_values = np.asarray(self.t_values, dtype=float)
        self.x_values = np.asarray(self.x_values, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.kind not in ("exact", "empirical"):
            raise ValueError(f"kind must be 'exact' or 'empirical', got {self.kind!r}")
        if self.p.shape != (self.t_values.size, self.x_values.size):
            raise ValueError("p must have shape (len(t_values), len(x_values))")
        if np.any(self.p < -1e-12) or np.any(self.p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        self.p = np.clip(self.p, 0.0, 1.0)
