"""Monotone link functions, moment calibration, and the OU kernel.

Delays are generated as X = g(Z) with Z a stationary standard Gaussian
process.  Two links are supported: a shifted lognormal
g(z) = x_min + exp(mu_hat + s_hat*z) and a censored normal
g(z) = max(x_min, mu_hat + s_hat*z).  Calibration matches the delay
marginal's mean and standard deviation to user targets and picks the OU
rate kappa so the delay autocovariance decays to 1/e at a given lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .core import GenerationSchedule, decompose_time, theta
from .errors import CalibrationError
from .orthant import _gauss_legendre, std_normal_tail

SHIFTED_LOGNORMAL = "shifted-lognormal"
CENSORED_NORMAL = "censored-normal"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


@dataclass(frozen=True)
class LinkFunction:
    """Monotone non-decreasing map from a standard normal to a delay."""

    kind: str
    x_min: float
    mu_hat: float
    s_hat: float

    def __post_init__(self):
        if self.kind not in (SHIFTED_LOGNORMAL, CENSORED_NORMAL):
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.x_min < 0:
            raise ValueError(f"x_min must be non-negative, got {self.x_min}")
        if not self.s_hat > 0:
            raise ValueError(f"s_hat must be positive, got {self.s_hat}")


@dataclass(frozen=True)
class CorrelationMode:
    """Temporal dependence of the Gaussian driver: OU with rate kappa, or
    the degenerate i.i.d. / frozen limits.  c records the calibration time
    constant when kappa came from one."""

    kind: str
    kappa: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.kind not in ("ou", "iid", "frozen"):
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if self.kind == "ou":
            if self.kappa is None or not self.kappa > 0:
                raise ValueError("ou mode requires kappa > 0")
        elif self.kappa is not None:
            raise ValueError(f"{self.kind} mode takes no kappa")


@dataclass(frozen=True)
class DelayModel:
    """Full generative description of the delay sequence."""

    link: LinkFunction
    correlation: CorrelationMode
    schedule: GenerationSchedule

    def step_correlation(self) -> float:
        """One-step correlation of the Gaussian driver on the generation grid."""
        if self.correlation.kind != "ou":
            raise ValueError("step correlation is defined for ou mode only")
        return math.exp(-self.correlation.kappa * self.schedule.tau)


@dataclass(frozen=True)
class CalibrationTarget:
    """Requested delay marginal (mean, sd, left endpoint) and time constant."""

    mu: float
    s: float
    x_min: float
    c: float | None = None

    def __post_init__(self):
        if not self.mu > self.x_min:
            raise ValueError(f"target mean {self.mu} must exceed x_min {self.x_min}")
        if not self.s > 0:
            raise ValueError(f"target sd must be positive, got {self.s}")
        if self.c is not None and not self.c > 0:
            raise ValueError(f"time constant must be positive, got {self.c}")


def g_apply(link: LinkFunction, z):
    """Delay value g(z); accepts scalars or arrays."""
    z = np.asarray(z, dtype=float)
    if link.kind == SHIFTED_LOGNORMAL:
        out = link.x_min + np.exp(link.mu_hat + link.s_hat * z)
    else:
        out = np.maximum(link.x_min, link.mu_hat + link.s_hat * z)
    return float(out) if out.ndim == 0 else out


def g_inverse(link: LinkFunction, y):
    """Generalized inverse inf{z : g(z) > y}, so {g(Z) > y} = {Z > g_inverse(y)}.

    Returns -inf below the link's left endpoint.  Accepts scalars or arrays.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("y must be non-negative")
    if link.kind == SHIFTED_LOGNORMAL:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                y <= link.x_min,
                -np.inf,
                (np.log(np.maximum(y - link.x_min, 1e-320)) - link.mu_hat) / link.s_hat,
            )
    else:
        out = np.where(y < link.x_min, -np.inf, (y - link.mu_hat) / link.s_hat)
    return float(out) if out.ndim == 0 else out


def _censored_h1(alpha: float) -> float:
    """E[(Z - alpha)^+] for standard normal Z."""
    return float(_phi(alpha) - alpha * std_normal_tail(alpha))


def _censored_h2sq(alpha: float) -> float:
    """Var[(Z - alpha)^+] for standard normal Z."""
    e2 = float((1.0 + alpha * alpha) * std_normal_tail(alpha) - alpha * _phi(alpha))
    h1 = _censored_h1(alpha)
    return max(e2 - h1 * h1, 0.0)


def marginal_moments(link: LinkFunction) -> tuple[float, float]:
    """(mean, sd) of the delay marginal g(Z), Z ~ N(0, 1)."""
    if link.kind == SHIFTED_LOGNORMAL:
        s2 = link.s_hat**2
        mean = link.x_min + math.exp(link.mu_hat + 0.5 * s2)
        var = (math.exp(s2) - 1.0) * math.exp(2.0 * link.mu_hat + s2)
    else:
        alpha = (link.x_min - link.mu_hat) / link.s_hat
        mean = link.x_min + link.s_hat * _censored_h1(alpha)
        var = link.s_hat**2 * _censored_h2sq(alpha)
    return mean, math.sqrt(var)


def calibrate_marginal(target: CalibrationTarget, kind: str) -> tuple[float, float]:
    """(mu_hat, s_hat) matching the target (mean, sd) exactly.

    The shifted lognormal has a closed form.  For the censored normal the
    coefficient of variation of the excess (X - x_min) depends on the
    censoring point alpha alone, so a single bracketed root-find in alpha
    suffices.
    """
    m = target.mu - target.x_min
    if kind == SHIFTED_LOGNORMAL:
        s_hat_sq = math.log1p((target.s / m) ** 2)
        s_hat = math.sqrt(s_hat_sq)
        mu_hat = math.log(m) - 0.5 * s_hat_sq
        return mu_hat, s_hat
    if kind != CENSORED_NORMAL:
        raise ValueError(f"unknown link kind {kind!r}")
    q_target = target.s / m

    def ratio_gap(alpha: float) -> float:
        return math.sqrt(_censored_h2sq(alpha)) / _censored_h1(alpha) - q_target

    lo, hi = -5.0, 5.0
    for _ in range(20):
        if ratio_gap(lo) < 0:
            break
        lo *= 2.0
    for _ in range(20):
        if ratio_gap(hi) > 0:
            break
        hi *= 2.0
    if not (ratio_gap(lo) < 0 < ratio_gap(hi)):
        raise CalibrationError(
            f"censored-normal target (mu={target.mu}, s={target.s}, "
            f"x_min={target.x_min}) could not be bracketed"
        )
    alpha = brentq(ratio_gap, lo, hi, xtol=1e-14, rtol=8.9e-16)
    s_hat = m / _censored_h1(alpha)
    mu_hat = target.x_min - s_hat * alpha
    return mu_hat, s_hat


def lag_covariance(link: LinkFunction, rho: float, n_nodes: int = 200) -> float:
    """Cov[g(Z_0), g(Z_1)] for standard bivariate normal (Z_0, Z_1) with
    correlation rho."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    if link.kind == SHIFTED_LOGNORMAL:
        s2 = link.s_hat**2
        return math.exp(2.0 * link.mu_hat + s2) * math.expm1(s2 * rho)
    # Censored normal: cov = s_hat^2 * Cov[(Z0-alpha)^+, (Z1-alpha)^+].
    # The inner conditional expectation is closed-form, leaving one smooth
    # 1-D integral over the first coordinate.
    alpha = (link.x_min - link.mu_hat) / link.s_hat
    sbar_sq = 1.0 - rho * rho
    upper = max(alpha, 0.0) + 12.0
    if upper <= alpha:
        return 0.0
    x, w = _gauss_legendre(n_nodes)
    half = 0.5 * (upper - alpha)
    u = alpha + half * (x + 1.0)
    m = rho * u
    if sbar_sq < 1e-14:
        inner = np.maximum(m - alpha, 0.0)
    else:
        sbar = math.sqrt(sbar_sq)
        inner = (m - alpha) * std_normal_tail((alpha - m) / sbar) + sbar * _phi(
            (alpha - m) / sbar
        )
    e_cross = float(np.sum(half * w * (u - alpha) * _phi(u) * inner))
    h1 = _censored_h1(alpha)
    return link.s_hat**2 * (e_cross - h1 * h1)


def calibrate_kappa(link: LinkFunction, c: float) -> float:
    """OU rate kappa such that the delay autocovariance satisfies
    sigma(c)/sigma(0) = 1/e.  The ratio is strictly increasing in the
    Gaussian correlation, so the root in rho = exp(-kappa*c) is unique."""
    if not c > 0:
        raise CalibrationError(f"time constant must be positive, got {c}")
    var = lag_covariance(link, 1.0)
    if not var > 0:
        raise CalibrationError("link has zero marginal variance")
    target = math.exp(-1.0)

    def gap(rho: float) -> float:
        return lag_covariance(link, rho) / var - target

    lo, hi = 1e-12, 1.0 - 1e-12
    if not (gap(lo) < 0 < gap(hi)):
        raise CalibrationError("covariance-ratio equation could not be bracketed")
    rho_star = brentq(gap, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return -math.log(rho_star) / c


def ou_transition(z: float, dt: float, kappa: float) -> tuple[float, float]:
    """Conditional law of the OU state after dt given the current state z:
    mean z*exp(-kappa*dt), variance 1 - exp(-2*kappa*dt)."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    r = math.exp(-kappa * dt)
    return z * r, 1.0 - r * r


def thresholds(
    t: float,
    x: float,
    schedule: GenerationSchedule,
    link: LinkFunction,
) -> np.ndarray:
    """Gaussian thresholds a_i = g_inverse((k_t - i)*tau + phi_t) for
    i = theta_t(x)..k_t, the vector whose joint tail is Pr(A_t > x)."""
    tau = schedule.tau
    dec = decompose_time(t, tau)
    if x < dec.phi:
        raise ValueError("thresholds are defined for x >= phi_t only")
    start = theta(t, x, tau)
    i = np.arange(start, dec.k + 1)
    return g_inverse(link, (dec.k - i) * tau + dec.phi)


def build_model(
    kind: str,
    target: CalibrationTarget,
    correlation_kind: str,
    tau: float,
) -> DelayModel:
    """Calibrate a link to the target and assemble a DelayModel."""
    mu_hat, s_hat = calibrate_marginal(target, kind)
    link = LinkFunction(kind=kind, x_min=target.x_min, mu_hat=mu_hat, s_hat=s_hat)
    if correlation_kind == "ou":
        if target.c is None:
            raise CalibrationError("ou mode requires the time constant c")
        kappa = calibrate_kappa(link, target.c)
        corr = CorrelationMode(kind="ou", kappa=kappa, c=target.c)
    else:
        corr = CorrelationMode(kind=correlation_kind)
    return DelayModel(link=link, correlation=corr, schedule=GenerationSchedule(tau))
