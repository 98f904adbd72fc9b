"""Exact analysis of the Poisson-arrival double-ended queue.

With Poisson arrivals the signed queue length is a birth-death chain on the
integers: birth rate alpha + i^- gamma, death rate beta + i^+ theta.  This
module computes its stationary distribution (in log space, with controlled
truncation), the closed-form limiting moments built from incomplete gamma
functions, transient moments through the truncated master equation, and the
closed-form second-moment lower bound available when theta == gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    DomainError,
    NumericalOverflowError,
    ResourceLimitError,
    TruncationError,
    UnsupportedCaseError,
)
from .numerics import log_regularized_lower_gamma
from .params import QueueParams

__all__ = [
    "StationaryPmf",
    "GammaMomentSummary",
    "TransientMoments",
    "AsymptoticApproximations",
    "stationary_distribution",
    "gamma_moment_summary",
    "poisson_moment_estimates",
    "transient_moments",
    "second_moment_lower_bound",
    "limiting_expectation",
    "asymptotic_moment_approximations",
]

_HARD_SUPPORT_CAP = 10**6
# Transient integration grows its box when boundary mass exceeds the leak
# tolerance; past this size the dense master equation is impractical.
_TRANSIENT_SUPPORT_CAP = 2**16


@dataclass(frozen=True)
class StationaryPmf:
    """Stationary pmf of the chain, truncated to [-support_bound, support_bound].

    probs[k] is the probability of state states[k]; the neglected tail is at
    most tail_mass_bound.  boundary_ratio_pos/neg are the one-step weight
    ratios just outside the box (both < 1), which bound how fast the true
    tail decays.
    """

    support_bound: int
    probs: np.ndarray
    tail_mass_bound: float
    boundary_ratio_pos: float
    boundary_ratio_neg: float

    @property
    def states(self) -> np.ndarray:
        return np.arange(-self.support_bound, self.support_bound + 1)

    def prob(self, i: int) -> float:
        if abs(i) > self.support_bound:
            return 0.0
        return float(self.probs[i + self.support_bound])

    def mean(self) -> float:
        return float(np.dot(self.states, self.probs))

    def second_moment(self) -> float:
        return float(np.dot(self.states.astype(float) ** 2, self.probs))


def _log_weights(params: QueueParams, bound: int) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized log pi_i relative to pi_0 for i = 1..bound and i = -1..-bound."""
    j = np.arange(1, bound + 1, dtype=float)
    log_pos = np.cumsum(math.log(params.alpha) - np.log(params.beta + j * params.theta))
    log_neg = np.cumsum(math.log(params.beta) - np.log(params.alpha + j * params.gamma))
    return log_pos, log_neg


def stationary_distribution(params: QueueParams, tail_tol: float = 1e-12) -> StationaryPmf:
    """Stationary distribution of the birth-death chain, normalized over a box.

    The support bound grows geometrically until the one-step weight ratios at
    the boundary drop below 1/2 and the geometric tail bound is below
    tail_tol; products are accumulated as log sums so large alpha/theta
    ratios cannot overflow.
    """
    if not (0.0 < tail_tol <= 1e-3):
        raise DomainError(f"tail_tol must lie in (0, 1e-3], got {tail_tol}")

    bound = 16
    while True:
        log_pos, log_neg = _log_weights(params, bound)
        r_pos = params.alpha / (params.beta + (bound + 1) * params.theta)
        r_neg = params.beta / (params.alpha + (bound + 1) * params.gamma)
        if r_pos < 0.5 and r_neg < 0.5:
            all_logs = np.concatenate((log_neg[::-1], [0.0], log_pos))
            shift = all_logs.max()
            weights = np.exp(all_logs - shift)
            total = weights.sum()
            tail = (
                weights[-1] * r_pos / (1.0 - r_pos)
                + weights[0] * r_neg / (1.0 - r_neg)
            )
            if tail / total < tail_tol:
                return StationaryPmf(
                    support_bound=bound,
                    probs=weights / total,
                    tail_mass_bound=tail / total,
                    boundary_ratio_pos=r_pos,
                    boundary_ratio_neg=r_neg,
                )
        if bound >= _HARD_SUPPORT_CAP:
            raise ResourceLimitError(
                f"tail tolerance {tail_tol} unreachable within support bound {_HARD_SUPPORT_CAP}"
            )
        bound = min(2 * bound, _HARD_SUPPORT_CAP)


@dataclass(frozen=True)
class GammaMomentSummary:
    """Limiting moment pieces of the chain in incomplete-gamma closed form.

    p1 and p2 are the total weights of the positive and negative half-lines
    relative to state 0, pi0 = 1/(1 + p1 + p2), and m/s are the limiting
    first and second moments of the positive and negative parts.
    """

    p1: float
    p2: float
    pi0: float
    m_plus: float
    m_minus: float
    s_plus: float
    s_minus: float

    @property
    def first_moment(self) -> float:
        return self.m_plus - self.m_minus

    @property
    def second_moment(self) -> float:
        return self.s_plus + self.s_minus


def _half_line_weight(rate_ratio: float, tail_ratio: float) -> float:
    """exp(log of rate_ratio * e^y * y^(-t) * gamma_lower(t, y)) - 1.

    rate_ratio = t is the reneging-normalized opposite arrival rate and
    tail_ratio = y the own one; assembled in log space because e^y alone
    overflows for y beyond ~700.
    """
    t = rate_ratio
    y = tail_ratio
    log_term = (
        math.log(t) + y - t * math.log(y) + math.lgamma(t)
        + log_regularized_lower_gamma(t, y)
    )
    if log_term > 700.0:
        raise NumericalOverflowError(
            f"half-line weight overflows for rate ratio {t:g} at {y:g}; "
            "the reneging rate is too small relative to the arrival rates"
        )
    return max(math.expm1(log_term), 0.0)


def gamma_moment_summary(params: QueueParams) -> GammaMomentSummary:
    """Closed-form limiting moments via gamma and incomplete gamma functions."""
    alpha, beta, theta, gamma = params.alpha, params.beta, params.theta, params.gamma
    p1 = _half_line_weight(beta / theta, alpha / theta)
    p2 = _half_line_weight(alpha / gamma, beta / gamma)
    pi0 = 1.0 / (1.0 + p1 + p2)
    m_plus = ((alpha - beta) / theta * p1 + alpha / theta) * pi0
    m_minus = ((beta - alpha) / gamma * p2 + beta / gamma) * pi0
    s_plus = (alpha - beta) / theta * m_plus + alpha / theta * (p1 + 1.0) * pi0
    s_minus = (beta - alpha) / gamma * m_minus + beta / gamma * (p2 + 1.0) * pi0
    return GammaMomentSummary(p1, p2, pi0, m_plus, m_minus, s_plus, s_minus)


def poisson_moment_estimates(params: QueueParams) -> tuple[float, float]:
    """(L1, L2): limiting mean and second moment of the Poisson-arrival chain."""
    summary = gamma_moment_summary(params)
    return summary.first_moment, summary.second_moment


@dataclass(frozen=True)
class TransientMoments:
    """Moment curves of the chain on a time grid, from the truncated master equation."""

    t: np.ndarray
    m: np.ndarray
    s: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    support_bound: int
    max_boundary_mass: float


def _initial_vector(initial_pmf, bound: int) -> np.ndarray:
    if isinstance(initial_pmf, StationaryPmf):
        items = zip(initial_pmf.states.tolist(), initial_pmf.probs.tolist())
    elif isinstance(initial_pmf, Mapping):
        items = initial_pmf.items()
    else:
        raise DomainError("initial_pmf must be a StationaryPmf or a mapping state -> probability")
    p = np.zeros(2 * bound + 1)
    total = 0.0
    for state, mass in items:
        if mass < 0.0:
            raise DomainError(f"negative probability {mass} at state {state}")
        if abs(int(state)) > bound:
            raise DomainError(f"initial state {state} lies outside the box [-{bound}, {bound}]")
        p[int(state) + bound] += mass
        total += mass
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"initial pmf must sum to 1, got {total}")
    return p


def _initial_extent(initial_pmf) -> int:
    if isinstance(initial_pmf, StationaryPmf):
        return int(initial_pmf.support_bound)
    return max((abs(int(s)) for s, m in initial_pmf.items() if m > 0.0), default=0)


def _master_moments(params: QueueParams, initial_pmf, t_grid: np.ndarray, bound: int):
    """RK4 on the forward equations over [-bound, bound]; returns curves + leak."""
    states = np.arange(-bound, bound + 1, dtype=float)
    birth = params.alpha + np.maximum(-states, 0.0) * params.gamma
    death = params.beta + np.maximum(states, 0.0) * params.theta
    birth[-1] = 0.0  # transitions leaving the box are dropped
    death[0] = 0.0
    loss = birth + death

    def deriv(p: np.ndarray) -> np.ndarray:
        dp = -loss * p
        dp[1:] += birth[:-1] * p[:-1]
        dp[:-1] += death[1:] * p[1:]
        return dp

    h_max = 0.01 / max(
        params.alpha, params.beta, params.theta * bound, params.gamma * bound
    )

    p = _initial_vector(initial_pmf, bound)
    pos = states > 0
    neg = states < 0
    sq = states**2

    records = []
    max_edge = max(p[0], p[-1])
    t_now = 0.0
    for t_target in t_grid:
        span = t_target - t_now
        if span > 0.0:
            n_steps = max(1, math.ceil(span / h_max))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = deriv(p)
                k2 = deriv(p + 0.5 * h * k1)
                k3 = deriv(p + 0.5 * h * k2)
                k4 = deriv(p + h * k3)
                p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                edge = max(p[0], p[-1])
                if edge > max_edge:
                    max_edge = edge
            t_now = t_target
        records.append(
            (
                float(states @ p),
                float(sq @ p),
                float(states[pos] @ p[pos]),
                float(-states[neg] @ p[neg]),
                float(sq[pos] @ p[pos]),
                float(sq[neg] @ p[neg]),
            )
        )
    return records, max_edge


def transient_moments(
    params: QueueParams,
    initial_pmf,
    t_grid: Iterable[float],
    support_bound: int | None = None,
    leak_tol: float = 1e-8,
) -> TransientMoments:
    """Transient moment curves m, s, m+, m-, s+, s- on t_grid.

    Integrates the truncated forward equations with fixed-step RK4.  With an
    explicit support_bound, boundary mass above leak_tol raises
    TruncationError; in automatic mode the box is grown and the integration
    retried instead.
    """
    t_grid = np.asarray(list(t_grid), dtype=float)
    if t_grid.size == 0:
        raise DomainError("t_grid must be non-empty")
    if np.any(np.diff(t_grid) <= 0.0) or t_grid[0] < 0.0:
        raise DomainError("t_grid must be non-negative and strictly increasing")

    if support_bound is not None:
        bounds = [support_bound]
    else:
        stat = stationary_distribution(params, 1e-10)
        start = _initial_extent(initial_pmf) + stat.support_bound + 16
        bounds = []
        b = start
        while b <= _TRANSIENT_SUPPORT_CAP:
            bounds.append(b)
            b *= 2

    last_edge = math.nan
    for bound in bounds:
        records, max_edge = _master_moments(params, initial_pmf, t_grid, bound)
        last_edge = max_edge
        if max_edge <= leak_tol:
            arr = np.array(records)
            return TransientMoments(
                t=t_grid,
                m=arr[:, 0],
                s=arr[:, 1],
                m_plus=arr[:, 2],
                m_minus=arr[:, 3],
                s_plus=arr[:, 4],
                s_minus=arr[:, 5],
                support_bound=bound,
                max_boundary_mass=max_edge,
            )
    raise TruncationError(
        f"boundary mass {last_edge:.3e} exceeds {leak_tol:.1e}; "
        f"enlarge support_bound beyond {bounds[-1]}"
    )


def _sign(x: float) -> float:
    return math.copysign(1.0, x) if x != 0.0 else 0.0


def second_moment_lower_bound(params: QueueParams, m0: float, s0: float, t) -> float | np.ndarray:
    """Closed-form lower bound on the second moment at time t (theta == gamma only).

    Solves the surrogate ODE obtained by replacing m+(t) + m-(t) with |m(t)|
    in the second-moment equation; the replacement only lowers the source
    term, so the solution bounds s(t) from below and converges to
    ((alpha-beta)/theta)^2 + max(alpha, beta)/theta.
    """
    if params.theta != params.gamma:
        raise UnsupportedCaseError(
            f"closed form requires theta == gamma, got theta={params.theta}, gamma={params.gamma}"
        )
    theta = params.theta
    delta = params.alpha - params.beta
    limit = delta / theta
    amp = m0 - limit

    # sign of m on [0, crossing) and after; crossing exists iff m0, limit oppose
    sigma0 = _sign(m0) if m0 != 0.0 else _sign(limit)
    sigma1 = _sign(limit) if limit != 0.0 else sigma0
    t_cross = math.inf
    if m0 * limit < 0.0:
        t_cross = math.log(-amp / limit) / theta

    def segment(a: float, b: float, tt: float, sigma: float) -> float:
        c2 = (2.0 * delta + sigma * theta) * amp
        c1 = (2.0 * delta + sigma * theta) * limit + params.alpha + params.beta
        part1 = c2 * (math.exp(-theta * (2.0 * tt - b)) - math.exp(-theta * (2.0 * tt - a))) / theta
        part2 = c1 * (math.exp(-2.0 * theta * (tt - b)) - math.exp(-2.0 * theta * (tt - a))) / (2.0 * theta)
        return part1 + part2

    def at(tt: float) -> float:
        value = s0 * math.exp(-2.0 * theta * tt)
        if tt <= t_cross:
            value += segment(0.0, tt, tt, sigma0)
        else:
            value += segment(0.0, t_cross, tt, sigma0)
            value += segment(t_cross, tt, tt, sigma1)
        return value

    if np.ndim(t) == 0:
        return at(float(t))
    return np.array([at(float(tt)) for tt in np.asarray(t, dtype=float)])


def limiting_expectation(f: Callable[[int], float], pmf: StationaryPmf) -> tuple[float, float]:
    """(sum of f(i) pi_i over the truncated support, bound on the neglected tail).

    The tail bound extends the boundary masses geometrically with the
    boundary ratios, evaluating f exactly on the extension; it is finite
    whenever f grows slower than the tail decays.
    """
    states = pmf.states
    value = float(sum(f(int(i)) * p for i, p in zip(states, pmf.probs)))

    bound = 0.0
    scale = max(1.0, abs(value))
    for edge_state, ratio, step in (
        (pmf.support_bound, pmf.boundary_ratio_pos, 1),
        (-pmf.support_bound, pmf.boundary_ratio_neg, -1),
    ):
        mass = pmf.prob(edge_state)
        state = edge_state
        for _ in range(10_000):
            mass *= ratio
            state += step
            term = mass * abs(f(state))
            bound += term
            if term < 1e-18 * scale:
                break
        else:
            bound = math.inf
    return value, bound


@dataclass(frozen=True)
class AsymptoticApproximations:
    """Closed-form moment approximations valid when reneging is slow."""

    mean: float
    second: float
    variance: float


def asymptotic_moment_approximations(params: QueueParams) -> AsymptoticApproximations:
    """Slow-reneging approximations for the limiting mean, second moment, variance.

    These are heuristics with no stated error bound; report them next to the
    exact gamma-based values rather than in place of them.
    """
    delta = params.alpha - params.beta
    mean = delta / params.theta if params.alpha >= params.beta else delta / params.gamma
    second = (delta / params.theta) ** 2 + max(params.alpha, params.beta) / params.theta
    variance = max(params.alpha, params.beta) / params.theta
    return AsymptoticApproximations(mean, second, variance)
