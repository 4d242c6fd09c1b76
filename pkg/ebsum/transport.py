"""
Cheapest independent additions Z that move the leading mode m of S up by one.

Adding Z must balance the law at the old mode, P[S+Z = m] = P[S+Z = m+1], and the
cost of a plan is E[Z]. With f the probability function of S and m its strict
leading mode the module works with

    C = f(m) - f(m+1)                           (> 0)
    B = f(m-1) - 2 f(m) + f(m+1)                (< 0)
    A = f(m-2) - 3 f(m-1) + 3 f(m) - f(m+1)

so that two Bernoulli(alpha) terms balance exactly when C + 2 B alpha + A alpha^2 = 0.
"""
import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .ebs_core import DEFAULT_EPS, Pmf, Profile, add_bernoulli, pmf_dp, poisson_window
from .exceptions import ContractViolation, DegenerateMode, InvalidArgument, NoImprovement
from .modal_analysis import DEFAULT_TIE_TOL, mode_of

logger = logging.getLogger(__name__)

BALANCE_TOL = 1e-10
EXPANSION_TOL = 1e-12
GRID_STEP = 1e-4


class PlanKind(str, enum.Enum):
    TWO_POINT = "two-point"
    ONE_BERNOULLI = "one-bernoulli"
    TWO_BERNOULLI = "two-bernoulli"
    POISSON = "poisson"
    BALANCED = "balanced"


class ABC(NamedTuple):
    A: float
    B: float
    C: float


@dataclass(frozen=True)
class TransportPlan:
    kind: PlanKind
    mode: int
    cost: float
    s: Optional[int] = None
    delta: Optional[float] = None
    gamma: Optional[float] = None
    alphas: tuple = field(default_factory=tuple)
    rate: Optional[float] = None
    residual: float = 0.0

    def apply(self, pmf, eps=DEFAULT_EPS):
        """Law of S + Z by direct convolution."""
        if self.kind is PlanKind.BALANCED:
            return pmf
        if self.kind is PlanKind.ONE_BERNOULLI:
            return add_bernoulli(pmf, self.gamma)
        if self.kind is PlanKind.TWO_BERNOULLI:
            out = pmf
            for alpha in self.alphas:
                out = add_bernoulli(out, alpha)
            return out
        if self.kind is PlanKind.TWO_POINT:
            mass = np.zeros(len(pmf) + self.s)
            mass[:len(pmf)] += (1.0 - self.delta) * pmf.mass
            mass[self.s:] += self.delta * pmf.mass
            return Pmf(mass, pmf.shift, pmf.trunc_err)
        window, tail = poisson_window(self.rate, eps)
        return Pmf(np.convolve(pmf.mass, window), pmf.shift, pmf.trunc_err + tail)


def balance_residual(pmf, m):
    """|g(m) - g(m+1)| / max(g(m), g(m+1)) for the probability function g."""
    lo, hi = pmf.at(m), pmf.at(m + 1)
    return abs(lo - hi) / max(lo, hi)


def _finish(plan, pmf, eps=DEFAULT_EPS):
    residual = balance_residual(plan.apply(pmf, eps), plan.mode)
    if residual > BALANCE_TOL:
        raise ContractViolation(f"{plan.kind.value} plan leaves a balance residual of {residual:.3e}")
    return replace(plan, residual=residual)


def _strict_mode(pmf, tie_tol):
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        raise DegenerateMode("flat-top: the leading mode is already balanced")
    return summary.m_plus


def abc_coefficients(pmf, tie_tol=DEFAULT_TIE_TOL):
    m = _strict_mode(pmf, tie_tol)
    f = pmf.at
    C = f(m) - f(m + 1)
    B = f(m - 1) - 2.0 * f(m) + f(m + 1)
    A = f(m - 2) - 3.0 * f(m - 1) + 3.0 * f(m) - f(m + 1)
    if not (C > 0 and B < 0):
        raise ContractViolation(f"expected C > 0 and B < 0 at the mode {m}, got C={C!r}, B={B!r}")
    return ABC(A, B, C)


def _delta(pmf, m, s):
    f = pmf.at
    C = f(m) - f(m + 1)
    return C / (C + f(m + 1 - s) - f(m - s))


def delta_for_shift(pmf, s, tie_tol=DEFAULT_TIE_TOL):
    """Smallest delta with which Z = s (probability delta, else 0) balances the mode."""
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        return 0.0
    m = summary.m_plus
    if not 1 <= s <= m + 1:
        raise InvalidArgument(f"shift s={s} outside 1..{m + 1}")
    delta = _delta(pmf, m, s)
    plan = TransportPlan(PlanKind.TWO_POINT, m, s * delta, s=s, delta=delta)
    _finish(plan, pmf)
    return delta


def _balanced_plan(summary):
    return TransportPlan(PlanKind.BALANCED, summary.m_minus, 0.0)


def optimal_two_point(pmf, tie_tol=DEFAULT_TIE_TOL):
    """Minimize s * delta(s) over s = 1..m+1; ties go to the smaller s."""
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        return _balanced_plan(summary)
    m = summary.m_plus
    best = None
    for s in range(1, m + 2):
        delta = _delta(pmf, m, s)
        cost = s * delta
        logger.debug("two-point plan s=%d delta=%.17g cost=%.17g", s, delta, cost)
        if best is None or cost < best.cost:
            best = TransportPlan(PlanKind.TWO_POINT, m, cost, s=s, delta=delta)
    return _finish(best, pmf)


def one_bernoulli_plan(pmf, tie_tol=DEFAULT_TIE_TOL):
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        return _balanced_plan(summary)
    gamma = _delta(pmf, summary.m_plus, 1)
    return _finish(TransportPlan(PlanKind.ONE_BERNOULLI, summary.m_plus, gamma, gamma=gamma), pmf)


def two_bernoulli_plan(pmf, tie_tol=DEFAULT_TIE_TOL):
    """Two Bernoulli(alpha) terms, the smaller root of C + 2 B alpha + A alpha^2 = 0."""
    A, B, C = abc_coefficients(pmf, tie_tol)
    if A >= 0:
        raise NoImprovement(f"no two-Bernoulli improvement: A = {A:.6g} is not negative")
    alpha = C / (-B + math.sqrt(B * B - A * C))
    if not 0 < alpha < 1:
        raise ContractViolation(f"two-Bernoulli parameter {alpha!r} outside (0, 1)")
    gamma = -C / B
    if not 2 * alpha < gamma:
        raise ContractViolation(f"two-Bernoulli cost {2 * alpha!r} is not below gamma* {gamma!r}")

    m = _strict_mode(pmf, tie_tol)
    plan = TransportPlan(PlanKind.TWO_BERNOULLI, m, 2 * alpha, alphas=(alpha, alpha))
    direct = plan.apply(pmf)
    f = pmf.at
    for k in (m, m + 1):
        back1 = f(k) - f(k - 1)
        back2 = f(k) - 2.0 * f(k - 1) + f(k - 2)
        expanded = f(k) - 2.0 * alpha * back1 + alpha * alpha * back2
        if abs(expanded - direct.at(k)) > EXPANSION_TOL:
            raise ContractViolation(f"difference expansion disagrees with convolution at k={k}")
    return _finish(plan, pmf)


def _poisson_pmf(t, eps):
    return pmf_dp(Profile(lam=t), eps)


def poisson_break(t, eps=DEFAULT_EPS):
    """One Bernoulli term that moves the mode of Poisson(t), from the closed-form gamma*."""
    if not t > 0:
        raise InvalidArgument(f"Poisson rate must be positive, got {t!r}")
    m = math.floor(t)
    if t == m:
        return TransportPlan(PlanKind.BALANCED, m - 1, 0.0)
    gamma = ((m + 1) * t - t * t) / (2 * (m + 1) * t - t * t - m * (m + 1))
    if not gamma < m + 1 - t:
        raise ContractViolation(f"gamma*={gamma!r} does not undercut the Poisson rate {m + 1 - t!r}")
    plan = TransportPlan(PlanKind.ONE_BERNOULLI, m, gamma, gamma=gamma)
    return _finish(plan, _poisson_pmf(t, eps), eps)


def poisson_rate_plan(t, eps=DEFAULT_EPS):
    """Raise the rate to the next integer: Poisson(m+1-t)."""
    if not t > 0:
        raise InvalidArgument(f"Poisson rate must be positive, got {t!r}")
    m = math.floor(t)
    if t == m:
        return TransportPlan(PlanKind.BALANCED, m - 1, 0.0)
    rate = m + 1 - t
    return _finish(TransportPlan(PlanKind.POISSON, m, rate, rate=rate), _poisson_pmf(t, eps), eps)


def two_point_grid_oracle(pmf, step=GRID_STEP, tie_tol=DEFAULT_TIE_TOL):
    """Brute force over s and a delta grid; returns (s, delta, cost) of the cheapest balancing plan."""
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        return 0, 0.0, 0.0
    m = summary.m_plus
    f = pmf.at
    deltas = np.arange(1, int(round(1.0 / step)) + 1) * step
    best = (None, None, math.inf)
    for s in range(1, m + 2):
        gain = (1.0 - deltas) * (f(m + 1) - f(m)) + deltas * (f(m + 1 - s) - f(m - s))
        feasible = np.flatnonzero(gain >= 0)
        if feasible.size:
            delta = float(deltas[feasible[0]])
            if s * delta < best[2]:
                best = (s, delta, s * delta)
    return best
