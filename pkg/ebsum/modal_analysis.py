"""
Modal structure of a Pmf: modes, peak height, medians and peak skewness.

Everything here is floating point. Exact twin detection for the closed-form
binomial and Poisson families lives in ``ebsum.families``.
"""
import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ebs_core import DEFAULT_EPS, pmf_dp
from .exceptions import DegenerateMode, InvalidArgument

logger = logging.getLogger(__name__)

DEFAULT_TIE_TOL = 1e-9
MAX_TIE_TOL = 1e-6
MEDIAN_SLACK = 1e-12
FD_STEP = 1e-6
# finite differences below this are read as zero
FD_ZERO = 1e-7


@dataclass(frozen=True)
class ModeSummary:
    m_minus: int
    m_plus: int
    peak: float
    twin: bool
    skewness: float
    degenerate: bool = False

    @property
    def modes(self):
        return tuple(range(self.m_minus, self.m_plus + 1))


class MedianInterval(NamedTuple):
    lo: int
    hi: int

    def __contains__(self, k):
        return self.lo <= k <= self.hi


class PeakDirection(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    STATIONARY = "stationary"


def _check_tie_tol(tie_tol):
    if not 0 < tie_tol <= MAX_TIE_TOL:
        raise InvalidArgument(f"tie_tol must lie in (0, {MAX_TIE_TOL}], got {tie_tol!r}")


def _tied(a, b, tie_tol):
    return abs(a - b) <= tie_tol * max(a, b)


def mode_of(pmf, tie_tol=DEFAULT_TIE_TOL):
    """Leading mode m_plus, lower mode m_minus and the peak skewness of ``pmf``.

    A one-point probability function is reported with mode = its atom, skewness 1
    and ``degenerate=True``.

    Neighbours whose masses differ by at most ``tie_tol`` relative to the larger
    one are read as a twin top. Adding Bernoulli(p) with p within d of gamma*
    leaves a relative gap of about d * (2 f(m) - f(m-1) - f(m+1)) / f(m) between
    f(m) and f(m+1), which for wide laws (Poisson rate 100, say) falls below the
    default 1e-9 even when d is 1e-9. Resolving the leading mode that close to
    gamma* needs a tie_tol well under the gap, 1e-12 or so.
    """
    _check_tie_tol(tie_tol)
    mass = pmf.mass
    positive = np.flatnonzero(mass > 0)
    if positive.size == 0:
        raise InvalidArgument("the probability function is identically zero")
    if positive.size == 1:
        k = pmf.shift + int(positive[0])
        return ModeSummary(k, k, float(mass[positive[0]]), False, 1.0, degenerate=True)

    j = int(np.argmax(mass))
    if j + 1 < mass.size and _tied(mass[j], mass[j + 1], tie_tol):
        j += 1
    twin = j >= 1 and _tied(mass[j - 1], mass[j], tie_tol)
    m_plus = pmf.shift + j
    m_minus = m_plus - 1 if twin else m_plus

    if twin:
        skewness = 1.0
    else:
        fl, fm, fr = pmf.at(m_plus - 1), pmf.at(m_plus), pmf.at(m_plus + 1)
        skewness = (fm - fr) / (2.0 * fm - fl - fr)
    return ModeSummary(m_minus, m_plus, float(mass.max()), twin, float(skewness))


def peak_skewness(pmf, tie_tol=DEFAULT_TIE_TOL):
    """gamma* = (f(m) - f(m+1)) / (2 f(m) - f(m-1) - f(m+1)) at the leading mode m."""
    return mode_of(pmf, tie_tol).skewness


def _strict_neighbors(pmf, tie_tol):
    summary = mode_of(pmf, tie_tol)
    if summary.degenerate:
        raise DegenerateMode("one-point probability function: crossing undefined")
    if summary.twin:
        raise DegenerateMode("flat-top: crossing undefined")
    m = summary.m_plus
    return summary, pmf.at(m - 1), pmf.at(m), pmf.at(m + 1)


def crossing_height(pmf, tie_tol=DEFAULT_TIE_TOL):
    _, fl, fm, fr = _strict_neighbors(pmf, tie_tol)
    return (fm * fm - fl * fr) / (2.0 * fm - fl - fr)


def peak_after_bernoulli(pmf, p, tie_tol=DEFAULT_TIE_TOL):
    """Peak height of S + B with B ~ Bernoulli(p) independent of S.

    Below gamma* the peak stays at m, above it moves to m + 1, and at gamma*
    both heights meet at the crossing height. A twin top keeps its height.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"success probability {p!r} lies outside [0, 1]")
    summary = mode_of(pmf, tie_tol)
    if summary.twin:
        return summary.peak
    m = summary.m_plus
    fl, fm, fr = pmf.at(m - 1), pmf.at(m), pmf.at(m + 1)
    denom = 2.0 * fm - fl - fr
    gamma = (fm - fr) / denom
    if p < gamma:
        return (1.0 - p) * fm + p * fl
    if p > gamma:
        return (1.0 - p) * fr + p * fm
    return (fm * fm - fl * fr) / denom


def median_interval(pmf):
    """Integer interval of k with P[S <= k] >= 1/2 and P[S >= k] >= 1/2."""
    mass = pmf.mass
    below = np.cumsum(mass)
    above = np.cumsum(mass[::-1])[::-1]
    ok = np.flatnonzero((below >= 0.5 - MEDIAN_SLACK) & (above >= 0.5 - MEDIAN_SLACK))
    if ok.size == 0:
        raise InvalidArgument("probability function has no median inside its window")
    return MedianInterval(pmf.shift + int(ok[0]), pmf.shift + int(ok[-1]))


def peak_finite_difference(profile, i, step=FD_STEP, eps=DEFAULT_EPS):
    """Central difference of the peak height in p_i, one-sided at the ends of [0, 1]."""
    p = profile.probs[i]
    lo, hi = max(p - step, 0.0), min(p + step, 1.0)
    h_lo = pmf_dp(profile.with_prob(i, lo), eps).peak
    h_hi = pmf_dp(profile.with_prob(i, hi), eps).peak
    return (h_hi - h_lo) / (hi - lo)


def peak_lambda_slope(profile, step=FD_STEP, eps=DEFAULT_EPS):
    """Finite-difference slope of the peak height in lam; never positive."""
    lo = max(profile.lam - step, 0.0)
    hi = profile.lam + step
    h_lo = pmf_dp(profile.with_lam(lo), eps).peak
    h_hi = pmf_dp(profile.with_lam(hi), eps).peak
    return (h_hi - h_lo) / (hi - lo)


def peak_derivative_class(profile, i, tie_tol=DEFAULT_TIE_TOL, eps=DEFAULT_EPS):
    """Sign of the derivative of the peak height in p_i, read off the leave-one-out mode.

    With k the leading mode of the full profile, the peak grows when the
    leave-one-out law has the single mode k - 1, is flat when it is twin on
    {k - 1, k}, and shrinks when its lower mode is already k.
    """
    if not profile.finitary:
        raise InvalidArgument("peak derivatives are classified on finitary profiles only")
    if not 0 <= i < profile.n:
        raise InvalidArgument(f"coordinate {i} out of range for {profile.n} success probabilities")
    k = mode_of(pmf_dp(profile, eps), tie_tol).m_plus
    loo = mode_of(pmf_dp(profile.without(i), eps), tie_tol)
    if loo.twin and loo.m_minus == k - 1:
        verdict = PeakDirection.STATIONARY
    elif loo.m_plus <= k - 1:
        verdict = PeakDirection.INCREASING
    else:
        verdict = PeakDirection.DECREASING

    slope = peak_finite_difference(profile, i, eps=eps)
    if abs(slope) <= FD_ZERO:
        observed = PeakDirection.STATIONARY
    elif slope > 0:
        observed = PeakDirection.INCREASING
    else:
        observed = PeakDirection.DECREASING
    if observed is not verdict:
        logger.warning(
            "peak derivative for coordinate %d: mode rule says %s, finite difference %.3e says %s",
            i, verdict.value, slope, observed.value,
        )
    return verdict
