"""
Mean-mode rule for extended Bernoulli sums.

``darroch_check`` verifies that the modes sit within one unit of the mean, with a
single mode equal to an integer mean unless the law is a shifted Poisson.
``region_classify`` refines this for finitely many Bernoulli terms: around every
integer k there is an interval of means that forces the single mode k.
"""
import enum
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .ebs_core import DEFAULT_EPS, Profile, mean, pmf_dp
from .exceptions import BudgetExceeded, ContractViolation, InvalidArgument
from .modal_analysis import DEFAULT_TIE_TOL, mode_of

logger = logging.getLogger(__name__)

MAX_TAIL_MASS = 1e-9
INTEGER_TOL = 1e-12
BALANCE_TOL = 1e-10


class Classification(str, enum.Enum):
    DEFINITE_SINGLE = "definite-single"
    TWIN_LOWER = "twin-lower"
    TWIN_UPPER = "twin-upper"
    AMBIGUOUS_BAND = "ambiguous-band"
    INTEGER_MEAN_SINGLE = "integer-mean-single"
    SHIFTED_POISSON = "shifted-poisson-exception"


@dataclass(frozen=True)
class DarrochVerdict:
    mu: float
    m_minus: int
    m_plus: int
    classification: Classification
    passed: bool
    detail: str = ""


class FinitaryBounds(NamedTuple):
    min_mu: float
    max_mu: float
    argmin: Profile
    argmax: Profile


def integer_mean(mu):
    """The integer equal to ``mu`` within the relative tolerance, else None."""
    k = round(mu)
    return k if abs(mu - k) <= INTEGER_TOL * max(1.0, mu) else None


def is_shifted_poisson(profile, tol=INTEGER_TOL):
    """Integer Poisson rate >= 1 and every success probability in {0, 1}."""
    lam = profile.lam
    if lam < 1 or abs(lam - round(lam)) > tol:
        return False
    return all(p <= tol or p >= 1.0 - tol for p in profile.probs)


def _twin_side(mu, summary):
    return Classification.TWIN_UPPER if mu - summary.m_minus < 0.5 else Classification.TWIN_LOWER


def _close_profiles(a, b, tol=INTEGER_TOL):
    pa, pb = a.sorted().probs, b.sorted().probs
    width = max(len(pa), len(pb))
    pa += (0.0,) * (width - len(pa))
    pb += (0.0,) * (width - len(pb))
    return abs(a.lam - b.lam) <= tol and all(abs(x - y) <= tol for x, y in zip(pa, pb))


def _region_verdict(profile, summary, mu):
    """Check the mode against the region table of means.

    n counts the positive success probabilities and is infinite when lam > 0.
    """
    modes = set(summary.modes)
    if is_shifted_poisson(profile):
        k = round(mu)
        return DarrochVerdict(
            mu, summary.m_minus, summary.m_plus, Classification.SHIFTED_POISSON,
            summary.twin and modes == {k - 1, k},
        )
    n = math.inf if profile.lam > 0 else profile.n_positive
    k0 = math.floor(mu + INTEGER_TOL * max(1.0, mu))
    k1 = k0 + 1
    tol = INTEGER_TOL * max(1.0, mu)
    upper = k0 + 1.0 / (k0 + 2)
    lower = k1 - (0.0 if math.isinf(n) else 1.0 / (n - k1 + 2)) if k1 <= n else math.inf

    if mu < upper - tol:
        verdict, ok = Classification.DEFINITE_SINGLE, modes == {k0}
    elif mu > lower + tol:
        verdict, ok = Classification.DEFINITE_SINGLE, modes == {k1}
    elif abs(mu - upper) <= tol or abs(mu - lower) <= tol:
        verdict = Classification.TWIN_UPPER if abs(mu - upper) <= tol else Classification.TWIN_LOWER
        ok = modes <= {k0, k1}
        if profile.lam == 0 and 0 < k1 <= n:
            bounds = finitary_bounds(k1, n, verify=False)
            extremal = bounds.argmin if verdict is Classification.TWIN_UPPER else bounds.argmax
            if _close_profiles(profile, extremal):
                ok = ok and summary.twin
        logger.warning(
            "profile on the %s boundary mu=%.15g has modes %s", verdict.value, mu, sorted(modes),
        )
    else:
        verdict, ok = Classification.AMBIGUOUS_BAND, modes <= {k0, k1}
    return DarrochVerdict(mu, summary.m_minus, summary.m_plus, verdict, ok)


def darroch_check(profile, tie_tol=DEFAULT_TIE_TOL, eps=DEFAULT_EPS):
    if profile.tail_mass >= MAX_TAIL_MASS:
        raise BudgetExceeded(f"tail_mass {profile.tail_mass:g} is too large to certify the mode")
    summary = mode_of(pmf_dp(profile, eps), tie_tol)
    mu = mean(profile)
    k = integer_mean(mu)
    notes = []

    if k is not None:
        if is_shifted_poisson(profile):
            classification = Classification.SHIFTED_POISSON
            passed = summary.twin and summary.modes == (k - 1, k)
        else:
            classification = Classification.INTEGER_MEAN_SINGLE
            passed = not summary.twin and summary.m_plus == k
    else:
        k = math.floor(mu)
        classification = _twin_side(mu, summary) if summary.twin else Classification.DEFINITE_SINGLE
        passed = k <= summary.m_minus <= summary.m_plus <= k + 1
        if profile.n:
            top = max(range(profile.n), key=lambda i: profile.probs[i])
            loo = mode_of(pmf_dp(profile.without(top), eps), tie_tol)
            if loo.m_plus > k:
                notes.append(f"leave-out-max mode {loo.m_plus} exceeds {k}")
                passed = False

    if profile.finitary:
        region = _region_verdict(profile, summary, mu)
        if not region.passed:
            notes.append(f"region table ({region.classification.value}) violated")
            passed = False

    if not passed:
        logger.warning("mean-mode rule fails at mu=%.15g, modes %s", mu, summary.modes)
    return DarrochVerdict(mu, summary.m_minus, summary.m_plus, classification, passed, "; ".join(notes))


def region_classify(profile, tie_tol=DEFAULT_TIE_TOL, eps=DEFAULT_EPS):
    """Place the mean of a pure Bernoulli sum in the region table and verify its mode."""
    if profile.lam != 0:
        raise InvalidArgument("the region table is defined for lam = 0")
    if not profile.finitary:
        raise InvalidArgument("the region table needs a finitary profile")
    summary = mode_of(pmf_dp(profile, eps), tie_tol)
    return _region_verdict(profile, summary, mean(profile))


def _balanced(profile, k, eps=DEFAULT_EPS):
    pmf = pmf_dp(profile, eps)
    lo, hi = pmf.at(k - 1), pmf.at(k)
    return abs(lo - hi) <= BALANCE_TOL * max(lo, hi)


def finitary_bounds(k, n, verify=True):
    """Extreme means over the profiles of n Bernoulli terms whose mode bifurcates at k.

    min mu = k - 1 + 1/(k+1), attained by k copies of k/(k+1);
    max mu = k - 1/(n-k+2), attained by k-1 ones and n-k+1 copies of 1/(n-k+2).
    """
    if not 0 < k <= n:
        raise InvalidArgument(f"need 0 < k <= n, got k={k}, n={n}")
    argmin = Profile(probs=(k / (k + 1),) * k + (0.0,) * (n - k))
    argmax = Profile(probs=(1.0,) * (k - 1) + (1.0 / (n - k + 2),) * (n - k + 1))
    if verify:
        for extremal in (argmin, argmax):
            if not _balanced(extremal, k):
                raise ContractViolation(f"extremal profile {extremal.probs} is not balanced at {k}")
    return FinitaryBounds(k - 1 + 1.0 / (k + 1), k - 1.0 / (n - k + 2), argmin, argmax)


def me_extremal_simplex(k, n):
    """Vertices of {1 >= p_1 >= ... >= p_n >= 0, sum p = k}.

    Besides (1^k, 0^(n-k)) every vertex cuts an edge between (1^a, 0^(n-a)) and
    (1^b, 0^(n-b)) with a < k < b: (1^a, ((k-a)/(b-a))^(b-a), 0^(n-b)).
    """
    if not 0 < k < n:
        raise InvalidArgument(f"need 0 < k < n, got k={k}, n={n}")
    vertices = [(Fraction(1),) * k + (Fraction(0),) * (n - k)]
    for a in range(k):
        for b in range(k + 1, n + 1):
            theta = Fraction(k - a, b - a)
            vertices.append((Fraction(1),) * a + (theta,) * (b - a) + (Fraction(0),) * (n - b))
    for v in vertices:
        if sum(v) != k:
            raise ContractViolation(f"vertex {v} does not sum to {k}")
    return [Profile(probs=tuple(float(x) for x in v)) for v in vertices]
