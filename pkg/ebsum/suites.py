"""
Seeded randomized property suites.

Each suite draws its profiles from ``numpy.random.default_rng(seed)`` and returns
one ``CaseResult`` per case, so identical seeds give identical rows.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import darroch, transport
from .ebs_core import (
    DEFAULT_EPS, Profile, aligned, enumerate_pmf, max_relative_gap, mean, pmf_dp,
    pmf_symmetric, profile_hash, random_profile, size_bias_residual, symmetric_table,
)
from .exceptions import NoImprovement
from .modal_analysis import DEFAULT_TIE_TOL, mode_of

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-11
ENGINE_RTOL = 1e-10
ORACLE_ATOL = 1e-13
CONCAVITY_SLACK = 1e-10
IDENTITY_TOL = 1e-11
ORACLE_MAX_N = 16
MLR_STEP = 0.01
MLR_FLOOR = 1e-300
GRID_SLACK = 1e-3
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class CaseResult:
    seed: int
    case: int
    profile_hash: str
    mu: float
    m_minus: int
    m_plus: int
    passed: bool
    detail: str = ""


def _row(seed, case, profile, summary, failures):
    if failures:
        logger.warning("seed %d case %d (%s) failed: %s", seed, case, profile_hash(profile), "; ".join(failures))
    return CaseResult(
        seed, case, profile_hash(profile), mean(profile),
        summary.m_minus, summary.m_plus, not failures, "; ".join(failures),
    )


def _log_mass(mass):
    with np.errstate(divide="ignore"):
        return np.log(mass)


def _concavity_failures(pmf):
    failures = []
    lm = _log_mass(pmf.mass)
    if lm.size < 3:
        return failures
    left, mid, right = lm[:-2], lm[1:-1], lm[2:]
    ok = np.isfinite(left) & np.isfinite(mid) & np.isfinite(right)
    slack = math.log1p(-CONCAVITY_SLACK)
    if np.any(2 * mid[ok] < left[ok] + right[ok] + slack):
        failures.append("logconcavity")
    k = np.arange(1, lm.size - 1)
    if np.any((np.log(k) + 2 * mid)[ok] < (np.log(k + 1) + left + right)[ok] + slack):
        failures.append("ultra-logconcavity")
    return failures


def _mlr_holds(before, after):
    """f'(k+1)/f'(k) > f(k+1)/f(k) wherever all four masses exceed the floor."""
    lo = min(before.shift, after.shift)
    hi = max(before.shift + len(before), after.shift + len(after))
    a, b = before.window(lo, hi), after.window(lo, hi)
    keep = (a[:-1] > MLR_FLOOR) & (a[1:] > MLR_FLOOR) & (b[:-1] > MLR_FLOOR) & (b[1:] > MLR_FLOOR)
    return bool(np.all((b[1:] * a[:-1])[keep] > (a[1:] * b[:-1])[keep]))


def ebs_properties_suite(seed, cases=500, n_max=30, lam_max=10.0, eps=DEFAULT_EPS, tie_tol=DEFAULT_TIE_TOL):
    """Normalization, engine and oracle agreement, (ultra-)logconcavity, the
    k f(k) identity and monotone likelihood ratios on random profiles."""
    rng = np.random.default_rng(seed)
    rows = []
    for case in range(cases):
        profile = random_profile(rng, n_max=n_max, lam_max=lam_max)
        dp = pmf_dp(profile, eps)
        summary = mode_of(dp, tie_tol)
        failures = []

        if abs(dp.total - 1.0) > NORMALIZATION_TOL:
            failures.append(f"normalization off by {dp.total - 1.0:.3e}")
        gap = max_relative_gap(*aligned([dp, pmf_symmetric(profile, eps)]))
        if gap > ENGINE_RTOL:
            failures.append(f"engines differ by {gap:.3e}")
        if profile.lam == 0 and profile.n <= ORACLE_MAX_N:
            a, b = aligned([dp, enumerate_pmf(profile.probs)])
            if np.max(np.abs(a - b)) > ORACLE_ATOL:
                failures.append("enumeration oracle disagrees")
        failures += _concavity_failures(dp)
        residual = size_bias_residual(profile, summary.m_plus, eps)
        if residual > IDENTITY_TOL:
            failures.append(f"identity residual {residual:.3e}")

        if profile.n or profile.lam:
            i = int(rng.integers(-1, profile.n))
            lower = profile
            if i < 0:
                raised = profile.with_lam(profile.lam + MLR_STEP)
            else:
                p = profile.probs[i]
                raised = profile.with_prob(i, min(p + MLR_STEP, 1.0))
                if raised.probs[i] == 1.0:
                    lower, raised = profile.with_prob(i, p - MLR_STEP), profile
            if not _mlr_holds(pmf_dp(lower, eps), pmf_dp(raised, eps)):
                failures.append("monotone likelihood ratio")
        rows.append(_row(seed, case, profile, summary, failures))
    return rows


def darroch_suite(seed, cases=10_000, n_max=20, lam_max=5.0, eps=DEFAULT_EPS, tie_tol=DEFAULT_TIE_TOL):
    rng = np.random.default_rng(seed)
    rows = []
    for case in range(cases):
        profile = random_profile(rng, n_max=n_max, lam_max=lam_max)
        verdict = darroch.darroch_check(profile, tie_tol, eps)
        failures = [] if verdict.passed else [verdict.detail or verdict.classification.value]
        mu = verdict.mu
        if abs(mu - verdict.m_plus) > 1 or abs(mu - verdict.m_minus) > 1:
            failures.append("mode farther than 1 from the mean")
        if profile.lam == 0 and profile.n:
            k = math.ceil(mu + min(profile.probs)) - 1
            if verdict.m_minus < k:
                failures.append(f"mu + min p exceeds {k} but the lower mode is {verdict.m_minus}")
        rows.append(CaseResult(
            seed, case, profile_hash(profile), mu, verdict.m_minus, verdict.m_plus,
            not failures, "; ".join(failures),
        ))
    return rows


def _integer_mean_profile(rng):
    """A random profile with one coordinate (or the Poisson rate) moved to make the mean integral."""
    while True:
        n = int(rng.integers(1, 13))
        probs = rng.uniform(0.02, 0.98, n)
        lam = float(rng.uniform(0.0, 5.0)) if rng.random() < 0.5 else 0.0
        mu = lam + math.fsum(probs)
        k = int(rng.choice([math.floor(mu), math.ceil(mu)]))
        gap = k - mu
        if lam > 0 and lam + gap > 0:
            lam += gap
        else:
            i = int(rng.integers(n))
            if not 0.0 <= probs[i] + gap <= 1.0:
                continue
            probs[i] += gap
        return Profile(lam=lam, probs=tuple(probs))


def integer_mean_suite(seed, cases=1000, eps=DEFAULT_EPS, tie_tol=DEFAULT_TIE_TOL):
    rng = np.random.default_rng(seed)
    rows = []
    expected = (darroch.Classification.INTEGER_MEAN_SINGLE, darroch.Classification.SHIFTED_POISSON)
    for case in range(cases):
        profile = _integer_mean_profile(rng)
        verdict = darroch.darroch_check(profile, tie_tol, eps)
        failures = []
        if verdict.classification not in expected:
            failures.append(f"mean {verdict.mu!r} not recognized as an integer")
        elif not verdict.passed:
            failures.append(verdict.detail or "integer mean is not the single mode")
        rows.append(CaseResult(
            seed, case, profile_hash(profile), verdict.mu, verdict.m_minus, verdict.m_plus,
            not failures, "; ".join(failures),
        ))
    return rows


def sample_bifurcation_profile(rng, k, n):
    """Random profile of n Bernoulli terms with f(k-1) = f(k).

    Random odds are scaled along their ray by e_(k-1)(r) / e_k(r), which puts the
    mode bifurcation exactly at k.
    """
    odds = np.exp(rng.uniform(0.0, 4.0) * rng.standard_normal(n))
    zeros = int(rng.integers(0, n - k + 1))
    if zeros:
        odds[rng.choice(n, size=zeros, replace=False)] = 0.0
    e = symmetric_table(0.0, odds, 1).e
    scaled = odds * (e[k - 1] / e[k])
    return Profile(probs=tuple(scaled / (1.0 + scaled)))


def finitary_pairs(n_max):
    """(k, n) with 1 <= k <= n <= n_max; case j of ``finitary_suite`` samples pair j mod len."""
    return [(k, n) for n in range(1, n_max + 1) for k in range(1, n + 1)]


def finitary_suite(seed, cases=10_000, n_max=6, eps=DEFAULT_EPS, tie_tol=DEFAULT_TIE_TOL):
    """Random search over bifurcation manifolds checking the closed-form extreme means."""
    rng = np.random.default_rng(seed)
    pairs = finitary_pairs(n_max)
    bounds = {pair: darroch.finitary_bounds(*pair) for pair in pairs}
    rows = []
    for case in range(cases):
        k, n = pairs[case % len(pairs)]
        profile = sample_bifurcation_profile(rng, k, n)
        pmf = pmf_dp(profile, eps)
        summary = mode_of(pmf, tie_tol)
        failures = []
        lo, hi = pmf.at(k - 1), pmf.at(k)
        if abs(lo - hi) > darroch.BALANCE_TOL * max(lo, hi):
            failures.append(f"sample is not balanced at {k}")
        mu = mean(profile)
        b = bounds[(k, n)]
        if not b.min_mu - BOUND_SLACK <= mu <= b.max_mu + BOUND_SLACK:
            failures.append(f"mean {mu!r} outside [{b.min_mu!r}, {b.max_mu!r}] for k={k}, n={n}")
        rows.append(_row(seed, case, profile, summary, failures))
    return rows


@dataclass(frozen=True)
class TransportReport:
    mode: int
    coefficients: Optional[transport.ABC]
    two_point: transport.TransportPlan
    one_bernoulli: transport.TransportPlan
    two_bernoulli: Optional[transport.TransportPlan]
    grid_cost: float
    failures: tuple


def transport_report(pmf, tie_tol=DEFAULT_TIE_TOL):
    """All transport plans of one probability function, cross-checked against each other."""
    summary = mode_of(pmf, tie_tol)
    best = transport.optimal_two_point(pmf, tie_tol)
    single = transport.one_bernoulli_plan(pmf, tie_tol)
    _, _, grid_cost = transport.two_point_grid_oracle(pmf, tie_tol=tie_tol)
    if summary.twin:
        return TransportReport(summary.m_plus, None, best, single, None, grid_cost, ())

    failures = []
    coefficients = transport.abc_coefficients(pmf, tie_tol)
    if grid_cost < best.cost - GRID_SLACK:
        failures.append(f"grid plan of cost {grid_cost:.6g} beats {best.cost:.6g}")
    if best.cost > single.cost + BOUND_SLACK:
        failures.append("two-point optimum costs more than one Bernoulli term")
    try:
        double = transport.two_bernoulli_plan(pmf, tie_tol)
    except NoImprovement:
        double = None
    else:
        if not double.cost < single.cost:
            failures.append("two-Bernoulli plan is not cheaper despite A < 0")
    return TransportReport(summary.m_plus, coefficients, best, single, double, grid_cost, tuple(failures))


def transport_suite(seed, cases=20, n_max=10, lam_max=5.0, eps=DEFAULT_EPS, tie_tol=DEFAULT_TIE_TOL):
    """Optimal two-point plans against the grid oracle and the one/two-Bernoulli costs."""
    rng = np.random.default_rng(seed)
    rows = []
    for case in range(cases):
        profile = random_profile(rng, n_max=n_max, lam_max=lam_max, n_min=1)
        pmf = pmf_dp(profile, eps)
        summary = mode_of(pmf, tie_tol)
        report = transport_report(pmf, tie_tol)
        rows.append(_row(seed, case, profile, summary, list(report.failures)))
    return rows
