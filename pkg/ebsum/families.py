"""
Parametric families of extended Bernoulli sums and their likelihood maximizers.

A family is anything exposing ``modes_at(theta)``, ``maximizers(k)``,
``pmf_at(theta)`` and ``mean_at(theta)``; ``cross_modality_scan`` only relies on
that protocol. Binomial and Poisson answers are exact when the parameter is given
as a ``Fraction`` (or an int) and use a relative tie tolerance otherwise.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import optimize, special

from .ebs_core import DEFAULT_EPS, Pmf, Profile, TailKind, add_bernoulli, mean, pmf_dp, symmetric_table
from .exceptions import (
    BudgetExceeded, ContractViolation, IllegalStep, InvalidArgument, InvalidFamily,
)
from .modal_analysis import DEFAULT_TIE_TOL, mode_of, peak_skewness

logger = logging.getLogger(__name__)

DEFAULT_COEFF_CAP = 10**6
INITIAL_TERMS = 64
PSD_MEAN_EPS = 1e-15
RATIO_SLACK = 1e-12
ROOT_RTOL = 1e-12
CHECK_TOL = 1e-9
MAX_BRACKET = 1e300


class Interval(NamedTuple):
    lo: int
    hi: int

    def __contains__(self, k):
        return self.lo <= k <= self.hi

    @property
    def members(self):
        return tuple(range(self.lo, self.hi + 1))


def _exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _near_integer(x, tie_tol):
    r = round(x)
    return r if abs(x - r) <= tie_tol * max(1.0, abs(x)) else None


# --------------------------------------------------
# Binomial and Poisson closed forms
# --------------------------------------------------

def binomial_mode(n, p, tie_tol=DEFAULT_TIE_TOL):
    """[m_minus, m_plus] of Binomial(n, p) from k <= (n+1)p < k+1."""
    if n < 0:
        raise InvalidArgument(f"n must be nonnegative, got {n}")
    if not 0 <= p <= 1:
        raise InvalidArgument(f"success probability {p!r} lies outside [0, 1]")
    if p == 0:
        return Interval(0, 0)
    if p == 1:
        return Interval(n, n)
    x = (n + 1) * p
    if _exact(p):
        x = Fraction(x)
        if x.denominator == 1 and x >= 1:
            return Interval(int(x) - 1, int(x))
        return Interval(math.floor(x), math.floor(x))
    r = _near_integer(x, tie_tol)
    if r is not None and r >= 1:
        return Interval(r - 1, r)
    return Interval(math.floor(x), math.floor(x))


def likelihood_max_n(k, p, tie_tol=DEFAULT_TIE_TOL):
    """[l_minus(k), l_plus(k)]: the n maximizing f(k; n, p), from n <= k/p < n+1."""
    if k < 0:
        raise InvalidArgument(f"k must be nonnegative, got {k}")
    if not 0 < p < 1:
        raise InvalidArgument(f"success probability must lie in (0, 1), got {p!r}")
    if k == 0:
        return Interval(0, 0)
    x = k / Fraction(p) if _exact(p) else k / p
    if _exact(p):
        if x.denominator == 1:
            return Interval(int(x) - 1, int(x))
        return Interval(math.floor(x), math.floor(x))
    r = _near_integer(x, tie_tol)
    if r is not None and r >= 1:
        return Interval(r - 1, r)
    return Interval(math.floor(x), math.floor(x))


def likelihood_max_p(k, n):
    """k/n as an exact fraction; its binomial mode contains k."""
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    if not 0 <= k <= n:
        raise InvalidArgument(f"k={k} lies outside 0..{n}")
    p = Fraction(k, n)
    if k not in binomial_mode(n, p):
        raise ContractViolation(f"mode of Binomial({n}, {p}) misses {k}")
    return p


def binomial_p_pivots(n):
    """Bifurcation points p_k = k/(n+1), k = 0..n+1, of the binomial-p family."""
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    return [Fraction(k, n + 1) for k in range(n + 2)]


def binomial_p_interlacing(n):
    """p_k < k/n < p_{k+1} for every 1 <= k < n."""
    pivots = binomial_p_pivots(n)
    return all(pivots[k] < Fraction(k, n) < pivots[k + 1] for k in range(1, n))


def binomial_pmf_exact(k, n, p):
    if not 0 <= k <= n:
        return Fraction(0)
    p = Fraction(p)
    return math.comb(n, k) * p ** k * (1 - p) ** (n - k)


def bifurcation_identity(a, b, c):
    """C(cb-1, ca-1) b(b-a) = C(cb-1, ca) ab = C(cb, ca) a(b-a) in integers."""
    if not 0 < a < b or c < 1:
        raise InvalidArgument(f"need 0 < a < b and c >= 1, got a={a}, b={b}, c={c}")
    left = math.comb(c * b - 1, c * a - 1) * b * (b - a)
    middle = math.comb(c * b - 1, c * a) * a * b
    right = math.comb(c * b, c * a) * a * (b - a)
    return left == middle == right


def binomial_cross_pattern(k, n, p):
    """Exact comparison pattern around the cross mode (k, n) of the binomial-n family.

    Strict case: f(k-1; n) < f(k; n) > f(k+1; n) and f(k; n-1) < f(k; n) > f(k; n+1).
    When k = (n+1)p the mode bifurcates: the left and lower relations become equalities.
    """
    p = Fraction(p)
    f = lambda kk, nn: binomial_pmf_exact(kk, nn, p)  # noqa: E731
    centre = f(k, n)
    if (n + 1) * p == k:
        return (
            f(k - 1, n) == centre > f(k + 1, n)
            and f(k, n - 1) < centre == f(k, n + 1)
        )
    return (
        f(k - 1, n) < centre > f(k + 1, n)
        and f(k, n - 1) < centre > f(k, n + 1)
    )


def poisson_mode(t, tie_tol=DEFAULT_TIE_TOL):
    if t < 0:
        raise InvalidArgument(f"Poisson rate must be nonnegative, got {t!r}")
    if _exact(t):
        t = Fraction(t)
        if t.denominator == 1 and t >= 1:
            return Interval(int(t) - 1, int(t))
        return Interval(math.floor(t), math.floor(t))
    r = _near_integer(t, tie_tol)
    if r is not None and r >= 1:
        return Interval(r - 1, r)
    return Interval(math.floor(t), math.floor(t))


def poisson_pivots(k):
    """Bifurcation point t_k = k, which is also the likelihood maximizer of f(k; t)."""
    if k < 1:
        raise InvalidArgument(f"k must be positive, got {k}")
    return k


def poisson_pmf(t, eps=DEFAULT_EPS):
    return pmf_dp(Profile(lam=float(t)), eps)


# --------------------------------------------------
# Power series distributions
# --------------------------------------------------

@dataclass(frozen=True, eq=False)
class PowerSeries:
    """f(k; t) = a_k t^k / F(t), described by a vectorized ``log_coeff(k) = log a_k``.

    ``degree`` is None for entire series and the polynomial degree otherwise.
    """

    name: str
    log_coeff: Callable[[np.ndarray], np.ndarray]
    degree: Optional[int] = None
    params: dict = field(default_factory=dict)
    parameter = "t"

    @property
    def tag(self):
        return self.name

    def log_coeffs(self, size):
        """log a_0..log a_{size-1}, -inf past the degree, validated on the prefix."""
        k = np.arange(size)
        if self.degree is not None:
            k = k[k <= self.degree]
        vals = np.asarray(self.log_coeff(k), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise InvalidFamily(f"{self.name}: coefficients must be positive and finite")
        steps = np.diff(vals)
        if steps.size > 1 and np.any(np.diff(steps) > RATIO_SLACK * (1.0 + np.abs(steps[1:]))):
            raise InvalidFamily(f"{self.name}: coefficient quotients a_(k+1)/a_k must decrease")
        out = np.full(size, -np.inf)
        out[:vals.size] = vals
        return out

    def modes_at(self, t, tie_tol=DEFAULT_TIE_TOL):
        if math.isinf(t):
            return (self.degree,)
        return mode_of(psd_pmf(self, t), tie_tol).modes

    def maximizers(self, k):
        return (psd_likelihood_max(self, k),)

    def pmf_at(self, t, eps=DEFAULT_EPS):
        return psd_pmf(self, t, eps)

    def mean_at(self, t):
        return psd_mean(self, t)


def poisson_series():
    return PowerSeries("psd-poisson", lambda k: -special.gammaln(k + 1))


def cosh_series():
    """F(t) = cosh(sqrt(t)), a_k = 1/(2k)!."""
    return PowerSeries("psd-cosh", lambda k: -special.gammaln(2 * k + 1))


def binomial_series(n):
    """F(t) = (1 + t)^n; t = p/(1-p) recovers Binomial(n, p)."""
    if n < 1:
        raise InvalidArgument(f"degree must be positive, got {n}")
    return PowerSeries(
        "psd-binomial",
        lambda k: special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1),
        degree=n,
        params={"n": n},
    )


def adversarial_series(k0=2, small=0.01):
    """a_j = small^(-min(j, k0-1)) / j!: ultra logconcave, yet not cross modal at k0."""
    if k0 < 2 or not 0 < small < 1:
        raise InvalidArgument("need k0 >= 2 and 0 < small < 1")
    return PowerSeries(
        "psd-adversarial",
        lambda k: -special.gammaln(k + 1) - np.minimum(k, k0 - 1) * math.log(small),
        params={"k0": k0, "small": small},
    )


def profile_power_series(base):
    """F(t) = e^(lam t) prod(1 + r_i t), the power series of the scaled profile family."""
    if base.max_prob >= 1.0:
        raise InvalidArgument("scaling needs every success probability below 1")
    odds = base.odds
    odds = odds[odds > 0]
    n = odds.size
    log_e = np.log(symmetric_table(0.0, odds, 1).e)
    lam = base.lam
    if lam == 0:
        return PowerSeries("scaled-ebs", lambda k: log_e[k], degree=n, params={"base": base})

    log_lam = math.log(lam)

    def log_coeff(k):
        j = np.arange(n + 1)
        d = np.asarray(k)[:, None] - j
        safe = np.maximum(d, 0)
        terms = np.where(d >= 0, log_e[j] + safe * log_lam - special.gammaln(safe + 1), -np.inf)
        return special.logsumexp(terms, axis=1)

    return PowerSeries("scaled-ebs", log_coeff, params={"base": base})


def _log_terms(spec, t, eps, cap):
    """log(a_k t^k) for k = 0..K, log of their sum, and the certified relative tail."""
    if t < 0:
        raise InvalidArgument(f"t must be nonnegative, got {t!r}")
    if t == 0:
        head = spec.log_coeffs(1)
        return head, float(head[0]), 0.0
    log_t = math.log(t)
    size = INITIAL_TERMS
    while True:
        lt = spec.log_coeffs(size + 1) + np.arange(size + 1) * log_t
        if spec.degree is not None and spec.degree <= size:
            head = lt[:spec.degree + 1]
            return head, float(special.logsumexp(head)), 0.0
        head = lt[:size]
        lse = float(special.logsumexp(head))
        q = math.exp(lt[size] - lt[size - 1])
        if q < 1.0:
            rel = math.exp(lt[size] - lse) / (1.0 - q)
            if rel < eps:
                return head, lse, rel
        if size >= cap:
            raise BudgetExceeded(f"{spec.name}: more than {cap} coefficients needed at t={t}")
        size = min(2 * size, cap)
        logger.debug("%s: materializing %d coefficients at t=%s", spec.name, size, t)


def psd_pmf(spec, t, eps=DEFAULT_EPS, cap=DEFAULT_COEFF_CAP):
    """Normalized by the partial sum plus the tail bound; trunc_err is the relative tail."""
    lt, lse, rel = _log_terms(spec, t, eps, cap)
    return Pmf(np.exp(lt - lse) / (1.0 + rel), 0, rel)


def psd_mean(spec, t, eps=PSD_MEAN_EPS, cap=DEFAULT_COEFF_CAP):
    """mu(t) = t d/dt log F(t)."""
    if t == 0:
        return 0.0
    lt, lse, _ = _log_terms(spec, t, eps, cap)
    if lt.size == 1:
        return 0.0
    k = np.arange(1, lt.size)
    return float(np.exp(special.logsumexp(lt[1:] + np.log(k)) - lse))


def psd_bifurcation(spec, k):
    """t_k = a_(k-1)/a_k, where f(k-1; t) = f(k; t)."""
    if k < 1:
        raise InvalidArgument(f"k must be positive, got {k}")
    if spec.degree is not None and k > spec.degree:
        raise InvalidArgument(f"{spec.name} has no bifurcation beyond its degree {spec.degree}")
    la = spec.log_coeffs(k + 1)
    t = math.exp(la[k - 1] - la[k])
    pmf = psd_pmf(spec, t)
    lo, hi = pmf.at(k - 1), pmf.at(k)
    if not math.isclose(lo, hi, rel_tol=CHECK_TOL):
        raise ContractViolation(f"{spec.name}: f({k - 1})={lo!r} and f({k})={hi!r} differ at t_{k}={t!r}")
    return t


def psd_likelihood_max(spec, k, cap=DEFAULT_COEFF_CAP):
    """Root of mu(t) = k; +inf for a polynomial family at its degree."""
    if k < 0:
        raise InvalidArgument(f"k must be nonnegative, got {k}")
    if k == 0:
        return 0.0
    if spec.degree is not None:
        if k == spec.degree:
            return math.inf
        if k > spec.degree:
            raise InvalidArgument(f"k={k} exceeds the degree {spec.degree} of {spec.name}")

    def excess(t):
        return psd_mean(spec, t, cap=cap) - k

    lo, hi = 0.0, 1.0
    while excess(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > MAX_BRACKET:
            raise BudgetExceeded(f"{spec.name}: could not bracket mu(t) = {k}")
    logger.debug("%s: likelihood maximizer of k=%d bracketed in [%s, %s]", spec.name, k, lo, hi)
    return optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=ROOT_RTOL)


@dataclass(frozen=True)
class CrossModalEntry:
    k: int
    ell: tuple
    modes: tuple
    passed: bool
    pattern: Optional[bool] = None

    @property
    def ell_lo(self):
        return min(self.ell)

    @property
    def ell_hi(self):
        return max(self.ell)

    @property
    def m_lo(self):
        return min(self.modes)

    @property
    def m_hi(self):
        return max(self.modes)


@dataclass(frozen=True)
class CrossModalReport:
    entries: tuple
    conditions: dict = field(default_factory=dict)

    @property
    def all_pass(self):
        return all(e.passed for e in self.entries)

    @property
    def unanimous(self):
        """True when every evaluated equivalent condition agrees with the scan."""
        return all(v == self.all_pass for v in self.conditions.values())


def psd_cross_modal_check(spec, k_max, tol=CHECK_TOL, tie_tol=DEFAULT_TIE_TOL):
    """Evaluate the equivalent cross-modality conditions of a power series family.

    (i)   t_k <= l(k) <= t_{k+1}
    (ii)  k - 1 <= mu(t_k) <= k
    (iii) |mu(t) - m_plus(t)| <= 1, checked at both sides of every jump and at midpoints
    """
    if k_max < 1:
        raise InvalidArgument(f"k_max must be positive, got {k_max}")
    if spec.degree is not None and k_max >= spec.degree:
        logger.debug("%s: clipping k_max=%d below the degree %d", spec.name, k_max, spec.degree)
        k_max = spec.degree - 1
    ks = range(1, k_max + 1)
    pivots = {k: psd_bifurcation(spec, k) for k in range(1, k_max + 2)}
    ell = {k: psd_likelihood_max(spec, k) for k in ks}
    mu_at_pivot = {k: psd_mean(spec, pivots[k]) for k in pivots}

    cond_i = all(pivots[k] * (1 - tol) <= ell[k] <= pivots[k + 1] * (1 + tol) for k in ks)
    cond_ii = all(k - 1 - tol <= mu_at_pivot[k] <= k + tol for k in ks)
    gaps = []
    for k in ks:
        gaps.append(mu_at_pivot[k] - (k - 1))  # left limit, m_plus = k - 1
        gaps.append(k - mu_at_pivot[k])
        mid = 0.5 * (pivots[k] + pivots[k + 1])
        gaps.append(abs(psd_mean(spec, mid) - k))
    cond_iii = max(gaps) <= 1 + tol

    entries = []
    for k in ks:
        modes = spec.modes_at(ell[k], tie_tol)
        entries.append(CrossModalEntry(k, (ell[k],), modes, k in modes))
    report = CrossModalReport(tuple(entries), {"i": cond_i, "ii": cond_ii, "iii": cond_iii})
    if not report.unanimous:
        logger.warning("%s: cross-modality conditions disagree: %s", spec.name, report.conditions)
    return report


# --------------------------------------------------
# Scaled profiles and the Karamata-Stirling family
# --------------------------------------------------

def ebs_scale(base, t):
    """lam(t) = lam t and p_i(t) = t p_i / (1 - p_i + t p_i), i.e. odds scaled by t."""
    if t < 0:
        raise InvalidArgument(f"t must be nonnegative, got {t!r}")
    if base.max_prob >= 1.0:
        raise InvalidArgument("scaling needs every success probability below 1")
    if t == 1:
        return base
    probs = tuple(t * p / (1.0 - p + t * p) for p in base.probs)
    return Profile(
        lam=base.lam * t, probs=probs, tail_mass=base.tail_mass * max(1.0, t), tail_kind=base.tail_kind,
    )


def cosh_profile(t, n_terms):
    """Bernoulli factors of cosh(sqrt(t)) with the dropped tail replaced by a Poisson term.

    p_i = 4t / (4t + (2i-1)^2 pi^2). The Poisson rate carries the omitted mean
    sqrt(t) tanh(sqrt(t)) / 2 - sum p_i, and tail_mass bounds the total variation
    cost of that replacement by the sum of the omitted p_i^2.
    """
    if t <= 0 or n_terms < 1:
        raise InvalidArgument("need t > 0 and at least one term")
    i = np.arange(1, n_terms + 1)
    probs = 4.0 * t / (4.0 * t + (2 * i - 1) ** 2 * math.pi ** 2)
    root = math.sqrt(t)
    lam = max(0.5 * root * math.tanh(root) - math.fsum(probs), 0.0)
    tail_sq = 16.0 * t * t / math.pi ** 4 / (6.0 * (2 * n_terms - 1) ** 3)
    return Profile(lam=lam, probs=tuple(probs), tail_mass=tail_sq, tail_kind=TailKind.TOTAL_VARIATION)


def karamata_stirling_profile(t, n):
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t!r}")
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    return Profile(probs=tuple(t / (t + i - 1) for i in range(1, n + 1)))


def stirling_first_row(n):
    """Unsigned Stirling numbers of the first kind [n, k] for k = 0..n."""
    row = [1]
    for m in range(1, n + 1):
        nxt = [0] * (m + 1)
        for k in range(1, m + 1):
            nxt[k] = (m - 1) * (row[k] if k < m else 0) + row[k - 1]
        row = nxt
    return row


def karamata_stirling_pmf(t, n):
    """[n, k] t^k / (t)_n on k = 1..n from the exact triangle."""
    if not t > 0 or n < 1:
        raise InvalidArgument("need t > 0 and n >= 1")
    row = stirling_first_row(n)
    log_rising = special.gammaln(t + n) - special.gammaln(t)
    log_t = math.log(t)
    mass = [math.exp(math.log(row[k]) + k * log_t - log_rising) for k in range(1, n + 1)]
    return Pmf(mass, shift=1)


def karamata_stirling_u(n, t):
    """t (log n - digamma(t)), the first-order location of the mean and the modes."""
    return t * (math.log(n) - special.digamma(t))


def _argmax_set(values, offset, tie_tol):
    top = values.max()
    if top <= 0:
        return ()
    hits = np.flatnonzero(values >= top * (1.0 - tie_tol))
    return tuple(int(j) + offset for j in hits)


@lru_cache(maxsize=8)
def _stirling_second_rows(n_max):
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = k * (prev[k] if k < n else 0) + prev[k - 1]
        rows.append(row)
    return rows


# --------------------------------------------------
# Family specs
# --------------------------------------------------

@dataclass(frozen=True)
class BinomialN:
    p: object
    tie_tol: float = DEFAULT_TIE_TOL
    tag = "binomial-n"
    parameter = "n"

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidArgument(f"success probability must lie in (0, 1), got {self.p!r}")

    def modes_at(self, n):
        return binomial_mode(n, self.p, self.tie_tol).members

    def maximizers(self, k):
        return likelihood_max_n(k, self.p, self.tie_tol).members

    def pmf_at(self, n, eps=DEFAULT_EPS):
        return pmf_dp(Profile(probs=(float(self.p),) * n), eps)

    def mean_at(self, n):
        return n * float(self.p)


@dataclass(frozen=True)
class BinomialP:
    n: int
    tag = "binomial-p"
    parameter = "p"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f"n must be positive, got {self.n}")

    def modes_at(self, p):
        return binomial_mode(self.n, p).members

    def maximizers(self, k):
        return (likelihood_max_p(k, self.n),)

    def pmf_at(self, p, eps=DEFAULT_EPS):
        return pmf_dp(Profile(probs=(float(p),) * self.n), eps)

    def mean_at(self, p):
        return self.n * float(p)


@dataclass(frozen=True)
class PoissonT:
    tie_tol: float = DEFAULT_TIE_TOL
    tag = "poisson"
    parameter = "t"

    def modes_at(self, t):
        return poisson_mode(t, self.tie_tol).members

    def maximizers(self, k):
        if k < 0:
            raise InvalidArgument(f"k must be nonnegative, got {k}")
        return (poisson_pivots(k) if k else 0,)

    def pmf_at(self, t, eps=DEFAULT_EPS):
        return poisson_pmf(t, eps)

    def mean_at(self, t):
        return float(t)


@dataclass(frozen=True)
class ScaledEBS:
    base: Profile
    tie_tol: float = DEFAULT_TIE_TOL
    tag = "scaled-ebs"
    parameter = "t"

    def __post_init__(self):
        if self.base.max_prob >= 1.0:
            raise InvalidArgument("scaling needs every success probability below 1")

    @cached_property
    def series(self):
        return profile_power_series(self.base)

    def modes_at(self, t):
        return self.series.modes_at(t, self.tie_tol)

    def maximizers(self, k):
        return self.series.maximizers(k)

    def pmf_at(self, t, eps=DEFAULT_EPS):
        return pmf_dp(ebs_scale(self.base, t), eps)

    def mean_at(self, t):
        return mean(ebs_scale(self.base, t))


@dataclass(frozen=True)
class KaramataStirling:
    t: float
    n_max: int = 200
    tie_tol: float = DEFAULT_TIE_TOL
    tag = "karamata-stirling"
    parameter = "n"

    def __post_init__(self):
        if not self.t > 0:
            raise InvalidArgument(f"t must be positive, got {self.t!r}")

    def profile(self, n):
        return karamata_stirling_profile(self.t, n) if n else Profile()

    def modes_at(self, n):
        return mode_of(self.pmf_at(n), self.tie_tol).modes

    def pmf_at(self, n, eps=DEFAULT_EPS):
        return pmf_dp(self.profile(n), eps)

    def mean_at(self, n):
        return mean(self.profile(n))

    def likelihoods(self, k):
        """f(k; n, t) for n = 0..n_max, grown one Bernoulli factor at a time."""
        out = np.zeros(self.n_max + 1)
        out[0] = 1.0 if k == 0 else 0.0
        pmf = Pmf([1.0], shift=1)
        for n in range(1, self.n_max + 1):
            if n > 1:
                pmf = add_bernoulli(pmf, self.t / (self.t + n - 1))
            out[n] = pmf.at(k)
        return out

    def maximizers(self, k):
        if k < 0:
            raise InvalidArgument(f"k must be nonnegative, got {k}")
        if k == 0:
            return (0,)
        hits = _argmax_set(self.likelihoods(k), 0, self.tie_tol)
        if not hits or hits[-1] >= self.n_max:
            raise BudgetExceeded(f"likelihood of k={k} still increasing at n_max={self.n_max}")
        return hits


@dataclass(frozen=True)
class StirlingSecond:
    """f(k; n) = S(n, k) / B_n, Stirling numbers of the second kind over the Bell number."""

    n_max: int = 60
    tie_tol: float = DEFAULT_TIE_TOL
    tag = "stirling-second"
    parameter = "n"

    def _log_row(self, n):
        row = _stirling_second_rows(self.n_max)[n]
        log_bell = math.log(sum(row))
        return np.array([math.log(s) - log_bell if s else -np.inf for s in row])

    def pmf_at(self, n, eps=DEFAULT_EPS):
        if not 0 <= n <= self.n_max:
            raise BudgetExceeded(f"n={n} beyond n_max={self.n_max}")
        if n == 0:
            return Pmf([1.0])
        return Pmf(np.exp(self._log_row(n)[1:]), shift=1)

    def modes_at(self, n):
        return mode_of(self.pmf_at(n), self.tie_tol).modes

    def mean_at(self, n):
        return self.pmf_at(n).mean()

    def maximizers(self, k):
        if k == 0:
            return (0,)
        values = np.array([
            math.exp(self._log_row(n)[k]) if k <= n else 0.0 for n in range(self.n_max + 1)
        ])
        hits = _argmax_set(values, 0, self.tie_tol)
        if not hits or hits[-1] >= self.n_max:
            raise BudgetExceeded(f"likelihood of k={k} still increasing at n_max={self.n_max}")
        return hits


@dataclass(frozen=True, eq=False)
class SequenceFamily:
    """An explicit finite chain of profiles indexed by position."""

    profiles: tuple
    tie_tol: float = DEFAULT_TIE_TOL
    eps: float = DEFAULT_EPS
    tag = "sequence"
    parameter = "index"

    @cached_property
    def pmfs(self):
        return tuple(pmf_dp(p, self.eps) for p in self.profiles)

    def pmf_at(self, j, eps=DEFAULT_EPS):
        return self.pmfs[j]

    def modes_at(self, j):
        return mode_of(self.pmfs[j], self.tie_tol).modes

    def mean_at(self, j):
        return mean(self.profiles[j])

    def maximizers(self, k):
        return _argmax_set(np.array([pmf.at(k) for pmf in self.pmfs]), 0, self.tie_tol)

    def attained_modes(self):
        modes = [self.modes_at(j) for j in range(len(self.profiles))]
        return min(m[0] for m in modes), max(m[-1] for m in modes)


def cross_modality_scan(family, k_lo, k_hi):
    """For each k, check that k is a mode at every likelihood maximizer of k."""
    if k_lo < 0 or k_hi < k_lo:
        raise InvalidArgument(f"bad k range {k_lo}..{k_hi}")
    exact_binomial = isinstance(family, BinomialN) and _exact(family.p)
    entries = []
    for k in range(k_lo, k_hi + 1):
        ell = tuple(family.maximizers(k))
        mode_sets = [tuple(family.modes_at(theta)) for theta in ell]
        passed = bool(ell) and all(k in modes for modes in mode_sets)
        pattern = None
        if exact_binomial and k >= 1:
            pattern = binomial_cross_pattern(k, min(ell), family.p)
            passed = passed and pattern
        modes = tuple(sorted({m for ms in mode_sets for m in ms}))
        entries.append(CrossModalEntry(k, ell, modes, passed, pattern))
        if not passed:
            logger.warning("%s: k=%d is not a mode at its likelihood maximizers %s", family.tag, k, ell)
    return CrossModalReport(tuple(entries))


def _classify_step(before, after):
    """Name the step turning ``before`` into ``after``: raise-p, add-bernoulli or raise-lambda."""
    old, new = Counter(before.probs), Counter(after.probs)
    if after.lam > before.lam and old == new:
        return "raise-lambda"
    if after.lam == before.lam:
        if len(after.probs) == len(before.probs) + 1 and not old - new:
            return "add-bernoulli"
        removed, added = old - new, new - old
        if len(after.probs) == len(before.probs) and sum(removed.values()) == 1 == sum(added.values()):
            if next(iter(added)) > next(iter(removed)):
                return "raise-p"
    raise IllegalStep("consecutive profiles differ by neither raise one p, add a Bernoulli term nor raise lambda")


def directed_sequence_check(seq, tie_tol=DEFAULT_TIE_TOL, eps=DEFAULT_EPS):
    """True when every step is a legal directed operation and the chain is cross modal.

    A Poisson increment is legal only up to the peak skewness of its predecessor.
    """
    seq = tuple(seq)
    if not seq:
        raise InvalidArgument("empty profile sequence")
    for j, (before, after) in enumerate(zip(seq, seq[1:])):
        if _classify_step(before, after) == "raise-lambda":
            gamma = peak_skewness(pmf_dp(before, eps), tie_tol)
            if after.lam - before.lam > gamma + CHECK_TOL:
                logger.warning(
                    "step %d raises lam by %.6g, beyond the peak skewness %.6g",
                    j, after.lam - before.lam, gamma,
                )
                return False
    family = SequenceFamily(seq, tie_tol, eps)
    lo, hi = family.attained_modes()
    return cross_modality_scan(family, lo, hi).all_pass
