"""
Extended Bernoulli sums S = Poisson(lam) + sum_i Bernoulli(p_i).

Two engines compute the probability function and are expected to agree:

* ``pmf_dp`` starts from a truncated Poisson window and folds every Bernoulli
  factor in by the total-probability recursion.
* ``pmf_symmetric`` builds the extended elementary symmetric functions of the
  odds r_i = p_i / (1 - p_i) and scales them by f(0).

Every ``Pmf`` carries ``trunc_err``, a certified bound on the probability mass
that lies outside its stored window.
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from .exceptions import BudgetExceeded, ContractViolation, InvalidArgument

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-12
NEAR_ONE = 1e-12
MIN_WINDOW = 40
MAX_WINDOW = 10**7
MAX_ENUMERATION = 18
# exp() overflows a double past this exponent
LOG_OVERFLOW = 700.0


def _check_eps(eps):
    if not eps > 0:
        raise InvalidArgument(f"eps must be positive, got {eps!r}")


# --------------------------------------------------
# Domain types
# --------------------------------------------------

class TailKind(str, enum.Enum):
    """What a profile's tail_mass bounds."""

    # sum of the success probabilities cut from an infinite profile
    OMITTED_MASS = "omitted-mass"
    # total-variation cost of replacing the cut terms (a Le Cam bound)
    TOTAL_VARIATION = "total-variation"


@dataclass(frozen=True)
class Profile:
    """Parameter point (lam, p_1, ..., p_n) of an extended Bernoulli sum.

    ``tail_mass`` bounds the sum of the success probabilities dropped when an
    infinite profile was cut to this finite prefix (0 for finitary profiles).
    ``tail_kind`` says whether it is that sum or a total-variation bound on the
    replacement of the cut terms; either one bounds the error of the law.
    """

    lam: float = 0.0
    probs: tuple = ()
    tail_mass: float = 0.0
    tail_kind: TailKind = TailKind.OMITTED_MASS

    def __post_init__(self):
        lam = float(self.lam)
        probs = tuple(float(p) for p in self.probs)
        tail_mass = float(self.tail_mass)
        if not 0.0 <= lam < math.inf:
            raise InvalidArgument(f"Poisson rate must be finite and nonnegative, got {self.lam!r}")
        for p in probs:
            if not 0.0 <= p <= 1.0:
                raise InvalidArgument(f"success probability {p!r} lies outside [0, 1]")
        if not 0.0 <= tail_mass < math.inf:
            raise InvalidArgument(f"tail_mass must be finite and nonnegative, got {self.tail_mass!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail_mass)
        try:
            object.__setattr__(self, "tail_kind", TailKind(self.tail_kind))
        except ValueError:
            raise InvalidArgument(f"unknown tail kind {self.tail_kind!r}") from None

    @property
    def n(self):
        return len(self.probs)

    @property
    def finitary(self):
        return self.tail_mass == 0.0

    @property
    def ones(self):
        """Number of deterministic components (p_i = 1)."""
        return sum(1 for p in self.probs if p == 1.0)

    @property
    def n_positive(self):
        return sum(1 for p in self.probs if p > 0.0)

    @property
    def max_prob(self):
        return max(self.probs, default=0.0)

    @property
    def odds(self):
        if any(p == 1.0 for p in self.probs):
            raise ContractViolation("odds are infinite for p_i = 1; factor those into the shift first")
        return np.array([p / (1.0 - p) for p in self.probs], dtype=float)

    def without(self, i):
        """Leave-one-out profile with the i-th Bernoulli term removed."""
        if not 0 <= i < self.n:
            raise InvalidArgument(f"coordinate {i} out of range for {self.n} success probabilities")
        return replace(self, probs=self.probs[:i] + self.probs[i + 1:])

    def with_prob(self, i, p):
        if not 0 <= i < self.n:
            raise InvalidArgument(f"coordinate {i} out of range for {self.n} success probabilities")
        return replace(self, probs=self.probs[:i] + (p,) + self.probs[i + 1:])

    def with_lam(self, lam):
        return replace(self, lam=lam)

    def added(self, p):
        return replace(self, probs=self.probs + (p,))

    def sorted(self):
        """Canonical representative with decreasing success probabilities."""
        return replace(self, probs=tuple(sorted(self.probs, reverse=True)))


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability function on the window {shift, ..., shift + len(mass) - 1}."""

    mass: np.ndarray
    shift: int = 0
    trunc_err: float = 0.0

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.ndim != 1 or mass.size == 0:
            raise InvalidArgument("a Pmf needs a nonempty one-dimensional mass array")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise InvalidArgument("probability masses must be finite and nonnegative")
        if int(self.shift) != self.shift or self.shift < 0:
            raise InvalidArgument(f"shift must be a nonnegative integer, got {self.shift!r}")
        if not 0.0 <= self.trunc_err < math.inf:
            raise InvalidArgument(f"trunc_err must be finite and nonnegative, got {self.trunc_err!r}")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "shift", int(self.shift))
        object.__setattr__(self, "trunc_err", float(self.trunc_err))

    def __len__(self):
        return self.mass.size

    @property
    def support(self):
        return range(self.shift, self.shift + self.mass.size)

    @property
    def total(self):
        return math.fsum(self.mass)

    @property
    def peak(self):
        return float(self.mass.max())

    def at(self, k):
        """P[S = k]; zero outside the stored window (and for negative k)."""
        j = k - self.shift
        if 0 <= j < self.mass.size:
            return float(self.mass[j])
        return 0.0

    def window(self, lo, hi):
        """Array of P[S = k] for k = lo..hi inclusive, zero-padded."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.shift), min(hi, self.shift + self.mass.size - 1)
        if a <= b:
            out[a - lo:b - lo + 1] = self.mass[a - self.shift:b - self.shift + 1]
        return out

    def cdf(self):
        return np.cumsum(self.mass)

    def mean(self):
        return float(np.dot(np.arange(self.mass.size) + self.shift, self.mass))


@dataclass(frozen=True, eq=False)
class SymmetricTable:
    """e[k] = E_k(lam, r), the extended elementary symmetric functions in the odds."""

    e: np.ndarray
    lam: float
    odds: np.ndarray

    def __getitem__(self, k):
        return float(self.e[k]) if 0 <= k < self.e.size else 0.0


# --------------------------------------------------
# Poisson window
# --------------------------------------------------

def poisson_tail_bound(lam, K):
    """Upper bound on P[Poisson(lam) > K] from the remainder of the exponential series."""
    if lam == 0:
        return 0.0
    if K + 2 <= lam:
        return 1.0
    log_next = -lam + (K + 1) * math.log(lam) - special.gammaln(K + 2)
    return math.exp(log_next) / (1.0 - lam / (K + 2))


def poisson_window(lam, eps):
    """Poisson(lam) masses on {0..K} with the certified tail P[X > K] < eps / 2."""
    _check_eps(eps)
    if lam == 0:
        return np.ones(1), 0.0
    K = max(math.ceil(lam + 12.0 * math.sqrt(lam + 1.0) + 25.0), MIN_WINDOW)
    tail = poisson_tail_bound(lam, K)
    while not tail < eps / 2:
        K *= 2
        if K > MAX_WINDOW:
            raise BudgetExceeded(f"Poisson window for lam={lam} exceeds {MAX_WINDOW} terms")
        logger.debug("extending Poisson window for lam=%s to K=%d", lam, K)
        tail = poisson_tail_bound(lam, K)
    mass = stats.poisson.pmf(np.arange(K + 1), lam)
    last = np.flatnonzero(mass)[-1]
    return mass[:last + 1], tail


# --------------------------------------------------
# Operations
# --------------------------------------------------

def mean(profile):
    """lam + sum p_i; the tail_mass is left for the caller to add as an interval bound."""
    return profile.lam + math.fsum(profile.probs)


def _fold_bernoulli(mass, p):
    out = np.zeros(mass.size + 1)
    out[:-1] = mass * (1.0 - p)
    out[1:] += mass * p
    return out


def add_bernoulli(pmf, p):
    """Convolve with an independent Bernoulli(p); p = 1 only moves the shift."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"success probability {p!r} lies outside [0, 1]")
    if p == 1.0:
        return replace(pmf, shift=pmf.shift + 1)
    if p == 0.0:
        return pmf
    return Pmf(_fold_bernoulli(pmf.mass, p), pmf.shift, pmf.trunc_err)


def pmf_dp(profile, eps=DEFAULT_EPS):
    mass, tail = poisson_window(profile.lam, eps)
    shift = 0
    for p in sorted(profile.probs, reverse=True):
        if p == 1.0:
            shift += 1
        elif p > 0.0:
            mass = _fold_bernoulli(mass, p)
    return Pmf(mass, shift, tail + profile.tail_mass)


def symmetric_table(lam, odds, size):
    """E_k(lam, r) for k < size + len(odds), seeded by the pure Poisson column lam^k / k!."""
    odds = np.asarray(odds, dtype=float)
    if not np.all(np.isfinite(odds)) or np.any(odds < 0):
        raise ContractViolation("odds must be finite and nonnegative; factor p_i = 1 into the shift first")
    log_total = lam + float(np.sum(np.log1p(odds)))
    if log_total > LOG_OVERFLOW:
        raise BudgetExceeded(
            f"symmetric functions overflow (log sum = {log_total:.1f}); use pmf_dp for this profile"
        )
    k = np.arange(size)
    if lam > 0:
        e = np.exp(k * math.log(lam) - special.gammaln(k + 1))
    else:
        e = np.zeros(size)
        e[0] = 1.0
    for r in odds:
        nxt = np.zeros(e.size + 1)
        nxt[:-1] = e
        nxt[1:] += r * e
        e = nxt
    return SymmetricTable(e=e, lam=lam, odds=odds)


def pmf_symmetric(profile, eps=DEFAULT_EPS):
    window, tail = poisson_window(profile.lam, eps)
    shift = profile.ones
    probs = sorted((p for p in profile.probs if 0.0 < p < 1.0), reverse=True)
    near_one = [p for p in probs if p > 1.0 - NEAR_ONE]
    if near_one:
        logger.warning("f(0) loses precision: %d success probabilities within %g of 1", len(near_one), NEAR_ONE)
    odds = np.array([p / (1.0 - p) for p in probs], dtype=float)
    table = symmetric_table(profile.lam, odds, window.size)
    log_f0 = -profile.lam + math.fsum(math.log1p(-p) for p in probs)
    return Pmf(math.exp(log_f0) * table.e, shift, tail + profile.tail_mass)


def size_bias_residual(profile, k, eps=DEFAULT_EPS):
    """|k f(k) - sum_i p_i f(k-1; p minus p_i) - lam f(k-1)|.

    Deterministic components are factored into the shift first and the identity
    is evaluated at k minus that shift.
    """
    if not profile.finitary:
        raise InvalidArgument("the size-bias identity is checked on finitary profiles only")
    if k < 0:
        raise InvalidArgument(f"k must be nonnegative, got {k}")
    reduced = replace(profile, probs=tuple(p for p in profile.probs if p < 1.0))
    k -= profile.ones
    full = pmf_dp(reduced, eps)
    rhs = [reduced.lam * full.at(k - 1)]
    for i, p in enumerate(reduced.probs):
        if p > 0.0:
            rhs.append(p * pmf_dp(reduced.without(i), eps).at(k - 1))
    return abs(k * full.at(k) - math.fsum(rhs))


def dp_partial(profile, i, ks, eps=DEFAULT_EPS):
    """d f(k) / d p_i = f(k-1; p minus p_i) - f(k; p minus p_i), evaluated at each k in ks."""
    loo = pmf_dp(profile.without(i), eps)
    return np.array([loo.at(k - 1) - loo.at(k) for k in ks])


def dlambda(profile, ks, eps=DEFAULT_EPS):
    """d f(k) / d lam = f(k-1) - f(k)."""
    pmf = pmf_dp(profile, eps)
    return np.array([pmf.at(k - 1) - pmf.at(k) for k in ks])


# --------------------------------------------------
# Oracles and reproducibility helpers
# --------------------------------------------------

def enumerate_pmf(probs):
    """Exhaustive 2^n enumeration of a Poisson-binomial law (no shift extraction)."""
    n = len(probs)
    if n > MAX_ENUMERATION:
        raise InvalidArgument(f"exhaustive enumeration is limited to {MAX_ENUMERATION} terms")
    if n == 0:
        return Pmf(np.ones(1))
    p = np.asarray(probs, dtype=float)
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    weights = np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)
    return Pmf(np.bincount(bits.sum(axis=1), weights=weights, minlength=n + 1))


def random_profile(rng, n_max=30, lam_max=10.0, n_min=0, p_max=0.999, lam_prob=0.7):
    """Draw a finitary profile; exponents skew the probabilities toward 0 or 1."""
    n = int(rng.integers(n_min, n_max + 1))
    skew = float(rng.choice([0.25, 0.5, 1.0, 2.0, 4.0]))
    probs = np.minimum(rng.uniform(0.0, 1.0, n) ** skew, p_max)
    lam = float(rng.uniform(0.0, lam_max)) if rng.random() < lam_prob else 0.0
    return Profile(lam=lam, probs=tuple(probs))


def profile_hash(profile):
    payload = json.dumps(
        {"lambda": profile.lam, "probs": list(profile.probs), "tail_mass": profile.tail_mass},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def max_relative_gap(a, b, floor=1e-280):
    """Largest |a_k - b_k| / max(a_k, b_k) over entries where both exceed ``floor``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    size = min(a.size, b.size)
    a, b = a[:size], b[:size]
    keep = (a > floor) & (b > floor)
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(a[keep] - b[keep]) / np.maximum(a[keep], b[keep])))


def aligned(pmfs: Sequence[Pmf]) -> Iterable[np.ndarray]:
    """Zero-padded arrays of several Pmfs on their common index range."""
    lo = min(p.shift for p in pmfs)
    hi = max(p.shift + len(p) - 1 for p in pmfs)
    return [p.window(lo, hi) for p in pmfs]
