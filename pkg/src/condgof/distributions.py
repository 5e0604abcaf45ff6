"""Discrete distributions on the non-negative integers, and their estimators.

Every distribution exposes ``logpmf``, ``pmf``, ``sf`` (``P(X >= x)``) and
``sample(n, rng)``. Parameterisations follow the usual count-data
conventions: ``Geometric(p)`` counts failures before the first success, and
``NegBinomial(r, p)`` counts failures before the r-th success.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize
from scipy.special import betaln, expit, gammaln, logsumexp

from .errors import DegenerateSampleError, EstimationError, ParameterError
from .sample import SampleLike, as_sample

__all__ = [
    "Geometric",
    "Poisson",
    "Binomial",
    "NegBinomial",
    "BetaGeometric",
    "DiscreteWeibull",
    "PowerSeries",
    "FitResult",
    "MomentEstimate",
    "pmf",
    "logpmf",
    "sample",
    "expected_frequencies",
    "fit_geometric",
    "fit_betageometric",
    "fit_discrete_weibull",
    "moment_estimate_betageometric",
    "betageometric_loglik",
    "betageometric_score",
    "discrete_weibull_loglik",
    "discrete_weibull_score",
    "hazard_discrete_weibull",
    "COEFFICIENTS",
    "log_coefficients",
]


def _check_prob(name: str, p: float) -> None:
    if not (0.0 < p < 1.0):
        raise ParameterError(f"{name} must lie in (0, 1), got {p!r}")


def _xarray(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


def _unwrap(out: np.ndarray, x):
    return float(out) if np.ndim(x) == 0 else out


class _Discrete:
    """Shared plumbing; subclasses implement ``_logpmf`` on int arrays."""

    def logpmf(self, x):
        xa = _xarray(x)
        out = np.full(xa.shape, -np.inf)
        ok = xa >= 0
        if np.any(ok):
            out[ok] = self._logpmf(xa[ok])
        return _unwrap(out, x)

    def pmf(self, x):
        return _unwrap(np.exp(np.asarray(self.logpmf(x))), x)

    def sf(self, x):
        """P(X >= x)."""
        xa = _xarray(x)
        upto = int(max(xa.max(initial=0), 0))
        cdf = np.cumsum(self.pmf(np.arange(upto)))
        cdf = np.concatenate([[0.0], cdf])
        out = np.clip(1.0 - cdf[np.clip(xa, 0, upto)], 0.0, 1.0)
        return _unwrap(out, x)


@dataclass(frozen=True)
class Geometric(_Discrete):
    p: float

    def __post_init__(self):
        _check_prob("p", self.p)

    def _logpmf(self, x):
        return math.log(self.p) + x * math.log1p(-self.p)

    def sf(self, x):
        xa = _xarray(x)
        return _unwrap(np.exp(np.maximum(xa, 0) * math.log1p(-self.p)), x)

    def sample(self, n: int, rng) -> np.ndarray:
        # inverse CDF, so u = 0 maps to x = 0
        u = rng.random(n)
        return np.floor(np.log1p(-u) / math.log1p(-self.p)).astype(np.int64)

    @property
    def mean(self) -> float:
        return (1 - self.p) / self.p


@dataclass(frozen=True)
class Poisson(_Discrete):
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lam must be positive, got {self.lam!r}")

    def _logpmf(self, x):
        return x * math.log(self.lam) - self.lam - gammaln(x + 1)

    def sample(self, n: int, rng) -> np.ndarray:
        return rng.poisson(self.lam, size=n).astype(np.int64)

    @property
    def mean(self) -> float:
        return self.lam


@dataclass(frozen=True)
class Binomial(_Discrete):
    m: int
    p: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}")
        _check_prob("p", self.p)

    def _logpmf(self, x):
        out = np.full(x.shape, -np.inf)
        ok = x <= self.m
        k = x[ok]
        out[ok] = (
            gammaln(self.m + 1) - gammaln(k + 1) - gammaln(self.m - k + 1)
            + k * math.log(self.p) + (self.m - k) * math.log1p(-self.p)
        )
        return out

    def sample(self, n: int, rng) -> np.ndarray:
        return rng.binomial(self.m, self.p, size=n).astype(np.int64)

    @property
    def mean(self) -> float:
        return self.m * self.p


@dataclass(frozen=True)
class NegBinomial(_Discrete):
    r: int
    p: float

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ParameterError(f"r must be a positive integer, got {self.r!r}")
        _check_prob("p", self.p)

    def _logpmf(self, x):
        r = self.r
        return (
            gammaln(x + r) - gammaln(r) - gammaln(x + 1)
            + r * math.log(self.p) + x * math.log1p(-self.p)
        )

    def sample(self, n: int, rng) -> np.ndarray:
        return rng.negative_binomial(self.r, self.p, size=n).astype(np.int64)

    @property
    def mean(self) -> float:
        return self.r * (1 - self.p) / self.p


@dataclass(frozen=True)
class BetaGeometric(_Discrete):
    """Geometric with success probability drawn from Beta(alpha, beta).

    Parameterised by the mean success probability ``pi = alpha/(alpha+beta)``
    and ``theta = 1/(alpha+beta)``; ``theta = 0`` is the geometric with
    ``p = pi``.
    """

    pi: float
    theta: float

    def __post_init__(self):
        _check_prob("pi", self.pi)
        if not self.theta >= 0:
            raise ParameterError(f"theta must be non-negative, got {self.theta!r}")

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "BetaGeometric":
        if not (alpha > 0 and beta > 0):
            raise ParameterError("alpha and beta must be positive")
        return cls(pi=alpha / (alpha + beta), theta=1.0 / (alpha + beta))

    @property
    def alpha(self) -> float:
        return self.pi / self.theta if self.theta > 0 else math.inf

    @property
    def beta(self) -> float:
        return (1 - self.pi) / self.theta if self.theta > 0 else math.inf

    def _logpmf(self, x):
        # product form, accumulated over j so that theta -> 0 stays exact
        top = int(x.max(initial=0))
        j = np.arange(top + 1)
        num = np.concatenate([[0.0], np.cumsum(np.log1p(j[:-1] * self.theta - self.pi))])
        den = np.cumsum(np.log1p(j * self.theta))
        return math.log(self.pi) + num[x] - den[x]

    def logpmf_beta_integral(self, x):
        """Same pmf via B(alpha+1, beta+x)/B(alpha, beta); needs theta > 0."""
        if self.theta <= 0:
            raise ParameterError("the beta-function form needs theta > 0")
        xa = _xarray(x)
        a, b = self.alpha, self.beta
        return _unwrap(betaln(a + 1, b + xa) - betaln(a, b), x)

    def sample(self, n: int, rng) -> np.ndarray:
        if self.theta == 0:
            return Geometric(self.pi).sample(n, rng)
        p = rng.beta(self.alpha, self.beta, size=n)
        # p can underflow to 0 for small alpha; numpy needs p in (0, 1]
        p = np.clip(p, 1e-300, 1.0)
        return (rng.geometric(p) - 1).astype(np.int64)

    @property
    def mean(self) -> float:
        a, b = self.alpha, self.beta
        return b / (a - 1) if a > 1 else math.inf


@dataclass(frozen=True)
class DiscreteWeibull(_Discrete):
    """Type I discrete Weibull: P(X >= x) = q**(x**beta)."""

    q: float
    beta: float

    def __post_init__(self):
        _check_prob("q", self.q)
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta!r}")

    def _logpmf(self, x):
        lq = math.log(self.q)
        a = x.astype(float) ** self.beta
        d = (x + 1.0) ** self.beta - a
        return a * lq + np.log(-np.expm1(d * lq))

    def sf(self, x):
        xa = _xarray(x)
        return _unwrap(np.power(self.q, np.maximum(xa, 0).astype(float) ** self.beta), x)

    def hazard(self, x):
        xa = _xarray(x).astype(float)
        d = (xa + 1.0) ** self.beta - xa ** self.beta
        return _unwrap(-np.expm1(d * math.log(self.q)), x)

    def sample(self, n: int, rng) -> np.ndarray:
        # X >= x  <=>  U < q**(x**beta), inverted
        u = 1.0 - rng.random(n)
        y = (np.log(u) / math.log(self.q)) ** (1.0 / self.beta)
        return np.maximum(np.ceil(y) - 1, 0).astype(np.int64)


def log_coefficients(name: str, param: int | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Log power-series coefficients log a(x) for a named family.

    ``geometric`` (a = 1), ``poisson`` (a = 1/x!), ``binomial`` with size m
    (a = C(m, x)), ``negbinomial`` with size r (a = C(x+r-1, x)).
    """
    if name == "geometric":
        return lambda x: np.zeros(np.shape(x))
    if name == "poisson":
        return lambda x: -gammaln(np.asarray(x) + 1.0)
    if name == "binomial":
        if param is None or param < 1:
            raise ParameterError("binomial coefficients need a positive size m")
        m = int(param)

        def log_a(x):
            x = np.asarray(x, dtype=float)
            out = np.full(x.shape, -np.inf)
            ok = x <= m
            out[ok] = gammaln(m + 1.0) - gammaln(x[ok] + 1.0) - gammaln(m - x[ok] + 1.0)
            return out

        return log_a
    if name == "negbinomial":
        if param is None or param < 1:
            raise ParameterError("negative binomial coefficients need a positive size r")
        r = int(param)
        return lambda x: gammaln(np.asarray(x) + r) - gammaln(r) - gammaln(np.asarray(x) + 1.0)
    raise ParameterError(f"unknown coefficient family {name!r}")


COEFFICIENTS = ("geometric", "poisson", "binomial", "negbinomial")


@dataclass(frozen=True)
class PowerSeries(_Discrete):
    """P(X = x) = a(x) theta**x / eta(theta), given ``log_a``.

    The normaliser is summed numerically up to ``max_support``; the caller is
    responsible for the series converging at ``theta``.
    """

    log_a: Callable[[np.ndarray], np.ndarray]
    theta: float
    max_support: int = 100_000

    def __post_init__(self):
        if not self.theta > 0:
            raise ParameterError("theta must be positive")

    def _log_terms(self, x):
        return np.asarray(self.log_a(x), dtype=float) + x * math.log(self.theta)

    @property
    def log_eta(self) -> float:
        x = np.arange(self.max_support + 1)
        return float(logsumexp(self._log_terms(x)))

    def _logpmf(self, x):
        return self._log_terms(x) - self.log_eta

    def sample(self, n: int, rng) -> np.ndarray:
        x = np.arange(self.max_support + 1)
        logp = self._log_terms(x)
        cdf = np.cumsum(np.exp(logp - logsumexp(logp)))
        u = rng.random(n)
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.max_support).astype(np.int64)


def logpmf(dist, x):
    return dist.logpmf(x)


def pmf(dist, x):
    return dist.pmf(x)


def sample(dist, n: int, rng) -> np.ndarray:
    if n < 1:
        raise ParameterError("sample size must be at least 1")
    return dist.sample(n, rng)


def expected_frequencies(dist, n: int, upto: int, lump: int | None = None) -> np.ndarray:
    """n * P(X = j) for j = 0..upto; with ``lump`` the last entry is n * P(X >= lump)."""
    if lump is None:
        return n * np.asarray(dist.pmf(np.arange(upto + 1)))
    head = n * np.asarray(dist.pmf(np.arange(lump)))
    return np.append(head, n * float(dist.sf(lump)))


# -- estimation --------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    params: object
    loglik: float
    iterations: int = 0
    boundary: bool = False


class MomentEstimate(NamedTuple):
    alpha: float
    beta: float
    theta: float


def _require_positive_total(s) -> None:
    if s.t == 0:
        raise DegenerateSampleError("all observations are zero (t = 0)")


def fit_geometric(x: SampleLike) -> Geometric:
    """MLE p = n / (t + n)."""
    s = as_sample(x)
    _require_positive_total(s)
    return Geometric(s.n / (s.t + s.n))


def _tail_counts(values: np.ndarray):
    # ge[j] = #{x_i >= j} for j = 0..max, gt[j] = #{x_i > j} for j = 0..max-1
    counts = np.bincount(values)
    ge = np.cumsum(counts[::-1])[::-1]
    return ge, ge[1:]


def betageometric_loglik(x: SampleLike, pi: float, theta: float) -> float:
    s = as_sample(x)
    ge, gt = _tail_counts(s.values)
    j = np.arange(ge.size)
    return float(
        s.n * math.log(pi)
        + np.dot(gt, np.log1p(j[:-1] * theta - pi))
        - np.dot(ge, np.log1p(j * theta))
    )


def betageometric_score(x: SampleLike, pi: float, theta: float) -> tuple[float, float]:
    """(dl/dpi, dl/dtheta) of the beta-geometric log-likelihood."""
    s = as_sample(x)
    ge, gt = _tail_counts(s.values)
    j = np.arange(ge.size)
    inner = 1.0 - pi + j[:-1] * theta
    d_pi = s.n / pi - np.sum(gt / inner)
    d_theta = np.sum(gt * j[:-1] / inner) - np.sum(ge * j / (1.0 + j * theta))
    return float(d_pi), float(d_theta)


def moment_estimate_betageometric(x: SampleLike) -> MomentEstimate:
    """Method-of-moments (alpha, beta, theta).

    When m2 - m1 - 2 m1**2 = 0 the moments are exactly geometric; alpha and
    beta are then infinite and theta is 0.
    """
    s = as_sample(x)
    m1, m2 = s.m1, s.m2
    num = m2 - m1 - 2 * m1**2
    den = 2 * m2 - m1**2 + m1 * m2
    if den == 0:
        raise DegenerateSampleError("moment estimate undefined: 2*m2 - m1**2 + m1*m2 = 0")
    theta = num / den
    if num == 0:
        return MomentEstimate(math.inf, math.inf, 0.0)
    alpha = 2 * (m2 - m1**2) / num
    return MomentEstimate(alpha, m1 * (alpha - 1), theta)


_MAXITER = 500
_GTOL = 1e-8


def _maximise(negll, start, scale):
    """Minimise ``negll`` (value, gradient) with L-BFGS-B; raise on failure."""
    res = optimize.minimize(
        negll, start, jac=True, method="L-BFGS-B",
        options={"maxiter": _MAXITER, "gtol": _GTOL, "ftol": 1e-15},
    )
    grad = np.max(np.abs(res.jac))
    if not res.success and grad > 1e-6 * scale:
        raise EstimationError(
            f"likelihood maximisation did not converge: {res.message}", best=res.x, loglik=-res.fun
        )
    return res


def fit_betageometric(x: SampleLike) -> FitResult:
    """Beta-geometric MLE of (pi, theta) over 0 < pi < 1, theta >= 0.

    If m2 - m1 - 2 m1**2 <= 0 the likelihood is maximised on the boundary
    theta = 0, and the geometric fit is returned without iterating.
    """
    s = as_sample(x)
    p_hat = fit_geometric(s).p
    sb = s.m2 - s.m1 - 2 * s.m1**2
    if sb <= 0:
        geo_ll = s.n * math.log(p_hat) + s.t * math.log1p(-p_hat)
        return FitResult(BetaGeometric(p_hat, 0.0), geo_ll, 0, boundary=True)

    ge, gt = _tail_counts(s.values)
    j = np.arange(ge.size)
    jm = j[:-1]

    def negll(z):
        pi, theta = expit(z[0]), math.exp(z[1])
        inner = 1.0 - pi + jm * theta
        outer = 1.0 + j * theta
        if np.any(inner <= 0):
            return np.inf, np.zeros(2)
        ll = s.n * math.log(pi) + np.dot(gt, np.log(inner)) - np.dot(ge, np.log(outer))
        d_pi = s.n / pi - np.sum(gt / inner)
        d_theta = np.sum(gt * jm / inner) - np.sum(ge * j / outer)
        grad = np.array([d_pi * pi * (1 - pi), d_theta * theta])
        return -ll, -grad

    theta0 = min(max(moment_estimate_betageometric(s).theta, 1e-4), 10.0)
    start = np.array([math.log(p_hat / (1 - p_hat)), math.log(theta0)])
    res = _maximise(negll, start, s.n)
    return FitResult(
        BetaGeometric(float(expit(res.x[0])), math.exp(res.x[1])), float(-res.fun), int(res.nit)
    )


def _dweibull_terms(values: np.ndarray, q: float, beta: float):
    lq = math.log(q)
    xf = values.astype(float)
    a = xf**beta
    b = (xf + 1.0) ** beta
    d = b - a
    with np.errstate(divide="ignore"):
        ll = a * lq + np.log(-np.expm1(d * lq))
    return lq, xf, a, b, d, ll


def discrete_weibull_loglik(x: SampleLike, q: float, beta: float) -> float:
    s = as_sample(x)
    return float(np.sum(_dweibull_terms(s.values, q, beta)[-1]))


def discrete_weibull_score(x: SampleLike, q: float, beta: float) -> tuple[float, float]:
    """(dl/dq, dl/dbeta) of the discrete Weibull log-likelihood."""
    s = as_sample(x)
    lq, xf, a, b, d, _ = _dweibull_terms(s.values, q, beta)
    ratio = d / np.expm1(-d * lq)
    d_lq = np.sum(a - ratio)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(xf > 0, a * np.log(np.where(xf > 0, xf, 1.0)), 0.0)
    db = b * np.log1p(xf)
    # d(log pmf)/dd = -lq / expm1(-d lq)
    d_beta = np.sum(lq * da - lq * (db - da) / np.expm1(-d * lq))
    return float(d_lq / q), float(d_beta)


def fit_discrete_weibull(x: SampleLike) -> FitResult:
    """Discrete Weibull MLE of (q, beta), started from the geometric fit."""
    s = as_sample(x)
    p_hat = fit_geometric(s).p
    ones = s.values

    def negll(z):
        q, beta = float(expit(z[0])), math.exp(z[1])
        if not (0 < q < 1):
            return np.inf, np.zeros(2)
        lq, xf, a, b, d, ll = _dweibull_terms(ones, q, beta)
        total = np.sum(ll)
        if not np.isfinite(total):
            return np.inf, np.zeros(2)
        em = np.expm1(-d * lq)
        d_lq = np.sum(a - d / em)
        da = np.where(xf > 0, a * np.log(np.where(xf > 0, xf, 1.0)), 0.0)
        db = b * np.log1p(xf)
        d_beta = np.sum(lq * da - lq * (db - da) / em)
        # dlq/dz0 = 1 - q, dbeta/dz1 = beta
        grad = np.array([d_lq * (1 - q), d_beta * beta])
        return -total, -grad

    start = np.array([math.log((1 - p_hat) / p_hat), 0.0])
    res = _maximise(negll, start, s.n)
    return FitResult(
        DiscreteWeibull(float(expit(res.x[0])), math.exp(res.x[1])), float(-res.fun), int(res.nit)
    )


def hazard_discrete_weibull(params: DiscreteWeibull, x):
    """lambda(x) = P(X = x | X >= x) = 1 - q**((x+1)**beta - x**beta)."""
    return params.hazard(x)
