"""Goodness-of-fit statistics for a geometric null.

Every statistic is oriented so that large values speak against the null.
The EDF statistics (W2, A2, KS) work on grouped counts o_j compared with
the fitted geometric p_j = p(1-p)^j, p = n/(n+t). All statistics are
computed from counts or integer moments, so any permutation of a sample
gives a bit-identical value.

:func:`evaluate` scores a whole batch of samples sharing the same n and t,
which is how the Monte Carlo engine uses this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
from scipy.special import xlogy

from .errors import DegenerateSampleError, UndefinedStatisticError
from .sample import SampleLike, as_sample

__all__ = [
    "Statistic",
    "ALL_STATISTICS",
    "STUDY_STATISTICS",
    "GroupedSummary",
    "grouped_summary",
    "evaluate",
    "w2",
    "a2",
    "ks",
    "cr",
    "sb",
    "sb0",
    "theta_tilde_stat",
    "sw",
    "sw_abs",
    "swl",
    "swu",
    "score_known_param",
    "parse_statistics",
]

# cells with fitted probability below this / n are ignored beyond the data
TAIL_THRESHOLD = 1e-3
# A2 terms with 1 - H_j below this are skipped
A2_GUARD = 1e-12


class Statistic(str, Enum):
    W2 = "w2"
    A2 = "a2"
    KS = "ks"
    CR = "cr"
    SB = "sb"
    SB0 = "sb0"
    THETA = "theta"
    SW_ABS = "sw_abs"
    SWL = "swl"
    SWU = "swu"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def larger_is_extreme(self) -> bool:
        # every statistic here rejects for large values
        return True

    def __str__(self) -> str:
        return self.value


_LABELS = {
    Statistic.W2: "W2",
    Statistic.A2: "A2",
    Statistic.KS: "KS",
    Statistic.CR: "CR",
    Statistic.SB: "SB",
    Statistic.SB0: "SB0",
    Statistic.THETA: "theta",
    Statistic.SW_ABS: "|SW|",
    Statistic.SWL: "SWL",
    Statistic.SWU: "SWU",
}

ALL_STATISTICS: tuple[Statistic, ...] = tuple(Statistic)
# the columns reported in power and type I error studies
STUDY_STATISTICS: tuple[Statistic, ...] = (
    Statistic.W2, Statistic.A2, Statistic.KS, Statistic.CR,
    Statistic.SB0, Statistic.SW_ABS, Statistic.SWL, Statistic.SWU,
)


def parse_statistics(names: str | Iterable[str] | None, default=ALL_STATISTICS) -> tuple[Statistic, ...]:
    """Parse ``"w2,a2,ks"`` (or an iterable, or ``"all"``) into statistics."""
    if names is None:
        return tuple(default)
    if isinstance(names, str):
        names = [s for s in names.replace(" ", "").split(",") if s]
    out = []
    for name in names:
        if isinstance(name, Statistic):
            out.append(name)
        elif name == "all":
            out.extend(ALL_STATISTICS)
        else:
            try:
                out.append(Statistic(name.lower()))
            except ValueError:
                choices = ", ".join(s.value for s in Statistic)
                raise ValueError(f"unknown statistic {name!r}; choose from {choices}") from None
    return tuple(dict.fromkeys(out))


# -- geometric fit helpers ---------------------------------------------------


def _p_hat(n: int, t: int) -> float:
    if t <= 0:
        raise DegenerateSampleError("statistics need t = sum(x) > 0")
    return n / (n + t)


def _upper_fit_bound(n: int, p: float) -> int:
    """min{j : p_j' < 1e-3/n for all j' > j}, p_j = p(1-p)^j decreasing."""
    thr = TAIL_THRESHOLD / n
    if p < thr:
        return 0
    j = int(math.floor(math.log(thr / p) / math.log1p(-p)))
    # correct floating rounding at the boundary
    while j > 0 and p * (1 - p) ** j < thr:
        j -= 1
    while p * (1 - p) ** (j + 1) >= thr:
        j += 1
    return j


def _lower_fit_bound(n: int, p: float) -> int:
    """Smallest j with p_j >= 1e-3/n.

    p_j is decreasing, so this is 0 whenever any cell qualifies; when none
    does the data bound decides, and 0 is returned as well.
    """
    return 0


# -- grouped summary (single sample) -----------------------------------------


@dataclass(frozen=True)
class GroupedSummary:
    """Grouped counts and the fitted geometric quantities for one sample.

    Arrays are indexed by j = 0..len-1 and extend to the upper summation
    bound ``m_upper``.
    """

    n: int
    t: int
    p_hat: float
    observed: np.ndarray  # o_j
    probs: np.ndarray  # p_j
    expected: np.ndarray  # e_j = n p_j
    cum_observed: np.ndarray  # O_k
    cum_probs: np.ndarray  # H_k
    cum_expected: np.ndarray  # E_k = n H_k
    deviations: np.ndarray  # Z_k = O_k - E_k
    m0_upper: int
    m1_upper: int
    m0_lower: int
    m1_lower: int

    @property
    def m_upper(self) -> int:
        return max(self.m0_upper, self.m1_upper)

    @property
    def m_lower(self) -> int:
        return min(self.m0_lower, self.m1_lower)


def grouped_summary(x: SampleLike) -> GroupedSummary:
    s = as_sample(x)
    p = _p_hat(s.n, s.t)
    m0u = int(s.values.max())
    m1u = _upper_fit_bound(s.n, p)
    size = max(m0u, m1u) + 1
    o = s.counts(size)
    j = np.arange(size)
    probs = p * (1 - p) ** j
    tail = (1 - p) ** (j + 1)
    H = 1.0 - tail
    O = np.cumsum(o)
    return GroupedSummary(
        n=s.n, t=s.t, p_hat=p,
        observed=o, probs=probs, expected=s.n * probs,
        cum_observed=O, cum_probs=H, cum_expected=s.n * H,
        deviations=O - s.n * H,
        m0_upper=m0u, m1_upper=m1u,
        m0_lower=int(s.values.min()), m1_lower=_lower_fit_bound(s.n, p),
    )


# -- batch core --------------------------------------------------------------


def _as_batch(X) -> np.ndarray:
    if isinstance(X, Mapping):
        raise TypeError("expected an array of samples")
    if hasattr(X, "values") and not isinstance(X, np.ndarray):
        X = X.values
    X = np.asarray(X, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("samples must be a 1-D sample or a 2-D (batch, n) array")
    return X


class _Batch:
    """Shared intermediate quantities for a batch with common (n, t)."""

    def __init__(self, X: np.ndarray):
        self.X = X
        K, n = X.shape
        self.n = n
        totals = X.sum(axis=1)
        t = int(totals[0])
        if np.any(totals != t):
            raise ValueError("all samples in a batch must share the same total t")
        self.t = t
        self.p = _p_hat(n, t)
        self.sum_sq = np.einsum("ij,ij->i", X, X)
        self._counts = None
        self._edf = None

    @property
    def counts(self) -> np.ndarray:
        if self._counts is None:
            K = self.X.shape[0]
            m1u = _upper_fit_bound(self.n, self.p)
            width = max(int(self.X.max()), m1u) + 1
            flat = (np.arange(K)[:, None] * width + self.X).ravel()
            self._counts = np.bincount(flat, minlength=K * width).reshape(K, width)
            self.m1u = m1u
        return self._counts

    def edf(self):
        if self._edf is None:
            self._edf = self._compute_edf()
        return self._edf

    def _compute_edf(self):
        counts = self.counts
        K, width = counts.shape
        j = np.arange(width)
        p = self.p
        probs = p * (1 - p) ** j
        tail = (1 - p) ** (j + 1)
        Z = np.cumsum(counts, axis=1) - self.n * (1.0 - tail)
        present = counts > 0
        m0u = width - 1 - np.argmax(present[:, ::-1], axis=1)
        m0l = np.argmax(present, axis=1)
        mu = np.maximum(m0u, self.m1u)
        ml = np.minimum(m0l, _lower_fit_bound(self.n, p))
        window = (j[None, :] >= ml[:, None]) & (j[None, :] <= mu[:, None])
        return j, probs, tail, Z, window, m0u

    def cr_coef(self, width: int) -> np.ndarray:
        j = np.arange(width, dtype=float)
        return xlogy(j, j) - xlogy(j + 1, j + 1)


def _w2(b: _Batch) -> np.ndarray:
    j, probs, tail, Z, window, _ = b.edf()
    return np.sum(np.where(window, Z**2 * probs, 0.0), axis=1) / b.n


def _a2(b: _Batch) -> np.ndarray:
    j, probs, tail, Z, window, _ = b.edf()
    H = 1.0 - tail
    ok = tail >= A2_GUARD
    weight = np.zeros_like(probs)
    weight[ok] = probs[ok] / (H[ok] * tail[ok])
    return np.sum(np.where(window, Z**2 * weight, 0.0), axis=1) / b.n


def _ks(b: _Batch) -> np.ndarray:
    j, probs, tail, Z, window, m0u = b.edf()
    upto = j[None, :] <= m0u[:, None]
    return np.max(np.where(upto, np.abs(Z), 0.0), axis=1)


def _cr(b: _Batch) -> np.ndarray:
    counts = b.counts
    return counts @ b.cr_coef(counts.shape[1])


def _sw(b: _Batch) -> np.ndarray:
    counts = b.counts
    j = np.arange(counts.shape[1], dtype=float)
    coef = (1 - b.p) * xlogy(j + 1, j + 1) - xlogy(j, j)
    return counts @ coef


def _sb_numerator(b: _Batch) -> np.ndarray:
    # n**2 * (m2 - m1 - 2 m1**2), exact in integers
    n, t = b.n, b.t
    return n * b.sum_sq - n * t - 2 * t * t


def _sb(b: _Batch) -> np.ndarray:
    return _sb_numerator(b) / float(b.n * b.n)


def _theta(b: _Batch) -> np.ndarray:
    t = b.t
    num = _sb_numerator(b).astype(float)
    den = (2 * b.n * b.sum_sq - t * t + t * b.sum_sq).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / np.where(den != 0, den, 1.0), np.nan)


def evaluate(X, statistics: Iterable[Statistic | str] = ALL_STATISTICS) -> dict[Statistic, np.ndarray]:
    """Evaluate ``statistics`` on each row of ``X``.

    ``X`` is a single sample or a ``(batch, n)`` array whose rows all sum to
    the same t > 0. Returns one array of length ``batch`` per statistic; an
    undefined theta statistic is NaN.
    """
    b = _Batch(_as_batch(X))
    stats = parse_statistics(statistics)
    out: dict[Statistic, np.ndarray] = {}
    cache: dict[str, np.ndarray] = {}

    def once(key, fn):
        if key not in cache:
            cache[key] = fn(b)
        return cache[key]

    for stat in stats:
        if stat is Statistic.W2:
            out[stat] = once("w2", _w2)
        elif stat is Statistic.A2:
            out[stat] = once("a2", _a2)
        elif stat is Statistic.KS:
            out[stat] = once("ks", _ks)
        elif stat is Statistic.CR:
            out[stat] = once("cr", _cr)
        elif stat is Statistic.SB:
            out[stat] = once("sb", _sb)
        elif stat is Statistic.SB0:
            out[stat] = np.maximum(0.0, once("sb", _sb))
        elif stat is Statistic.THETA:
            out[stat] = once("theta", _theta)
        elif stat is Statistic.SW_ABS:
            out[stat] = np.abs(once("sw", _sw))
        elif stat is Statistic.SWL:
            out[stat] = -once("sw", _sw)
        elif stat is Statistic.SWU:
            out[stat] = once("sw", _sw)
    return out


def _one(x, stat: Statistic) -> float:
    return float(evaluate(x, [stat])[stat][0])


# -- single-sample API -------------------------------------------------------


def _from_summary(g: GroupedSummary) -> np.ndarray:
    return np.repeat(np.arange(g.observed.size), g.observed)


def w2(g: GroupedSummary) -> float:
    """Cramér-von Mises: (1/n) sum_{j=M^l}^{M^u} Z_j^2 p_j."""
    return _one(_from_summary(g), Statistic.W2)


def a2(g: GroupedSummary) -> float:
    """Anderson-Darling: (1/n) sum Z_j^2 p_j / (H_j (1 - H_j))."""
    return _one(_from_summary(g), Statistic.A2)


def ks(g: GroupedSummary) -> float:
    """Kolmogorov-Smirnov: max |Z_k| for k up to the largest observation."""
    return _one(_from_summary(g), Statistic.KS)


def cr(x: SampleLike) -> float:
    """sum_i [x_i log x_i - (x_i+1) log(x_i+1)], with 0 log 0 = 0.

    Defined for any sample, including t = 0.
    """
    s = as_sample(x)
    o = s.counts()
    j = np.arange(o.size, dtype=float)
    return float(o @ (xlogy(j, j) - xlogy(j + 1, j + 1)))


def sb(x: SampleLike) -> float:
    """m2 - m1 - 2 m1^2."""
    return _one(as_sample(x).values, Statistic.SB)


def sb0(x: SampleLike) -> float:
    return max(0.0, sb(x))


def theta_tilde_stat(x: SampleLike) -> float:
    """Moment estimate of theta, (m2 - m1 - 2m1^2) / (2m2 - m1^2 + m1 m2)."""
    value = _one(as_sample(x).values, Statistic.THETA)
    if math.isnan(value):
        raise UndefinedStatisticError("theta statistic has a zero denominator")
    return value


def sw(x: SampleLike) -> float:
    """sum_i [(1-p)(x_i+1) log(x_i+1) - x_i log x_i], p = n/(n+t)."""
    return _one(as_sample(x).values, Statistic.SWU)


def sw_abs(x: SampleLike) -> float:
    return abs(sw(x))


def swl(x: SampleLike) -> float:
    return -sw(x)


def swu(x: SampleLike) -> float:
    return sw(x)


def score_known_param(x: SampleLike, pi: float) -> float:
    """Score for theta at theta = 0 with pi known:
    (pi sum x^2 - (2 - pi) sum x) / (2 (1 - pi))."""
    if not 0 < pi < 1:
        raise ValueError("pi must lie in (0, 1)")
    s = as_sample(x)
    sum_sq = float(np.dot(s.values, s.values))
    return (pi * sum_sq - (2 - pi) * s.t) / (2 * (1 - pi))
