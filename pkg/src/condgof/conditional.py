"""Exact sampling of a sample given its sum.

Under a geometric null the conditional law of (X_1, ..., X_n) given
sum(X) = t is uniform on the compositions of t into n non-negative parts.
A composition is encoded by the positions k_1 < ... < k_{n-1} of the n - 1
bars among t + n - 1 slots (stars and bars); drawing the bar positions
uniformly and decoding them gives a uniform composition.

All samplers take a numpy ``Generator`` (or anything with ``random(size)``)
and an optional ``size``; with ``size`` they return a ``(size, n)`` array.
"""

from __future__ import annotations

import math
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InfeasibleTotalError, MalformedInputError, ParameterError, SupportError

__all__ = [
    "bars_to_composition",
    "composition_to_bars",
    "draw_bars_uniform",
    "draw_bars_batch",
    "sample_conditional_geometric",
    "sample_conditional_negbinomial",
    "negbinomial_from_bars",
    "sample_conditional_poisson",
    "sample_conditional_binomial",
    "sample_conditional_powerseries_mh",
    "PowerSeriesMH",
]


def _check_nt(n: int, t: int) -> None:
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if int(t) != t or t < 0:
        raise ParameterError(f"t must be a non-negative integer, got {t!r}")


def bars_to_composition(k: Sequence[int], n: int, t: int) -> np.ndarray:
    """Decode bar positions into the composition they delimit.

    >>> bars_to_composition([2, 3, 7], n=4, t=8).tolist()
    [1, 0, 3, 4]
    """
    _check_nt(n, t)
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (n - 1,):
        raise MalformedInputError(f"expected {n - 1} bar positions, got {k.size}")
    edges = np.concatenate(([0], k, [t + n]))
    x = np.diff(edges) - 1
    if np.any(x < 0):
        raise MalformedInputError(
            f"bar positions must satisfy 0 < k_1 < ... < k_(n-1) < t + n = {t + n}"
        )
    return x


def composition_to_bars(x: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`bars_to_composition`: k_j = x_1 + ... + x_j + j.

    >>> composition_to_bars([1, 0, 3, 4]).tolist()
    [2, 3, 7]
    """
    x = np.asarray(x, dtype=np.int64)
    if x.ndim != 1 or x.size == 0 or np.any(x < 0):
        raise MalformedInputError("a composition is a non-empty vector of non-negative integers")
    return np.cumsum(x[:-1]) + np.arange(1, x.size)


def draw_bars_uniform(n: int, t: int, rng) -> np.ndarray:
    """Draw n - 1 bar positions uniformly from the C(t+n-1, n-1) possibilities.

    Scans the slots I = t+n-1 down to 1; with N bars placed and V slots
    passed over, slot I takes a bar with probability
    (n-1-N) / (t+n-1-N-V). Reads at most t + n - 1 uniforms.
    """
    _check_nt(n, t)
    need = n - 1
    k = np.empty(need, dtype=np.int64)
    placed = skipped = 0
    slot = t + n - 1
    while placed < need:
        remaining = t + n - 1 - placed - skipped
        left = need - placed
        # every remaining slot must take a bar: probability exactly one
        if left == remaining or rng.random() < left / remaining:
            k[need - 1 - placed] = slot
            placed += 1
        else:
            skipped += 1
        slot -= 1
    return k


def draw_bars_batch(n: int, t: int, size: int, rng) -> np.ndarray:
    """``size`` independent bar-position draws as a ``(size, n-1)`` array.

    The same slot scan as :func:`draw_bars_uniform`, run for all rows at
    once; each step consumes one uniform per row.
    """
    _check_nt(n, t)
    need = n - 1
    bars = np.empty((size, need), dtype=np.int64)
    if need == 0 or size == 0:
        return bars
    left = np.full(size, need, dtype=np.int64)
    total = t + n - 1
    for step in range(total):
        remaining = total - step
        u = rng.random(size)
        take = (left == remaining) | (u * remaining < left)
        rows = np.flatnonzero(take)
        if rows.size:
            bars[rows, left[rows] - 1] = remaining
            left[rows] -= 1
            if not left.any():
                break
    return bars


def _decode_batch(bars: np.ndarray, n: int, t: int) -> np.ndarray:
    size = bars.shape[0]
    edges = np.empty((size, n + 1), dtype=np.int64)
    edges[:, 0] = 0
    edges[:, 1:-1] = bars
    edges[:, -1] = t + n
    return np.diff(edges, axis=1) - 1


def sample_conditional_geometric(n: int, t: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform composition of t into n parts: a draw of X | sum(X) = t
    for i.i.d. geometric X."""
    _check_nt(n, t)
    if size is None:
        if n == 1:
            return np.array([t], dtype=np.int64)
        return bars_to_composition(draw_bars_uniform(n, t, rng), n, t)
    if n == 1:
        return np.full((size, 1), t, dtype=np.int64)
    return _decode_batch(draw_bars_batch(n, t, size, rng), n, t)


def _check_sizes(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.int64)
    if r.ndim != 1 or r.size == 0 or np.any(r < 1):
        raise ParameterError("sizes must be a non-empty sequence of positive integers")
    return r


def negbinomial_from_bars(k: np.ndarray, r: Sequence[int], t: int) -> np.ndarray:
    """Map bars for R = sum(r) geometric parts to negative binomial counts.

    y_i = k_{r_1+...+r_i} - k_{r_1+...+r_{i-1}} - r_i, with k_0 = 0 and
    k_R = t + R. Accepts a single bar vector or a ``(size, R-1)`` batch.
    """
    r = _check_sizes(r)
    k = np.asarray(k, dtype=np.int64)
    R = int(r.sum())
    lead = k.shape[:-1]
    padded = np.concatenate(
        [np.zeros(lead + (1,), np.int64), k, np.full(lead + (1,), t + R, np.int64)], axis=-1
    )
    ends = np.concatenate(([0], np.cumsum(r)))
    return np.diff(padded[..., ends], axis=-1) - r


def sample_conditional_negbinomial(r: Sequence[int], t: int, rng, size: int | None = None) -> np.ndarray:
    """Draw Y | sum(Y) = t for independent Y_i ~ NB(r_i, p).

    Each Y_i is a sum of r_i geometrics, so a uniform composition of t into
    R = sum(r) parts is aggregated block by block.
    """
    r = _check_sizes(r)
    R = int(r.sum())
    _check_nt(R, t)
    if size is None:
        return negbinomial_from_bars(draw_bars_uniform(R, t, rng), r, t)
    return negbinomial_from_bars(draw_bars_batch(R, t, size, rng), r, t)


def sample_conditional_poisson(weights: Sequence[float], t: int, rng, size: int | None = None) -> np.ndarray:
    """Draw X | sum(X) = t for independent X_i ~ Pois(a_i * lambda).

    The conditional law is multinomial(t, a / sum(a)).
    """
    a = np.asarray(weights, dtype=float)
    if a.ndim != 1 or a.size == 0 or np.any(~(a > 0)):
        raise ParameterError("Poisson weights must be positive")
    _check_nt(a.size, t)
    return rng.multinomial(t, a / a.sum(), size=size).astype(np.int64)


def sample_conditional_binomial(sizes: Sequence[int], t: int, rng, size: int | None = None) -> np.ndarray:
    """Draw X | sum(X) = t for independent X_i ~ Bin(m_i, p).

    Multivariate hypergeometric, drawn one coordinate at a time:
    X_i ~ Hypergeometric(good=m_i, bad=m_{i+1}+...+m_n, draws=t - X_1 - ... - X_{i-1}).
    """
    m = _check_sizes(sizes)
    _check_nt(m.size, t)
    if t > m.sum():
        raise InfeasibleTotalError(f"total {t} exceeds sum of sizes {int(m.sum())}")
    shape = (1,) if size is None else (size,)
    out = np.empty(shape + (m.size,), dtype=np.int64)
    left = np.full(shape, t, dtype=np.int64)
    rest = int(m.sum())
    for i, mi in enumerate(m[:-1]):
        rest -= int(mi)
        xi = rng.hypergeometric(int(mi), rest, left) if rest > 0 else left.copy()
        out[:, i] = xi
        left = left - xi
    out[:, -1] = left
    return out[0] if size is None else out


class PowerSeriesMH:
    """Metropolis-Hastings chain targeting P(x | sum x = t) ∝ prod a(x_i).

    Proposals are independent uniform compositions, so the acceptance
    probability is min(1, prod a(y_i) / prod a(x_i)), evaluated in log space.
    Iterating yields kept states forever; :meth:`sample` collects a batch.
    """

    def __init__(
        self,
        log_a: Callable[[np.ndarray], np.ndarray],
        n: int,
        t: int,
        rng,
        burn_in: int = 1000,
        thin: int = 1,
        batch: int = 4096,
    ):
        _check_nt(n, t)
        if burn_in < 0 or thin < 1:
            raise ParameterError("burn_in must be >= 0 and thin >= 1")
        self.log_a = log_a
        self.n, self.t = n, t
        self.rng = rng
        self.burn_in, self.thin = burn_in, thin
        self._batch = batch
        self.proposals = 0
        self.accepted = 0
        self._burned = False
        self._state, self._logw = self._initial_state()

    def _weights(self, y: np.ndarray) -> np.ndarray:
        logw = np.sum(np.asarray(self.log_a(y), dtype=float), axis=-1)
        if np.any(np.isneginf(logw)) or np.any(np.isnan(logw)):
            raise SupportError("coefficient a(x) vanished at a reachable composition")
        return logw

    def _initial_state(self):
        x = sample_conditional_geometric(self.n, self.t, self.rng)
        return x, float(self._weights(x[None, :])[0])

    def _advance(self, steps: int, keep_every: int) -> np.ndarray:
        kept = []
        done = 0
        x, logw = self._state, self._logw
        while done < steps:
            b = min(self._batch, steps - done)
            ys = sample_conditional_geometric(self.n, self.t, self.rng, size=b)
            lw = self._weights(ys)
            log_u = np.log(self.rng.random(b))
            for i in range(b):
                self.proposals += 1
                if lw[i] >= logw or log_u[i] < lw[i] - logw:
                    x, logw = ys[i], lw[i]
                    self.accepted += 1
                done += 1
                if keep_every and done % keep_every == 0:
                    kept.append(x)
        self._state, self._logw = x, logw
        return np.array(kept, dtype=np.int64).reshape(-1, self.n)

    def _burn(self) -> None:
        if not self._burned:
            self._advance(self.burn_in, 0)
            self._burned = True

    def sample(self, count: int) -> np.ndarray:
        """``count`` kept states as a ``(count, n)`` array."""
        self._burn()
        return self._advance(count * self.thin, self.thin)

    def __iter__(self) -> Iterator[np.ndarray]:
        while True:
            yield from self.sample(self._batch)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else math.nan


def sample_conditional_powerseries_mh(
    log_a: Callable[[np.ndarray], np.ndarray],
    n: int,
    t: int,
    rng,
    burn_in: int = 1000,
    thin: int = 1,
) -> PowerSeriesMH:
    """Chain whose kept states are (approximately) draws of X | sum(X) = t
    under a power-series null with coefficients exp(log_a)."""
    return PowerSeriesMH(log_a, n, t, rng, burn_in=burn_in, thin=thin)
