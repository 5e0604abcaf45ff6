"""Monte Carlo conditional p-values, power and type I error studies.

Randomness is organised as a tree of ``numpy.random.SeedSequence`` streams:
a study with master seed ``s`` gives outer iteration ``i`` the stream
``SeedSequence(s, spawn_key=(i,))``, which draws the data set and then its
conditional resamples. Results therefore do not depend on how iterations
are spread over worker processes.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import stats as st
from .conditional import sample_conditional_geometric
from .distributions import Geometric
from .sample import SampleLike, as_sample
from .stats import Statistic

log = logging.getLogger(__name__)

__all__ = [
    "TestResult",
    "StudySpec",
    "StudyResult",
    "make_rng",
    "conditional_p_values",
    "conditional_p_value",
    "run_power_study",
    "run_type1_study",
]

DEFAULT_K = 10_000
DEFAULT_STUDY_M = 1000
DEFAULT_STUDY_K = 1000
# memory cap for one block of conditional draws (cells of the count matrix)
_BLOCK_CELLS = 4_000_000
# relative slack when comparing a resampled statistic with the observed one,
# so that equal values reached by different float paths still count as ties
_TIE_RTOL = 1e-9
_TIE_ATOL = 1e-12


def make_rng(seed: int | None, *key: int) -> np.random.Generator:
    """Generator for the stream ``(seed, key...)``; ``seed=None`` draws fresh entropy."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class TestResult:
    """Monte Carlo conditional p-value for one statistic."""

    __test__ = False  # not a pytest class

    statistic: Statistic
    observed: float
    p_cond: float
    replications: int
    extreme_count: int
    seed: int | None = None
    degenerate: bool = False
    undefined_draws: int = 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["statistic"] = self.statistic.value
        return d


def _block_size(n: int, t: int, K: int) -> int:
    width = max(n, t + n)
    return max(1, min(K, _BLOCK_CELLS // width))


def _extreme_counts(sample: np.ndarray, statistics: Sequence[Statistic], K: int, rng):
    """(observed values, extreme counts, undefined counts) for one sample."""
    n, t = sample.size, int(sample.sum())
    observed = {s: float(v[0]) for s, v in st.evaluate(sample, statistics).items()}
    counts = dict.fromkeys(statistics, 0)
    undefined = dict.fromkeys(statistics, 0)
    done = 0
    block = _block_size(n, t, K)
    while done < K:
        size = min(block, K - done)
        draws = sample_conditional_geometric(n, t, rng, size=size)
        values = st.evaluate(draws, statistics)
        for s in statistics:
            d, obs = values[s], observed[s]
            bad = np.isnan(d)
            undefined[s] += int(bad.sum())
            if math.isnan(obs):
                # nothing is more extreme than an undefined observed value
                counts[s] += size - int(bad.sum())
                continue
            counts[s] += int(np.count_nonzero(d >= obs - (_TIE_ATOL + _TIE_RTOL * abs(obs))))
        done += size
    return observed, counts, undefined


def conditional_p_values(
    x: SampleLike,
    statistics: Iterable[Statistic | str] = st.ALL_STATISTICS,
    K: int = DEFAULT_K,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> dict[Statistic, TestResult]:
    """Conditional p-values P(D(Y) >= D(x) | sum Y = t) for several statistics.

    All statistics are evaluated on the same K uniform conditional draws.
    A sample with t = 0 has a one-point conditional law and gets p = 1.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    s = as_sample(x)
    statistics = st.parse_statistics(statistics)
    if rng is None:
        rng = make_rng(seed)
    if s.t == 0:
        return {
            stat: TestResult(stat, math.nan, 1.0, K, K, seed, degenerate=True)
            for stat in statistics
        }
    observed, counts, undefined = _extreme_counts(s.values, statistics, K, rng)
    results = {}
    for stat in statistics:
        if undefined[stat]:
            warnings.warn(
                f"{stat.label}: undefined on {undefined[stat]} of {K} resamples; treated as not extreme",
                RuntimeWarning,
                stacklevel=2,
            )
        results[stat] = TestResult(
            stat, observed[stat], counts[stat] / K, K, counts[stat], seed,
            undefined_draws=undefined[stat],
        )
    return results


def conditional_p_value(
    x: SampleLike,
    stat: Statistic | str,
    K: int = DEFAULT_K,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> TestResult:
    stat = st.parse_statistics([stat])[0]
    return conditional_p_values(x, [stat], K=K, rng=rng, seed=seed)[stat]


# -- studies -----------------------------------------------------------------


@dataclass(frozen=True)
class StudySpec:
    """One cell of a power or type I error study.

    ``alternative`` is any distribution object with ``sample(n, rng)``.
    """

    alternative: object
    n: int
    alpha: float = 0.1
    M: int = DEFAULT_STUDY_M
    K: int = DEFAULT_STUDY_K
    statistics: tuple[Statistic, ...] = st.STUDY_STATISTICS
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise ValueError("M and K must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "statistics", st.parse_statistics(self.statistics))


@dataclass
class StudyResult:
    """Conditional p-values of M simulated data sets, one column per statistic."""

    spec: StudySpec
    p_values: np.ndarray  # (M, len(statistics))
    degenerate: int
    label: str = ""
    extra: dict = field(default_factory=dict)

    def rejection_rate(self, alpha: float | None = None) -> dict[Statistic, float]:
        alpha = self.spec.alpha if alpha is None else alpha
        rates = np.mean(self.p_values <= alpha, axis=0)
        return dict(zip(self.spec.statistics, rates.tolist()))

    def standard_error(self, alpha: float | None = None) -> dict[Statistic, float]:
        M = self.p_values.shape[0]
        return {s: math.sqrt(r * (1 - r) / M) for s, r in self.rejection_rate(alpha).items()}

    def rows(self, alphas: Sequence[float] | None = None) -> list[dict]:
        alphas = [self.spec.alpha] if alphas is None else list(alphas)
        out = []
        for a in alphas:
            rates, ses = self.rejection_rate(a), self.standard_error(a)
            for s in self.spec.statistics:
                out.append({
                    "alternative": self.label,
                    "n": self.spec.n,
                    "alpha": a,
                    "statistic": s.value,
                    "rate": rates[s],
                    "se": ses[s],
                    "M": self.p_values.shape[0],
                    "K": self.spec.K,
                    "degenerate": self.degenerate,
                })
        return out

    def to_json(self, alphas: Sequence[float] | None = None) -> str:
        return json.dumps(self.rows(alphas), indent=2)

    def to_csv(self, alphas: Sequence[float] | None = None) -> str:
        rows = self.rows(alphas)
        header = list(rows[0])
        lines = [",".join(header)]
        for r in rows:
            lines.append(",".join(_fmt_csv(r[h]) for h in header))
        return "\n".join(lines) + "\n"


def _fmt_csv(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _study_chunk(spec: StudySpec, indices: range) -> tuple[np.ndarray, int]:
    """p-values for outer iterations ``indices``; each gets its own stream."""
    p = np.ones((len(indices), len(spec.statistics)))
    degenerate = 0
    for row, i in enumerate(indices):
        rng = make_rng(spec.seed, i)
        data = spec.alternative.sample(spec.n, rng)
        if data.sum() == 0:
            degenerate += 1
            continue
        _, counts, _ = _extreme_counts(data, spec.statistics, spec.K, rng)
        p[row] = [counts[s] / spec.K for s in spec.statistics]
    return p, degenerate


def _chunks(M: int, parts: int) -> list[range]:
    step = max(1, math.ceil(M / parts))
    return [range(a, min(a + step, M)) for a in range(0, M, step)]


def run_power_study(
    spec: StudySpec,
    workers: int | None = 1,
    progress: Callable[[int, int], None] | None = None,
    label: str = "",
) -> StudyResult:
    """Estimate rejection rates sum I(p_i <= alpha) / M over M data sets.

    Data sets with t = 0 are not rejected and are tallied in ``degenerate``.
    ``progress(done, M)`` is called as outer iterations complete. The result
    is identical for any ``workers``.
    """
    workers = (os.cpu_count() or 1) if workers is None else max(1, workers)
    M = spec.M
    p = np.ones((M, len(spec.statistics)))
    degenerate = 0
    done = 0
    if workers == 1:
        # chunks only to give progress callbacks a useful granularity
        for chunk in _chunks(M, max(1, M // 10)) if progress else [range(M)]:
            p[chunk.start:chunk.stop], d = _study_chunk(spec, chunk)
            degenerate += d
            done += len(chunk)
            if progress:
                progress(done, M)
    else:
        chunks = _chunks(M, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_study_chunk, spec, c) for c in chunks]
            for chunk, fut in zip(chunks, futures):
                p[chunk.start:chunk.stop], d = fut.result()
                degenerate += d
                done += len(chunk)
                if progress:
                    progress(done, M)
    log.debug("study %s n=%d finished, %d degenerate data sets", label, spec.n, degenerate)
    return StudyResult(spec, p, degenerate, label=label)


def run_type1_study(
    p: float,
    n: int,
    alpha: float = 0.05,
    M: int = DEFAULT_STUDY_M,
    K: int = DEFAULT_STUDY_K,
    statistics: Iterable[Statistic | str] = st.STUDY_STATISTICS,
    seed: int = 0,
    workers: int | None = 1,
    progress: Callable[[int, int], None] | None = None,
) -> StudyResult:
    """Rejection rates when the data really are Geom(p)."""
    spec = StudySpec(Geometric(p), n, alpha, M, K, tuple(st.parse_statistics(statistics)), seed)
    return run_power_study(spec, workers=workers, progress=progress, label=f"geom({p:g})")
