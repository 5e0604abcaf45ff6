"""The observed-data container shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Sample:
    """An ordered sample of non-negative integers."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1:
            raise ParameterError("a sample must be one-dimensional")
        if v.size == 0:
            raise ParameterError("a sample needs at least one observation")
        if not np.issubdtype(v.dtype, np.integer):
            if not np.all(np.equal(np.mod(v, 1), 0)):
                raise ParameterError("sample values must be integers")
        v = v.astype(np.int64)
        if np.any(v < 0):
            raise ParameterError("sample values must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_counts(cls, counts) -> "Sample":
        """Build a sample from frequencies ``counts[j]`` of value ``j``,
        or from a ``{value: count}`` mapping."""
        if isinstance(counts, dict):
            keys = sorted(counts)
            values = np.repeat(
                np.array(keys, dtype=np.int64),
                np.array([counts[k] for k in keys], dtype=np.int64),
            )
        else:
            counts = np.asarray(counts, dtype=np.int64)
            values = np.repeat(np.arange(counts.size), counts)
        return cls(values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def t(self) -> int:
        return int(self.values.sum())

    @property
    def m1(self) -> float:
        return self.t / self.n

    @property
    def m2(self) -> float:
        return float(np.dot(self.values, self.values)) / self.n

    def counts(self, length: int | None = None) -> np.ndarray:
        """Observed frequencies o_j for j = 0..max(x) (or ``length - 1``)."""
        minlength = 0 if length is None else length
        return np.bincount(self.values, minlength=minlength)

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.values.tolist())


SampleLike = Union[Sample, "np.ndarray", list, tuple]


def as_sample(x: SampleLike) -> Sample:
    return x if isinstance(x, Sample) else Sample(np.asarray(x))
