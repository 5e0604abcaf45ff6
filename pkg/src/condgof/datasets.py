"""Reading count data and the bundled example data sets.

Two text layouts are accepted, with ``#`` comments and blank lines ignored:

* raw: non-negative integers separated by whitespace or newlines;
* frequency: ``value,count`` rows, optionally preceded by a header line.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .sample import Sample

FIXTURES = ("betageo_n100", "dweibull_n50", "inspection")

_INT = re.compile(r"^\d+$")


def parse_dataset(text: str) -> Sample:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((number, line))
    if not lines:
        raise ParseError("no data found")
    if any("," in line for _, line in lines):
        return _parse_frequencies(lines)
    values = []
    for number, line in lines:
        for token in line.split():
            if not _INT.match(token):
                raise ParseError(f"expected a non-negative integer, got {token!r}", number)
            values.append(int(token))
    return Sample(np.array(values, dtype=np.int64))


def _parse_frequencies(lines) -> Sample:
    counts: dict[int, int] = {}
    for idx, (number, line) in enumerate(lines):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise ParseError("expected 'value,count'", number)
        value, count = fields
        if not (_INT.match(value) and _INT.match(count)):
            if idx == 0:
                continue  # header
            raise ParseError(f"expected non-negative integers, got {line!r}", number)
        v = int(value)
        if v in counts:
            raise ParseError(f"value {v} listed twice", number)
        counts[v] = int(count)
    if sum(counts.values()) == 0:
        raise ParseError("no observation has a positive count")
    return Sample.from_counts(counts)


def read_dataset(path: str | Path) -> Sample:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text") from exc
    return parse_dataset(text)


def load_fixture(name: str) -> Sample:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("condgof").joinpath("data", f"{name}.txt").read_text(encoding="utf-8")
    return parse_dataset(text)


def to_frequency_csv(sample: Sample) -> str:
    rows = ["value,count"]
    rows += [f"{j},{c}" for j, c in enumerate(sample.counts()) if c]
    return "\n".join(rows) + "\n"
