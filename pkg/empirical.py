"""Validated samples, empirical stop-loss transforms and their exact difference."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class SampleError(ValueError):
    pass


class EmptySample(SampleError):
    def __init__(self):
        super().__init__("sample is empty")


class NegativeValue(SampleError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"negative value {value!r} at index {index}")


class NonFinite(SampleError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite value {value!r} at index {index}")


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Sample:
    values: np.ndarray

    @classmethod
    def _trusted(cls, sorted_values) -> "Sample":
        # Caller guarantees sorted, finite, non-negative, non-empty.
        return cls(_frozen(sorted_values))

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    @cached_property
    def mean(self) -> float:
        return float(np.mean(self.values, dtype=np.longdouble))

    @cached_property
    def _suffix_sums(self) -> np.ndarray:
        # _suffix_sums[k] = sum(values[k:]), extended precision
        reverse = np.cumsum(self.values[::-1], dtype=np.longdouble)[::-1]
        return np.concatenate([reverse, np.zeros(1, dtype=np.longdouble)])

    def stop_loss_at(self, points) -> np.ndarray:
        """(1/m) * sum((x_i - t)^+) at each point, via suffix sums."""
        points = np.asarray(points, dtype=float)
        above = np.searchsorted(self.values, points, side="right")
        count_above = self.size - above
        excess = self._suffix_sums[above] - count_above * points.astype(np.longdouble)
        return np.asarray(excess / self.size, dtype=float)

    def scaled(self, factor: float) -> "Sample":
        if not factor > 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return Sample._trusted(self.values * factor)


def make_sample(raw) -> Sample:
    values = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float).ravel()
    if values.size == 0:
        raise EmptySample()
    non_finite = np.flatnonzero(~np.isfinite(values))
    if non_finite.size:
        index = int(non_finite[0])
        raise NonFinite(index, float(values[index]))
    negative = np.flatnonzero(values < 0)
    if negative.size:
        index = int(negative[0])
        raise NegativeValue(index, float(values[index]))
    return Sample._trusted(np.sort(values, kind="stable"))


def empirical_sl(sample: Sample, t):
    if np.ndim(t) == 0:
        return float(np.mean(np.maximum(sample.values - float(t), 0.0)))
    t = np.asarray(t, dtype=float)
    return np.maximum(sample.values[None, :] - t[:, None], 0.0).mean(axis=1)


@dataclass(frozen=True, eq=False)
class SlDifference:
    """t -> F_m^SL(t) - G_n^SL(t), linear between breakpoints and 0 past the last one."""

    breakpoints: np.ndarray
    node_values: np.ndarray

    @property
    def size(self) -> int:
        return int(self.breakpoints.shape[0])

    def evaluate(self, t):
        return np.interp(t, self.breakpoints, self.node_values, right=0.0)


def sl_difference(x: Sample, y: Sample) -> SlDifference:
    breakpoints = np.unique(np.concatenate([[0.0], x.values, y.values]))
    node_values = x.stop_loss_at(breakpoints) - y.stop_loss_at(breakpoints)
    # both transforms vanish at the pooled maximum
    node_values[-1] = 0.0
    return SlDifference(_frozen(breakpoints), _frozen(node_values))
