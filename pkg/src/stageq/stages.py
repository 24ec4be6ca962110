"""Geometric stage schedule shared by the stage-based learners.

Visits to a fixed (h, s, a) triple are grouped into consecutive stages.
The first stage has length H and each subsequent stage grows by a factor
(1 + 1/H), rounded down:

    e_1 = H,        e_{i+1} = floor((1 + 1/H) * e_i)

A Q update fires exactly when the cumulative visit count hits a stage end
sum_{i<=j} e_i, using only the samples of the just-finished stage.
Geometric growth keeps the number of stages -- and hence the number of
possible greedy-policy switches -- logarithmic in the visit count, while
the slow (1 + 1/H) rate wastes at most an O(1) fraction of samples.

Schedules are immutable after construction and are meant to be built once
per (H, n_max) and shared across all (h, s, a) counters.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
import math

import numpy as np


class OutOfRangeError(Exception):
    """Visit count outside the precomputed schedule range [1, n_max]."""

    def __init__(self, n: int, n_max: int):
        super().__init__(f"visit count {n} outside schedule range [1, {n_max}]")
        self.n = n
        self.n_max = n_max


@dataclass
class StageSchedule:
    """Precomputed stage lengths and stage-end visit counts for one horizon.

    lengths[j] is the length e_{j+1} of the (j+1)-th stage; ends[j] is the
    cumulative visit count sum_{i<=j+1} e_i at which the (j+1)-th update
    fires.  ends[-1] >= n_max so any visit count in range is covered.
    """

    H: int
    n_max: int
    lengths: np.ndarray  # (n_stages,) int64
    ends: np.ndarray     # (n_stages,) int64, strictly increasing
    _end_set: frozenset = field(repr=False)
    _end_list: list = field(repr=False)  # plain ints for bisect

    def is_stage_end(self, n: int) -> bool:
        """True iff the n-th visit completes a stage."""
        if not 1 <= n <= self.n_max:
            raise OutOfRangeError(n, self.n_max)
        return n in self._end_set

    def stage_index(self, n: int) -> int:
        """1-based index of the stage the n-th visit falls in."""
        if not 1 <= n <= self.n_max:
            raise OutOfRangeError(n, self.n_max)
        return bisect_left(self._end_list, n) + 1

    @property
    def n_stages(self) -> int:
        return len(self.lengths)

    def end_set(self) -> frozenset:
        """Stage-end visit counts as a set (O(1) membership, hot-loop use)."""
        return self._end_set


def build_schedule(H: int, n_max: int, growth: float | None = None) -> StageSchedule:
    """Build the stage schedule covering visit counts up to n_max.

    The default recurrence floor((1 + 1/H) * e) is evaluated in exact
    integer arithmetic as e + e // H; a float product rounds the wrong way
    for some (H, e), e.g. H=11, e=239.  `growth` (ablations only) replaces
    the rate with an arbitrary factor > 1, forcing at least +1 per stage.
    """
    if H < 1:
        raise ValueError(f"H must be >= 1, got {H}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if growth is not None and growth <= 1.0:
        raise ValueError(f"growth override must exceed 1, got {growth}")

    lengths: list[int] = []
    ends: list[int] = []
    e = H
    total = 0
    while total < n_max:
        lengths.append(e)
        total += e
        ends.append(total)
        if growth is None:
            e = e + e // H
        else:
            e = max(math.floor(growth * e), e + 1)
    return StageSchedule(
        H=H,
        n_max=n_max,
        lengths=np.asarray(lengths, dtype=np.int64),
        ends=np.asarray(ends, dtype=np.int64),
        _end_set=frozenset(ends),
        _end_list=ends,
    )


def stage_count_bound(H: int, n: int) -> float:
    """Deterministic cap 4H*ln(n/(2H) + 1) on the number of stage ends <= n.

    Stage lengths grow at rate >= 1 + 1/(2H), so j stages cover at least
    2H^2((1+1/(2H))^j - 1) visits; solving for j and using
    ln(1+1/(2H)) >= 1/(4H) gives the (slightly loose) cap above.
    """
    return 4.0 * H * math.log(n / (2.0 * H) + 1.0)
