"""Cycle enumeration and bulk type classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .digits import HappyFunction, apply
from .errors import StepBudgetExceeded, ValidationError

UNCLASSIFIED = -1


@dataclass(frozen=True)
class Cycle:
    """One periodic orbit. Identity is the member set; ``order`` is the
    orbit written from its smallest member."""

    members: tuple[int, ...]
    order: tuple[int, ...]

    @classmethod
    def from_orbit(cls, H: HappyFunction, start: int) -> "Cycle":
        x, orbit = start, []
        while True:
            orbit.append(x)
            x = apply(H, x)
            if x == start:
                break
        lo = orbit.index(min(orbit))
        order = tuple(orbit[lo:] + orbit[:lo])
        return cls(tuple(sorted(orbit)), order)

    def __contains__(self, x):
        return x in self.members

    def __len__(self):
        return len(self.members)

    @property
    def smallest(self) -> int:
        return self.members[0]

    def label(self) -> str:
        return ";".join(map(str, self.order))

    def __str__(self):
        return "{" + ",".join(map(str, self.order)) + "}"


@dataclass(frozen=True)
class CycleSet:
    H: HappyFunction
    cycles: tuple[Cycle, ...]

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self):
        return len(self.cycles)

    def __getitem__(self, k):
        return self.cycles[k]

    def index_of(self, cycle: Cycle) -> int:
        return self.cycles.index(cycle)

    def containing(self, x: int) -> Cycle:
        for c in self.cycles:
            if x in c:
                return c
        raise ValidationError(f"{x} is not a member of any cycle of {self.H}")

    def select(self, selector: Union[int, str, Sequence[int], Cycle]) -> Cycle:
        """Resolve a cycle from a member, a member list ("4,16"), or a Cycle."""
        if isinstance(selector, Cycle):
            if selector not in self.cycles:
                raise ValidationError(f"{selector} is not a cycle of {self.H}")
            return selector
        if isinstance(selector, str):
            selector = [int(t) for t in selector.replace(";", ",").split(",") if t.strip()]
        if isinstance(selector, int):
            selector = [selector]
        members = set(selector)
        if not members:
            raise ValidationError("empty cycle selector")
        c = self.containing(min(members))
        if not members <= set(c.members):
            raise ValidationError(f"{sorted(members)} do not lie on a single cycle")
        return c

    def indices(self, C) -> frozenset[int]:
        """Cycle indices for a Cycle or an iterable of Cycles (a union)."""
        if isinstance(C, Cycle):
            return frozenset([self.index_of(C)])
        return frozenset(self.index_of(c) for c in C)

    def complement(self, C) -> tuple[Cycle, ...]:
        keep = self.indices(C)
        return tuple(c for k, c in enumerate(self.cycles) if k not in keep)

    def to_json(self) -> list[list[int]]:
        return [list(c.order) for c in self.cycles]


def trajectory(H: HappyFunction, n: int, max_steps: int | None = None) -> list[int]:
    """Iterate H from n until a value repeats; the repeated value closes the list."""
    if n < 1:
        raise ValidationError("trajectory start must be >= 1")
    if max_steps is None:
        # every path enters [0, threshold) and then can visit each value once
        max_steps = 64 * (len(str(n)) + 1) + H.threshold + 64
    seen, path = set(), []
    x = n
    while x not in seen:
        if len(path) > max_steps:
            raise StepBudgetExceeded(f"trajectory of {n} exceeded {max_steps} steps")
        seen.add(x)
        path.append(x)
        x = apply(H, x)
    path.append(x)
    return path


def find_cycles(H: HappyFunction) -> CycleSet:
    """All cycles on positive integers; complete since every orbit enters
    [1, threshold - 1]. The {0} fixed point is not recorded."""
    found: dict[int, Cycle] = {}
    outcome: dict[int, int] = {0: 0}   # value -> smallest member of its cycle; 0 means "reaches 0"
    for n in range(1, H.threshold):
        if n in outcome:
            continue
        path, x = [], n
        pos: dict[int, int] = {}
        while x not in outcome and x not in pos:
            pos[x] = len(path)
            path.append(x)
            x = apply(H, x)
        if x in outcome:
            res = outcome[x]
        else:
            c = Cycle.from_orbit(H, x)
            found[c.smallest] = c
            res = c.smallest
        for y in path:
            outcome[y] = res
    cycles = tuple(found[k] for k in sorted(found))
    return CycleSet(H, cycles)


def digit_images(H: HappyFunction, bound: int) -> np.ndarray:
    """``H(i)`` for every i in [0, bound] as an int64 array."""
    idx = np.arange(bound + 1, dtype=np.int64)
    h = np.asarray(H.h, dtype=np.int64)
    out = np.zeros(bound + 1, dtype=np.int64)
    while idx.any():
        idx, r = np.divmod(idx, H.base)
        out += h[r]
    return out


@dataclass(frozen=True)
class TypeTable:
    """Cycle index of every integer in [0, bound]; -1 marks 0 (and anything
    that falls into the 0 fixed point)."""

    bound: int
    labels: np.ndarray
    cycles: CycleSet

    def label(self, i: int) -> int:
        if not 0 <= i <= self.bound:
            raise ValidationError(f"{i} outside type table range [0, {self.bound}]")
        return int(self.labels[i])


def build_type_table(H: HappyFunction, cycles: CycleSet, bound: int) -> TypeTable:
    if bound < 1:
        raise ValidationError("type table bound must be >= 1")
    labels = np.full(bound + 1, UNCLASSIFIED, dtype=np.int32)
    head = min(bound, H.threshold - 1)
    index = {}
    for k, c in enumerate(cycles):
        for x in c.members:
            index[x] = k
    # small range by direct iteration with memo; values may exceed `head`
    memo = {0: UNCLASSIFIED, **index}
    for n in range(1, head + 1):
        path, x = [], n
        while x not in memo:
            path.append(x)
            x = apply(H, x)
        for y in path:
            memo[y] = memo[x]
        labels[n] = memo[n]
    images = digit_images(H, bound)
    start = head + 1
    while start <= bound:
        end = min(bound + 1, 2 * start)
        # H(i) < i above the threshold, so chunk images must already be labelled
        while images[start:end].max() >= start:
            end = start + (end - start) // 2
        labels[start:end] = labels[images[start:end]]
        start = end
    return TypeTable(bound, labels, cycles)


def is_type(table: TypeTable, C: Union[Cycle, Iterable[Cycle]], i: int) -> bool:
    lab = table.label(i)
    if lab == UNCLASSIFIED:
        return False
    return lab in table.cycles.indices(C)
