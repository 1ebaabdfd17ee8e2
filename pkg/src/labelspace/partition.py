"""Families of label subsets driving the partition ensembles."""
from __future__ import annotations

from typing import Iterable, Sequence, Tuple

__all__ = ["LabelPartition"]


class LabelPartition:
    """Ordered list of sorted label subsets covering ``0..n_labels-1``.

    Disjoint unless ``overlapping`` is set. Text form is one subset per
    line, indices comma-separated.
    """

    __slots__ = ("subsets", "n_labels", "overlapping")

    def __init__(self, subsets: Iterable[Iterable[int]], n_labels: int, overlapping: bool = False):
        subsets = tuple(tuple(sorted(int(j) for j in s)) for s in subsets)
        n_labels = int(n_labels)
        seen = set()
        for s in subsets:
            if not s:
                raise ValueError("empty label subset")
            if len(set(s)) != len(s):
                raise ValueError(f"subset {list(s)} repeats a label")
            if s[0] < 0 or s[-1] >= n_labels:
                raise ValueError(f"subset {list(s)} out of range for {n_labels} labels")
            if not overlapping and seen.intersection(s):
                raise ValueError("subsets of a disjoint partition overlap")
            seen.update(s)
        if len(seen) != n_labels:
            missing = sorted(set(range(n_labels)) - seen)
            raise ValueError(f"labels {missing} are not covered")
        self.subsets: Tuple[Tuple[int, ...], ...] = subsets
        self.n_labels = n_labels
        self.overlapping = bool(overlapping)

    def __len__(self):
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)

    def __getitem__(self, i):
        return self.subsets[i]

    def as_lists(self):
        return [list(s) for s in self.subsets]

    def to_text(self) -> str:
        return "".join(",".join(map(str, s)) + "\n" for s in self.subsets)

    @classmethod
    def from_text(cls, text: str, n_labels: int = None, overlapping: bool = None):
        subsets = [[int(t) for t in line.split(",")] for line in text.splitlines() if line.strip()]
        if n_labels is None:
            n_labels = 1 + max(max(s) for s in subsets)
        if overlapping is None:
            overlapping = sum(map(len, subsets)) != len({j for s in subsets for j in s})
        return cls(subsets, n_labels, overlapping)

    def __eq__(self, other):
        if not isinstance(other, LabelPartition):
            return NotImplemented
        return (self.subsets, self.n_labels, self.overlapping) == \
            (other.subsets, other.n_labels, other.overlapping)

    def __hash__(self):
        return hash((self.subsets, self.n_labels, self.overlapping))

    def __repr__(self):
        kind = "overlapping" if self.overlapping else "disjoint"
        return f"LabelPartition({self.as_lists()}, n_labels={self.n_labels}, {kind})"
