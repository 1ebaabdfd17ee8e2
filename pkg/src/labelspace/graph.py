"""Label co-occurrence graphs and community detection over them."""
from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np

from .partition import LabelPartition
from .sparse import CsrBinaryMatrix

__all__ = [
    "LabelGraph",
    "CommunityAssignment",
    "build_cooccurrence_graph",
    "modularity",
    "label_propagation",
    "greedy_modularity",
    "communities_to_partition",
    "connected_components",
]


class LabelGraph:
    """Undirected weighted graph on label indices ``0..n_labels-1``.

    ``edges`` maps ``(u, v)`` with ``u < v`` to a positive weight. There are
    no self-loops.
    """

    __slots__ = ("n_labels", "edges", "_adj")

    def __init__(self, n_labels: int, edges: Dict[Tuple[int, int], float]):
        self.n_labels = int(n_labels)
        clean = {}
        for (u, v), w in edges.items():
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on label {u}")
            if u > v:
                u, v = v, u
            if not 0 <= u < v < self.n_labels:
                raise ValueError(f"edge ({u}, {v}) out of range for {self.n_labels} labels")
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            clean[(u, v)] = clean.get((u, v), 0) + w
        self.edges = dict(sorted(clean.items()))
        adj: List[Dict[int, float]] = [dict() for _ in range(self.n_labels)]
        for (u, v), w in self.edges.items():
            adj[u][v] = w
            adj[v][u] = w
        # neighbour dicts in ascending neighbour order keep float sums reproducible
        self._adj = [dict(sorted(a.items())) for a in adj]

    def neighbors(self, u) -> Dict[int, float]:
        return self._adj[u]

    @property
    def total_weight(self):
        return sum(self.edges.values())

    def degrees(self):
        return [sum(a.values()) for a in self._adj]

    def to_edge_list(self) -> str:
        """``u v weight`` lines sorted by ``(u, v)``."""
        return "".join(f"{u} {v} {w:.17g}\n" for (u, v), w in self.edges.items())

    @classmethod
    def from_edge_list(cls, text: str, n_labels: int):
        edges = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            u, v, w = line.split()
            edges[(int(u), int(v))] = float(w)
        return cls(n_labels, edges)

    def __eq__(self, other):
        if not isinstance(other, LabelGraph):
            return NotImplemented
        return self.n_labels == other.n_labels and self.edges == other.edges

    __hash__ = None

    def __repr__(self):
        return f"LabelGraph(n_labels={self.n_labels}, n_edges={len(self.edges)})"


class CommunityAssignment(tuple):
    """Community id per label; ids are dense ``0..n_communities-1``."""

    def __new__(cls, community_of):
        ids = [int(c) for c in community_of]
        if ids and sorted(set(ids)) != list(range(max(ids) + 1)):
            raise ValueError(f"community ids {sorted(set(ids))} are not dense")
        return super().__new__(cls, ids)

    @classmethod
    def compact(cls, raw):
        """Relabel arbitrary ids to dense ids by order of first appearance."""
        mapping: Dict[int, int] = {}
        return cls(mapping.setdefault(c, len(mapping)) for c in raw)

    @property
    def n_communities(self):
        return max(self) + 1 if self else 0


def build_cooccurrence_graph(Y: CsrBinaryMatrix, weighted: bool = True) -> LabelGraph:
    """Edge between every pair of labels appearing together in some row.

    With ``weighted`` the edge weight is the number of such rows, otherwise 1.
    """
    if Y.n_cols < 1:
        raise ValueError("label matrix has no columns")
    counts: Dict[Tuple[int, int], int] = defaultdict(int)
    for i in range(Y.n_rows):
        support = Y.row(i).tolist()
        for pair in combinations(support, 2):
            counts[pair] += 1
    if not weighted:
        counts = {e: 1 for e in counts}
    return LabelGraph(Y.n_cols, counts)


def modularity(g: LabelGraph, a) -> float:
    """Weighted Newman modularity of assignment ``a`` on ``g``."""
    a = list(a)
    if len(a) != g.n_labels:
        raise ValueError(f"assignment has {len(a)} entries for {g.n_labels} labels")
    if not g.edges:
        raise ValueError("modularity is undefined on an edgeless graph")
    n_comm = max(a) + 1
    internal = [0.0] * n_comm
    degree = [0.0] * n_comm
    for u in range(g.n_labels):
        d_u = 0.0
        in_u = 0.0
        cu = a[u]
        # identical summation order for d_u and in_u: all-in-one gives Q == 0 exactly
        for v, w in g.neighbors(u).items():
            d_u += w
            in_u += w if a[v] == cu else 0.0
        internal[cu] += in_u
        degree[cu] += d_u
    two_m = sum(degree)
    return sum(i / two_m - (d / two_m) ** 2 for i, d in zip(internal, degree))


def label_propagation(g: LabelGraph, seed: int = 0, max_iter: int = 100) -> CommunityAssignment:
    """Asynchronous label propagation.

    Each sweep visits nodes in a freshly shuffled order; a node moves to the
    neighbouring community of largest total edge weight. Ties are drawn
    uniformly at random, except that a node already in one of the tied
    communities stays put. Stops after a sweep without changes or after
    ``max_iter`` sweeps.
    """
    rng = np.random.default_rng(seed)
    community = list(range(g.n_labels))
    for _ in range(max_iter):
        changed = False
        for u in rng.permutation(g.n_labels):
            nbrs = g.neighbors(u)
            if not nbrs:
                continue
            weight: Dict[int, float] = {}
            for v, w in nbrs.items():
                weight[community[v]] = weight.get(community[v], 0.0) + w
            best = max(weight.values())
            tied = sorted(c for c, w in weight.items() if w == best)
            if community[u] in tied:
                continue
            choice = tied[0] if len(tied) == 1 else tied[int(rng.integers(len(tied)))]
            community[u] = choice
            changed = True
        if not changed:
            break
    return CommunityAssignment.compact(community)


def greedy_modularity(g: LabelGraph) -> CommunityAssignment:
    """Agglomerative modularity maximisation (Clauset-Newman-Moore style).

    Starting from singletons, merge the pair of communities with the largest
    modularity gain until no merge gains anything. Among equal gains the
    lexicographically smallest ``(i, j)`` pair of community ids wins; a merged
    community keeps the smaller id.
    """
    if not g.edges:
        raise ValueError("greedy modularity needs at least one edge")
    two_m = float(sum(g.degrees()))
    degree = {u: d for u, d in enumerate(g.degrees())}
    # between[i][j]: total edge weight between communities i and j (i != j)
    between: Dict[int, Dict[int, float]] = {u: dict(g.neighbors(u)) for u in range(g.n_labels)}
    members = {u: [u] for u in range(g.n_labels)}
    while True:
        best_gain, best_pair = 0.0, None
        for i in sorted(between):
            for j in sorted(between[i]):
                if j <= i:
                    continue
                gain = 2.0 * (between[i][j] / two_m - degree[i] * degree[j] / (two_m * two_m))
                if gain > best_gain:
                    best_gain, best_pair = gain, (i, j)
        if best_pair is None:
            break
        i, j = best_pair
        members[i].extend(members.pop(j))
        degree[i] += degree.pop(j)
        for x, w in between.pop(j).items():
            if x == i:
                continue
            between[i][x] = between[i].get(x, 0.0) + w
            between[x][i] = between[x].get(i, 0.0) + w
            del between[x][j]
        del between[i][j]
    community = [0] * g.n_labels
    for cid, nodes in members.items():
        for u in nodes:
            community[u] = cid
    return CommunityAssignment.compact(community)


def communities_to_partition(a) -> LabelPartition:
    """Disjoint partition with one subset per community id, in id order."""
    a = list(a)
    n_comm = max(a) + 1 if a else 0
    groups: List[List[int]] = [[] for _ in range(n_comm)]
    for label, c in enumerate(a):
        groups[c].append(label)
    return LabelPartition(groups, len(a))


def connected_components(g: LabelGraph) -> CommunityAssignment:
    """Component id per label, ids by first appearance."""
    comp = [-1] * g.n_labels
    next_id = 0
    for s in range(g.n_labels):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = next_id
        while stack:
            u = stack.pop()
            for v in g.neighbors(u):
                if comp[v] < 0:
                    comp[v] = next_id
                    stack.append(v)
        next_id += 1
    return CommunityAssignment(comp)
