"""Admissible graphs: enumeration, mirror symmetry and aerial structure.

A graph in ``G_n`` has aerial vertices ``1..n`` and two ground vertices
``L`` and ``R``.  Vertex ``k`` emits an ordered pair of edges; ``edges[k-1]``
holds the pair of targets ``(target(i_k), target(j_k))``.  Aerial targets are
plain ``int`` values, ground targets are the strings ``"L"`` and ``"R"``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple, Union

from .errors import GraphError, LimitExceeded

Target = Union[int, str]
L = "L"
R = "R"
GROUND = (L, R)

#: default upper bound for :func:`enumerate_graphs`
MAX_ENUM_ORDER = 4


def _check_target(t) -> Target:
    if t in GROUND:
        return t
    if isinstance(t, bool) or not isinstance(t, int):
        raise GraphError(f"invalid edge target {t!r}")
    return t


@dataclass(frozen=True)
class AdmissibleGraph:
    n: int
    edges: Tuple[Tuple[Target, Target], ...]

    def __post_init__(self):
        edges = tuple(tuple(_check_target(t) for t in pair) for pair in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 0:
            raise GraphError("n must be non-negative")
        if len(edges) != self.n:
            raise GraphError(f"expected {self.n} edge pairs, got {len(edges)}")
        for k, pair in enumerate(edges, start=1):
            if len(pair) != 2:
                raise GraphError(f"vertex {k}: edge pair must have two targets")
            a, b = pair
            for t in pair:
                if isinstance(t, int) and not 1 <= t <= self.n:
                    raise GraphError(f"vertex {k}: target {t} out of range")
                if t == k:
                    raise GraphError(f"vertex {k}: loop edge")
            if a == b:
                raise GraphError(f"vertex {k}: parallel edges to {a}")

    @property
    def key(self) -> str:
        return graph_key(self)

    def targets(self) -> Iterator[Tuple[int, int, Target]]:
        """Yield ``(source, slot, target)`` for every edge, slot 0 is ``i_k``."""
        for k, pair in enumerate(self.edges, start=1):
            for slot, t in enumerate(pair):
                yield k, slot, t

    def in_degree(self, v: Target) -> int:
        return sum(1 for _, _, t in self.targets() if t == v)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [[str(a), str(b)] for a, b in self.edges]}

    @classmethod
    def from_json(cls, obj) -> "AdmissibleGraph":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["n"]), tuple(tuple(_parse_target(t) for t in p) for p in obj["edges"]))

    def __str__(self):
        return graph_key(self)


def _parse_target(t) -> Target:
    if isinstance(t, int):
        return t
    t = str(t).strip()
    if t in GROUND:
        return t
    try:
        return int(t)
    except ValueError:
        raise GraphError(f"invalid edge target {t!r}") from None


def graph_key(g: AdmissibleGraph) -> str:
    """Canonical text encoding, e.g. ``n2:(2,L)(1,R)``."""
    return f"n{g.n}:" + "".join(f"({a},{b})" for a, b in g.edges)


def parse_key(key: str) -> AdmissibleGraph:
    head, sep, body = key.partition(":")
    if not sep or not head.startswith("n"):
        raise GraphError(f"malformed graph key {key!r}")
    try:
        n = int(head[1:])
    except ValueError:
        raise GraphError(f"malformed graph key {key!r}") from None
    pairs = []
    if body:
        if not (body.startswith("(") and body.endswith(")")):
            raise GraphError(f"malformed graph key {key!r}")
        for chunk in body[1:-1].split(")("):
            parts = chunk.split(",")
            if len(parts) != 2:
                raise GraphError(f"malformed graph key {key!r}")
            pairs.append(tuple(_parse_target(p) for p in parts))
    g = AdmissibleGraph(n, tuple(pairs))
    if graph_key(g) != key:
        raise GraphError(f"non-canonical graph key {key!r}")
    return g


def _target_order(n: int) -> list:
    # aerial labels first, then the two ground sentinels
    return list(range(1, n + 1)) + [L, R]


def enumerate_graphs(n: int, max_order: int = MAX_ENUM_ORDER) -> list:
    """All graphs of ``G_n`` in lexicographic order of their edge encodings.

    Targets are ordered ``1 < 2 < ... < n < L < R``.
    """
    if n < 0:
        raise GraphError("n must be non-negative")
    if n > max_order:
        raise LimitExceeded(f"n={n} exceeds enumeration limit {max_order}")
    order = _target_order(n)
    choices = []
    for k in range(1, n + 1):
        choices.append([(a, b) for a in order for b in order if a != b and a != k and b != k])
    return [AdmissibleGraph(n, pairs) for pairs in itertools.product(*choices)]


def count_graphs(n: int) -> int:
    return 1 if n == 0 else (n * (n + 1)) ** n


def is_admissible(n: int, edges: Sequence) -> bool:
    """Independent validator for the two exclusion rules (no loops, no parallel edges)."""
    if len(edges) != n:
        return False
    allowed = set(range(1, n + 1)) | set(GROUND)
    for k, pair in enumerate(edges, start=1):
        if len(pair) != 2:
            return False
        a, b = pair
        if a not in allowed or b not in allowed:
            return False
        if a == k or b == k or a == b:
            return False
    return True


def mirror(g: AdmissibleGraph) -> AdmissibleGraph:
    """Swap the ground vertices ``L`` and ``R``; realizes ``B(g, f)`` from ``B(f, g)``."""
    swap = {L: R, R: L}
    return AdmissibleGraph(g.n, tuple(tuple(swap.get(t, t) for t in pair) for pair in g.edges))


def aerial_successors(g: AdmissibleGraph) -> dict:
    return {k: [t for t in pair if isinstance(t, int)] for k, pair in enumerate(g.edges, start=1)}


def has_aerial_cycle(g: AdmissibleGraph) -> bool:
    """True iff the aerial vertices contain a directed cycle."""
    succ = aerial_successors(g)
    state = dict.fromkeys(succ, 0)  # 0 new, 1 on stack, 2 done

    def visit(v):
        state[v] = 1
        for w in succ[v]:
            if state[w] == 1 or (state[w] == 0 and visit(w)):
                return True
        state[v] = 2
        return False

    return any(state[v] == 0 and visit(v) for v in succ)


def aerial_components(g: AdmissibleGraph) -> list:
    """Connected components of the aerial vertices, as sorted lists.

    ``g`` is a union of two subgraphs iff more than one block is returned.
    """
    if g.n == 0:
        raise GraphError("graph has no aerial vertices")
    parent = list(range(g.n + 1))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for k, _, t in g.targets():
        if isinstance(t, int):
            parent[find(k)] = find(t)
    blocks = {}
    for v in range(1, g.n + 1):
        blocks.setdefault(find(v), []).append(v)
    return sorted(blocks.values())


def is_union(g: AdmissibleGraph) -> bool:
    return len(aerial_components(g)) >= 2


def ground_degrees(g: AdmissibleGraph) -> Tuple[int, int]:
    """Number of edges landing on ``L`` and on ``R``."""
    return g.in_degree(L), g.in_degree(R)
