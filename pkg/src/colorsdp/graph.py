"""Graphs of maximum degree 4, DIMACS ingestion, generators and the exact oracle."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .kernels import count_3colorings

MAX_DEGREE = 4
ORACLE_MAX_N = 24
ENUMERATE_MAX_N = 7

COLOR_NAMES = ("red", "yellow", "blue")


class GraphError(ValueError):
    """Invalid graph input.  ``line`` is set when the error comes from a file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1`` with every degree <= 4.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``.
    """

    n: int
    edges: frozenset
    _adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise GraphError(f"vertex count must be a positive integer, got {self.n!r}")
        norm = set()
        adj = [set() for _ in range(self.n)]
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            i, j = min(i, j), max(i, j)
            norm.add((i, j))
            adj[i].add(j)
            adj[j].add(i)
        for v, nb in enumerate(adj):
            if len(nb) > MAX_DEGREE:
                raise GraphError(f"vertex {v} has degree {len(nb)} > {MAX_DEGREE}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "_adj", tuple(frozenset(nb) for nb in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> frozenset:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        return max((len(nb) for nb in self._adj), default=0)

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def non_edges(self) -> list:
        """Non-adjacent pairs ``(i, j)``, ``i < j``, in lexicographic order."""
        return [(i, j) for i, j in itertools.combinations(range(self.n), 2)
                if j not in self._adj[i]]

    def remove_edge(self, e) -> "Graph":
        e = (min(e), max(e))
        if e not in self.edges:
            raise GraphError(f"edge {e} not in graph")
        return Graph(self.n, self.edges - {e})

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n, frozenset((perm[i], perm[j]) for i, j in self.edges))

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for u in self._adj[v]:
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
        return len(seen) == self.n

    def edge_bitmask(self) -> int:
        """Bit ``k`` set iff the k-th pair of ``combinations(range(n), 2)`` is an edge."""
        mask = 0
        for k, pair in enumerate(itertools.combinations(range(self.n), 2)):
            if pair in self.edges:
                mask |= 1 << k
        return mask

    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1
        return A

    def to_dimacs(self) -> str:
        lines = [f"p edge {self.n} {self.m}"]
        lines += [f"e {i + 1} {j + 1}" for i, j in self.sorted_edges()]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Coloring:
    """Assignment of colours 0 (red), 1 (yellow), 2 (blue) to vertices."""

    assignment: tuple

    def __post_init__(self):
        a = tuple(int(c) for c in self.assignment)
        if any(c not in (0, 1, 2) for c in a):
            raise ValueError(f"colours must be in {{0, 1, 2}}, got {a}")
        object.__setattr__(self, "assignment", a)

    def __len__(self):
        return len(self.assignment)

    def __getitem__(self, v):
        return self.assignment[v]

    def is_proper(self, g: Graph) -> bool:
        if len(self.assignment) != g.n:
            raise ValueError("colouring length does not match graph order")
        return all(self.assignment[i] != self.assignment[j] for i, j in g.edges)

    def monochromatic_edges(self, g: Graph) -> list:
        return [(i, j) for i, j in g.sorted_edges() if self.assignment[i] == self.assignment[j]]

    def names(self) -> list:
        return [COLOR_NAMES[c] for c in self.assignment]


@dataclass(frozen=True)
class OracleResult:
    colorable: bool
    count: int
    witness: Optional[Coloring] = None


# --------------------------------------------------------------------------
# DIMACS
# --------------------------------------------------------------------------
def parse_dimacs(text) -> Graph:
    """Parse DIMACS COLOR text (a string or an iterable of lines).

    Vertex indices in the file are 1-based; the returned graph is 0-based.
    Repeated ``e`` lines collapse to a single edge.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    n = None
    edges = set()
    degree = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "p":
            if n is not None:
                raise GraphError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise GraphError(f"malformed problem line {line!r}", lineno)
            try:
                n, _declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphError(f"malformed problem line {line!r}", lineno) from None
            if n < 1:
                raise GraphError("vertex count must be positive", lineno)
            degree = [0] * n
        elif tag == "e":
            if n is None:
                raise GraphError("edge line before problem line", lineno)
            if len(parts) != 3:
                raise GraphError(f"malformed edge line {line!r}", lineno)
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphError(f"malformed edge line {line!r}", lineno) from None
            if not (1 <= i <= n and 1 <= j <= n):
                raise GraphError(f"vertex index out of range 1..{n} in {line!r}", lineno)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}", lineno)
            e = (min(i, j) - 1, max(i, j) - 1)
            if e in edges:
                continue
            edges.add(e)
            degree[e[0]] += 1
            degree[e[1]] += 1
            for v in e:
                if degree[v] > MAX_DEGREE:
                    raise GraphError(f"vertex {v + 1} exceeds degree {MAX_DEGREE}", lineno)
        else:
            raise GraphError(f"unrecognised line {line!r}", lineno)
    if n is None:
        raise GraphError("missing problem line 'p edge n m'")
    return Graph(n, frozenset(edges))


def read_dimacs(path) -> Graph:
    with open(path) as fh:
        return parse_dimacs(fh.read())


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------
def complete(k: int) -> Graph:
    if k < 1:
        raise GraphError("complete graph needs k >= 1")
    if k - 1 > MAX_DEGREE:
        raise GraphError(f"K{k} has degree {k - 1} > {MAX_DEGREE}")
    return Graph(k, frozenset(itertools.combinations(range(k), 2)))


def cycle(k: int) -> Graph:
    if k < 3:
        raise GraphError("cycle needs k >= 3")
    return Graph(k, frozenset((i, (i + 1) % k) for i in range(k)))


def path(k: int) -> Graph:
    if k < 1:
        raise GraphError("path needs k >= 1")
    return Graph(k, frozenset((i, i + 1) for i in range(k - 1)))


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


def random_graph(n: int, p: float, seed: int) -> Graph:
    """G(n, p) restricted to degree 4: pairs are visited in a seeded random
    order and an edge is dropped if either endpoint is already saturated."""
    if n < 1:
        raise GraphError("random graph needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {p}")
    rng = random.Random(seed)
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    deg = [0] * n
    edges = set()
    for i, j in pairs:
        if rng.random() < p and deg[i] < MAX_DEGREE and deg[j] < MAX_DEGREE:
            edges.add((i, j))
            deg[i] += 1
            deg[j] += 1
    return Graph(n, frozenset(edges))


def generate(kind: str, *args) -> Graph:
    """Build a named graph: ``complete k``, ``cycle k``, ``path k``,
    ``petersen`` or ``random n p seed``."""
    builders = {
        "complete": lambda k: complete(int(k)),
        "cycle": lambda k: cycle(int(k)),
        "path": lambda k: path(int(k)),
        "petersen": petersen,
        "random": lambda n, p, seed: random_graph(int(n), float(p), int(seed)),
    }
    if kind not in builders:
        raise GraphError(f"unknown graph kind {kind!r}")
    try:
        return builders[kind](*args)
    except TypeError:
        raise GraphError(f"wrong number of arguments for kind {kind!r}") from None


def named_graph(name: str) -> Graph:
    """Parse short names such as ``k4``, ``c5``, ``p3``, ``petersen``."""
    name = name.strip().lower()
    if name == "petersen":
        return petersen()
    kinds = {"k": complete, "c": cycle, "p": path}
    if len(name) >= 2 and name[0] in kinds and name[1:].isdigit():
        return kinds[name[0]](int(name[1:]))
    raise GraphError(f"unknown graph name {name!r}")


# --------------------------------------------------------------------------
# oracle
# --------------------------------------------------------------------------
def _components(g: Graph) -> list:
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        order = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in sorted(g.neighbors(v)):
                if not seen[u]:
                    seen[u] = True
                    order.append(u)
                    queue.append(u)
        comps.append(order)
    return comps


def oracle_3color(g: Graph) -> OracleResult:
    """Exact count of proper maps V -> {0, 1, 2} by backtracking.

    Colour permutations are not quotiented out, so K3 has 6 colourings.
    Connected components are counted independently and multiplied.
    """
    if g.n > ORACLE_MAX_N:
        raise GraphError(f"oracle refuses n={g.n} > {ORACLE_MAX_N}")
    nbr = np.zeros((g.n, MAX_DEGREE), dtype=np.int64)
    deg = np.zeros(g.n, dtype=np.int64)
    for v in range(g.n):
        nb = sorted(g.neighbors(v))
        deg[v] = len(nb)
        nbr[v, : len(nb)] = nb
    total = 1
    witness = np.zeros(g.n, dtype=np.int64)
    for comp in _components(g):
        order = np.array(comp, dtype=np.int64)
        # BFS order inside a component keeps each new vertex next to coloured ones
        count, w = count_3colorings(order, nbr, deg)
        total *= count
        if total == 0:
            return OracleResult(False, 0, None)
        witness[order] = w[order]
    return OracleResult(True, total, Coloring(tuple(int(c) for c in witness)))


def is_d_graph(g: Graph) -> bool:
    """Not 3-colourable, yet 3-colourable after deleting any single edge."""
    if oracle_3color(g).colorable:
        return False
    return all(oracle_3color(g.remove_edge(e)).colorable for e in g.sorted_edges())


def enumerate_graphs(n_max: int, dedup: bool = False) -> Iterator[Graph]:
    """Yield every connected labelled graph with max degree <= 4 on
    ``2..n_max`` vertices.  The edgeless single vertex is not included.

    Order: by ``n``, then by edge bitmask over ``combinations(range(n), 2)``.
    With ``dedup`` only the first graph of each isomorphism class is kept
    (canonical form = minimum bitmask over all vertex permutations).
    """
    if not isinstance(n_max, int) or n_max < 1 or n_max > ENUMERATE_MAX_N:
        raise GraphError(f"n_max must be in 1..{ENUMERATE_MAX_N}, got {n_max!r}")
    for n in range(2, n_max + 1):
        pairs = list(itertools.combinations(range(n), 2))
        seen = set()
        for mask in range(1, 1 << len(pairs)):
            deg = [0] * n
            edges = []
            ok = True
            for k, (i, j) in enumerate(pairs):
                if mask >> k & 1:
                    deg[i] += 1
                    deg[j] += 1
                    if deg[i] > MAX_DEGREE or deg[j] > MAX_DEGREE:
                        ok = False
                        break
                    edges.append((i, j))
            if not ok or min(deg) == 0:
                continue
            g = Graph(n, frozenset(edges))
            if not g.is_connected():
                continue
            if dedup:
                canon = canonical_mask(g)
                if canon in seen:
                    continue
                seen.add(canon)
            yield g


_PERM_WEIGHTS = {}


def _perm_weights(n: int) -> np.ndarray:
    """``W[p, k] = 2**index(perm_p(pair_k))`` for every vertex permutation."""
    if n not in _PERM_WEIGHTS:
        pairs = list(itertools.combinations(range(n), 2))
        index = {p: k for k, p in enumerate(pairs)}
        W = np.array([[1 << index[(min(p[i], p[j]), max(p[i], p[j]))] for i, j in pairs]
                      for p in itertools.permutations(range(n))], dtype=np.int64)
        _PERM_WEIGHTS[n] = W
    return _PERM_WEIGHTS[n]


def canonical_mask(g: Graph) -> int:
    """Minimum edge bitmask over all vertex relabellings (isomorphism key)."""
    pairs = itertools.combinations(range(g.n), 2)
    bits = np.array([p in g.edges for p in pairs], dtype=np.int64)
    if g.n <= 1:
        return 0
    return int((_perm_weights(g.n) @ bits).min())
