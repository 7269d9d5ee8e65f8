"""
Finite multigraphs in Serre's formalism: every geometric edge is a pair of
directed edges ``{e, ē}`` exchanged by a fixed-point-free involution, with
``o(ē) = t(e)`` and ``t(ē) = o(e)``. Loops and parallel edges are allowed.

Usage
-----

>>> from zptower_graph import SerreGraph, valency, laplacian_matrix
>>> dumbbell = SerreGraph.from_undirected(
...     ['v1', 'v2'], [('v1', 'v1'), ('v1', 'v2'), ('v2', 'v2')])
>>> valency(dumbbell, 'v1')
3
>>> laplacian_matrix(dumbbell)
[[1, -1], [-1, 1]]

Directed edge ``2i`` is the i-th listed pair in the given direction and
``2i + 1`` is its inverse.

Interface
---------
"""
import logging
from typing import (Dict, Iterable, List, Mapping, NamedTuple, Optional,
                    Sequence, Tuple, TypeVar, Union)

import networkx as nx
from networkx.utils import UnionFind


class GraphError(Exception): pass
class EmptyGraphError(GraphError): pass
class DisconnectedGraphError(GraphError): pass
class UnknownVertexError(GraphError): pass
class MissingWeightError(GraphError): pass

logger = logging.getLogger(__name__)

DirectedEdge = NamedTuple('DirectedEdge', [('index', int),
                                           ('origin', int),
                                           ('terminus', int),
                                           ('inverse', int)])

VertexRef = Union[int, str]
W = TypeVar('W')


class SerreGraph(object):
    """
    An immutable multigraph given by its vertices and directed edges.

    The constructor does not enforce the involution axioms so that malformed
    input can be inspected with `validate`; every graph built by this package
    satisfies them.
    """
    def __init__(self, vertices: Sequence[str],
                 edges: Sequence[DirectedEdge]) -> None:
        """
        Args:
            vertices: vertex names, in canonical order
            edges: directed edges; ``edges[i].index`` must equal ``i``
        """
        self._vertices = tuple(vertices)
        self._edges = tuple(edges)
        self._index = {name: i for i, name in enumerate(self._vertices)}
        stars = [[] for _ in self._vertices]  # type: List[List[int]]
        for e in self._edges:
            if 0 <= e.origin < len(stars):
                stars[e.origin].append(e.index)
        self._stars = tuple(tuple(s) for s in stars)

    @classmethod
    def from_undirected(cls, vertices: Sequence[str],
                        pairs: Iterable[Tuple[str, str]]) -> 'SerreGraph':
        """
        Build a graph from a list of geometric edges, each given once with a
        chosen orientation ``(origin, terminus)``.
        """
        index = {name: i for i, name in enumerate(vertices)}
        edges = []  # type: List[DirectedEdge]
        for i, (a, b) in enumerate(pairs):
            try:
                o, t = index[a], index[b]
            except KeyError as e:
                raise UnknownVertexError("Unknown vertex {}".format(e))
            edges.append(DirectedEdge(2 * i, o, t, 2 * i + 1))
            edges.append(DirectedEdge(2 * i + 1, t, o, 2 * i))
        return cls(vertices, edges)

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[DirectedEdge, ...]:
        return self._edges

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_edges(self) -> int:
        """Number of directed edges."""
        return len(self._edges)

    def index_of(self, v: VertexRef) -> int:
        """
        Resolve a vertex given by name or by index.
        """
        if isinstance(v, str):
            try:
                return self._index[v]
            except KeyError:
                raise UnknownVertexError("Unknown vertex {}".format(v))
        if not 0 <= v < len(self._vertices):
            raise UnknownVertexError("Unknown vertex index {}".format(v))
        return v

    def origin(self, e: int) -> int:
        return self._edges[e].origin

    def terminus(self, e: int) -> int:
        return self._edges[e].terminus

    def inverse(self, e: int) -> int:
        return self._edges[e].inverse

    def star(self, v: VertexRef) -> Tuple[int, ...]:
        """
        The directed edges with origin `v`, in increasing index order.
        """
        return self._stars[self.index_of(v)]

    def orientation(self) -> Tuple[int, ...]:
        """
        One directed edge out of every pair ``{e, ē}``: the one with the
        smaller index.
        """
        return tuple(e.index for e in self._edges if e.index < e.inverse)

    def is_loop(self, e: int) -> bool:
        return self._edges[e].origin == self._edges[e].terminus

    def to_networkx(self) -> nx.MultiGraph:
        """
        An undirected `networkx.MultiGraph` view keyed by vertex index, with
        one edge per pair ``{e, ē}`` (key = representative edge index).
        """
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.num_vertices))
        for e in self.orientation():
            g.add_edge(self.origin(e), self.terminus(e), key=e)
        return g

    def __repr__(self) -> str:
        return "SerreGraph({} vertices, {} directed edges)".format(
            self.num_vertices, self.num_edges)


class Divisor(dict):
    """
    A finitely supported map from vertex indices to integers. Zero
    coefficients are never stored, so two divisors compare equal iff they
    are equal as functions.
    """
    def __init__(self, coefficients: Optional[Mapping[int, int]] = None) -> None:
        super().__init__()
        for v, c in (coefficients or {}).items():
            self.add(v, c)

    def add(self, v: int, c: int) -> None:
        c = self.get(v, 0) + c
        if c:
            self[v] = c
        else:
            self.pop(v, None)

    @property
    def degree(self) -> int:
        return sum(self.values())

    def is_degree_zero(self) -> bool:
        return self.degree == 0

    def __add__(self, other: 'Divisor') -> 'Divisor':
        result = Divisor(self)
        for v, c in other.items():
            result.add(v, c)
        return result

    def __neg__(self) -> 'Divisor':
        return Divisor({v: -c for v, c in self.items()})

    def __sub__(self, other: 'Divisor') -> 'Divisor':
        return self + (-other)

    def scale(self, k: int) -> 'Divisor':
        return Divisor({v: k * c for v, c in self.items()})


def validate(graph: SerreGraph) -> List[str]:
    """
    Check Serre's axioms on `graph`.

    Returns:
        A list of human-readable violations; empty if the graph is valid.
    """
    problems = []  # type: List[str]
    n, m = graph.num_vertices, graph.num_edges
    if len(set(graph.vertices)) != n:
        problems.append("vertex names are not unique")
    if m % 2:
        problems.append("odd number of directed edges ({})".format(m))
    for i, e in enumerate(graph.edges):
        if e.index != i:
            problems.append("edge at position {} has index {}".format(i, e.index))
            continue
        if not (0 <= e.origin < n and 0 <= e.terminus < n):
            problems.append("edge {}: endpoint out of range".format(i))
            continue
        if not 0 <= e.inverse < m:
            problems.append("edge {}: inverse out of range".format(i))
            continue
        if e.inverse == i:
            problems.append("edge {}: ē = e".format(i))
            continue
        inv = graph.edges[e.inverse]
        if inv.inverse != i:
            problems.append("edge {}: inverse of inverse is {}".format(
                i, inv.inverse))
        if inv.origin != e.terminus or inv.terminus != e.origin:
            problems.append("edge {}: o(ē) != t(e) or t(ē) != o(e)".format(i))
    for problem in problems:
        logger.debug("Invalid graph: {}".format(problem))
    return problems


def valency(graph: SerreGraph, v: VertexRef) -> int:
    """
    Number of directed edges with origin `v` (a loop counts twice).
    """
    return len(graph.star(v))


def is_connected(graph: SerreGraph) -> bool:
    """
    True iff every two vertices are joined by a path.

    Raises:
        EmptyGraphError: if the graph has no vertex.
    """
    if graph.num_vertices == 0:
        raise EmptyGraphError("empty graph")
    return nx.is_connected(graph.to_networkx())


def require_connected(graph: SerreGraph) -> None:
    if not is_connected(graph):
        raise DisconnectedGraphError(
            "graph with {} vertices is not connected".format(graph.num_vertices))


def spanning_tree(graph: SerreGraph) -> List[int]:
    """
    A spanning tree of a connected graph, as representative directed edges.

    Edge pairs are scanned in index order and an edge is kept iff it joins
    two components of the edges kept so far, so the lowest-index edges win
    and the result is the same on every run.
    """
    require_connected(graph)
    components = UnionFind(range(graph.num_vertices))
    tree = []  # type: List[int]
    for e in graph.orientation():
        o, t = graph.origin(e), graph.terminus(e)
        if components[o] != components[t]:
            components.union(o, t)
            tree.append(e)
    return tree


def _lookup(graph: SerreGraph, weights: Mapping[int, W], e: int) -> W:
    if e in weights:
        return weights[e]
    inv = graph.inverse(e)
    if inv in weights:
        return -weights[inv]
    raise MissingWeightError("weight map missing edge {}".format(e))


def fundamental_cycle_sums(graph: SerreGraph, tree: Sequence[int],
                           weights: Mapping[int, W]) -> List[W]:
    """
    Sum `weights` around the fundamental cycle of every non-tree edge.

    The cycle of a non-tree edge ``e`` runs along ``e`` from ``o(e)`` to
    ``t(e)`` and returns to ``o(e)`` through the tree. `weights` needs a value
    for at least one edge of each pair; ``w(ē) = -w(e)`` fills in the other.

    Args:
        graph: a connected graph
        tree: representative edges of a spanning tree (see `spanning_tree`)
        weights: values in any abelian group supporting ``+`` and unary ``-``

    Returns:
        One sum per non-tree pair, in orientation order.
    """
    if not graph.num_vertices:
        raise EmptyGraphError("graph has no vertices")
    in_tree = set()
    tree_graph = nx.MultiGraph()
    tree_graph.add_nodes_from(range(graph.num_vertices))
    for e in tree:
        in_tree.update((e, graph.inverse(e)))
        tree_graph.add_edge(graph.origin(e), graph.terminus(e), key=e)

    # potential[v] = weight of the tree path from vertex 0 to v
    potential = {0: 0}  # type: Dict[int, W]
    for v, t in nx.bfs_edges(tree_graph, 0):
        e = next(iter(tree_graph[v][t]))
        if graph.origin(e) != v:
            e = graph.inverse(e)
        potential[t] = potential[v] + _lookup(graph, weights, e)
    if len(potential) != graph.num_vertices:
        raise DisconnectedGraphError("tree does not span the graph")

    sums = []  # type: List[W]
    for e in graph.orientation():
        if e in in_tree:
            continue
        w = _lookup(graph, weights, e)
        sums.append(potential[graph.origin(e)] + w - potential[graph.terminus(e)])
    return sums


def laplacian_matrix(graph: SerreGraph) -> List[List[int]]:
    """
    ``L = D - A`` as a list of rows indexed by vertex. A loop adds 2 to both
    the valency and the adjacency diagonal, so it cancels.
    """
    n = graph.num_vertices
    L = [[0] * n for _ in range(n)]
    for e in graph.edges:
        L[e.origin][e.origin] += 1
        L[e.origin][e.terminus] -= 1
    return L


def laplacian_divisor(graph: SerreGraph, w: VertexRef) -> Divisor:
    """
    The image of the vertex `w` under the Laplacian:
    ``sum over e in star(w) of (w - t(e))``.
    """
    w = graph.index_of(w)
    d = Divisor()
    for e in graph.star(w):
        d.add(w, 1)
        d.add(graph.terminus(e), -1)
    return d
