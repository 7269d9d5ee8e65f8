"""
Brute-force spanning-tree counts, used to cross-check Kirchhoff's theorem
and the Smith normal form on small graphs.
"""
import itertools
import logging

from networkx.utils import UnionFind

from zptower_graph import SerreGraph, require_connected

class CapExceededError(Exception): pass

logger = logging.getLogger(__name__)

ORACLE_EDGE_CAP = 16


def brute_force_spanning_trees(graph: SerreGraph, cap: int = ORACLE_EDGE_CAP) -> int:
    """
    Count the sets of |V| - 1 geometric edges that are acyclic (and hence
    spanning). Loops never belong to a tree.

    Raises:
        CapExceededError: if the graph has more than `cap` geometric edges.
    """
    pairs = graph.orientation()
    if len(pairs) > cap:
        raise CapExceededError("{} edges exceed the oracle cap of {}".format(
            len(pairs), cap))
    require_connected(graph)
    candidates = [e for e in pairs if not graph.is_loop(e)]
    size = graph.num_vertices - 1
    count = 0
    for subset in itertools.combinations(candidates, size):
        components = UnionFind(range(graph.num_vertices))
        for e in subset:
            o, t = graph.origin(e), graph.terminus(e)
            if components[o] == components[t]:
                break
            components.union(o, t)
        else:
            count += 1
    logger.debug("Enumerated {} spanning trees of {}".format(count, graph))
    return count


def brute_force_group_order(graph: SerreGraph, cap: int = ORACLE_EDGE_CAP) -> int:
    """|Pic^0(X)|, which equals the number of spanning trees."""
    return brute_force_spanning_trees(graph, cap)
