"""
Spanning-tree counts and Picard (sandpile) groups of finite connected graphs,
and the two pushforwards of divisors along a branched cover.

Kirchhoff: the number of spanning trees kappa(X) is any cofactor of the
Laplacian, and it is the order of Pic^0(X) = Div^0(X) / Im(L).

>>> from zptower_graph import SerreGraph
>>> from zptower_picard import kappa, picard_group
>>> square = SerreGraph.from_undirected('abcd', ['ab', 'bc', 'cd', 'da'])
>>> kappa(square)
4
>>> picard_group(square).invariant_factors
(4,)

Interface
---------
"""
import logging
from math import gcd
from typing import List, NamedTuple, Sequence, Tuple

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors

from zptower import CoverMap
from zptower_graph import (DisconnectedGraphError, Divisor, SerreGraph,
                           laplacian_divisor, laplacian_matrix, require_connected)
from zptower_padic import valuation


class PicardError(Exception): pass
class SupportMismatchError(PicardError): pass

logger = logging.getLogger(__name__)


# Pic^0(X) = Z/d_1 + ... + Z/d_k with d_1 | d_2 | ... | d_k, every d_i > 1
PicardGroup = NamedTuple('PicardGroup', [('invariant_factors', Tuple[int, ...]),
                                         ('order', int)])


PPart = NamedTuple('PPart', [('factors', Tuple[int, ...]),
                             ('valuations', Tuple[int, ...]),
                             ('total', int)])


def reduced_laplacian(graph: SerreGraph, deleted: int = 0) -> List[List[int]]:
    """The Laplacian with row and column `deleted` removed."""
    L = laplacian_matrix(graph)
    return [[x for j, x in enumerate(row) if j != deleted]
            for i, row in enumerate(L) if i != deleted]


def determinant(rows: Sequence[Sequence[int]]) -> int:
    """
    Exact determinant of an integer matrix by fraction-free (Bareiss)
    elimination over ZZ.
    """
    n = len(rows)
    if n == 0:
        return 1
    m = DomainMatrix([[ZZ(x) for x in row] for row in rows], (n, n), ZZ)
    return int(m.det())


def kappa(graph: SerreGraph, deleted: int = 0) -> int:
    """
    The number of spanning trees, as the determinant of the reduced
    Laplacian.

    Args:
        deleted: index of the vertex whose row and column are removed

    Raises:
        DisconnectedGraphError: if the graph is not connected.
    """
    require_connected(graph)
    k = determinant(reduced_laplacian(graph, graph.index_of(deleted)))
    logger.info("kappa of {} = {}".format(graph, k))
    return k


def _divisibility_chain(diagonal: Sequence[int]) -> List[int]:
    """
    Turn any diagonal presentation into invariant factors using
    ``Z/a + Z/b = Z/gcd(a, b) + Z/lcm(a, b)``.
    """
    d = sorted(abs(x) for x in diagonal)
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            a, b = d[i], d[j]
            g = gcd(a, b)
            d[i], d[j] = g, (a // g) * b if g else 0
    return d


def picard_group(graph: SerreGraph) -> PicardGroup:
    """
    Pic^0 of a connected graph from the Smith normal form of its Laplacian.
    The all-ones kernel contributes exactly one zero invariant factor.

    Raises:
        DisconnectedGraphError: if more than one invariant factor is zero.
    """
    require_connected(graph)
    n = graph.num_vertices
    L = DomainMatrix([[ZZ(x) for x in row] for row in laplacian_matrix(graph)],
                     (n, n), ZZ)
    diagonal = [int(x) for x in invariant_factors(L)]
    diagonal += [0] * (n - len(diagonal))
    zeros = diagonal.count(0)
    if zeros != 1:
        raise DisconnectedGraphError(
            "Laplacian has {} zero invariant factors".format(zeros))
    factors = [d for d in _divisibility_chain([d for d in diagonal if d]) if d > 1]
    logger.debug("Invariant factors of {}: {}".format(graph, factors))
    order = 1
    for d in factors:
        order *= d
    return PicardGroup(tuple(factors), order)


def p_part(g: PicardGroup, p: int) -> PPart:
    """
    The Sylow p-subgroup of `g`: its cyclic factors ``p^ord_p(d_i)`` (trivial
    ones dropped), the valuation of every invariant factor and their total
    ord_p of the order.
    """
    vals = tuple(valuation(d, p) or 0 for d in g.invariant_factors)
    factors = tuple(p ** v for v in vals if v)
    return PPart(factors, vals, sum(vals))


def _check_support(c: CoverMap, D: Divisor) -> None:
    bad = [w for w in D if not 0 <= w < c.source.num_vertices]
    if bad:
        raise SupportMismatchError("divisor supported off the source: {}".format(bad))


def pushforward_star(c: CoverMap, D: Divisor) -> Divisor:
    """``f_*(w) = f(w)``, extended linearly; preserves degree."""
    _check_support(c, D)
    out = Divisor()
    for w, k in D.items():
        out.add(c.vertex_map[w], k)
    return out


def pushforward_ram(c: CoverMap, D: Divisor) -> Divisor:
    """``f_r(w) = m_w f(w)``, extended linearly."""
    _check_support(c, D)
    out = Divisor()
    for w, k in D.items():
        out.add(c.vertex_map[w], k * c.ramification[w])
    return out


CompatibilityReport = NamedTuple('CompatibilityReport',
                                 [('ok', bool), ('failures', Tuple[int, ...])])


def check_laplacian_compatibility(c: CoverMap) -> CompatibilityReport:
    """
    Check ``L_X(f_r(w)) = f_*(L_Y(w))`` for every source vertex w.
    """
    failures = []
    target_laplacian = {}
    for w in range(c.source.num_vertices):
        image = pushforward_ram(c, Divisor({w: 1}))
        lhs = Divisor()
        for v, k in image.items():
            if v not in target_laplacian:
                target_laplacian[v] = laplacian_divisor(c.target, v)
            lhs = lhs + target_laplacian[v].scale(k)
        rhs = pushforward_star(c, laplacian_divisor(c.source, w))
        if lhs != rhs:
            failures.append(w)
    if failures:
        logger.info("Laplacian compatibility fails at {} vertices".format(len(failures)))
    return CompatibilityReport(not failures, tuple(failures))
