"""
Branched Z_p-towers of finite graphs built from a voltage assignment with
ramification data.

A `VoltageGraph` carries a connected base graph, a prime p, a voltage in Z_p
for every directed edge (with ``voltage(ē) = -voltage(e)``) and, per vertex,
either no ramification or a ramification exponent k, meaning that the
inertia group at the vertex is ``p^k Z_p``. Level n of the tower is the
derived graph over ``Z/p^n``:

- vertices are pairs ``(v, r)`` with r a residue mod ``p^min(n, k_v)``
  (``p^n`` when v is unramified),
- directed edges are pairs ``(e, s)`` with s in ``Z/p^n``; ``(e, s)`` runs from
  ``(o(e), s)`` to ``(t(e), s + voltage(e))`` and its inverse is
  ``(ē, s + voltage(e))``.

Usage
-----

>>> from zptower_graph import SerreGraph
>>> from zptower import VoltageGraph, build_level, projection, verify_cover
>>> bouquet = SerreGraph.from_undirected(['v'], [('v', 'v'), ('v', 'v')])
>>> vg = VoltageGraph(bouquet, 2, {0: 3, 2: 5}, {0: 2})
>>> [build_level(vg, n).graph.num_vertices for n in range(4)]
[1, 2, 4, 4]
>>> verify_cover(projection(vg, 3, 2)).is_branched_cover
True

Levels are memoized, so asking twice for the same level of the same
`VoltageGraph` is cheap.

Interface
---------
"""
import functools
import logging
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from zptower_graph import (DirectedEdge, SerreGraph, fundamental_cycle_sums,
                           is_connected, spanning_tree, validate, valency)
from zptower_padic import PadicScalar, PrecisionError, check_prime

# Types:
class TowerError(Exception): pass
class VoltageError(TowerError): pass
class LevelMismatchError(TowerError): pass
class IndeterminateError(TowerError): pass

logger = logging.getLogger(__name__)

LEVEL_CACHE_SIZE = 32

Voltage = Union[PadicScalar, int]

CoverReport = NamedTuple('CoverReport', [('is_branched_cover', bool),
                                         ('degree', Optional[int]),
                                         ('valency_law_ok', bool),
                                         ('degree_law_ok', bool),
                                         ('ramification', Tuple[int, ...]),
                                         ('problems', Tuple[str, ...])])

ImmersionReport = NamedTuple('ImmersionReport', [('is_immersion', bool),
                                                 ('is_morphism', bool),
                                                 ('edge_bijective', bool),
                                                 ('locally_injective', bool),
                                                 ('fiber_sizes', Dict[int, int]),
                                                 ('problems', Tuple[str, ...])])

CriterionResult = NamedTuple('CriterionResult',
                             [('unramified_tower_connected', bool),
                              ('min_cycle_valuation', Optional[int])])


class VoltageGraph(object):
    """
    Voltage and ramification data over a connected base graph. Immutable and
    hashable by identity, so it can key the level cache.
    """
    def __init__(self, base: SerreGraph, p: int,
                 voltage: Mapping[int, Voltage],
                 ramification: Optional[Mapping[int, int]] = None) -> None:
        """
        Args:
            base: a valid connected graph
            p: the prime
            voltage: directed edge index -> voltage (an int is an exact
                p-adic integer). Giving one edge of a pair is enough; the
                inverse gets the negated voltage. If both are given they must
                be opposite.
            ramification: vertex index -> k >= 0; absent vertices are
                unramified
        """
        check_prime(p)
        problems = validate(base)
        if problems:
            raise VoltageError("invalid base graph: {}".format("; ".join(problems)))
        if not is_connected(base):
            raise VoltageError("base graph is not connected")
        self._base = base
        self._p = p

        volts = [None] * base.num_edges  # type: List[Optional[PadicScalar]]
        for e, a in voltage.items():
            if not 0 <= e < base.num_edges:
                raise VoltageError("voltage given for unknown edge {}".format(e))
            a = PadicScalar(p, a) if isinstance(a, int) else a
            if a.p != p:
                raise VoltageError("voltage on edge {} is {}-adic, expected {}-adic"
                                   .format(e, a.p, p))
            volts[e] = a
        for e in range(base.num_edges):
            inv = base.inverse(e)
            if volts[e] is None and volts[inv] is None:
                raise VoltageError("no voltage for edge {}".format(e))
            if volts[e] is None:
                volts[e] = -volts[inv]
            elif volts[inv] is not None and volts[inv] != -volts[e]:
                raise VoltageError("voltage({}) != -voltage({})".format(inv, e))
        self._voltage = tuple(volts)  # type: Tuple[PadicScalar, ...]

        ram = [None] * base.num_vertices  # type: List[Optional[int]]
        for v, k in (ramification or {}).items():
            if not 0 <= v < base.num_vertices:
                raise VoltageError("ramification given for unknown vertex {}".format(v))
            if k is not None and k < 0:
                raise VoltageError("negative ramification exponent at vertex {}"
                                   .format(v))
            ram[v] = k
        self._ramification = tuple(ram)  # type: Tuple[Optional[int], ...]
        self._unramified = None  # type: Optional[VoltageGraph]

    @property
    def base(self) -> SerreGraph:
        return self._base

    @property
    def p(self) -> int:
        return self._p

    @property
    def voltage(self) -> Tuple[PadicScalar, ...]:
        return self._voltage

    @property
    def ramification(self) -> Tuple[Optional[int], ...]:
        """Per vertex: None (unramified) or the exponent k."""
        return self._ramification

    @property
    def is_exact(self) -> bool:
        """True iff every voltage is an exact integer."""
        return all(a.is_exact for a in self._voltage)

    @property
    def precision(self) -> Optional[int]:
        """The smallest precision among truncated voltages, or None."""
        precs = [a.precision for a in self._voltage if not a.is_exact]
        return min(precs) if precs else None

    @property
    def unramified_vertices(self) -> List[int]:
        return [v for v, k in enumerate(self._ramification) if k is None]

    @property
    def ramified_vertices(self) -> List[int]:
        return [v for v, k in enumerate(self._ramification) if k is not None]

    def residue_exponent(self, v: int, n: int) -> int:
        """min(n, k_v), with k_v infinite for unramified vertices."""
        k = self._ramification[v]
        return n if k is None else min(n, k)

    def voltage_mod(self, e: int, n: int) -> int:
        """The voltage of `e` reduced to Z/p^n."""
        return self._voltage[e].residue(n)

    def unramified(self) -> 'VoltageGraph':
        """The same voltages with every inertia group trivial."""
        if not self.ramified_vertices:
            return self
        if self._unramified is None:
            self._unramified = VoltageGraph(
                self._base, self._p, dict(enumerate(self._voltage)))
        return self._unramified

    def __repr__(self) -> str:
        return "VoltageGraph(p={}, {}, ramification={})".format(
            self._p, self._base, self._ramification)


class LevelGraph(object):
    """
    Level n of a tower: a `SerreGraph` with its vertex labels ``(v, r)`` and
    edge labels ``(e, s)``.
    """
    def __init__(self, vg: VoltageGraph, n: int, graph: SerreGraph,
                 vertex_labels: Sequence[Tuple[int, int]],
                 edge_labels: Sequence[Tuple[int, int]]) -> None:
        self.vg = vg
        self.n = n
        self.graph = graph
        self.vertex_labels = tuple(vertex_labels)
        self.edge_labels = tuple(edge_labels)
        self._vertex_index = {lab: i for i, lab in enumerate(self.vertex_labels)}
        self._edge_index = {lab: i for i, lab in enumerate(self.edge_labels)}

    def vertex_index(self, v: int, r: int) -> int:
        return self._vertex_index[(v, r)]

    def edge_index(self, e: int, s: int) -> int:
        return self._edge_index[(e, s)]

    def __repr__(self) -> str:
        return "LevelGraph(n={}, {})".format(self.n, self.graph)


def _build(vg: VoltageGraph, n: int) -> LevelGraph:
    if n < 0:
        raise LevelMismatchError("negative level {}".format(n))
    prec = vg.precision
    if prec is not None and prec < n:
        raise PrecisionError("voltages known to {} digits, level {} needs {}"
                             .format(prec, n, n))
    base, p = vg.base, vg.p
    q = p ** n

    offsets = []  # type: List[int]
    vertex_labels = []  # type: List[Tuple[int, int]]
    names = []  # type: List[str]
    for v, name in enumerate(base.vertices):
        offsets.append(len(vertex_labels))
        for r in range(p ** vg.residue_exponent(v, n)):
            vertex_labels.append((v, r))
            names.append("{}:{}".format(name, r))
    moduli = [p ** vg.residue_exponent(v, n) for v in range(base.num_vertices)]

    edges = []  # type: List[DirectedEdge]
    edge_labels = []  # type: List[Tuple[int, int]]
    for e in base.edges:
        a = vg.voltage_mod(e.index, n)
        for s in range(q):
            s2 = (s + a) % q
            edges.append(DirectedEdge(e.index * q + s,
                                      offsets[e.origin] + s % moduli[e.origin],
                                      offsets[e.terminus] + s2 % moduli[e.terminus],
                                      e.inverse * q + s2))
            edge_labels.append((e.index, s))
    level = LevelGraph(vg, n, SerreGraph(names, edges), vertex_labels, edge_labels)
    logger.info("Built level {}: {} vertices, {} directed edges".format(
        n, len(names), len(edges)))
    return level


@functools.lru_cache(maxsize=LEVEL_CACHE_SIZE)
def build_level(vg: VoltageGraph, n: int) -> LevelGraph:
    """
    Build level `n` of the tower of `vg`. Level 0 is a copy of the base graph.

    Raises:
        PrecisionError: if a truncated voltage has fewer than `n` digits.
    """
    return _build(vg, n)


def unramified_level(vg: VoltageGraph, n: int) -> LevelGraph:
    """Level `n` of the unramified tower with the same voltages."""
    return build_level(vg.unramified(), n)


def edge_orbits(level: LevelGraph) -> int:
    """
    Number of orbits of Z/p^n acting on directed edges by translating the
    label ``(e, s) -> (e, s + 1)``.
    """
    q = level.vg.p ** level.n
    seen = set()
    orbits = 0
    for e, s in level.edge_labels:
        if (e, s) in seen:
            continue
        orbits += 1
        for t in range(q):
            seen.add((e, (s + t) % q))
    return orbits


class CoverMap(object):
    """
    A graph morphism ``source -> target`` given by its vertex and directed
    edge maps, with a declared ramification index per source vertex.
    """
    def __init__(self, source: SerreGraph, target: SerreGraph,
                 vertex_map: Sequence[int], edge_map: Sequence[int],
                 ramification: Optional[Sequence[int]] = None,
                 levels: Optional[Tuple[int, int]] = None) -> None:
        """
        Args:
            ramification: m_w per source vertex; counted from the edge fibers
                when not given
            levels: ``(n_from, n_to)`` when the map is a tower projection
        """
        self.source = source
        self.target = target
        self.vertex_map = tuple(vertex_map)
        self.edge_map = tuple(edge_map)
        if ramification is None:
            ramification = counted_ramification(source, target, vertex_map, edge_map)
        self.ramification = tuple(ramification)
        self.levels = levels

    def __repr__(self) -> str:
        return "CoverMap({} -> {}, levels={})".format(
            self.source, self.target, self.levels)


def counted_ramification(source: SerreGraph, target: SerreGraph,
                         vertex_map: Sequence[int],
                         edge_map: Sequence[int]) -> List[int]:
    """
    For each source vertex w, the number of edges of star(w) mapping to the
    first edge of star(f(w)) (1 when that star is empty).
    """
    out = []
    for w in range(source.num_vertices):
        star = target.star(vertex_map[w])
        if not star:
            out.append(1)
            continue
        out.append(sum(1 for e in source.star(w) if edge_map[e] == star[0]))
    return out


def identity_cover(graph: SerreGraph) -> CoverMap:
    return CoverMap(graph, graph, range(graph.num_vertices),
                    range(graph.num_edges), [1] * graph.num_vertices)


def projection(vg: VoltageGraph, n_from: int, n_to: int) -> CoverMap:
    """
    The cover ``X_{n_from} -> X_{n_to}`` reducing residues and group elements
    modulo the target modulus. Ramification indices are
    ``|I_v ∩ ker(Z/p^n_from -> Z/p^n_to)|`` computed from the inertia groups.

    Raises:
        LevelMismatchError: unless ``n_from > n_to >= 0``.
    """
    if not n_from > n_to >= 0:
        raise LevelMismatchError("cannot project level {} to level {}".format(
            n_from, n_to))
    src, tgt = build_level(vg, n_from), build_level(vg, n_to)
    p = vg.p
    vertex_map = [tgt.vertex_index(v, r % p ** vg.residue_exponent(v, n_to))
                  for v, r in src.vertex_labels]
    q = p ** n_to
    edge_map = [tgt.edge_index(e, s % q) for e, s in src.edge_labels]
    ramification = []
    for v, _ in src.vertex_labels:
        inertia = vg.residue_exponent(v, n_from)
        ramification.append(p ** (n_from - max(inertia, n_to)))
    return CoverMap(src.graph, tgt.graph, vertex_map, edge_map, ramification,
                    levels=(n_from, n_to))


def compose(outer: CoverMap, inner: CoverMap) -> CoverMap:
    """
    ``outer ∘ inner``; ramification indices multiply.

    Raises:
        LevelMismatchError: if ``inner.target`` is not ``outer.source``.
    """
    if inner.target is not outer.source:
        raise LevelMismatchError("covers do not compose")
    vertex_map = [outer.vertex_map[w] for w in inner.vertex_map]
    edge_map = [outer.edge_map[e] for e in inner.edge_map]
    ramification = [inner.ramification[w] * outer.ramification[inner.vertex_map[w]]
                    for w in range(inner.source.num_vertices)]
    levels = None
    if inner.levels and outer.levels:
        levels = (inner.levels[0], outer.levels[1])
    return CoverMap(inner.source, outer.target, vertex_map, edge_map,
                    ramification, levels)


def _morphism_problems(source: SerreGraph, target: SerreGraph,
                       vertex_map: Sequence[int],
                       edge_map: Sequence[int]) -> List[str]:
    problems = []  # type: List[str]
    if len(vertex_map) != source.num_vertices or len(edge_map) != source.num_edges:
        return ["map does not cover the whole source graph"]
    for e in source.edges:
        f = edge_map[e.index]
        if not 0 <= f < target.num_edges:
            problems.append("edge {} maps outside the target".format(e.index))
            continue
        if vertex_map[e.origin] != target.origin(f):
            problems.append("edge {}: f(o(e)) != o(f(e))".format(e.index))
        if vertex_map[e.terminus] != target.terminus(f):
            problems.append("edge {}: f(t(e)) != t(f(e))".format(e.index))
        if edge_map[e.inverse] != target.inverse(f):
            problems.append("edge {}: f(ē) != inverse of f(e)".format(e.index))
    return problems


def verify_cover(c: CoverMap) -> CoverReport:
    """
    Check that `c` is a branched cover: a surjective morphism whose
    restriction to each edge star is m_w-to-1 onto the star of the image,
    with the valency law ``val(w) = m_w val(f(w))`` and the degree law
    ``sum of m_w over the fiber of v`` independent of v.
    """
    src, tgt = c.source, c.target
    problems = _morphism_problems(src, tgt, c.vertex_map, c.edge_map)
    if problems:
        return CoverReport(False, None, False, False, c.ramification, tuple(problems))

    if set(c.vertex_map) != set(range(tgt.num_vertices)):
        problems.append("not surjective on vertices")
    if set(c.edge_map) != set(range(tgt.num_edges)):
        problems.append("not surjective on edges")

    counted = []  # type: List[int]
    for w in range(src.num_vertices):
        fiber_sizes = {f: 0 for f in tgt.star(c.vertex_map[w])}
        for e in src.star(w):
            fiber_sizes[c.edge_map[e]] += 1
        sizes = set(fiber_sizes.values())
        if len(sizes) > 1:
            problems.append("vertex {}: edge fibers of sizes {}".format(
                w, sorted(sizes)))
        m = min(sizes) if sizes else c.ramification[w]
        counted.append(m)
        if m != c.ramification[w]:
            problems.append("vertex {}: declared m_w = {}, counted {}".format(
                w, c.ramification[w], m))

    valency_ok = all(valency(src, w) == counted[w] * valency(tgt, c.vertex_map[w])
                     for w in range(src.num_vertices))
    if not valency_ok:
        problems.append("valency law fails")

    totals = {v: 0 for v in range(tgt.num_vertices)}
    for w, m in enumerate(counted):
        totals[c.vertex_map[w]] += m
    degrees = set(totals.values())
    degree_ok = len(degrees) == 1
    degree = degrees.pop() if degree_ok else None
    if not degree_ok:
        problems.append("degree law fails: fiber totals {}".format(sorted(degrees)))

    ok = not problems
    return CoverReport(ok, degree, valency_ok, degree_ok, tuple(counted),
                       tuple(problems))


def verify_immersion(vg: VoltageGraph, n: int) -> ImmersionReport:
    """
    Check that collapsing labels ``(v, r mod p^n) -> (v, r mod p^min(n, k_v))``
    is an immersion of the unramified level into level `n`: a morphism,
    bijective on directed edges and injective on every edge star.
    """
    unr, lev = unramified_level(vg, n), build_level(vg, n)
    p = vg.p
    vertex_map = [lev.vertex_index(v, r % p ** vg.residue_exponent(v, n))
                  for v, r in unr.vertex_labels]
    edge_map = [lev.edge_index(e, s) for e, s in unr.edge_labels]
    problems = _morphism_problems(unr.graph, lev.graph, vertex_map, edge_map)
    is_morphism = not problems
    bijective = sorted(edge_map) == list(range(lev.graph.num_edges))
    if not bijective:
        problems.append("not bijective on directed edges")
    injective = all(len({edge_map[e] for e in unr.graph.star(w)}) ==
                    len(unr.graph.star(w))
                    for w in range(unr.graph.num_vertices))
    if not injective:
        problems.append("not injective on some edge star")
    fibers = {}  # type: Dict[int, int]
    for w in vertex_map:
        fibers[w] = fibers.get(w, 0) + 1
    return ImmersionReport(is_morphism and bijective and injective, is_morphism,
                           bijective, injective, fibers, tuple(problems))


def connectedness_criterion(vg: VoltageGraph) -> CriterionResult:
    """
    Decide whether the voltages of the fundamental cycles generate Z_p, i.e.
    whether one of them is a p-adic unit. If so, every level of the
    unramified tower is connected, and so is every level of the branched one.
    A negative answer says nothing about the branched levels.

    Raises:
        IndeterminateError: if every cycle voltage is a truncated value that
            reads 0 at its precision.
    """
    base = vg.base
    tree = spanning_tree(base)
    sums = fundamental_cycle_sums(base, tree, dict(enumerate(vg.voltage)))
    valuations = [s.valuation() for s in sums if not s.is_zero()]
    if not valuations and any(not s.is_exact for s in sums):
        raise IndeterminateError("indeterminate at current precision")
    low = min(valuations) if valuations else None
    result = CriterionResult(low == 0, low)
    logger.info("Connectedness criterion: {}".format(result))
    return result
