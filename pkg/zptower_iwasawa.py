"""
The characteristic power series of a branched Z_p-tower and the growth of
the p-part of its spanning-tree counts.

With the base vertices ordered unramified first (v_1..v_r) then ramified
(v_{r+1}..v_s), the tower's series is ``f(T) = det(D - B(T))`` where

- D is diagonal with ``val(v_i)`` for i <= r and 0 otherwise,
- for j <= r, ``B[i][j]`` sums ``(1 + T)^voltage(e)`` over the directed edges
  e from v_j to v_i,
- for i = j > r, ``B[i][i] = -omega_{k_i}(T)``,
- every other entry of B is 0.

Then mu(f) and lambda(f) - 1 govern ``ord_p kappa(X_n) = mu p^n + lambda n + nu``
for all large n.

Usage
-----

>>> from zptower_graph import SerreGraph
>>> from zptower import VoltageGraph
>>> from zptower_iwasawa import char_series, invariants, verify_growth
>>> bouquet = SerreGraph.from_undirected(['v'], [('v', 'v'), ('v', 'v')])
>>> vg = VoltageGraph(bouquet, 2, {0: 3, 2: 5}, {0: 2})
>>> f = char_series(vg)
>>> f.polynomial
[0, 4, 6, 4, 1]
>>> invariants(vg)[:4]
(0, 4, 3, True)
>>> report = verify_growth(vg, 4)
>>> [lev.ordp for lev in report.levels], report.nu, report.n0
([0, 2, 5, 8, 11], -1, 1)

When every voltage is an exact integer the determinant is computed exactly
in Z[u, 1/u] (u = 1 + T); otherwise it is computed in Z_p[[T]] modulo
(p^N, T^M), doubling M until the invariants are certified or `MAX_T_PREC` is
reached.

Levels are evaluated on a thread pool; the report is ordered by level
regardless of completion order.

Interface
---------
"""
import concurrent.futures
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from sympy import ZZ, Symbol
from sympy.polys.matrices import DomainMatrix

from zptower import (IndeterminateError, VoltageGraph, build_level,
                     connectedness_criterion, projection, verify_cover,
                     CriterionResult)
from zptower_graph import GraphError, is_connected, valency
from zptower_padic import (LaurentU, PrecisionError, TruncatedSeries,
                           binomial_series, laurent_to_series, mu_lambda,
                           omega_poly, valuation)
from zptower_picard import check_laplacian_compatibility, kappa

# Types:
class IwasawaError(Exception): pass
class ZeroDeterminantError(IwasawaError): pass
class DisconnectedLevelError(IwasawaError): pass

Entry = Union[LaurentU, TruncatedSeries]

logger = logging.getLogger(__name__)

DEFAULT_P_PREC = 16
DEFAULT_T_PREC = 32
MAX_T_PREC = 512
MAX_POLY_DEGREE = 512
MAX_THREADS = 4

_U = Symbol('u')

CharSeries = NamedTuple('CharSeries', [('laurent', Optional[LaurentU]),
                                       ('unit_shift', Optional[int]),
                                       ('polynomial', Optional[List[int]]),
                                       ('exact_series', Optional[List[int]]),
                                       ('series', TruncatedSeries)])

Invariants = NamedTuple('Invariants', [('mu', int),
                                       ('lambda_f', int),
                                       ('lambda_pic', int),
                                       ('certified', bool),
                                       ('note', str),
                                       ('t_prec', int),
                                       ('f', CharSeries)])

LevelRecord = NamedTuple('LevelRecord', [('n', int),
                                         ('vertices', int),
                                         ('edges', int),
                                         ('kappa', int),
                                         ('ordp', int)])

IwasawaReport = NamedTuple('IwasawaReport',
                           [('f', CharSeries),
                            ('mu', int),
                            ('lambda_f', int),
                            ('lambda_pic', int),
                            ('certified', bool),
                            ('note', str),
                            ('t_prec', int),
                            ('levels', Tuple[LevelRecord, ...]),
                            ('nu', int),
                            ('n0', int),
                            ('growth_ok', bool),
                            ('criterion', Optional[CriterionResult]),
                            ('warnings', Tuple[str, ...])])


class CharMatrix(object):
    """
    The matrix ``D - B(T)`` with rows and columns in the order `order`
    (unramified base vertices first). Entries are `LaurentU` on the exact
    path and `TruncatedSeries` otherwise.
    """
    def __init__(self, order: Sequence[int], num_unramified: int,
                 entries: Sequence[Sequence[Entry]], is_exact: bool) -> None:
        self.order = tuple(order)
        self.num_unramified = num_unramified
        self.entries = tuple(tuple(row) for row in entries)
        self.is_exact = is_exact

    @property
    def size(self) -> int:
        return len(self.order)

    def unramified_block(self) -> List[List[Entry]]:
        r = self.num_unramified
        return [list(row[:r]) for row in self.entries[:r]]


def build_char_matrix(vg: VoltageGraph, t_prec: int = DEFAULT_T_PREC,
                      p_prec: int = DEFAULT_P_PREC,
                      exact: Optional[bool] = None) -> CharMatrix:
    """
    Assemble ``D - B(T)``.

    Args:
        exact: force the exact (True) or truncated (False) path; by default
            the exact path is taken iff every voltage is an exact integer
    """
    if exact is None:
        exact = vg.is_exact
    if exact and not vg.is_exact:
        raise IwasawaError("exact path needs integer voltages")
    base, p = vg.base, vg.p
    order = vg.unramified_vertices + vg.ramified_vertices
    r = len(vg.unramified_vertices)
    pos = {v: i for i, v in enumerate(order)}
    s = len(order)

    if exact:
        zero = LaurentU()  # type: Entry
        rho = lambda a: LaurentU.monomial(a.value)  # NOQA
        const = LaurentU.constant
        omega = lambda k: omega_poly(p, k)  # NOQA
    else:
        zero = TruncatedSeries.constant(p, 0, p_prec, t_prec)
        rho = lambda a: binomial_series(a, t_prec, p_prec)  # NOQA
        const = lambda c: TruncatedSeries.constant(p, c, p_prec, t_prec)  # NOQA
        omega = lambda k: laurent_to_series(omega_poly(p, k), p, t_prec, p_prec)  # NOQA

    M = [[zero] * s for _ in range(s)]  # type: List[List[Entry]]
    for j, v in enumerate(order[:r]):
        M[j][j] = M[j][j] + const(valency(base, v))
        for e in base.star(v):
            i = pos[base.terminus(e)]
            M[i][j] = M[i][j] - rho(vg.voltage[e])
    for i in range(r, s):
        M[i][i] = omega(vg.ramification[order[i]])
    return CharMatrix(order, r, M, exact)


def _laurent_det(rows: Sequence[Sequence[LaurentU]]) -> LaurentU:
    """
    Determinant over Z[u, 1/u]: pull ``u^c`` out of each row so the entries
    become polynomials, take a fraction-free determinant over Z[u] and put
    the unit back.
    """
    s = len(rows)
    if s == 0:
        return LaurentU.constant(1)
    K = ZZ[_U]
    shift = 0
    poly_rows = []
    for row in rows:
        c = min((x.min_exponent for x in row if not x.is_zero()), default=0)
        shift += c
        poly_rows.append([K.ring.from_dict({(k,): ZZ(v) for k, v in x.shift(-c).terms.items()})
                          for x in row])
    det = DomainMatrix(poly_rows, (s, s), K).det()
    return LaurentU({monom[0]: int(coeff) for monom, coeff in det.terms()}).shift(shift)


def _series_det(rows: Sequence[Sequence[TruncatedSeries]]) -> TruncatedSeries:
    """
    Determinant over Z/p^N[[T]]/(T^M) by Laplace expansion along rows,
    memoized on the set of columns still available.
    """
    s = len(rows)
    zero = rows[0][0] * 0
    one = zero + 1

    @functools.lru_cache(maxsize=None)
    def minor(mask: int) -> TruncatedSeries:
        i = s - bin(mask).count('1')
        if i == s:
            return one
        total = zero
        sign = 1
        for j in range(s):
            if mask & (1 << j):
                if not rows[i][j].is_zero():
                    term = rows[i][j] * minor(mask & ~(1 << j))
                    total = total + term if sign > 0 else total - term
                sign = -sign
        return total

    return minor((1 << s) - 1)


def _det(cm: CharMatrix, rows: Sequence[Sequence[Entry]]) -> Entry:
    if cm.is_exact:
        return _laurent_det(rows)
    if not rows:
        raise IwasawaError("empty truncated matrix")
    return _series_det(rows)


def char_series(vg: VoltageGraph, t_prec: int = DEFAULT_T_PREC,
                p_prec: int = DEFAULT_P_PREC) -> CharSeries:
    """
    ``f(T) = det(D - B(T))``.

    On the exact path the result carries the Laurent polynomial, its
    decomposition ``(1 + T)^unit_shift * g(T)`` and the exact T-coefficients
    up to `t_prec`. g is only expanded when its degree is at most
    `MAX_POLY_DEGREE`, and `polynomial` is None beyond that. On both paths
    `series` is the reduction modulo (p^N, T^M).

    Raises:
        ZeroDeterminantError: if the determinant vanishes (to the visible
            precision on the truncated path).
    """
    cm = build_char_matrix(vg, t_prec, p_prec)
    p = vg.p
    if cm.is_exact:
        f = _laurent_det(cm.entries)
        if f.is_zero():
            raise ZeroDeterminantError("det(D - B(T)) is identically 0")
        shift = f.min_exponent
        degree = max(k for k, _ in f.items()) - shift
        g = f.t_polynomial()[1] if degree <= MAX_POLY_DEGREE else None
        logger.info("Characteristic series: {} (unit shift {})".format(f, shift))
        return CharSeries(f, shift, g, f.t_coefficients(t_prec),
                          laurent_to_series(f, p, t_prec, p_prec))
    series = _series_det(cm.entries)
    if series.is_zero():
        raise ZeroDeterminantError("det(D - B(T)) is 0 modulo ({}^{}, T^{})".format(
            p, p_prec, t_prec))
    logger.info("Characteristic series: {}".format(series))
    return CharSeries(None, None, None, None, series)


def invariants(vg: VoltageGraph, t_prec: int = DEFAULT_T_PREC,
               p_prec: int = DEFAULT_P_PREC,
               lambda_bound: Optional[int] = None) -> Invariants:
    """
    mu and lambda of f, and ``lambda_pic = lambda(f) - 1`` (T divides f).

    On the truncated path M is doubled until the invariants are certified,
    `MAX_T_PREC` is passed, or the voltages lack the precision for a larger
    M; the M actually used is returned.
    """
    M = t_prec
    f = char_series(vg, M, p_prec)
    if f.laurent is not None:
        ml = mu_lambda(f.laurent, vg.p)
    else:
        ml = mu_lambda(f.series, lambda_bound=lambda_bound)
        while not ml.certified and 2 * M <= MAX_T_PREC:
            try:
                bigger = char_series(vg, 2 * M, p_prec)
            except PrecisionError as e:
                logger.info("Stopped at M={}: {}".format(M, e))
                break
            M, f = 2 * M, bigger
            ml = mu_lambda(f.series, lambda_bound=lambda_bound)
    if not ml.certified:
        logger.warning("Invariants not certified: {}".format(ml.note))
    return Invariants(ml.mu, ml.lambda_, ml.lambda_ - 1, ml.certified, ml.note, M, f)


def factorization_check(vg: VoltageGraph, t_prec: int = DEFAULT_T_PREC,
                        p_prec: int = DEFAULT_P_PREC) -> bool:
    """
    The ramified columns of ``D - B`` only hold their diagonal omega, so
    ``f = prod omega_{k_i} * det(unramified block)``. Both sides are computed
    separately and compared.
    """
    cm = build_char_matrix(vg, t_prec, p_prec)
    whole = _det(cm, cm.entries)
    block = cm.unramified_block()
    if cm.is_exact:
        rhs = _laurent_det(block)  # type: Entry
    else:
        rhs = _series_det(block) if block else \
            TruncatedSeries.constant(vg.p, 1, p_prec, t_prec)
    for i in range(cm.num_unramified, cm.size):
        rhs = rhs * cm.entries[i][i]
    return whole == rhs


def check_divisibility(kappas: Sequence[int]) -> bool:
    """True iff each spanning-tree count divides the next."""
    return all(b % a == 0 for a, b in zip(kappas, kappas[1:]))


def _level_record(vg: VoltageGraph, n: int) -> LevelRecord:
    level = build_level(vg, n)
    if not is_connected(level.graph):
        raise DisconnectedLevelError("level {} is not connected".format(n))
    k = kappa(level.graph)
    return LevelRecord(n, level.graph.num_vertices, level.graph.num_edges // 2,
                       k, valuation(k, vg.p))


def level_records(vg: VoltageGraph, n_max: int,
                  max_threads: int = MAX_THREADS) -> List[LevelRecord]:
    """
    Build levels 0..n_max and count their spanning trees, on up to
    `max_threads` threads.

    Raises:
        DisconnectedLevelError: for the lowest disconnected level.
    """
    records = {}  # type: Dict[int, LevelRecord]
    error_levels = {}  # type: Dict[int, Exception]
    with ThreadPoolExecutor(max_workers=max_threads) as exec:
        future_to_level = {exec.submit(_level_record, vg, n): n
                           for n in range(n_max + 1)}
        for future in concurrent.futures.as_completed(future_to_level):
            n = future_to_level[future]
            try:
                records[n] = future.result()
                logger.info("Level {}: kappa has ord_{} = {}".format(
                    n, vg.p, records[n].ordp))
            except (IwasawaError, GraphError, PrecisionError) as e:
                error_levels[n] = e
                logger.info("Level {} generated an exception: {}".format(n, e))
    logger.debug(build_level.cache_info())
    if error_levels:
        raise error_levels[min(error_levels)]
    return [records[n] for n in sorted(records)]


def verify_growth(vg: VoltageGraph, n_max: int,
                  t_prec: int = DEFAULT_T_PREC, p_prec: int = DEFAULT_P_PREC,
                  max_threads: int = MAX_THREADS,
                  lambda_bound: Optional[int] = None) -> IwasawaReport:
    """
    Compare ``ord_p kappa(X_n)`` for n = 0..n_max with
    ``mu p^n + lambda_pic n + nu``.

    nu is fitted at the top level, n0 is the first level from which the
    formula holds all the way up, and the growth law counts as confirmed
    when it holds at least on the last two levels. When the invariants are
    not certified the comparison still runs and the report says so.

    Raises:
        DisconnectedLevelError: if some level is not connected.
    """
    if n_max < 2:
        raise IwasawaError("n_max must be at least 2, got {}".format(n_max))
    warnings = []  # type: List[str]
    try:
        criterion = connectedness_criterion(vg)  # type: Optional[CriterionResult]
    except IndeterminateError as e:
        criterion = None
        warnings.append(str(e))

    levels = level_records(vg, n_max, max_threads)
    if criterion is None or not criterion.unramified_tower_connected:
        msg = ("connectedness criterion does not hold; levels 0..{} were checked "
               "directly and are connected".format(n_max))
        logger.warning(msg)
        warnings.append(msg)

    inv = invariants(vg, t_prec, p_prec, lambda_bound)
    if not inv.certified:
        warnings.append("invariants not certified: {}".format(inv.note))
    p = vg.p

    def predicted(n: int) -> int:
        return inv.mu * p ** n + inv.lambda_pic * n

    ords = [lev.ordp for lev in levels]
    nu = ords[n_max] - predicted(n_max)
    n0 = n_max
    while n0 > 0 and ords[n0 - 1] == predicted(n0 - 1) + nu:
        n0 -= 1
    growth_ok = n0 <= n_max - 1
    logger.info("Growth: mu={}, lambda={}, nu={}, n0={}, ok={}".format(
        inv.mu, inv.lambda_pic, nu, n0, growth_ok))
    return IwasawaReport(inv.f, inv.mu, inv.lambda_f, inv.lambda_pic,
                         inv.certified, inv.note, inv.t_prec, tuple(levels),
                         nu, n0, growth_ok, criterion, tuple(warnings))


def property_checks(vg: VoltageGraph, report: IwasawaReport,
                    max_check_level: Optional[int] = None) -> Dict[str, bool]:
    """
    The structural checks that accompany a growth report: every projection
    between consecutive levels is a branched cover compatible with the
    Laplacians, the spanning-tree counts form a divisibility chain, f
    factors over the ramified vertices and has no constant term.
    """
    top = report.levels[-1].n if max_check_level is None else \
        min(max_check_level, report.levels[-1].n)
    covers = [projection(vg, n + 1, n) for n in range(top)]
    f = report.f
    constant = f.exact_series[0] if f.exact_series is not None else f.series[0]
    checks = {
        'cover_axioms': all(verify_cover(c).is_branched_cover for c in covers),
        'laplacian_compatibility': all(check_laplacian_compatibility(c).ok
                                       for c in covers),
        'divisibility': check_divisibility([lev.kappa for lev in report.levels]),
        'factorization': factorization_check(vg, f.series.t_prec, f.series.p_prec),
        'f_zero_constant': constant == 0,
    }
    for name, ok in checks.items():
        if not ok:
            logger.warning("Check {} failed".format(name))
    return checks
