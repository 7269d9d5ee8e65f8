"""
Command-line interface to zptower. This is the only module that reads or
writes files.

The input is one JSON document describing the base graph, the prime, the
voltages and the ramification::

    {
      "p": 3,
      "vertices": ["v1", "v2"],
      "edges": [
        {"id": "s1", "from": "v1", "to": "v1", "voltage": 1},
        {"id": "s2", "from": "v1", "to": "v2", "voltage": 0},
        {"id": "s3", "from": "v2", "to": "v2", "voltage": "11"}
      ],
      "ramification": {"v2": 1}
    }

Each geometric edge is listed once; its inverse carries the negated voltage.
A voltage is an integer, a decimal string, or
``{"digits": [d0, d1, ...], "precision": N}`` for ``sum d_i p^i`` known
modulo ``p^N``. Vertices absent from ``ramification`` are unramified.

Usage
-----

::

    $ python zptower_cli.py validate tower.json
    $ python zptower_cli.py tower tower.json --levels 3 --emit dot --out levels/
    $ python zptower_cli.py kappa tower.json --level 2 --group
    $ python zptower_cli.py invariants tower.json --t-prec 32 --p-prec 16
    $ python zptower_cli.py verify tower.json --max-level 4 --strict
    $ python zptower_cli.py oracle tower.json --level 1

Exit codes: 0 success, 2 validation failure, 3 computation failure,
4 uncertified invariants (``verify --strict`` only).

Logging goes to stderr, or to a rotating log file with ``--log-file``.

Interface
---------
"""
import argparse
import json
import logging
import logging.handlers
import multiprocessing
import os
import sys
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, TextIO, Tuple

from zptower import (LevelGraph, TowerError, VoltageGraph, build_level,
                     connectedness_criterion)
from zptower_graph import (DirectedEdge, GraphError, SerreGraph, is_connected,
                           validate)
from zptower_iwasawa import (DEFAULT_P_PREC, DEFAULT_T_PREC, MAX_THREADS,
                             DisconnectedLevelError, IwasawaError, IwasawaReport,
                             invariants, property_checks, verify_growth)
from zptower_oracle import CapExceededError, brute_force_spanning_trees
from zptower_padic import (PadicError, PadicScalar, check_prime,
                           format_t_polynomial, valuation)
from zptower_picard import PicardError, kappa, p_part, picard_group

LOG_LEVEL = logging.WARNING
#LOG_LEVEL = logging.DEBUG

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3
EXIT_UNCERTIFIED = 4

logger = logging.getLogger(__name__)


class InputError(Exception):
    """
    A problem with the input document, located by a JSON pointer (or by
    line and column for syntax errors).
    """
    def __init__(self, pointer: str, message: str) -> None:
        super().__init__("{}: {}".format(pointer or '/', message))
        self.pointer = pointer
        self.message = message


InputDocument = NamedTuple('InputDocument', [('p', int),
                                             ('vertices', List[str]),
                                             ('edge_ids', List[str]),
                                             ('vg', VoltageGraph)])

ParsedLevel = NamedTuple('ParsedLevel', [('n', int),
                                         ('graph', SerreGraph),
                                         ('vertex_labels', List[Tuple[str, int]]),
                                         ('edge_labels', List[Tuple[int, int]])])


def setup_logging(level: int = LOG_LEVEL, log_file: Optional[str] = None) -> None:
    """
    Point the root logger at stderr, or at a rotating log file.
    """
    pid = multiprocessing.current_process().pid
    if log_file:
        handler = logging.handlers.RotatingFileHandler(log_file, maxBytes=100000,
                                                       backupCount=1)  # type: logging.Handler
    else:
        handler = logging.StreamHandler()
    format_str = "zpt-%(name)s-" + "%d" % pid + ": "
    format_str += "%(asctime)s %(levelname)s:%(message)s"
    handler.setFormatter(logging.Formatter(format_str))
    handler.setLevel(level)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers = []
    root_logger.addHandler(handler)


def _integer(value: Any, pointer: str) -> int:
    """JSON integers may also be given as decimal strings."""
    if isinstance(value, bool):
        raise InputError(pointer, "expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 10)
        except ValueError:
            pass
    raise InputError(pointer, "expected an integer, got {!r}".format(value))


def _voltage(value: Any, p: int, pointer: str) -> PadicScalar:
    if isinstance(value, dict):
        if 'digits' not in value or 'precision' not in value:
            raise InputError(pointer, "truncated voltage needs 'digits' and 'precision'")
        digits = value['digits']
        if not isinstance(digits, list):
            raise InputError(pointer + '/digits', "expected a list")
        ds = []
        for i, d in enumerate(digits):
            d = _integer(d, '{}/digits/{}'.format(pointer, i))
            if not 0 <= d < p:
                raise InputError('{}/digits/{}'.format(pointer, i),
                                 "digit {} not in [0, {})".format(d, p))
            ds.append(d)
        precision = _integer(value['precision'], pointer + '/precision')
        if precision < len(ds) or precision < 0:
            raise InputError(pointer + '/precision',
                             "precision {} shorter than the {} digits given".format(
                                 precision, len(ds)))
        return PadicScalar.from_digits(p, ds, precision)
    return PadicScalar(p, _integer(value, pointer))


def parse_document(doc: Any) -> InputDocument:
    """
    Turn a decoded input document into a `VoltageGraph`.

    :param doc: the decoded JSON value
    :raises InputError: with the JSON pointer of the offending value
    """
    if not isinstance(doc, dict):
        raise InputError('', "expected an object")
    for key in ('p', 'vertices', 'edges'):
        if key not in doc:
            raise InputError('/' + key, "missing")
    p = _integer(doc['p'], '/p')
    try:
        check_prime(p)
    except PadicError as e:
        raise InputError('/p', str(e))

    vertices = doc['vertices']
    if not isinstance(vertices, list) or not vertices:
        raise InputError('/vertices', "expected a nonempty list of names")
    names = []  # type: List[str]
    for i, name in enumerate(vertices):
        if not isinstance(name, str):
            raise InputError('/vertices/{}'.format(i), "vertex names are strings")
        if name in names:
            raise InputError('/vertices/{}'.format(i), "duplicate vertex {}".format(name))
        names.append(name)
    index = {name: i for i, name in enumerate(names)}

    edges = doc['edges']
    if not isinstance(edges, list):
        raise InputError('/edges', "expected a list")
    directed = []  # type: List[DirectedEdge]
    voltage = {}  # type: Dict[int, PadicScalar]
    edge_ids = []  # type: List[str]
    for i, edge in enumerate(edges):
        pointer = '/edges/{}'.format(i)
        if not isinstance(edge, dict):
            raise InputError(pointer, "expected an object")
        for key in ('from', 'to', 'voltage'):
            if key not in edge:
                raise InputError('{}/{}'.format(pointer, key), "missing")
        ends = []
        for key in ('from', 'to'):
            if edge[key] not in index:
                raise InputError('{}/{}'.format(pointer, key),
                                 "unknown vertex {!r}".format(edge[key]))
            ends.append(index[edge[key]])
        eid = str(edge.get('id', 's{}'.format(i + 1)))
        if eid in edge_ids:
            raise InputError(pointer + '/id', "duplicate edge id {}".format(eid))
        edge_ids.append(eid)
        directed.append(DirectedEdge(2 * i, ends[0], ends[1], 2 * i + 1))
        directed.append(DirectedEdge(2 * i + 1, ends[1], ends[0], 2 * i))
        voltage[2 * i] = _voltage(edge['voltage'], p, pointer + '/voltage')

    ramification = {}  # type: Dict[int, int]
    ram = doc.get('ramification', {})
    if not isinstance(ram, dict):
        raise InputError('/ramification', "expected an object")
    for name, k in ram.items():
        pointer = '/ramification/{}'.format(name)
        if name not in index:
            raise InputError(pointer, "unknown vertex {!r}".format(name))
        k = _integer(k, pointer)
        if k < 0:
            raise InputError(pointer, "ramification exponent must be nonnegative")
        ramification[index[name]] = k

    base = SerreGraph(names, directed)
    problems = validate(base)
    if problems:
        raise InputError('/edges', "; ".join(problems))
    if not is_connected(base):
        raise InputError('/edges', "base graph is not connected")
    try:
        vg = VoltageGraph(base, p, voltage, ramification)
    except (TowerError, PadicError) as e:
        raise InputError('', str(e))
    return InputDocument(p, names, edge_ids, vg)


def load_document(path: str) -> InputDocument:
    """
    Read and parse an input file.

    :raises InputError: on syntax errors (with line and column) or semantic
        errors (with a JSON pointer)
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError('', "line {}, column {}: {}".format(e.lineno, e.colno, e.msg))
    return parse_document(doc)


def level_to_json(level: LevelGraph) -> Dict[str, Any]:
    base = level.vg.base
    g = level.graph
    return {
        'n': level.n,
        'p': level.vg.p,
        'vertices': [{'name': name, 'base': base.vertices[v], 'residue': r}
                     for name, (v, r) in zip(g.vertices, level.vertex_labels)],
        'edges': [{'index': e.index, 'base_edge': be, 'sigma': s,
                   'from': e.origin, 'to': e.terminus, 'inverse': e.inverse}
                  for e, (be, s) in zip(g.edges, level.edge_labels)],
    }


def level_from_json(doc: Dict[str, Any]) -> ParsedLevel:
    """Rebuild a level emitted by `level_to_json`."""
    names = [v['name'] for v in doc['vertices']]
    edges = [DirectedEdge(e['index'], e['from'], e['to'], e['inverse'])
             for e in doc['edges']]
    return ParsedLevel(doc['n'], SerreGraph(names, edges),
                       [(v['base'], v['residue']) for v in doc['vertices']],
                       [(e['base_edge'], e['sigma']) for e in doc['edges']])


def level_to_dot(level: LevelGraph) -> str:
    """Graphviz source with vertices named ``v:r`` and edges labeled by sigma."""
    g = level.graph
    lines = ['graph level_{} {{'.format(level.n)]
    for name in g.vertices:
        lines.append('  "{}";'.format(name))
    for e in g.orientation():
        base_edge, s = level.edge_labels[e]
        lines.append('  "{}" -- "{}" [label="e{}:{}"];'.format(
            g.vertices[g.origin(e)], g.vertices[g.terminus(e)], base_edge, s))
    lines.append('}')
    return '\n'.join(lines) + '\n'


def report_to_json(report: IwasawaReport, checks: Dict[str, bool]) -> Dict[str, Any]:
    f = report.f
    if f.laurent is not None:
        f_json = {
            'exact': True,
            'unit_shift': f.unit_shift,
            'poly': (None if f.polynomial is None else
                     [[i, str(c)] for i, c in enumerate(f.polynomial) if c]),
            'laurent': [[k, str(c)] for k, c in f.laurent.items()],
            'series': [str(c) for c in f.exact_series],
        }  # type: Dict[str, Any]
    else:
        f_json = {
            'exact': False,
            'unit_shift': None,
            'poly': None,
            'series': [str(c) for c in f.series.signed_coefficients()],
            'p_prec': f.series.p_prec,
        }
    criterion = None
    if report.criterion is not None:
        criterion = {
            'unramified_tower_connected': report.criterion.unramified_tower_connected,
            'min_cycle_valuation': report.criterion.min_cycle_valuation,
        }
    return {
        'f': f_json,
        'mu': report.mu,
        'lambda_f': report.lambda_f,
        'lambda_pic': report.lambda_pic,
        'certified': report.certified,
        't_prec': report.t_prec,
        'nu': report.nu,
        'n0': report.n0,
        'growth_ok': report.growth_ok,
        'criterion': criterion,
        'levels': [{'n': lev.n, 'vertices': lev.vertices, 'edges': lev.edges,
                    'kappa': str(lev.kappa), 'ordp': lev.ordp}
                   for lev in report.levels],
        'checks': checks,
        'warnings': list(report.warnings),
    }


def cmd_validate(args: argparse.Namespace, out: TextIO) -> int:
    doc = load_document(args.file)
    vg = doc.vg
    crit = connectedness_criterion(vg)
    out.write("ok: p={}, {} vertices, {} edges\n".format(
        doc.p, len(doc.vertices), len(doc.edge_ids)))
    ram = ', '.join('{}={}'.format(doc.vertices[v], vg.ramification[v])
                    for v in vg.ramified_vertices) or 'none'
    out.write("ramification: {}\n".format(ram))
    out.write("criterion: {} (min cycle valuation {})\n".format(
        str(crit.unramified_tower_connected).lower(), crit.min_cycle_valuation))
    return EXIT_OK


def cmd_tower(args: argparse.Namespace, out: TextIO) -> int:
    vg = load_document(args.file).vg
    if args.emit:
        os.makedirs(args.out, exist_ok=True)
    for n in range(args.levels + 1):
        level = build_level(vg, n)
        g = level.graph
        out.write("level {}: {} vertices, {} edges, connected={}\n".format(
            n, g.num_vertices, g.num_edges // 2, str(is_connected(g)).lower()))
        if args.emit == 'json':
            path = os.path.join(args.out, 'level_{}.json'.format(n))
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(level_to_json(level), f, indent=1)
        elif args.emit == 'dot':
            path = os.path.join(args.out, 'level_{}.dot'.format(n))
            with open(path, 'w', encoding='utf-8') as f:
                f.write(level_to_dot(level))
    return EXIT_OK


def cmd_kappa(args: argparse.Namespace, out: TextIO) -> int:
    vg = load_document(args.file).vg
    g = build_level(vg, args.level).graph
    k = kappa(g)
    out.write("kappa = {}\n".format(k))
    out.write("ord_{} = {}\n".format(vg.p, valuation(k, vg.p)))
    if args.group:
        group = picard_group(g)
        out.write("invariant factors: {}\n".format(
            ' '.join(str(d) for d in group.invariant_factors) or '(trivial)'))
        out.write("{}-part: {}\n".format(
            vg.p, ' '.join(str(d) for d in p_part(group, vg.p).factors) or '(trivial)'))
    return EXIT_OK


def cmd_invariants(args: argparse.Namespace, out: TextIO) -> int:
    vg = load_document(args.file).vg
    inv = invariants(vg, args.t_prec, args.p_prec)
    f = inv.f
    if f.laurent is not None:
        if f.polynomial is None:
            degree = max(k for k, _ in f.laurent.items()) - f.unit_shift
            out.write("f = (1+T)^{} * g(T), deg g = {}\n".format(f.unit_shift, degree))
        else:
            out.write("f = (1+T)^{} * ({})\n".format(
                f.unit_shift, format_t_polynomial(f.polynomial)))
        out.write("series: {} + O(T^{})\n".format(
            format_t_polynomial(f.exact_series), len(f.exact_series)))
    else:
        out.write("series: {} + O(T^{}) mod {}^{}\n".format(
            format_t_polynomial(f.series.signed_coefficients()), f.series.t_prec,
            vg.p, f.series.p_prec))
    out.write("mu = {}\nlambda_f = {}\nlambda_pic = {}\ncertified = {}\n".format(
        inv.mu, inv.lambda_f, inv.lambda_pic, str(inv.certified).lower()))
    if inv.note:
        out.write("note: {}\n".format(inv.note))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, out: TextIO) -> int:
    stage = 'input'
    try:
        vg = load_document(args.file).vg
        stage = 'growth'
        report = verify_growth(vg, args.max_level, args.t_prec, args.p_prec,
                               args.threads)
        stage = 'checks'
        checks = property_checks(vg, report)
    except DisconnectedLevelError as e:
        sys.stderr.write("verify failed at stage {}: {}\n".format(stage, e))
        return EXIT_VALIDATION
    except (IwasawaError, PadicError, GraphError, TowerError, PicardError) as e:
        sys.stderr.write("verify failed at stage {}: {}\n".format(stage, e))
        return EXIT_COMPUTATION if stage != 'input' else EXIT_VALIDATION
    out.write(json.dumps(report_to_json(report, checks), indent=2) + "\n")
    if not report.growth_ok:
        sys.stderr.write("verify failed at stage growth: formula does not hold "
                         "on the last two levels\n")
        return EXIT_COMPUTATION
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        sys.stderr.write("verify failed at stage checks: {}\n".format(', '.join(failed)))
        return EXIT_COMPUTATION
    if args.strict and not report.certified:
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, out: TextIO) -> int:
    vg = load_document(args.file).vg
    g = build_level(vg, args.level).graph
    brute = brute_force_spanning_trees(g)
    k = kappa(g)
    out.write("brute force = {}\nkappa = {}\nagree = {}\n".format(
        brute, k, str(brute == k).lower()))
    return EXIT_OK if brute == k else EXIT_COMPUTATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='zptower',
        description='Branched Z_p-towers of graphs: levels, spanning trees, '
                    'Picard groups and Iwasawa invariants.')
    parser.add_argument('--log-level', default=logging.getLevelName(LOG_LEVEL),
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--log-file', default=None,
                        help='log to this rotating file instead of stderr')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('validate', help='check an input document')
    p.add_argument('file')
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('tower', help='build levels 0..n')
    p.add_argument('file')
    p.add_argument('--levels', type=int, required=True)
    p.add_argument('--emit', choices=['dot', 'json'], default=None)
    p.add_argument('--out', default='.')
    p.set_defaults(func=cmd_tower)

    p = sub.add_parser('kappa', help='spanning trees of one level')
    p.add_argument('file')
    p.add_argument('--level', type=int, required=True)
    p.add_argument('--group', action='store_true',
                   help='also print the invariant factors of Pic^0')
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser('invariants', help='characteristic series, mu and lambda')
    p.add_argument('file')
    p.add_argument('--t-prec', type=int, default=DEFAULT_T_PREC)
    p.add_argument('--p-prec', type=int, default=DEFAULT_P_PREC)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser('verify', help='check the growth formula up to a level')
    p.add_argument('file')
    p.add_argument('--max-level', type=int, required=True)
    p.add_argument('--t-prec', type=int, default=DEFAULT_T_PREC)
    p.add_argument('--p-prec', type=int, default=DEFAULT_P_PREC)
    p.add_argument('--threads', type=int, default=MAX_THREADS)
    p.add_argument('--strict', action='store_true',
                   help='exit 4 when the invariants are not certified')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('oracle', help='compare kappa with brute-force enumeration')
    p.add_argument('file')
    p.add_argument('--level', type=int, required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout) -> int:
    """
    Run the command line `argv` and return the exit code.
    """
    args = build_parser().parse_args(argv)
    setup_logging(getattr(logging, args.log_level), args.log_file)
    try:
        return args.func(args, out)
    except InputError as e:
        sys.stderr.write("invalid input: {}\n".format(e))
        return EXIT_VALIDATION
    except OSError as e:
        sys.stderr.write("{}\n".format(e))
        return EXIT_VALIDATION
    except (PadicError, GraphError, TowerError, PicardError, IwasawaError,
            CapExceededError) as e:
        sys.stderr.write("computation failed: {}\n".format(e))
        return EXIT_COMPUTATION


if __name__ == '__main__':
    sys.exit(main())
