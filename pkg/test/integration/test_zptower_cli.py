import io
import json
import logging
import os
import tempfile
import unittest
from unittest.mock import patch
from zptower import build_level
from zptower_cli import (EXIT_COMPUTATION, EXIT_OK, EXIT_UNCERTIFIED,
                         EXIT_VALIDATION, InputError, level_from_json,
                         load_document, main, parse_document)

EX1 = 'test/example1.json'
EX2 = 'test/example2.json'
EX2_BRANCHED = 'test/example2_branched.json'
EX2_TRUNCATED = 'test/example2_truncated.json'
EX3 = 'test/example3.json'
EX3_TRUNCATED = 'test/example3_truncated.json'
DIVISIBLE = 'test/divisible.json'
DISCONNECTED = 'test/disconnected.json'
BAD_DIGIT = 'test/bad_digit.json'
MALFORMED = 'test/malformed.json'
WIDE_BOUQUET = 'test/wide_bouquet.json'


class CliTestCase(unittest.TestCase):
    def run_cli(self, *argv):
        """Run the CLI; return (exit code, stdout, stderr)."""
        out = io.StringIO()
        with patch('sys.stderr', new_callable=io.StringIO) as err:
            code = main(list(argv), out=out)
        return code, out.getvalue(), err.getvalue()


class TestValidate(CliTestCase):
    def test_example(self):
        code, out, _ = self.run_cli('validate', EX1)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("ok: p=2, 1 vertices, 2 edges", out)
        self.assertIn("ramification: v=2", out)
        self.assertIn("criterion: true", out)

    def test_divisible(self):
        code, out, _ = self.run_cli('validate', DIVISIBLE)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("criterion: false (min cycle valuation 1)", out)

    def test_bad_digit(self):
        """
        Digits must be below p; the error names the offending value.
        """
        code, _, err = self.run_cli('validate', BAD_DIGIT)
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("/edges/0/voltage/digits/0", err)

    def test_disconnected(self):
        code, _, err = self.run_cli('validate', DISCONNECTED)
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("not connected", err)

    def test_malformed(self):
        code, _, err = self.run_cli('validate', MALFORMED)
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("line", err)
        self.assertIn("column", err)

    def test_missing_file(self):
        code, _, _ = self.run_cli('validate', 'test/no_such_file.json')
        self.assertEqual(code, EXIT_VALIDATION)


class TestParseDocument(unittest.TestCase):
    def test_pointers(self):
        """
        Semantic errors carry a JSON pointer to the offending value.
        """
        base = {'p': 3, 'vertices': ['a'],
                'edges': [{'from': 'a', 'to': 'a', 'voltage': 1}]}
        cases = [
            (dict(base, p=4), '/p'),
            (dict(base, vertices=['a', 'a']), '/vertices/1'),
            (dict(base, edges=[{'from': 'a', 'to': 'b', 'voltage': 1}]), '/edges/0/to'),
            (dict(base, edges=[{'from': 'a', 'to': 'a'}]), '/edges/0/voltage'),
            (dict(base, edges=[{'from': 'a', 'to': 'a', 'voltage': 'x'}]),
             '/edges/0/voltage'),
            (dict(base, ramification={'b': 1}), '/ramification/b'),
            (dict(base, ramification={'a': -1}), '/ramification/a'),
            ({'p': 3, 'edges': []}, '/vertices'),
        ]
        for doc, pointer in cases:
            with self.assertRaises(InputError) as cm:
                parse_document(doc)
            self.assertEqual(cm.exception.pointer, pointer, doc)

    def test_voltage_forms(self):
        """
        Integers, decimal strings and digit lists all describe voltages.
        """
        doc = load_document(EX2)
        self.assertEqual(doc.edge_ids, ['s1', 's2', 's3'])
        self.assertEqual(doc.vg.voltage[4].value, 11)
        truncated = load_document(EX2_TRUNCATED)
        self.assertEqual(truncated.vg.voltage[4].value, 11)
        self.assertEqual(truncated.vg.precision, 40)

    def test_default_edge_ids(self):
        doc = parse_document({'p': 2, 'vertices': ['a'],
                              'edges': [{'from': 'a', 'to': 'a', 'voltage': 1}]})
        self.assertEqual(doc.edge_ids, ['s1'])


class TestTower(CliTestCase):
    def test_counts(self):
        code, out, _ = self.run_cli('tower', EX1, '--levels', '3')
        self.assertEqual(code, EXIT_OK)
        lines = out.splitlines()
        self.assertEqual(lines[0], "level 0: 1 vertices, 2 edges, connected=true")
        self.assertEqual(lines[3], "level 3: 4 vertices, 16 edges, connected=true")

    def test_branched_counts(self):
        code, out, _ = self.run_cli('tower', EX2_BRANCHED, '--levels', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("level 2: 12 vertices, 27 edges", out)

    def test_disconnected_levels_reported(self):
        code, out, _ = self.run_cli('tower', DIVISIBLE, '--levels', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("level 1: 3 vertices, 6 edges, connected=false", out)

    def test_emit_json(self):
        """
        Emitted level files parse back into the same labeled graph.
        """
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = self.run_cli('tower', EX2_BRANCHED, '--levels', '2',
                                      '--emit', 'json', '--out', tmp)
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(sorted(os.listdir(tmp)),
                             ['level_0.json', 'level_1.json', 'level_2.json'])
            with open(os.path.join(tmp, 'level_2.json')) as f:
                parsed = level_from_json(json.load(f))
        level = build_level(load_document(EX2_BRANCHED).vg, 2)
        self.assertEqual(parsed.n, 2)
        self.assertEqual(parsed.graph.vertices, level.graph.vertices)
        self.assertEqual(parsed.graph.edges, level.graph.edges)
        self.assertEqual(tuple(parsed.edge_labels), level.edge_labels)
        self.assertEqual(tuple(parsed.vertex_labels),
                         tuple(('v{}'.format(v + 1), r) for v, r in level.vertex_labels))

    def test_emit_dot(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = self.run_cli('tower', EX1, '--levels', '1',
                                      '--emit', 'dot', '--out', tmp)
            self.assertEqual(code, EXIT_OK)
            with open(os.path.join(tmp, 'level_1.dot')) as f:
                dot = f.read()
        self.assertTrue(dot.startswith("graph level_1 {"))
        self.assertIn('"v:0" -- "v:1" [label="e0:0"];', dot)

    def test_precision(self):
        """
        Levels beyond the precision of the voltages cannot be built.
        """
        doc = {'p': 3, 'vertices': ['v'],
               'edges': [{'from': 'v', 'to': 'v',
                          'voltage': {'digits': [1, 2], 'precision': 2}}]}
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'short.json')
            with open(path, 'w') as f:
                json.dump(doc, f)
            code, _, err = self.run_cli('tower', path, '--levels', '3')
        self.assertEqual(code, EXIT_COMPUTATION)
        self.assertIn("digits", err)


class TestKappa(CliTestCase):
    def test_branched(self):
        code, out, _ = self.run_cli('kappa', EX2_BRANCHED, '--level', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("kappa = 243675", out)
        self.assertIn("ord_3 = 3", out)

    def test_triple(self):
        code, out, _ = self.run_cli('kappa', EX3, '--level', '1', '--group')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("kappa = 3969", out)
        self.assertIn("ord_3 = 4", out)
        self.assertIn("invariant factors:", out)

    def test_group(self):
        code, out, _ = self.run_cli('kappa', EX1, '--level', '1', '--group')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("kappa = 4", out)
        self.assertIn("invariant factors: 4", out)
        self.assertIn("2-part: 4", out)

    def test_disconnected_level(self):
        code, _, _ = self.run_cli('kappa', DIVISIBLE, '--level', '1')
        self.assertEqual(code, EXIT_COMPUTATION)


class TestInvariants(CliTestCase):
    def test_bouquet(self):
        code, out, _ = self.run_cli('invariants', EX1)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("f = (1+T)^0 * (4T + 6T^2 + 4T^3 + T^4)", out)
        self.assertIn("mu = 0\nlambda_f = 4\nlambda_pic = 3\ncertified = true", out)

    def test_unramified_dumbbell(self):
        code, out, _ = self.run_cli('invariants', EX2, '--t-prec', '5')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("series: -122T^2 + 122T^3 - 1211T^4 + O(T^5)", out)
        self.assertIn("lambda_pic = 1", out)

    def test_truncated(self):
        code, out, _ = self.run_cli('invariants', EX2_TRUNCATED, '--t-prec', '5',
                                    '--p-prec', '10')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("-122T^2 + 122T^3 - 1211T^4 + O(T^5) mod 3^10", out)

    def test_triple(self):
        code, out, _ = self.run_cli('invariants', EX3)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("mu = 1\nlambda_f = 3\nlambda_pic = 2", out)

    def test_huge_voltage(self):
        """
        A decimal-string voltage of 10^12 + 1 prints the series prefix only.
        """
        a = 10 ** 12 + 1
        code, out, _ = self.run_cli('invariants', WIDE_BOUQUET, '--t-prec', '3')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("f = (1+T)^{} * g(T), deg g = {}".format(-a, 2 * a), out)
        self.assertIn("series: {}T^2 + O(T^3)".format(-(1 + a * a)), out)
        self.assertIn("mu = 0\nlambda_f = 2\nlambda_pic = 1\ncertified = true", out)


class TestVerify(CliTestCase):
    def verify(self, path, *extra):
        code, out, err = self.run_cli('verify', path, *extra)
        return code, (json.loads(out) if out else None), err

    def test_bouquet(self):
        code, report, _ = self.verify(EX1, '--max-level', '4')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['f']['poly'], [[1, '4'], [2, '6'], [3, '4'], [4, '1']])
        self.assertEqual(report['f']['unit_shift'], 0)
        self.assertEqual((report['mu'], report['lambda_f'], report['lambda_pic']),
                         (0, 4, 3))
        self.assertEqual((report['nu'], report['n0'], report['growth_ok']), (-1, 1, True))
        self.assertEqual([lev['kappa'] for lev in report['levels']],
                         ['1', '4', '32', '256', '2048'])
        self.assertTrue(all(report['checks'].values()))

    def test_branched_dumbbell(self):
        code, report, _ = self.verify(EX2_BRANCHED, '--max-level', '4')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual([lev['ordp'] for lev in report['levels']], [0, 1, 3, 5, 7])
        self.assertEqual(report['nu'], -1)
        self.assertEqual(report['f']['series'][:4], ['0', '3', '3', '-2'])

    def test_triple(self):
        code, report, _ = self.verify(EX3, '--max-level', '4')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['levels'][4]['ordp'], 88)
        self.assertEqual(report['nu'], -1)
        self.assertEqual(report['mu'], 1)

    def test_deterministic(self):
        """
        The report does not depend on the number of threads.
        """
        one = self.run_cli('verify', EX2_BRANCHED, '--max-level', '3', '--threads', '1')
        many = self.run_cli('verify', EX2_BRANCHED, '--max-level', '3', '--threads', '4')
        self.assertEqual(one[:2], many[:2])

    def test_divisible_refused(self):
        code, report, err = self.verify(DIVISIBLE, '--max-level', '3')
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIsNone(report)
        self.assertIn("stage growth", err)

    def test_strict_uncertified(self):
        """
        Truncated voltages with mu > 0 leave the invariants uncertified;
        --strict turns that into its own exit code.
        """
        code, report, _ = self.verify(EX3_TRUNCATED, '--max-level', '3')
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(report['certified'])
        self.assertFalse(report['f']['exact'])
        code, _, _ = self.verify(EX3_TRUNCATED, '--max-level', '3', '--strict')
        self.assertEqual(code, EXIT_UNCERTIFIED)

    def test_strict_certified(self):
        code, _, _ = self.verify(EX1, '--max-level', '3', '--strict')
        self.assertEqual(code, EXIT_OK)

    def test_too_few_levels(self):
        code, _, err = self.verify(EX1, '--max-level', '1')
        self.assertEqual(code, EXIT_COMPUTATION)
        self.assertIn("stage growth", err)


class TestOracle(CliTestCase):
    def test_agrees(self):
        code, out, _ = self.run_cli('oracle', EX2, '--level', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("brute force = 75\nkappa = 75\nagree = true", out)

    def test_cap(self):
        code, _, err = self.run_cli('oracle', EX2, '--level', '2')
        self.assertEqual(code, EXIT_COMPUTATION)
        self.assertIn("cap", err)


class TestLogging(CliTestCase):
    def test_log_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'zpt.log')
            code, _, _ = self.run_cli('--log-level', 'INFO', '--log-file', path,
                                      'kappa', EX1, '--level', '1')
            self.assertEqual(code, EXIT_OK)
            for handler in logging.getLogger().handlers:
                handler.close()
            with open(path) as f:
                log = f.read()
        self.assertIn("zpt-", log)
        self.assertIn("kappa of", log)
