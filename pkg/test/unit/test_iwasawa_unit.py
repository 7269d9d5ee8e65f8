import unittest
from zptower import VoltageGraph
from zptower_graph import SerreGraph
from zptower_padic import LaurentU, PadicScalar, omega_poly, valuation
from zptower_iwasawa import (DisconnectedLevelError, IwasawaError,
                             ZeroDeterminantError, build_char_matrix,
                             char_series, check_divisibility,
                             factorization_check, invariants, level_records,
                             property_checks, verify_growth)
from test.towers import (bouquet_tower, divisible_tower, dumbbell_tower,
                         triple_tower, wide_bouquet_tower)

u = LaurentU.monomial(1)


def truncated_triple_tower():
    pairs = [('v1', 'v1')] * 3 + [('v1', 'v2')] * 3 + [('v2', 'v2')]
    g = SerreGraph.from_undirected(['v1', 'v2'], pairs)
    volts = [1, 1, 1, 0, 0, 0, 11]
    return VoltageGraph(g, 3, {2 * i: PadicScalar(3, a, 40) for i, a in enumerate(volts)},
                        {1: 1})


def star_tower():
    """A single edge into a totally ramified vertex: no cycles at all."""
    g = SerreGraph.from_undirected(['a', 'b'], [('a', 'b')])
    return VoltageGraph(g, 3, {0: 0}, {1: 0})


class TestCharMatrix(unittest.TestCase):
    def test_branched_dumbbell(self):
        """
        Unramified vertices come first; ramified columns only hold omega on
        the diagonal.
        """
        cm = build_char_matrix(dumbbell_tower(branched=True))
        self.assertTrue(cm.is_exact)
        self.assertEqual(cm.order, (0, 1))
        self.assertEqual(cm.num_unramified, 1)
        self.assertEqual(cm.entries[0][0], 3 - u - LaurentU.monomial(-1))
        self.assertEqual(cm.entries[1][0], LaurentU.constant(-1))
        self.assertTrue(cm.entries[0][1].is_zero())
        self.assertEqual(cm.entries[1][1], omega_poly(3, 1))
        self.assertEqual(cm.unramified_block(), [[cm.entries[0][0]]])

    def test_truncated(self):
        cm = build_char_matrix(dumbbell_tower(), 8, 4, exact=False)
        self.assertFalse(cm.is_exact)
        self.assertEqual(cm.size, 2)
        self.assertEqual(cm.entries[0][1].signed_coefficients(), [-1] + [0] * 7)

    def test_exact_needs_integers(self):
        with self.assertRaises(IwasawaError):
            build_char_matrix(dumbbell_tower(truncated=True), exact=True)


class TestCharSeries(unittest.TestCase):
    def test_bouquet(self):
        """
        With a single totally ramified vertex f is omega_k.
        """
        f = char_series(bouquet_tower())
        self.assertEqual(f.laurent, omega_poly(2, 2))
        self.assertEqual(f.unit_shift, 0)
        self.assertEqual(f.polynomial, [0, 4, 6, 4, 1])

    def test_unramified_dumbbell(self):
        f = char_series(dumbbell_tower())
        self.assertEqual(f.exact_series[:5], [0, 0, -122, 122, -1211])
        self.assertEqual(f.series.signed_coefficients()[:5], [0, 0, -122, 122, -1211])

    def test_branched_dumbbell(self):
        """
        f = (1 + T)^-1 (1 + T - T^2) omega_1.
        """
        f = char_series(dumbbell_tower(branched=True))
        self.assertEqual(f.unit_shift, -1)
        self.assertEqual(f.polynomial, [0, 3, 6, 1, -2, -1])
        self.assertEqual(f.exact_series[:4], [0, 3, 3, -2])

    def test_triple(self):
        f = char_series(triple_tower())
        branched = char_series(dumbbell_tower(branched=True))
        self.assertEqual(f.laurent, branched.laurent * 3)

    def test_exact_and_truncated_agree(self):
        """
        Both determinant paths give the same series modulo (3^16, T^32).
        """
        exact = char_series(dumbbell_tower(), 32, 16)
        truncated = char_series(dumbbell_tower(truncated=True), 32, 16)
        self.assertIsNone(truncated.laurent)
        self.assertEqual(exact.series, truncated.series)
        self.assertEqual(char_series(triple_tower(), 32, 16).series,
                         char_series(truncated_triple_tower(), 32, 16).series)

    def test_huge_voltage(self):
        """
        A voltage of 10^12 + 1 keeps the Laurent form and the series prefix
        but skips the dense g(T).
        """
        a = 10 ** 12 + 1
        f = char_series(wide_bouquet_tower(a))
        self.assertIsNone(f.polynomial)
        self.assertEqual(f.unit_shift, -a)
        self.assertEqual(f.exact_series[:3], [0, 0, -(1 + a * a)])
        small = char_series(wide_bouquet_tower(5))
        self.assertEqual(small.unit_shift, -5)
        self.assertEqual(small.polynomial[:3], [0, 0, -26])

    def test_zero_determinant(self):
        g = SerreGraph(['v'], [])
        with self.assertRaises(ZeroDeterminantError):
            char_series(VoltageGraph(g, 3, {}))

    def test_factorization(self):
        for vg in (bouquet_tower(), dumbbell_tower(), dumbbell_tower(branched=True),
                   triple_tower(), dumbbell_tower(truncated=True)):
            self.assertTrue(factorization_check(vg, 16, 8))


class TestInvariants(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(invariants(bouquet_tower())[:4], (0, 4, 3, True))
        self.assertEqual(invariants(dumbbell_tower())[:4], (0, 2, 1, True))
        self.assertEqual(invariants(dumbbell_tower(branched=True))[:4], (0, 3, 2, True))
        self.assertEqual(invariants(triple_tower())[:4], (1, 3, 2, True))

    def test_huge_voltage(self):
        """
        f = -(1 + a^2) T^2 + ..., and 1 + a^2 is a unit mod 3 for a = 2 mod 3.
        """
        for a in (10 ** 12 + 1, 2 ** 64 + 1):
            self.assertEqual(invariants(wide_bouquet_tower(a))[:4], (0, 2, 1, True))

    def test_truncated_unit(self):
        """
        mu = 0 is certified on the truncated path.
        """
        inv = invariants(dumbbell_tower(truncated=True))
        self.assertEqual(inv[:4], (0, 2, 1, True))
        self.assertEqual(inv.t_prec, 32)

    def test_truncated_positive_mu(self):
        """
        mu > 0 stays uncertified once the voltages run out of digits, unless
        lambda is bounded.
        """
        inv = invariants(truncated_triple_tower())
        self.assertEqual((inv.mu, inv.lambda_f), (1, 3))
        self.assertFalse(inv.certified)
        self.assertTrue(inv.note)
        self.assertEqual(inv.t_prec, 32)
        self.assertEqual(inv.f.series.signed_coefficients()[:4], [0, 9, 9, -6])
        bounded = invariants(truncated_triple_tower(), lambda_bound=3)
        self.assertTrue(bounded.certified)


class TestGrowth(unittest.TestCase):
    def test_bouquet(self):
        report = verify_growth(bouquet_tower(), 6)
        self.assertEqual([lev.ordp for lev in report.levels],
                         [0] + [3 * n - 1 for n in range(1, 7)])
        self.assertEqual((report.nu, report.n0), (-1, 1))
        self.assertTrue(report.growth_ok)
        self.assertEqual(report.warnings, ())

    def test_unramified_dumbbell(self):
        report = verify_growth(dumbbell_tower(), 4)
        self.assertEqual([lev.kappa for lev in report.levels][:3], [1, 75, 1134225])
        self.assertEqual([lev.ordp for lev in report.levels], [0, 1, 2, 3, 4])
        self.assertEqual((report.nu, report.n0, report.growth_ok), (0, 0, True))

    def test_branched_dumbbell(self):
        report = verify_growth(dumbbell_tower(branched=True), 4)
        self.assertEqual([lev.ordp for lev in report.levels], [0, 1, 3, 5, 7])
        self.assertEqual([lev.vertices for lev in report.levels], [2, 6, 12, 30, 84])
        self.assertEqual(report.levels[4].kappa,
                         3 ** 7 * 5 ** 2 * 19 ** 2 * 3079 ** 2 * 5779 ** 2 * 62650261 ** 2)
        self.assertEqual((report.nu, report.n0, report.growth_ok), (-1, 1, True))

    def test_triple(self):
        """
        mu = 1 shows up as the 3^n term.
        """
        report = verify_growth(triple_tower(), 4)
        self.assertEqual([lev.ordp for lev in report.levels],
                         [1] + [3 ** n + 2 * n - 1 for n in range(1, 5)])
        self.assertEqual(report.levels[0].kappa, 3)
        self.assertEqual(report.levels[1].kappa, 3969)
        self.assertEqual(valuation(report.levels[4].kappa, 3), 88)
        self.assertEqual((report.mu, report.lambda_pic), (1, 2))
        self.assertEqual((report.nu, report.n0, report.growth_ok), (-1, 1, True))

    def test_threads_do_not_matter(self):
        vg = dumbbell_tower(branched=True)
        one = verify_growth(vg, 3, max_threads=1)
        many = verify_growth(vg, 3, max_threads=4)
        self.assertEqual(one.levels, many.levels)
        self.assertEqual((one.nu, one.n0), (many.nu, many.n0))

    def test_too_few_levels(self):
        with self.assertRaises(IwasawaError):
            verify_growth(bouquet_tower(), 1)

    def test_disconnected_level(self):
        with self.assertRaises(DisconnectedLevelError):
            level_records(divisible_tower(), 2)
        with self.assertRaises(DisconnectedLevelError):
            verify_growth(divisible_tower(), 3)

    def test_criterion_warning(self):
        """
        Without cycles the criterion fails, but the levels are connected
        and the report carries a warning.
        """
        report = verify_growth(star_tower(), 3)
        self.assertFalse(report.criterion.unramified_tower_connected)
        self.assertTrue(report.warnings)
        self.assertEqual([lev.kappa for lev in report.levels], [1, 1, 1, 1])
        self.assertTrue(report.growth_ok)

    def test_divisibility(self):
        self.assertTrue(check_divisibility([1, 75, 243675]))
        self.assertFalse(check_divisibility([2, 3]))
        self.assertTrue(check_divisibility([]))


class TestPropertyChecks(unittest.TestCase):
    def test_examples(self):
        for vg in (bouquet_tower(), dumbbell_tower(branched=True), triple_tower()):
            report = verify_growth(vg, 3)
            checks = property_checks(vg, report)
            self.assertEqual(set(checks), {'cover_axioms', 'laplacian_compatibility',
                                           'divisibility', 'factorization',
                                           'f_zero_constant'})
            self.assertTrue(all(checks.values()), checks)

    def test_max_check_level(self):
        vg = bouquet_tower()
        report = verify_growth(vg, 4)
        self.assertTrue(all(property_checks(vg, report, max_check_level=2).values()))
