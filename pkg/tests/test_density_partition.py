import csv
import tempfile
import unittest
from pathlib import Path

from hypothesis import given, settings, strategies as st

from hypercyclic_lab.density_partition import (PairKey, analytic_density, average_block_length, build_schedule,
                                               density_floor, export_members_csv, locate, members,
                                               running_density_floor, summability_weight)
from hypercyclic_lab.lab_error import ErrorCode
from tests.custom_assertions import CustomAssertions

FIVE_PAIRS = [(1, 2), (2, 3), (3, 3), (4, 4), (5, 4)]


def _check_gaps(test, sched, horizon):
    tagged = sched.tagged_members(horizon)
    for (n, a), (m, b) in zip(tagged, tagged[1:]):
        test.assertGreaterEqual(m - n, a.nu + b.nu, f"{a.label()}∋{n} and {b.label()}∋{m} too close")


class TestSchedule(unittest.TestCase, CustomAssertions):

    def test_single_pair_members(self):
        sched = build_schedule([(1, 2)])
        self.assertEqual([3, 7, 11, 15], members(sched, (1, 2), 16))

    def test_two_pair_members(self):
        sched = build_schedule([(1, 2), (1, 1)])
        self.assertEqual([2, 4, 14, 16, 19, 21], members(sched, (1, 1), 21))
        self.assertEqual([7, 11], members(sched, (1, 2), 21))

    def test_ranked_by_l_plus_nu(self):
        sched = build_schedule([(2, 3), (1, 2), (1, 1)])
        self.assertEqual([PairKey(l=1, nu=1), PairKey(l=1, nu=2), PairKey(l=2, nu=3)], sched.pairs)

    def test_horizon_zero_is_empty(self):
        sched = build_schedule([(1, 2)])
        self.assertEqual([], members(sched, (1, 2), 0))

    def test_locate(self):
        sched = build_schedule([(1, 1), (1, 2)])
        self.assertEqual(PairKey(l=1, nu=2), locate(sched, 7))
        self.assertIsNone(locate(sched, 5))
        self.assertIsNone(locate(sched, 0))
        # filler block at position 17
        self.assertIsNone(locate(sched, 17))

    def test_next_member(self):
        sched = build_schedule([(1, 1), (1, 2)])
        self.assertEqual(14, sched.next_member((1, 1), 4))
        self.assertEqual(7, sched.next_member((1, 2), 0))
        self.assertEqual(24, sched.next_member((1, 2), 11))

    def test_unknown_key(self):
        sched = build_schedule([(1, 2)])
        self.assert_lab_error(lambda: members(sched, (2, 2), 10), ErrorCode.UNKNOWN_KEY, "A(2,2)", "A(1,2)")

    def test_duplicate_pairs_rejected(self):
        self.assert_lab_error(lambda: build_schedule([(1, 2), (1, 2)]), ErrorCode.SEMANTIC_VALIDATION,
                              "Duplicate", "A(1,2)")

    def test_empty_pairs_rejected(self):
        self.assert_lab_error(lambda: build_schedule([]), ErrorCode.SEMANTIC_VALIDATION)

    def test_pair_key_validation(self):
        with self.assertRaises(ValueError):
            PairKey(l=0, nu=1)


class TestScheduleInvariants(unittest.TestCase):
    HORIZON = 10 ** 6

    @classmethod
    def setUpClass(cls):
        cls.sched = build_schedule(FIVE_PAIRS)
        cls.sched.materialize(cls.HORIZON)

    def test_disjoint(self):
        seen = set()
        for key in self.sched.pairs:
            found = set(self.sched.members(key, self.HORIZON))
            self.assertFalse(seen & found)
            seen |= found

    def test_members_at_least_nu(self):
        for key in self.sched.pairs:
            self.assertGreaterEqual(self.sched.members(key, self.HORIZON)[0], key.nu)

    def test_gaps(self):
        _check_gaps(self, self.sched, self.HORIZON)

    def test_density_floor_close_to_analytic(self):
        for key in self.sched.pairs:
            floor = density_floor(self.sched, key, 10 ** 4, self.HORIZON)
            self.assertGreaterEqual(floor, 0.5 * analytic_density(self.sched, key), key.label())

    def test_locate_agrees_with_members(self):
        for key in self.sched.pairs:
            for n in self.sched.members(key, 5000):
                self.assertEqual(key, self.sched.locate(n))


class TestDensity(unittest.TestCase, CustomAssertions):

    def test_single_pair_floor(self):
        sched = build_schedule([(1, 2)])
        self.assertAlmostEqual(0.25, density_floor(sched, (1, 2), 100, 10 ** 5), delta=0.01)

    def test_two_pair_floor(self):
        sched = build_schedule([(1, 1), (1, 2)])
        self.assertAlmostEqual(4.25, average_block_length(sched))
        self.assertAlmostEqual(0.235, density_floor(sched, (1, 1), 10 ** 3, 10 ** 5), delta=0.01)
        self.assertAlmostEqual(1 / 4.25, analytic_density(sched, (1, 1)))

    def test_floor_positive_after_ten_members(self):
        sched = build_schedule(FIVE_PAIRS)
        for key in sched.pairs:
            found = sched.members(key, 10 ** 6)
            self.assertGreater(density_floor(sched, key, found[0], found[9]), 0)

    def test_empty_window_rejected(self):
        sched = build_schedule([(1, 2)])
        self.assert_lab_error(lambda: density_floor(sched, (1, 2), 50, 50), ErrorCode.DOMAIN)

    def test_running_floor(self):
        self.assertAlmostEqual(1 / 3, running_density_floor([2, 4, 6, 8], 2, 8))

    def test_summability_weight(self):
        sched = build_schedule([(1, 1), (1, 2)])
        self.assertAlmostEqual(1 / 4 + 2 / 8, summability_weight(sched))


class TestExport(unittest.TestCase):

    def test_members_csv(self):
        sched = build_schedule([(1, 1), (1, 2)])
        with tempfile.TemporaryDirectory() as tmp:
            path = export_members_csv(sched, 21, Path(tmp) / 'sub' / 'members.csv')
            with path.open() as f:
                rows = list(csv.reader(f))
        self.assertEqual(['n', 'l', 'nu'], rows[0])
        self.assertEqual([2, 4, 7, 11, 14, 16, 19, 21], [int(r[0]) for r in rows[1:]])
        self.assertEqual(['7', '1', '2'], rows[3])


pair_lists = st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6)), min_size=1, max_size=5, unique=True)


class TestScheduleProperties(unittest.TestCase):

    @given(pair_lists)
    @settings(max_examples=60, deadline=None)
    def test_any_schedule_is_disjoint_and_spaced(self, pairs):
        sched = build_schedule(pairs)
        _check_gaps(self, sched, 3000)
        for key in sched.pairs:
            found = sched.members(key, 3000)
            self.assertTrue(found, key.label())
            self.assertGreaterEqual(found[0], key.nu)
            for n, m in zip(found, found[1:]):
                self.assertGreaterEqual(m - n, 2 * key.nu)

    @given(pair_lists, st.integers(1, 400))
    @settings(max_examples=60, deadline=None)
    def test_next_member_matches_member_list(self, pairs, after):
        sched = build_schedule(pairs)
        key = sched.pairs[-1]
        expected = next(n for n in sched.members(key, 100_000) if n > after)
        self.assertEqual(expected, sched.next_member(key, after))
