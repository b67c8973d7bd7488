import math
import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from hypercyclic_lab.criterion import (Direction, TailCertificate, brute_force_tail, compute_thresholds,
                                       identity_residual, series_tail, tail_norm, unconditional_probe)
from hypercyclic_lab.lab_error import ErrorCode
from hypercyclic_lab.operators import Precision, transform_inverse, transform_power, transform_rotation
from hypercyclic_lab.spaces import SequenceSpace, SparseVector, ck_norm_interval
from tests.builders import (build_ck_certificate, build_hardy_certificate, build_shift_certificate,
                            build_translation_certificate, l2)
from tests.custom_assertions import CustomAssertions


def e1():
    return SparseVector.basis(1, l2(), 1.0)


class TestTailNorm(unittest.TestCase, CustomAssertions):

    def setUp(self):
        self.cert = build_shift_certificate(targets=5)

    def test_shift_inverse_tails(self):
        self.assertAlmostEqual(0.5156, tail_norm(self.cert, e1(), 1, Direction.inverse), places=4)
        self.assertAlmostEqual(0.126, tail_norm(self.cert, e1(), 2, Direction.inverse), places=3)

    def test_forward_tail_is_finite_sum(self):
        e3 = SparseVector.basis(3, l2(), 1.0)
        # A e3 = 4 e2, A^2 e3 = 8 e1, A^3 e3 = 0
        self.assertEqual(12.0, tail_norm(self.cert, e3, 1, Direction.forward))
        self.assertEqual(8.0, tail_norm(self.cert, e3, 2, Direction.forward))
        self.assertEqual(0.0, tail_norm(self.cert, e3, 3, Direction.forward))

    def test_zero_vector(self):
        self.assertEqual(0.0, tail_norm(self.cert, SparseVector((), l2()), 1, Direction.inverse))

    def test_direction_by_name(self):
        self.assertEqual(tail_norm(self.cert, e1(), 2, 'inverse'), tail_norm(self.cert, e1(), 2, Direction.inverse))
        self.assert_lab_error(lambda: tail_norm(self.cert, e1(), 2, 'sideways'), ErrorCode.DOMAIN, "sideways")

    def test_c0_tail_is_first_term(self):
        space = SequenceSpace(kind='c0')
        cert = build_shift_certificate(targets=1, space=space)
        self.assertAlmostEqual(2.0 ** -3, tail_norm(cert, SparseVector.basis(1, space, 1.0), 2, Direction.inverse))

    def test_translation_geometric_tail(self):
        cert = build_translation_certificate(targets=1)
        tent = cert.target(1)
        self.assert_close(math.exp(-2) / (1 - math.exp(-1)), tail_norm(cert, tent, 2, Direction.inverse))
        self.assertEqual(0.0, tail_norm(cert, tent, 2, Direction.forward))

    def test_swapped_certificate_swaps_the_sides(self):
        swapped = transform_inverse(self.cert)
        self.assertEqual(tail_norm(self.cert, e1(), 3, Direction.inverse),
                         tail_norm(swapped, e1(), 3, Direction.forward))

    def test_series_tail_geometric(self):
        self.assertAlmostEqual(2.0, series_tail(lambda n: 2.0 ** -n, 0))
        self.assertEqual(0.0, series_tail(lambda n: 0.0, 5))


class TestBruteForce(unittest.TestCase):

    def test_exact_partial_sums_stay_under_the_bound(self):
        cert = build_shift_certificate(targets=1, precision=Precision.rational)
        y = cert.target(1)
        _, first = brute_force_tail(cert, y, 1, 12)
        self.assertGreater(first, Fraction(1, 2))
        self.assertAlmostEqual(0.5156, float(first), places=4)
        vector, size = brute_force_tail(cert, y, 2, 12)
        self.assertEqual(Fraction(1, 8), vector.get(3))
        self.assertLessEqual(size, tail_norm(cert, y, 2, Direction.inverse))
        self.assertAlmostEqual(0.126, size, places=3)

    @given(st.integers(1, 6), st.integers(1, 12), st.sampled_from([1, 2]))
    @settings(max_examples=40, deadline=None)
    def test_partial_sums_below_majorant(self, N, count, power):
        cert = transform_power(build_shift_certificate(targets=4, w=3), power)
        for y in cert.targets:
            _, size = brute_force_tail(cert, y, N, count)
            self.assertLessEqual(float(size), tail_norm(cert, y, N, Direction.inverse) * (1 + 1e-12))

    def test_hardy_partial_sums_below_majorant(self):
        cert = build_hardy_certificate(targets=3)
        for y in cert.targets:
            for N in (1, 2, 4):
                _, size = brute_force_tail(cert, y, N, 20)
                self.assertLessEqual(float(size), tail_norm(cert, y, N, Direction.inverse) * (1 + 1e-12))

    def test_ck_partial_sums_below_majorant(self):
        cert = build_ck_certificate(targets=3)
        for y in cert.targets:
            for N in (1, 3):
                vector, _ = brute_force_tail(cert, y, N, 15)
                # the sampled lower end of the norm enclosure
                bound = tail_norm(cert, y, N, Direction.inverse)
                self.assertLessEqual(ck_norm_interval(vector)[0], bound * (1 + 1e-9))


class TestThresholds(unittest.TestCase, CustomAssertions):

    def test_shift_w2(self):
        tc = compute_thresholds(build_shift_certificate(targets=5))
        self.assertEqual({1: 2, 2: 3, 3: 3, 4: 4, 5: 4}, tc.thresholds())
        self.assertEqual([(1, 2), (2, 3), (3, 3), (4, 4), (5, 4)], tc.pairs())

    def test_records_respect_bounds(self):
        tc = compute_thresholds(build_shift_certificate(targets=5))
        for record in tc.records:
            self.assertLessEqual(record.forward_tail_bound, record.pair_bound)
            self.assertLessEqual(record.inverse_tail_bound, record.pair_bound)
            self.assertLessEqual(record.target_tail_bound, record.target_bound)
            self.assertEqual(0.0, record.identity_residual)

    def test_translation(self):
        tc = compute_thresholds(build_translation_certificate(targets=3))
        self.assertEqual({1: 2, 2: 3, 3: 4}, tc.thresholds())

    def test_hardy(self):
        tc = compute_thresholds(build_hardy_certificate(targets=3))
        self.assertEqual(5, tc.thresholds()[3])

    def test_thresholds_never_decrease_with_more_targets(self):
        few = compute_thresholds(build_shift_certificate(targets=3)).thresholds()
        more = compute_thresholds(build_shift_certificate(targets=5)).thresholds()
        for l, n in few.items():
            self.assertEqual(n, more[l])

    def test_rotation_keeps_thresholds(self):
        cert = build_shift_certificate(targets=4)
        plain = compute_thresholds(cert).thresholds()
        self.assertEqual(plain, compute_thresholds(transform_rotation(cert, 1j)).thresholds())

    def test_cap_reached(self):
        self.assert_lab_error(lambda: compute_thresholds(build_shift_certificate(targets=3), cap=2),
                              ErrorCode.NOT_CERTIFIABLE, "N <= 2", "target 2")

    def test_swapped_shift_fails_round_trip(self):
        # B A e1 = 0, so the round trip never returns to the target
        self.assert_lab_error(lambda: compute_thresholds(transform_inverse(build_shift_certificate(targets=1)),
                                                         cap=20),
                              ErrorCode.NOT_CERTIFIABLE)

    def test_identity_residual(self):
        cert = build_shift_certificate(targets=2)
        self.assertEqual(0.0, identity_residual(cert, cert.target(2), 7))

    def test_json_round_trip(self):
        tc = compute_thresholds(build_translation_certificate(targets=2))
        again = TailCertificate.model_validate_json(tc.model_dump_json())
        self.assertEqual(tc.thresholds(), again.thresholds())
        self.assertEqual(tc.target(2), again.target(2))


class TestUnconditionalProbe(unittest.TestCase):

    def setUp(self):
        self.cert = build_shift_certificate(targets=3)

    def test_probe_below_tail_bound(self):
        tc = compute_thresholds(self.cert)
        for record in tc.records:
            probe = unconditional_probe(self.cert, tc.target(record.l), record.threshold, trials=200)
            self.assertLessEqual(probe, record.target_tail_bound)

    def test_probe_shrinks_with_n(self):
        y = self.cert.target(3)
        probes = [unconditional_probe(self.cert, y, N, trials=100, seed=7) for N in range(1, 6)]
        self.assertEqual(sorted(probes, reverse=True), probes)

    def test_probe_is_deterministic(self):
        y = self.cert.target(1)
        self.assertEqual(unconditional_probe(self.cert, y, 1, trials=50, seed=3),
                         unconditional_probe(self.cert, y, 1, trials=50, seed=3))

    def test_translation_probe(self):
        cert = build_translation_certificate(targets=1)
        probe = unconditional_probe(cert, cert.target(1), 2, trials=100)
        self.assertLessEqual(probe, tail_norm(cert, cert.target(1), 2, Direction.inverse))
