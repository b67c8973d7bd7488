"""Config loading: NestedText syntax, structural pydantic errors with the
offending key, and semantic problems reported together."""
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from hypercyclic_lab.lab_error import ErrorCode, ProblemAccumulator
from hypercyclic_lab.model_config import (OUTPUT_DIR_ENV, Mode, OperatorKind, build_config_certificate,
                                          load_config, read_config)
from hypercyclic_lab.operators import Precision
from tests.builders import CONFIG_SHIFT_W2, config_text
from tests.custom_assertions import CustomAssertions

CONFIGS = Path(__file__).parent.parent / 'configs'


class TestBundledConfigs(unittest.TestCase):

    def test_every_bundled_config_loads(self):
        files = sorted(CONFIGS.glob('*.nt'))
        self.assertEqual(7, len(files))
        for path in files:
            config = load_config(path)
            cert = build_config_certificate(config)
            self.assertEqual(config.targets, len(cert.targets), path.name)

    def test_rotated_square(self):
        cert = build_config_certificate(load_config(CONFIGS / 'shift_w2_rotated.nt'))
        self.assertEqual(2, cert.power)
        self.assertEqual(1j, cert.scalar_twist)

    def test_translation_is_continuous(self):
        config = load_config(CONFIGS / 'translation.nt')
        self.assertEqual(Mode.continuous, config.mode)
        self.assertEqual(OperatorKind.translation, config.operator.kind)
        self.assertEqual(1000.0, config.continuous.t_max)
        self.assertEqual(1e-12, config.negligible)

    def test_complex_weight(self):
        config = load_config(CONFIGS / 'shift_c0_complex.nt')
        self.assertEqual(2j, config.operator.w)
        self.assertEqual('c0', config.operator.space)


class TestReadConfig(unittest.TestCase, CustomAssertions):

    def test_defaults(self):
        config = read_config(CONFIG_SHIFT_W2)
        self.assertEqual(3, config.targets)
        self.assertEqual(300, config.horizon)
        self.assertEqual(0.1, config.radii.window_fraction)
        self.assertEqual(Precision.float, config.precision)
        self.assertEqual(1.0, config.bound_scale)

    def test_hyphenated_keys(self):
        config = read_config(config_text("threshold-cap: 50\nbound-scale: 0.5\nprecision: rational\n"))
        self.assertEqual(50, config.threshold_cap)
        self.assertEqual(0.5, config.bound_scale)
        cert = build_config_certificate(config)
        self.assertEqual(Precision.rational, cert.precision)

    def test_swap_and_power(self):
        text = CONFIG_SHIFT_W2.replace("    p: 2\n", "    p: 2\n    power: 3\n    swap: true\n")
        cert = build_config_certificate(read_config(text))
        self.assertEqual(3, cert.power)
        self.assertTrue(cert.swapped)

    def test_syntax_error(self):
        self.assert_lab_error(lambda: read_config("operator:\n    kind: shift\n   w: 2\n", "bad.nt"),
                              ErrorCode.CONFIG_SYNTAX, "bad.nt")

    def test_top_level_list(self):
        self.assert_lab_error(lambda: read_config("- a\n- b\n"), ErrorCode.CONFIG_VALIDATION, "mapping")

    def test_unknown_key(self):
        self.assert_lab_error(lambda: read_config(config_text("colour: red\n")),
                              ErrorCode.CONFIG_VALIDATION, "colour", "unknown key")

    def test_unknown_operator(self):
        e = self.assert_lab_error(lambda: read_config(CONFIG_SHIFT_W2.replace("kind: shift", "kind: banana")),
                                  ErrorCode.CONFIG_VALIDATION, "banana", "shift", "translation")
        self.assertNotIn("input_value", str(e))

    def test_semantic_problems_reported_together(self):
        text = CONFIG_SHIFT_W2.replace("factor: 1.2", "factor: 1").replace("targets: 3", "targets: 0")
        self.assert_lab_error(lambda: read_config(text), ErrorCode.SEMANTIC_VALIDATION,
                              "2 config problem(s) in config file", "radii.factor: must be > 1",
                              "targets: must be >= 1")

    def test_operator_problems_are_captured(self):
        acc = ProblemAccumulator()
        read_config(CONFIG_SHIFT_W2.replace("w: 2", "w: 1/2"), acc=acc)
        self.assertEqual(1, len(acc.problems))
        self.assert_string_in("operator:", acc.problems[0])
        self.assertEqual(["operator"], acc.keys)

    def test_continuous_needs_translation(self):
        acc = ProblemAccumulator()
        read_config(config_text("mode: continuous\n"), acc=acc)
        self.assertTrue(any("needs the translation operator" in p for p in acc.problems))
        self.assertTrue(any("t-max" in p for p in acc.problems))
        self.assertLessEqual({"mode", "continuous.t-max"}, set(acc.keys))

    def test_twist_must_be_unimodular(self):
        text = CONFIG_SHIFT_W2.replace("    p: 2\n", "    p: 2\n    twist: 2\n")
        self.assert_lab_error(lambda: read_config(text), ErrorCode.SEMANTIC_VALIDATION, "modulus 1")

    def test_missing_file(self):
        self.assert_lab_error(lambda: load_config(CONFIGS / 'missing.nt'), ErrorCode.IO, "missing.nt")


class TestOutputDir(unittest.TestCase, CustomAssertions):

    def test_env_overrides_config(self):
        config = read_config(config_text("output:\n    dir: here\n"))
        with mock.patch.dict(os.environ, {OUTPUT_DIR_ENV: '/tmp/elsewhere'}):
            self.assertEqual(Path('/tmp/elsewhere'), config.output_dir())
        with mock.patch.dict(os.environ, {}):
            os.environ.pop(OUTPUT_DIR_ENV, None)
            self.assertEqual(Path('here'), config.output_dir())

    def test_output_dir_must_be_writable(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = Path(tmp) / 'file'
            blocker.write_text('')
            text = config_text(f"output:\n    dir: {blocker / 'sub'}\n")
            self.assert_lab_error(lambda: read_config(text), ErrorCode.SEMANTIC_VALIDATION, "not writable")
