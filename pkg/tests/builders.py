from fractions import Fraction

from hypercyclic_lab.constructor import DEFAULT_NEGLIGIBLE, assign_placements
from hypercyclic_lab.criterion import compute_thresholds
from hypercyclic_lab.operators import (DifferentiationModel, Precision, ShiftModel, TranslationModel,
                                       build_certificate)
from hypercyclic_lab.spaces import PolyModel, SequenceSpace


def l2():
    return SequenceSpace(kind='lp', p=2)


def build_shift_certificate(targets=5, w=2, space=None, precision=Precision.float):
    return build_certificate(ShiftModel(w=w, space=space or l2()), targets, precision)


def build_hardy_certificate(targets=3, precision=Precision.float):
    return build_certificate(DifferentiationModel(model=PolyModel(kind='h2')), targets, precision)


def build_ck_certificate(targets=3, k=1, a=0, b=1, mesh=1e-3, precision=Precision.float):
    return build_certificate(DifferentiationModel(model=PolyModel(kind='ck', k=k, a=a, b=b, mesh=mesh)),
                             targets, precision)


def build_translation_certificate(targets=3, rate=1, precision=Precision.float):
    return build_certificate(TranslationModel(rate=rate), targets, precision)


def build_placement(cert=None, horizon=200, negligible=DEFAULT_NEGLIGIBLE):
    cert = cert or build_shift_certificate(targets=3)
    return assign_placements(compute_thresholds(cert), horizon, negligible=negligible)


def build_exact_shift_placement(targets=2, horizon=48):
    """Rational arithmetic and no cutoff: every orbit point is summed exactly up to the horizon."""
    cert = build_shift_certificate(targets=targets, precision=Precision.rational)
    return build_placement(cert, horizon=horizon, negligible=None)


def half():
    return Fraction(1, 2)


CONFIG_SHIFT_W2 = """\
operator:
    kind: shift
    w: 2
    space: lp
    p: 2
targets: 3
horizon: 300
radii:
    factor: 1.2
trials: 50
"""


def config_text(extra="", base=CONFIG_SHIFT_W2):
    return base + extra
