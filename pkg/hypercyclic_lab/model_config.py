"""Experiment configs: NestedText on disk, pydantic models in memory.

A config names one operator model with its transforms, how many dense
targets to certify, the horizon and the visit-radius factor, e.g.::

    operator:
        kind: shift
        w: 2
        space: lp
        p: 2
    targets: 5
    horizon: 10000
    radii:
        factor: 1.2

Structural problems surface as one readable CONFIG_VALIDATION error naming
the offending keys; semantic problems are collected and raised together.
"""
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

from nestedtext import nestedtext as nt
from pydantic import BaseModel, Field, ValidationError

from hypercyclic_lab.criterion import DEFAULT_THRESHOLD_CAP
from hypercyclic_lab.constructor import DEFAULT_NEGLIGIBLE
from hypercyclic_lab.lab_error import LabError, ErrorCode, ProblemAccumulator
from hypercyclic_lab.operators import (DifferentiationModel, OperatorCertificate, Precision, ShiftModel,
                                       TranslationModel, build_certificate, transform_inverse, transform_power,
                                       transform_rotation)
from hypercyclic_lab.spaces import PolyModel, Scalar, SequenceSpace

logger = logging.getLogger("model-config")

OUTPUT_DIR_ENV = 'HYPERCYCLIC_LAB_OUT'


class OperatorKind(str, Enum):
    shift = 'shift'
    differentiation = 'differentiation'
    translation = 'translation'


class Mode(str, Enum):
    discrete = 'discrete'
    continuous = 'continuous'


class OperatorSection(BaseModel):
    kind: OperatorKind
    w: Scalar = 2
    space: Literal['lp', 'c0'] = 'lp'
    p: float = 2.0
    model: Literal['h2', 'ck'] = 'h2'
    k: int = 1
    a: Scalar = 0
    b: Scalar = 1
    mesh: float = 1e-4
    rate: Scalar = Field(default=1, alias='lambda')
    twist: Scalar = 1
    power: int = 1
    swap: bool = False

    class Config:
        extra = 'forbid'
        populate_by_name = True

    def build(self):
        if self.kind == OperatorKind.shift:
            return ShiftModel(w=self.w, space=SequenceSpace(kind=self.space, p=self.p))
        if self.kind == OperatorKind.differentiation:
            return DifferentiationModel(model=PolyModel(kind=self.model, k=self.k, a=self.a, b=self.b,
                                                        mesh=self.mesh))
        return TranslationModel(rate=self.rate)


class RadiiSection(BaseModel):
    factor: float = 1.2
    window_fraction: float = Field(default=0.1, alias='window-fraction')

    class Config:
        extra = 'forbid'
        populate_by_name = True


class ContinuousSection(BaseModel):
    t_max: float = Field(default=1000.0, alias='t-max')
    grid: float = 0.1
    epsilon: float = 0.5
    target: int = 1

    class Config:
        extra = 'forbid'
        populate_by_name = True


class OutputSection(BaseModel):
    dir: str = 'out'

    class Config:
        extra = 'forbid'


class ExperimentConfig(BaseModel):
    operator: OperatorSection
    targets: int = 5
    horizon: int = 10000
    radii: RadiiSection = RadiiSection()
    seed: int = 0
    trials: int = 1000
    mode: Mode = Mode.discrete
    precision: Precision = Precision.float
    continuous: ContinuousSection = ContinuousSection()
    output: OutputSection = OutputSection()
    threshold_cap: int = Field(default=DEFAULT_THRESHOLD_CAP, alias='threshold-cap')
    negligible: Optional[float] = DEFAULT_NEGLIGIBLE
    # < 1 tightens every proof bound the run checks
    bound_scale: float = Field(default=1.0, alias='bound-scale')

    class Config:
        extra = 'forbid'
        populate_by_name = True

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output.dir)


KNOWN_OPERATOR_KINDS = [k.value for k in OperatorKind]


def _format_validation_error(e: ValidationError, source: str) -> LabError:
    valid = ", ".join(KNOWN_OPERATOR_KINDS)
    lines = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err['loc'])
        if loc == 'operator.kind' and err['type'] == 'enum':
            lines.append(f"  - {loc}: unknown operator {err.get('input')!r}; expected one of: {valid}")
        elif err['type'] == 'extra_forbidden':
            lines.append(f"  - {loc}: unknown key")
        else:
            lines.append(f"  - {loc or '(top level)'}: {err['msg']}")
    body = "\n".join(dict.fromkeys(lines)) or "  - (validation failed)"
    return LabError(f"Invalid config in {source}:\n{body}", ErrorCode.CONFIG_VALIDATION)


def validate_config_semantics(config: ExperimentConfig, acc: ProblemAccumulator) -> None:
    if config.radii.factor <= 1:
        acc.add("radii.factor", "must be > 1 so the visit radius exceeds the proximity bound "
                                f"(got {config.radii.factor})")
    if not 0 < config.radii.window_fraction <= 1:
        acc.add("radii.window-fraction", f"must lie in (0, 1] (got {config.radii.window_fraction})")
    if config.targets < 1:
        acc.add("targets", f"must be >= 1 (got {config.targets})")
    if config.horizon < 1:
        acc.add("horizon", f"must be >= 1 (got {config.horizon})")
    if config.trials < 0:
        acc.add("trials", f"must be >= 0 (got {config.trials})")
    if config.threshold_cap < 1:
        acc.add("threshold-cap", f"must be >= 1 (got {config.threshold_cap})")
    if config.operator.power < 1:
        acc.add("operator.power", f"must be >= 1 (got {config.operator.power})")
    if abs(abs(config.operator.twist) - 1) > 1e-12:
        acc.add("operator.twist", f"must have modulus 1 (got {config.operator.twist})")
    if config.bound_scale <= 0:
        acc.add("bound-scale", f"must be > 0 (got {config.bound_scale})")
    out_dir = config.output_dir().absolute()
    existing = next((p for p in (out_dir, *out_dir.parents) if p.exists()), None)
    if existing is None or not existing.is_dir() or not os.access(existing, os.W_OK):
        acc.add("output.dir", f"{out_dir} is not writable")
    if config.mode == Mode.continuous:
        if config.operator.kind != OperatorKind.translation:
            acc.add("mode", f"continuous mode needs the translation operator (got {config.operator.kind.value})")
        if config.continuous.t_max > config.horizon:
            acc.add("continuous.t-max", f"{config.continuous.t_max} exceeds horizon {config.horizon}")
        if not 1 <= config.continuous.target <= config.targets:
            acc.add("continuous.target", f"must lie in 1..{config.targets} (got {config.continuous.target})")
        if config.continuous.grid <= 0:
            acc.add("continuous.grid", f"must be > 0 (got {config.continuous.grid})")

    def _build_operator():
        try:
            return config.operator.build()
        except ValidationError as e:
            raise LabError('; '.join(err['msg'] for err in e.errors()),
                           ErrorCode.SEMANTIC_VALIDATION) from e

    acc.capture("operator", _build_operator)


def parse_config_text(text: str, source: str = "config file") -> dict:
    try:
        data = nt.loads(text)
    except nt.NestedTextError as e:
        message = e.get_message() if hasattr(e, "get_message") else str(e)
        line = getattr(e, "lineno", None)
        where = f", line {line + 1}" if isinstance(line, int) else ""
        raise LabError(f"Could not parse {source}{where}: {message}", ErrorCode.CONFIG_SYNTAX) from e
    if not isinstance(data, dict):
        raise LabError(f"Invalid config in {source}: expected a mapping (key: value) at the top level, "
                       f"got a {type(data).__name__}.", ErrorCode.CONFIG_VALIDATION)
    return data


def config_from_data(data: dict, source: str = "config file", acc: ProblemAccumulator = None) -> ExperimentConfig:
    own_acc = acc is None
    acc = acc or ProblemAccumulator()
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise _format_validation_error(e, source) from e
    validate_config_semantics(config, acc)
    if own_acc:
        acc.raise_if_any(source)
    return config


def read_config(text: str, source: str = "config file", acc: ProblemAccumulator = None) -> ExperimentConfig:
    return config_from_data(parse_config_text(text, source), source, acc)


def read_config_file(path) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except OSError as e:
        raise LabError(f"Could not read config {path}: {e}", ErrorCode.IO) from e


def load_config(path) -> ExperimentConfig:
    return read_config(read_config_file(path), source=Path(path).name)


def build_config_certificate(config: ExperimentConfig) -> OperatorCertificate:
    """The certificate a config describes: base operator, then power, twist and swap."""
    section = config.operator
    cert = build_certificate(section.build(), config.targets, config.precision)
    if section.power != 1:
        cert = transform_power(cert, section.power)
    if section.twist != 1:
        cert = transform_rotation(cert, section.twist)
    if section.swap:
        cert = transform_inverse(cert)
    return cert
