# JSON run configuration: schema, validation, and construction of the
# objects a run needs

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import dataclasses
import json
import math
import typing

import numpy as np

from . import mesh as meshes
from . import targets
from . import timegrid
from .femspace import interpolate
from .optimal import ObjectiveData, OptimizerSettings
from .state import Discretization, PhysicsSettings


# Export public API
__all__ = (
    'SCHEMA',
    'ConfigError',
    'ControlConfig',
    'GeometryConfig',
    'InitialConfig',
    'MeshConfig',
    'ObjectiveConfig',
    'BoundsConfig',
    'OutputsConfig',
    'RunConfig',
    'TimeConfig',
    'from_dict',
    'load',
)


class ConfigError(Exception):

    def __init__(self, message, path=None):
        if path is not None:
            message = '{}: {}'.format(path, message)
        super().__init__(message)
        self.path = path


@dataclasses.dataclass(frozen=True)
class GeometryConfig:
    r: float = 1.0
    R: float = 2.0
    L: float = 2.0


@dataclasses.dataclass(frozen=True)
class MeshConfig:
    """Generated mesh size, or a mesh file that replaces it."""
    nx: int = 40
    ny: int = 20
    file: typing.Optional[str] = None

    def __post_init__(self):
        if self.nx < 1 or self.ny < 2 or self.ny % 2:
            raise ValueError('Bad mesh size: nx = {}, ny = {} (need nx >= 1 '
                             'and even ny >= 2)'.format(self.nx, self.ny))


@dataclasses.dataclass(frozen=True)
class TimeConfig:
    T: float = 1.0
    N: int = 100


@dataclasses.dataclass(frozen=True)
class InitialConfig:
    """Initial velocity, an entry of the target catalog taken at t = 0."""
    velocity: str = 'zero'

    def __post_init__(self):
        targets.parse_target(self.velocity)


@dataclasses.dataclass(frozen=True)
class ControlConfig:
    """Constant control levels, or a `time,q1,...` CSV file."""
    values: typing.Tuple[float, ...] = (0.0, 0.0)
    file: typing.Optional[str] = None


@dataclasses.dataclass(frozen=True)
class ObjectiveConfig:
    target: str = 'scaled_w(10)'
    alpha: float = 1e-2
    q_d: typing.Tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        targets.parse_target(self.target)
        if not self.alpha > 0:
            raise ValueError('Bad regularization weight: {!r}'.format(
                self.alpha))


@dataclasses.dataclass(frozen=True)
class BoundsConfig:
    lower: typing.Tuple[float, ...] = (-math.inf, -math.inf)
    upper: typing.Tuple[float, ...] = (math.inf, math.inf)

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError('Bad bounds: {} lower and {} upper values'
                             .format(len(self.lower), len(self.upper)))
        for a, b in zip(self.lower, self.upper):
            if not a < b:
                raise ValueError('Bad bounds: {!r} </ {!r}'.format(a, b))


@dataclasses.dataclass(frozen=True)
class OutputsConfig:
    mesh: str = 'mesh.txt'
    flowrate: str = 'flowrate.csv'
    control: str = 'control.csv'
    iterations: str = 'iterations.csv'
    target_flowrate: str = 'target_flowrate.csv'
    vtk_prefix: str = 'state'
    vtk_every: int = 0

    def __post_init__(self):
        if self.vtk_every < 0:
            raise ValueError('Bad VTK interval: {!r}'.format(self.vtk_every))


# Sections of the configuration document and their types.  Every key has
# a default; see the dataclasses for the meaning of each key.
SCHEMA = {
    'geometry': GeometryConfig,
    'mesh': MeshConfig,
    'time': TimeConfig,
    'physics': PhysicsSettings,
    'initial': InitialConfig,
    'control': ControlConfig,
    'objective': ObjectiveConfig,
    'bounds': BoundsConfig,
    'optimizer': OptimizerSettings,
    'outputs': OutputsConfig,
}

# Keys whose JSON null means an infinite bound
_NULL_MEANS = {('bounds', 'lower'): -math.inf,
               ('bounds', 'upper'): math.inf}


def _number(value, path, kind, null=None):
    if value is None and null is not None:
        return null
    if isinstance(value, str) and null is not None:
        text = value.strip().lower()
        if text in ('inf', '+inf', 'infinity'):
            return math.inf
        if text in ('-inf', '-infinity'):
            return -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError('Bad number: {!r}'.format(value), path)
    if kind is int:
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError('Bad integer: {!r}'.format(value), path)
            value = int(value)
        return value
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and null is None):
        raise ConfigError('Bad number: {!r}'.format(value), path)
    return value


def _convert(value, field, path, null):
    kind = field.type
    if kind in (float, int):
        return _number(value, path, kind, null)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError('Bad string: {!r}'.format(value), path)
        return value
    if kind == typing.Optional[str]:
        if value is not None and not isinstance(value, str):
            raise ConfigError('Bad path: {!r}'.format(value), path)
        return value
    # Tuples of floats
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError('Bad list of numbers: {!r}'.format(value), path)
    return tuple(_number(v, '{}[{}]'.format(path, i), float, null)
                 for i, v in enumerate(value))


def _section(name, cls, values):
    if not isinstance(values, dict):
        raise ConfigError('Bad section (expected an object): {!r}'.format(
            values), name)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(fields))
    if unknown:
        raise ConfigError('Unknown key (expected one of {})'.format(
            ', '.join(fields)), '{}.{}'.format(name, unknown[0]))
    kwargs = {}
    for key, value in values.items():
        path = '{}.{}'.format(name, key)
        kwargs[key] = _convert(value, fields[key], path,
                               _NULL_MEANS.get((name, key)))
    try:
        return cls(**kwargs)
    except ValueError as error:
        raise ConfigError(str(error), name) from None


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A validated run configuration, one attribute per `SCHEMA` section."""
    geometry: GeometryConfig = GeometryConfig()
    mesh: MeshConfig = MeshConfig()
    time: TimeConfig = TimeConfig()
    physics: PhysicsSettings = PhysicsSettings()
    initial: InitialConfig = InitialConfig()
    control: ControlConfig = ControlConfig()
    objective: ObjectiveConfig = ObjectiveConfig()
    bounds: BoundsConfig = BoundsConfig()
    optimizer: OptimizerSettings = OptimizerSettings()
    outputs: OutputsConfig = OutputsConfig()

    def build_geometry(self):
        g = self.geometry
        try:
            return meshes.ChannelGeometry(g.r, g.R, g.L)
        except ValueError as error:
            raise ConfigError(str(error), 'geometry') from None

    def build_mesh(self):
        if self.mesh.file is not None:
            return meshes.read_mesh(self.mesh.file)
        return meshes.generate_channel_mesh(
            self.build_geometry(), self.mesh.nx, self.mesh.ny)

    def build_grid(self):
        try:
            return timegrid.TimeGrid(self.time.T, self.time.N)
        except ValueError as error:
            raise ConfigError(str(error), 'time') from None

    def build_discretization(self):
        disc = Discretization(self.build_mesh())
        n_seg = disc.n_segments
        for path, values in (('control.values', self.control.values),
                             ('objective.q_d', self.objective.q_d),
                             ('bounds.lower', self.bounds.lower),
                             ('bounds.upper', self.bounds.upper)):
            if len(values) != n_seg:
                raise ConfigError(
                    'Expected {} values (one per open segment), got {}'
                    .format(n_seg, len(values)), path)
        return disc

    def initial_velocity(self, disc):
        try:
            target = targets.make_target(self.initial.velocity,
                                         self.build_geometry())
        except ValueError as error:
            raise ConfigError(str(error), 'initial.velocity') from None
        return disc.enforce_no_slip(
            interpolate(lambda x1, x2: target(0.0, x1, x2), disc.layout))

    def initial_control(self, grid, values=None):
        """
        The control from `control.values`, or from an (L, N) array read
        from `control.file`, with the configured bounds.
        """
        if values is None:
            values = np.repeat(np.array(self.control.values)[:, None],
                               grid.N, axis=1)
        return timegrid.ControlVector(values, self.bounds.lower,
                                      self.bounds.upper)

    def target(self):
        try:
            return targets.make_target(self.objective.target,
                                       self.build_geometry())
        except ValueError as error:
            raise ConfigError(str(error), 'objective.target') from None

    def objective_data(self, grid):
        q_d = np.repeat(np.array(self.objective.q_d)[:, None], grid.N,
                        axis=1)
        return ObjectiveData(self.target(), self.objective.alpha, q_d)

    def with_alpha(self, alpha):
        return dataclasses.replace(self, objective=dataclasses.replace(
            self.objective, alpha=alpha))

    def to_dict(self):
        """JSON-compatible document that `from_dict` reads back."""
        def encode(value):
            if isinstance(value, tuple):
                return [encode(v) for v in value]
            if isinstance(value, float) and math.isinf(value):
                return None
            return value
        return {name: {key: encode(value) for key, value in
                       dataclasses.asdict(getattr(self, name)).items()}
                for name in SCHEMA}


def from_dict(document):
    if not isinstance(document, dict):
        raise ConfigError('Bad configuration (expected an object)')
    unknown = sorted(set(document) - set(SCHEMA))
    if unknown:
        raise ConfigError('Unknown section (expected one of {})'.format(
            ', '.join(SCHEMA)), unknown[0])
    sections = {name: _section(name, cls, document[name])
                for name, cls in SCHEMA.items() if name in document}
    return RunConfig(**sections)


def load(path):
    """Reads and validates a JSON configuration file."""
    try:
        with open(path, 'rt') as file:
            document = json.load(file)
    except OSError as error:
        raise ConfigError('Cannot read configuration: {}'.format(
            error.strerror), path) from None
    except json.JSONDecodeError as error:
        raise ConfigError('Bad JSON: {} (line {})'.format(
            error.msg, error.lineno), path) from None
    return from_dict(document)
