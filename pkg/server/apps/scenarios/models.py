# apps/scenarios/models.py
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from utils.constants import CONFIG_SCHEMA_VERSION, Backend, Provenance


def to_jsonable(value):
    """numpy scalars/arrays, complex numbers and paths as plain JSON values; complex as [re, im]."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return value.as_posix()
    return value


@dataclass(frozen=True)
class ScenarioConfig:
    """
    One validated scenario file. Named scenarios carry their geometry in
    ``parameters``; ``custom`` carries explicit ``atoms``.
    """
    scenario: str
    lattice: dict
    parameters: dict = field(default_factory=dict)
    atoms: tuple = ()
    backend: str = Backend.FINITE_SPECTRAL
    sweep: Optional[dict] = None
    outputs: tuple = ()
    schema: int = CONFIG_SCHEMA_VERSION

    def to_dict(self) -> dict:
        data = {
            'schema': self.schema,
            'scenario': self.scenario,
            'lattice': to_jsonable(self.lattice),
            'parameters': to_jsonable(self.parameters),
            'backend': self.backend,
            'outputs': list(self.outputs),
        }
        if self.atoms:
            data['atoms'] = to_jsonable(list(self.atoms))
        if self.sweep is not None:
            data['sweep'] = to_jsonable(self.sweep)
        return data

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha1(canonical.encode('utf-8')).hexdigest()[:10]

    @property
    def run_name(self) -> str:
        return f'{self.scenario}_{self.fingerprint}'

    def at_point(self, parameter, value) -> 'ScenarioConfig':
        """The single sweep point ``parameter = value``, without the sweep."""
        return replace(self, parameters={**self.parameters, parameter: value}, sweep=None)


@dataclass(frozen=True)
class Expectation:
    expected: Any
    tolerance: float = 0.0


@dataclass(frozen=True)
class Headline:
    """A reported number; ``expected`` is set only for published values."""
    name: str
    value: Any
    provenance: str = Provenance.COMPUTED
    expected: Any = None
    tolerance: Optional[float] = None
    passed: Optional[bool] = None

    @classmethod
    def computed(cls, name, value) -> 'Headline':
        return cls(name=name, value=value)

    @classmethod
    def checked(cls, name, value, expectation: Expectation) -> 'Headline':
        return cls(
            name=name,
            value=value,
            provenance=Provenance.PUBLISHED,
            expected=expectation.expected,
            tolerance=expectation.tolerance,
            passed=matches(value, expectation),
        )

    @property
    def is_scalar(self):
        return isinstance(self.value, (bool, int, float, np.bool_, np.integer, np.floating))

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


def matches(value, expectation: Expectation) -> bool:
    expected = expectation.expected
    if isinstance(expected, (bool, np.bool_)) or isinstance(value, (bool, np.bool_)):
        return bool(value) == bool(expected)
    if isinstance(expected, (list, tuple)) and (not expected or isinstance(expected[0], (list, tuple))):
        return to_jsonable(value) == to_jsonable(expected)
    value = np.asarray(value, dtype=complex)
    expected = np.asarray(expected, dtype=complex)
    if value.shape != expected.shape:
        return False
    return bool(np.all(np.abs(value - expected) <= expectation.tolerance))


@dataclass
class RunReport:
    config: ScenarioConfig
    directory: Optional[Path] = None
    artifacts: dict = field(default_factory=dict)
    headlines: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    points: list = field(default_factory=list)
    flags: tuple = ()

    @property
    def passed(self) -> bool:
        checks = [h.passed for h in self.headlines if h.passed is not None]
        checks += [point['passed'] for point in self.points]
        return all(checks)

    def headline(self, name) -> Headline:
        for headline in self.headlines:
            if headline.name == name:
                return headline
        raise KeyError(name)

    def failures(self) -> list:
        return [h for h in self.headlines if h.passed is False]

    def to_dict(self) -> dict:
        return {
            'schema': CONFIG_SCHEMA_VERSION,
            'run': self.config.run_name,
            'config': self.config.to_dict(),
            'artifacts': to_jsonable(self.artifacts),
            'headlines': [headline.to_dict() for headline in self.headlines],
            'passed': self.passed,
            'results': to_jsonable(self.results),
            'points': to_jsonable(self.points),
            'flags': list(self.flags),
        }
