# apps/scenarios/serializers.py
from rest_framework import serializers

from apps.bath.serializers import LatticeSerializer, build_bath
from apps.emitters.serializers import AtomSerializer, build_atom
from apps.scenarios import catalog
from apps.scenarios.models import ScenarioConfig, to_jsonable
from utils.constants import CONFIG_SCHEMA_VERSION, Backend, Lattices, Outputs, Scenarios
from utils.exceptions import ConfigError


class SweepSerializer(serializers.Serializer):
    """One scenario parameter and the values it takes, one run per value."""
    parameter = serializers.CharField()
    values = serializers.ListField(child=serializers.JSONField(), min_length=1)


class ScenarioConfigSerializer(serializers.Serializer):
    """
    A scenario file. Named scenarios describe their atoms through
    ``parameters``; ``custom`` lists them explicitly.
    """
    schema = serializers.IntegerField(default=CONFIG_SCHEMA_VERSION)
    scenario = serializers.ChoiceField(choices=Scenarios.CHOICES)
    lattice = LatticeSerializer()
    parameters = serializers.DictField(default=dict)
    atoms = AtomSerializer(many=True, required=False)
    backend = serializers.ChoiceField(choices=Backend.CHOICES, default=Backend.FINITE_SPECTRAL)
    sweep = SweepSerializer(required=False, allow_null=True)
    outputs = serializers.ListField(child=serializers.ChoiceField(choices=Outputs.CHOICES), allow_empty=False)

    def validate_schema(self, value):
        if value != CONFIG_SCHEMA_VERSION:
            raise serializers.ValidationError(
                f'Unsupported schema version {value}; this build reads version {CONFIG_SCHEMA_VERSION}.'
            )
        return value

    def validate_outputs(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError('Outputs are listed more than once.')
        return value

    def _check_custom(self, attrs):
        if not attrs.get('atoms'):
            raise serializers.ValidationError({'atoms': 'A custom scenario lists its atoms.'})
        bath = build_bath(attrs['lattice'])
        for atom in attrs['atoms']:
            build_atom(atom, bath)

    def _check_sweep(self, attrs):
        sweep = attrs.get('sweep')
        if not sweep:
            return
        allowed = catalog.PARAMETERS[attrs['scenario']]
        if sweep['parameter'] not in allowed:
            raise serializers.ValidationError(
                {'sweep': f"Cannot sweep '{sweep['parameter']}'; choose one of {', '.join(allowed)}."}
            )
        if attrs['scenario'] == Scenarios.CUSTOM:
            return
        for value in sweep['values']:
            point = {**attrs['parameters'], sweep['parameter']: value}
            errors = catalog.geometry_errors(attrs['scenario'], point, attrs['lattice'])
            if errors:
                raise serializers.ValidationError(
                    {'sweep': f"{sweep['parameter']} = {value}: {' '.join(errors)}"}
                )

    def validate(self, attrs):
        scenario = attrs['scenario']
        if attrs['backend'] == Backend.ANALYTIC_CHAIN and attrs['lattice']['kind'] != Lattices.CHAIN:
            raise serializers.ValidationError({'backend': 'The analytic backend applies to the uniform chain only.'})

        if scenario == Scenarios.CUSTOM:
            self._check_custom(attrs)
        else:
            if attrs.get('atoms'):
                raise serializers.ValidationError(
                    {'atoms': f"Scenario '{scenario}' places its own atoms; use parameters instead."}
                )
            errors = catalog.geometry_errors(scenario, attrs['parameters'], attrs['lattice'])
            if errors:
                raise serializers.ValidationError({'parameters': errors})
        self._check_sweep(attrs)
        return attrs


def _flatten(errors, prefix=''):
    if isinstance(errors, dict):
        messages = []
        for key, value in errors.items():
            name = key if key != 'non_field_errors' else ''
            messages += _flatten(value, f'{prefix}.{name}' if prefix and name else (name or prefix))
        return messages
    if isinstance(errors, list):
        messages = []
        for item in errors:
            messages += _flatten(item, prefix)
        return messages
    return [f'{prefix}: {errors}' if prefix else str(errors)]


def with_defaults(data: dict) -> dict:
    """Fill the sections a named-scenario file leaves out from the scenario's defaults."""
    scenario = data.get('scenario')
    if scenario not in catalog.load_defaults():
        return dict(data)
    defaults = catalog.scenario_defaults(scenario)
    merged = dict(data)
    merged['lattice'] = {**defaults['lattice'], **data.get('lattice', {})}
    merged['parameters'] = {**defaults.get('parameters', {}), **data.get('parameters', {})}
    merged.setdefault('outputs', defaults['outputs'])
    if scenario == Scenarios.CUSTOM:
        merged.setdefault('atoms', defaults.get('atoms', []))
    return merged


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a scenario document; every failure becomes a ConfigError naming the offending rule."""
    if not isinstance(data, dict):
        raise ConfigError('A scenario file holds a JSON object.')
    serializer = ScenarioConfigSerializer(data=with_defaults(data))
    if not serializer.is_valid():
        messages = _flatten(serializer.errors)
        raise ConfigError(' '.join(messages), diagnostics={'errors': messages})
    attrs = to_jsonable(serializer.validated_data)
    return ScenarioConfig(
        scenario=attrs['scenario'],
        lattice=attrs['lattice'],
        parameters=attrs['parameters'],
        atoms=tuple(attrs.get('atoms') or ()),
        backend=attrs['backend'],
        sweep=attrs.get('sweep'),
        outputs=tuple(attrs['outputs']),
        schema=attrs['schema'],
    )


def scenario_config(name, overrides=(), outputs=None) -> ScenarioConfig:
    """A named scenario from its defaults with ``key=value`` overrides applied."""
    data = catalog.scenario_defaults(name)
    data['scenario'] = name
    if outputs:
        data['outputs'] = list(outputs)
    return parse_config(catalog.apply_overrides(data, overrides))
