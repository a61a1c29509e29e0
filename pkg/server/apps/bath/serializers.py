# apps/bath/serializers.py
from rest_framework import serializers

from apps.bath.builders import (
    build_chain,
    build_dimerized_chain,
    build_graphene,
    build_lieb_nnn,
    build_square,
)
from apps.bath.models import BathGraph
from utils.constants import Boundary, Lattices
from utils.exceptions import GiantAtomError

LATTICE_DIMENSIONS = {
    Lattices.CHAIN: 1,
    Lattices.DIMERIZED_CHAIN: 1,
    Lattices.GRAPHENE: 2,
    Lattices.SQUARE: 2,
    Lattices.LIEB_NNN: 2,
}


class SiteLabelField(serializers.Field):
    """A site given as a plain integer (1D) or as ``[cell..., sublattice]``."""

    default_error_messages = {
        'invalid': 'Site must be an integer or a list of integers [cell..., sublattice].',
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        if isinstance(data, int):
            return data
        if isinstance(data, (list, tuple)) and data and all(
                isinstance(item, int) and not isinstance(item, bool) for item in data):
            return list(data)
        self.fail('invalid')

    def to_representation(self, value):
        if isinstance(value, int):
            return value
        if isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], tuple):
            return [*value[0], value[1]]
        return list(value)


class HoppingSerializer(serializers.Serializer):
    site = SiteLabelField()
    site2 = SiteLabelField()
    re = serializers.FloatField()
    im = serializers.FloatField(default=0.0)


class LatticeSerializer(serializers.Serializer):
    """
    Lattice section of a scenario file. Named lattices take ``size`` (chain
    length or cell counts); ``custom`` takes explicit sites, frequencies and
    hoppings.
    """
    kind = serializers.ChoiceField(choices=Lattices.CHOICES)
    size = serializers.ListField(
        child=serializers.IntegerField(min_value=2), min_length=1, max_length=2, required=False
    )
    J = serializers.FloatField(default=1.0)
    J2 = serializers.FloatField(required=False)
    omega_c = serializers.FloatField(default=0.0)
    boundary = serializers.ChoiceField(choices=Boundary.CHOICES, default=Boundary.OPEN)
    sites = serializers.ListField(child=SiteLabelField(), required=False)
    frequencies = serializers.ListField(child=serializers.FloatField(), required=False)
    hoppings = HoppingSerializer(many=True, required=False)

    def validate_J(self, value):
        if value <= 0:
            raise serializers.ValidationError('Hopping rate J must be positive.')
        return value

    def validate(self, attrs):
        kind = attrs['kind']
        if kind == Lattices.CUSTOM:
            missing = [key for key in ('sites', 'frequencies') if key not in attrs]
            if missing:
                raise serializers.ValidationError(f"Custom lattices need {', '.join(missing)}.")
            if len(attrs['sites']) != len(attrs['frequencies']):
                raise serializers.ValidationError('One frequency per site is required.')
            return attrs

        if 'size' not in attrs:
            raise serializers.ValidationError({'size': f"Lattice '{kind}' needs a size."})
        expected = LATTICE_DIMENSIONS[kind]
        if len(attrs['size']) != expected:
            raise serializers.ValidationError(
                {'size': f"Lattice '{kind}' takes {expected} size value(s), got {len(attrs['size'])}."}
            )
        if kind == Lattices.LIEB_NNN and attrs.get('omega_c', 0.0) != 0.0:
            raise serializers.ValidationError({'omega_c': 'The Lieb lattice has zero cavity frequency.'})
        return attrs


def build_bath(data: dict) -> BathGraph:
    """Validated lattice section -> BathGraph."""
    kind = data['kind']
    J = data.get('J', 1.0)
    omega_c = data.get('omega_c', 0.0)
    boundary = data.get('boundary', Boundary.OPEN)
    size = data.get('size')

    if kind == Lattices.CHAIN:
        return build_chain(size[0], J, omega_c, boundary)
    if kind == Lattices.DIMERIZED_CHAIN:
        return build_dimerized_chain(size[0], J, data.get('J2', J / 2), omega_c, boundary)
    if kind == Lattices.GRAPHENE:
        return build_graphene(size[0], size[1], J, omega_c, boundary)
    if kind == Lattices.SQUARE:
        return build_square(size[0], size[1], J, omega_c, boundary)
    if kind == Lattices.LIEB_NNN:
        return build_lieb_nnn(size[0], size[1], J, boundary)

    labels = data['sites']
    graph = BathGraph(site_labels=labels, frequencies=data['frequencies'], hoppings=(),
                      boundary=boundary, kind=Lattices.CUSTOM, parameters={'J': J})
    try:
        hoppings = tuple(
            (graph.site_index(h['site']), graph.site_index(h['site2']), complex(h['re'], h.get('im', 0.0)))
            for h in data.get('hoppings', ())
        )
        return BathGraph(site_labels=labels, frequencies=data['frequencies'], hoppings=hoppings,
                         boundary=boundary, kind=Lattices.CUSTOM, parameters={'J': J})
    except GiantAtomError as exc:
        raise serializers.ValidationError({'hoppings': str(exc)})
