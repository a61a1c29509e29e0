# apps/emitters/serializers.py
from rest_framework import serializers

from apps.bath.models import BathGraph
from apps.bath.serializers import SiteLabelField
from apps.emitters.models import GiantAtom
from utils.exceptions import GiantAtomError


class CouplingSerializer(serializers.Serializer):
    site = SiteLabelField()
    g_re = serializers.FloatField()
    g_im = serializers.FloatField(default=0.0)


class AtomSerializer(serializers.Serializer):
    omega0 = serializers.FloatField()
    couplings = CouplingSerializer(many=True, allow_empty=False)
    label = serializers.CharField(required=False, allow_blank=True, default='')

    def validate_couplings(self, value):
        if not any(c['g_re'] or c['g_im'] for c in value):
            raise serializers.ValidationError('At least one coupling strength must be non-zero.')
        sites = [tuple(c['site']) if isinstance(c['site'], list) else c['site'] for c in value]
        if len(set(sites)) != len(sites):
            raise serializers.ValidationError('Coupling points must be distinct cavities.')
        return value

    def to_representation(self, instance):
        if isinstance(instance, GiantAtom):
            return atom_to_dict(instance)
        return super().to_representation(instance)


def build_atom(data: dict, bath: BathGraph) -> GiantAtom:
    """Validated atom section -> GiantAtom with site labels resolved on ``bath``."""
    try:
        couplings = tuple(
            (bath.site_index(c['site']), complex(c['g_re'], c.get('g_im', 0.0)))
            for c in data['couplings']
        )
        return GiantAtom(omega0=data['omega0'], couplings=couplings, label=data.get('label', ''))
    except GiantAtomError as exc:
        raise serializers.ValidationError({'couplings': str(exc)})


def atom_to_dict(atom: GiantAtom, bath: BathGraph = None) -> dict:
    couplings = []
    for site, g in atom.couplings:
        label = SiteLabelField().to_representation(bath.site_labels[site]) if bath is not None else site
        couplings.append({'site': label, 'g_re': g.real, 'g_im': g.imag})
    data = {'omega0': atom.omega0, 'couplings': couplings}
    if atom.label:
        data['label'] = atom.label
    return data
