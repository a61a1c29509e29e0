# server/utils/constants.py
from django.utils.translation import gettext_lazy as _


class Boundary:
    OPEN = 'open'
    PERIODIC = 'periodic'

    CHOICES = [
        (OPEN, _('Open')),
        (PERIODIC, _('Periodic')),
    ]


class Backend:
    FINITE_SPECTRAL = 'finite_spectral'
    BLOCH_SUM = 'bloch_sum'
    ANALYTIC_CHAIN = 'analytic_chain'

    CHOICES = [
        (FINITE_SPECTRAL, _('Finite spectral sum')),
        (BLOCH_SUM, _('Bloch k-sum')),
        (ANALYTIC_CHAIN, _('Analytic 1D chain')),
    ]


class Lattices:
    CHAIN = 'chain'
    DIMERIZED_CHAIN = 'dimerized_chain'
    GRAPHENE = 'graphene'
    SQUARE = 'square'
    LIEB_NNN = 'lieb_nnn'
    CUSTOM = 'custom'

    CHOICES = [
        (CHAIN, _('Coupled-cavity array')),
        (DIMERIZED_CHAIN, _('Dimerized coupled-cavity array')),
        (GRAPHENE, _('Honeycomb lattice')),
        (SQUARE, _('Square lattice')),
        (LIEB_NNN, _('Lieb lattice with next-nearest neighbours')),
        (CUSTOM, _('Custom graph')),
    ]


class Classification:
    IN_GAP = 'in_gap'
    IN_BAND = 'in_band'
    VDS = 'vds'
    WEAK_COUPLING = 'weak_coupling'
    QUASI_BOUND = 'quasi_bound'

    CHOICES = [
        (IN_GAP, _('In-gap bound state')),
        (IN_BAND, _('Bound state in the continuum')),
        (VDS, _('Vacancy-like dressed state')),
        (WEAK_COUPLING, _('Weak-coupling bound state')),
        (QUASI_BOUND, _('Quasi-bound candidate')),
    ]


class Scenarios:
    GRAPHENE3 = 'graphene3'
    GRAPHENE4 = 'graphene4'
    GRAPHENE_CHAIN = 'graphene_chain'
    WAVEGUIDE_SERIAL = 'waveguide_serial'
    WAVEGUIDE_BRAIDED = 'waveguide_braided'
    WAVEGUIDE_NESTED = 'waveguide_nested'
    SQUARE_BRAIDED = 'square_braided'
    SQUARE_NESTED = 'square_nested'
    LIEB_PAIR = 'lieb_pair'
    LIEB_MISMATCHED = 'lieb_mismatched'
    CUSTOM = 'custom'

    WAVEGUIDE = (WAVEGUIDE_SERIAL, WAVEGUIDE_BRAIDED, WAVEGUIDE_NESTED)
    LIEB = (LIEB_PAIR, LIEB_MISMATCHED)

    CHOICES = [
        (GRAPHENE3, _('Graphene, 3-point atoms')),
        (GRAPHENE4, _('Graphene, 4-point atoms')),
        (GRAPHENE_CHAIN, _('Graphene, 4-point atom chain')),
        (WAVEGUIDE_SERIAL, _('Waveguide, serial pair')),
        (WAVEGUIDE_BRAIDED, _('Waveguide, braided pair')),
        (WAVEGUIDE_NESTED, _('Waveguide, nested pair')),
        (SQUARE_BRAIDED, _('Square lattice, braided pair')),
        (SQUARE_NESTED, _('Square lattice, nested pair')),
        (LIEB_PAIR, _('Lieb lattice, same orientation')),
        (LIEB_MISMATCHED, _('Lieb lattice, mismatched orientation')),
        (CUSTOM, _('Custom')),
    ]


class Outputs:
    SELF_ENERGY = 'self_energy'
    LDOS = 'ldos'
    BOUND_STATES = 'bound_states'
    VDS = 'vds'
    RATES = 'rates'
    DFH_REPORT = 'dfh_report'
    LINDBLAD = 'lindblad'
    EXACT_EVOLUTION = 'exact_evolution'

    CHOICES = [
        (SELF_ENERGY, _('Self-energy curve')),
        (LDOS, _('Local density of states')),
        (BOUND_STATES, _('Bound states')),
        (VDS, _('Vacancy-like dressed states')),
        (RATES, _('Rate matrices')),
        (DFH_REPORT, _('Decoherence-free report')),
        (LINDBLAD, _('Lindblad trajectory')),
        (EXACT_EVOLUTION, _('Exact one-excitation evolution')),
    ]


class Provenance:
    PUBLISHED = 'published'
    COMPUTED = 'computed'

    CHOICES = [
        (PUBLISHED, _('Checked against a published value')),
        (COMPUTED, _('Computed only')),
    ]


class ExitCodes:
    SUCCESS = 0
    CONFIG_ERROR = 2
    CONVERGENCE_ERROR = 3
    REGRESSION_FAILURE = 4


CONFIG_SCHEMA_VERSION = 1
