# apps/boundstates/equations.py
"""
Pole function F(ω) = ω - ω₀ - ḡ²⟨χ|G_B(ω⁺)|χ⟩ and the residual of an
assembled dressed state against the full one-excitation Hamiltonian.
"""
import numpy as np

from apps.bath.models import BathGraph
from apps.emitters.hamiltonians import total_hamiltonian_1ex
from apps.emitters.models import GiantAtom
from apps.greens.limits import Methods, im_tolerance
from apps.greens.models import ResolventQuery, SelfEnergySample
from apps.greens.resolvents import self_energy

RESIDUAL_TOL = 1e-8

# Hermitian resolvent on the real axis: Im vanishes up to rounding.
REAL_AXIS_METHODS = (Methods.GAP, Methods.EXACT)


def sample_tolerance(sample: SelfEnergySample) -> float:
    """Largest |Im⟨χ|G_B|χ⟩| read as zero for a sample of the given provenance."""
    return im_tolerance(sample.epsilon if sample.method == Methods.RICHARDSON else 0.0)


def pole_sample(atom: GiantAtom, bath: BathGraph, omega, query: ResolventQuery = None, bands=None, strict=True):
    query = ResolventQuery(omega) if query is None else query.at(omega)
    sample = self_energy(atom, bath, query, bands, strict=strict)
    value = complex(omega - atom.omega0 - atom.g_bar ** 2 * sample.value)
    if sample.method in REAL_AXIS_METHODS or value.imag == 0:
        return value.real, sample
    return value, sample


def pole_function(atom: GiantAtom, bath: BathGraph, omega, query: ResolventQuery = None, bands=None):
    """F(ω); real where the self-energy is real (gaps, exact in-band limits)."""
    value, _ = pole_sample(atom, bath, omega, query, bands)
    return value


def state_residual(bath: BathGraph, atoms, omega, state) -> float:
    """‖H|Ψ⟩ - ω|Ψ⟩‖ for amplitudes on {|e_j⟩, sites}."""
    hamiltonian = total_hamiltonian_1ex(bath, atoms, as_sparse=True)
    state = np.asarray(state, dtype=complex)
    return float(np.linalg.norm(hamiltonian @ state - omega * state))
