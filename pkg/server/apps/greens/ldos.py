# apps/greens/ldos.py
"""
Local densities of states from Bloch overlaps, and the principal-value
integrals that rebuild Re/Im of a resolvent element from them.
"""
import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter1d

from apps.bath.models import BandStructure, BathGraph
from apps.emitters.hamiltonians import site_state
from apps.emitters.models import GiantAtom, SiteState
from apps.greens.models import LDOSCurve
from apps.greens.resolvents import bloch_overlaps, resolve_bands
from utils.conf import gla_settings
from utils.exceptions import InvalidArgument

BINS_PER_WIDTH = 10
PV_STEPS_PER_WIDTH = 4


def resolve_kernel_width(bands: BandStructure, kernel_width=None) -> float:
    spacing = bands.sampling_spacing
    if kernel_width is None:
        return gla_settings.LDOS_KERNEL_FACTOR * spacing
    if kernel_width <= spacing:
        raise InvalidArgument(
            f'Kernel width {kernel_width} must exceed the band sampling spacing {spacing:.3e}.'
        )
    return float(kernel_width)


def kernel_density(energies, weights, omega, kernel_width) -> np.ndarray:
    """Σ_i w_i δ(ω - E_i) with δ a normalized Gaussian of standard deviation ``kernel_width``."""
    energies = np.ravel(energies)
    weights = np.ravel(weights)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    h = kernel_width / BINS_PER_WIDTH
    lower = min(omega.min(), energies.min()) - 6 * kernel_width
    upper = max(omega.max(), energies.max()) + 6 * kernel_width
    edges = lower + h * np.arange(int(np.ceil((upper - lower) / h)) + 1)
    centres = 0.5 * (edges[:-1] + edges[1:])

    def smooth(values):
        histogram, _ = np.histogram(energies, bins=edges, weights=values)
        density = gaussian_filter1d(histogram / h, sigma=BINS_PER_WIDTH, mode='constant')
        return np.interp(omega, centres, density)

    if np.iscomplexobj(weights):
        return smooth(weights.real) + 1j * smooth(weights.imag)
    return smooth(weights)


def _overlap_weights(bath, bands, chi_j, chi_j2=None):
    left = bloch_overlaps(bath, bands, chi_j)[:, :, 0]
    if chi_j2 is None:
        return np.abs(left) ** 2
    right = bloch_overlaps(bath, bands, chi_j2)[:, :, 0]
    return np.conj(left) * right


def _grid(omega_grid):
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.size == 0:
        raise InvalidArgument('LDOS needs a non-empty energy grid.')
    return omega_grid


def ldos(chi: SiteState, bath: BathGraph, bands: BandStructure, omega_grid, kernel_width=None) -> LDOSCurve:
    """ρ(ω) = Σ_nk δ(ω - ω_nk) |⟨χ|φ_nk⟩|²."""
    omega_grid = _grid(omega_grid)
    bands = resolve_bands(bath, bands)
    width = resolve_kernel_width(bands, kernel_width)
    density = kernel_density(bands.energies, _overlap_weights(bath, bands, chi), omega_grid, width)
    return LDOSCurve(omega_grid=omega_grid, density=np.clip(density, 0.0, None), kernel_width=width)


def cross_ldos(chi_j: SiteState, chi_j2: SiteState, bath: BathGraph, bands: BandStructure,
               omega_grid, kernel_width=None) -> LDOSCurve:
    """ρ_jj'(ω) = Σ_nk δ(ω - ω_nk) ⟨χ_j|φ_nk⟩⟨φ_nk|χ_j'⟩; complex, Hermitian in (j, j')."""
    omega_grid = _grid(omega_grid)
    bands = resolve_bands(bath, bands)
    width = resolve_kernel_width(bands, kernel_width)
    density = kernel_density(bands.energies, _overlap_weights(bath, bands, chi_j, chi_j2), omega_grid, width)
    return LDOSCurve(omega_grid=omega_grid, density=density, kernel_width=width)


def hilbert_pair(energies, weights, omega, kernel_width):
    """
    (PV ∫ ρ(ω')/(ω - ω') dω', ρ(ω)) for the kernel density of the given
    weights. Midpoint rule on ω + jh without the j = 0 bin; that bin adds
    -ρ'(ω) h for locally linear ρ.
    """
    h = kernel_width / PV_STEPS_PER_WIDTH
    energies = np.ravel(energies)
    reach = max(omega - energies.min(), energies.max() - omega) + 6 * kernel_width
    steps = int(np.ceil(reach / h))
    j = np.arange(-steps, steps + 1)
    rho = kernel_density(energies, weights, omega + j * h, kernel_width)
    centre = steps
    slope = (rho[centre + 1] - rho[centre - 1]) / (2 * h)
    off_centre = j != 0
    principal = -np.sum(rho[off_centre] / j[off_centre]) - slope * h
    return principal, rho[centre]


def spectral_pair(chi_j: SiteState, bath: BathGraph, omega, bands=None, kernel_width=None, chi_j2=None):
    """(PV part, ρ) of ⟨χ_j|G_B(ω⁺)|χ_j'⟩ = PV - iπρ on the Bloch path."""
    bands = resolve_bands(bath, bands)
    width = resolve_kernel_width(bands, kernel_width)
    weights = _overlap_weights(bath, bands, chi_j, chi_j2)
    return hilbert_pair(bands.energies, weights, omega, width)


def self_energy_re_im(atom: GiantAtom, bath: BathGraph, omega, bands=None, kernel_width=None):
    """(Re, Im) of ⟨χ|G_B(ω⁺)|χ⟩ rebuilt from the LDOS: (PV ∫ρ/(ω-ω'), -πρ(ω))."""
    bands = resolve_bands(bath, bands)
    principal, rho = spectral_pair(site_state(atom), bath, omega, bands, kernel_width)
    if bands.excludes(omega, gla_settings.GAP_MARGIN):
        rho = 0.0
    return float(np.real(principal)), float(-np.pi * np.real(rho))


def self_energy_frame(samples) -> pd.DataFrame:
    return pd.DataFrame({
        'omega': [sample.omega for sample in samples],
        're': [sample.value.real for sample in samples],
        'im': [sample.value.imag for sample in samples],
    })
