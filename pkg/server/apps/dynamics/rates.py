# apps/dynamics/rates.py
"""
Collective rates of an ensemble of giant atoms sharing one bath.

Both routes start from B_jj' = iḡ_jḡ_j'⟨χ_j|G_B(ω₀⁺)|χ_j'⟩ and split it into
the coherent part K = -i(B - B†)/2 and the dissipator γ = B + B†. The Green
route evaluates the projected resolvent directly; the spectral route builds
it from the cross-LDOS, γ = 2πḡ_jḡ_j'ρ_jj'(ω₀) and K = ḡ_jḡ_j' PV∫ρ_jj'/(ω₀ - ω).
"""
import logging

import numpy as np

from apps.bath.models import BathGraph
from apps.dynamics.models import RateMatrices
from apps.emitters.hamiltonians import as_ensemble, site_state
from apps.greens.ldos import resolve_kernel_width, spectral_pair
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import green_limit, resolve_bands
from utils.conf import gla_settings
from utils.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

SPECTRAL_RTOL = 0.05


def split_rates(B, omega0, method='', epsilon=0.0, converged=True, psd_tol=None) -> RateMatrices:
    """K and γ from B; a γ eigenvalue below -psd_tol is reported, never clipped."""
    B = np.asarray(B, dtype=complex)
    B_dagger = B.conj().T
    K = -0.5j * (B - B_dagger)
    gamma = B + B_dagger
    flags = ()
    minimum = float(np.linalg.eigvalsh(gamma).min())
    if psd_tol is not None and minimum < -psd_tol:
        logger.warning('γ has eigenvalue %.3e below -%.1e; the generator is not completely positive',
                       minimum, psd_tol)
        flags = ('non_psd_gamma',)
    return RateMatrices(K=K, gamma=gamma, B=B, omega0=float(omega0), method=method, epsilon=float(epsilon),
                        converged=converged, flags=flags)


def rates_green(ensemble, bath: BathGraph, query: ResolventQuery = None, bands=None, strict=True) -> RateMatrices:
    ensemble = as_ensemble(ensemble, bath)
    omega0 = ensemble.omega0
    query = ResolventQuery(omega0) if query is None else query.at(omega0)
    chis = [site_state(atom) for atom in ensemble]
    g_bars = ensemble.g_bars
    if not ensemble.uniform_g_bar:
        logger.info('Unequal ḡ_j across the ensemble; using ḡ_jḡ_j\' prefactors')

    result = green_limit(bath, chis, query, left=chis, bands=bands, strict=strict)
    B = 1j * np.outer(g_bars, g_bars) * np.asarray(result.value)
    logger.debug('Rates at ω₀ = %.6f by %s (ε = %.3e)', omega0, result.method, result.epsilon)
    return split_rates(B, omega0, result.method, result.epsilon, result.converged,
                       psd_tol=gla_settings.PSD_TOL * bath.hopping_scale)


def _spectral_blocks(chis, bath, omega, bands, width):
    n = len(chis)
    principal = np.zeros((n, n), dtype=complex)
    density = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for j2 in range(j, n):
            pv, rho = spectral_pair(chis[j], bath, omega, bands, width, chi_j2=chis[j2])
            principal[j, j2], density[j, j2] = pv, rho
            principal[j2, j], density[j2, j] = np.conj(pv), np.conj(rho)
    return principal, density


def rates_spectral(ensemble, bath: BathGraph, bands=None, kernel_width=None) -> RateMatrices:
    """Rates from the Bloch cross-LDOS; the kernel width is halved-and-compared for convergence."""
    ensemble = as_ensemble(ensemble, bath)
    omega0 = ensemble.omega0
    bands = resolve_bands(bath, bands)
    width = resolve_kernel_width(bands, kernel_width)
    chis = [site_state(atom) for atom in ensemble]
    couplings = np.outer(ensemble.g_bars, ensemble.g_bars)

    def assemble(kernel):
        principal, density = _spectral_blocks(chis, bath, omega0, bands, kernel)
        K = couplings * principal
        gamma = 2 * np.pi * couplings * density
        return 0.5 * gamma + 1j * K

    B = assemble(width)
    coarse = assemble(2 * width)
    discrepancy = float(np.abs(B - coarse).max())
    reference = max(float(np.abs(B).max()), 2 * couplings.max() / max(bands.span, 1e-12))
    if discrepancy > SPECTRAL_RTOL * reference:
        raise ConvergenceError(
            f'Spectral rates moved by {discrepancy:.3e} when the kernel width doubled.',
            diagnostics={'kernel_width': width, 'discrepancy': discrepancy, 'reference': reference},
        )
    return split_rates(B, omega0, 'spectral', width, psd_tol=gla_settings.PSD_TOL * bath.hopping_scale)
