# apps/boundstates/poles.py
"""
Real roots of the pole function.

In a gap F is strictly increasing (dΣ/dω ≤ 0), so a sign change at the gap
ends brackets the only root and bisection finds it. Inside a band a root
needs Im Σ(ω) = 0 as well as Re F(ω) = 0; the search scans |Im Σ| for dips,
refines them and then solves the real equation inside the dip.
"""
import logging

import numpy as np
from scipy import optimize

from apps.bath.models import BathGraph
from apps.bath.spectra import spectral_gaps
from apps.boundstates.equations import pole_sample, sample_tolerance
from apps.boundstates.localization import enlarged_retest, localization_check
from apps.boundstates.models import BoundState
from apps.boundstates.wavefunctions import bs_wavefunction, photon_amplitudes
from apps.emitters.models import GiantAtom
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import resolve_bands, self_energy
from utils.conf import gla_settings
from utils.constants import Backend, Classification
from utils.exceptions import InvalidArgument, NotAGap, RegularizationRequired

logger = logging.getLogger(__name__)

MAX_BRACKET_STEPS = 64


def _occupied_intervals(bath: BathGraph, backend, bands):
    if backend == Backend.ANALYTIC_CHAIN:
        J = bath.parameters.get('J', 1.0)
        omega_c = bath.parameters.get('omega_c', 0.0)
        return [(omega_c - 2 * J, omega_c + 2 * J)]
    return [tuple(edges) for edges in resolve_bands(bath, bands).band_edges]


def certify_gap(bath: BathGraph, gap, backend=Backend.FINITE_SPECTRAL, bands=None):
    lower, upper = sorted(float(edge) for edge in gap)
    if backend == Backend.FINITE_SPECTRAL:
        certified = any(a <= lower and upper <= b for a, b in spectral_gaps(bath, bands))
    else:
        margin = gla_settings.GAP_MARGIN
        certified = all(upper < band_min - margin or lower > band_max + margin
                        for band_min, band_max in _occupied_intervals(bath, backend, bands))
    if not certified:
        raise NotAGap(
            f'[{lower}, {upper}] touches the spectrum of the bath.',
            diagnostics={'gap': [lower, upper], 'backend': backend},
        )
    return lower, upper


def _expand(F, start, step, direction, want_positive):
    point = start + direction * step
    for _ in range(MAX_BRACKET_STEPS):
        value = F(point)
        if (value > 0) == want_positive:
            return point
        step *= 2
        point = start + direction * step
    raise InvalidArgument('Could not bracket the pole-function root in a semi-infinite gap.')


def find_ingap_bs(atom: GiantAtom, bath: BathGraph, gap, query: ResolventQuery = None, bands=None):
    """The bound state inside ``gap``, or None when F keeps one sign there."""
    query = query or ResolventQuery(atom.omega0)
    lower, upper = certify_gap(bath, gap, query.backend, bands)
    J = bath.hopping_scale

    def F(omega):
        value, _ = pole_sample(atom, bath, omega, query, bands)
        return float(np.real(value))

    step = max(atom.g_bar, J)
    if np.isinf(upper):
        upper = _expand(F, max(lower, atom.omega0), step, +1, want_positive=True)
    if np.isinf(lower):
        lower = _expand(F, min(upper, atom.omega0), step, -1, want_positive=False)

    f_lower, f_upper = F(lower), F(upper)
    if f_lower > 0 or f_upper < 0:
        return None
    if f_lower == 0:
        root = lower
    elif f_upper == 0:
        root = upper
    else:
        root = optimize.bisect(F, lower, upper, xtol=gla_settings.ROOT_XTOL * J, maxiter=500)
    logger.debug('In-gap root ω_BS = %.12f in [%.6f, %.6f]', root, lower, upper)
    return bs_wavefunction(atom, bath, root, query, Classification.IN_GAP, bands)


def find_gap_states(atom: GiantAtom, bath: BathGraph, query: ResolventQuery = None):
    """One call of find_ingap_bs per certified gap of the finite bath."""
    states = []
    for gap in spectral_gaps(bath):
        bound_state = find_ingap_bs(atom, bath, gap, query)
        if bound_state is not None:
            states.append(bound_state)
    return states


def _dips(magnitudes):
    """Interior local minima of |Im Σ|; a run of equal minima counts once."""
    dips = []
    for i in range(1, len(magnitudes) - 1):
        if magnitudes[i] <= magnitudes[i - 1] and magnitudes[i] <= magnitudes[i + 1]:
            if dips and dips[-1] == i - 1 and magnitudes[i] == magnitudes[i - 1]:
                continue
            dips.append(i)
    return dips


def _size_stable(atom: GiantAtom, bath: BathGraph, bound_state: BoundState, query: ResolventQuery) -> bool:
    """The in-band state keeps its weight on the original sites of a 1.5× larger lattice."""
    omega = bound_state.omega_bs

    def solve_larger(larger, site_map):
        try:
            return photon_amplitudes(atom.relocated(site_map), larger, omega, query)
        except RegularizationRequired as exc:
            logger.debug('No ε = 0 amplitudes at ω = %.10f on the larger lattice: %s', omega, exc.diagnostics)
            return None

    result = localization_check(bound_state.photon_amplitudes, bath, resized=enlarged_retest(bath, solve_larger))
    return result.localized


def find_inband_bs(atom: GiantAtom, bath: BathGraph, band, grid=200, query: ResolventQuery = None,
                   bands=None) -> list:
    """
    Bound states in the continuum inside ``band``. Candidates with a
    vanishing Im Σ but |F| above F_TOL come back as quasi-bound entries.
    """
    if grid < 3:
        raise InvalidArgument(f'The in-band scan needs at least 3 grid points, got {grid}.')
    lower, upper = sorted(float(edge) for edge in band)
    query = query or ResolventQuery(lower)
    J = bath.hopping_scale
    xtol = gla_settings.ROOT_XTOL * J

    def imaginary(omega):
        return abs(self_energy(atom, bath, query.at(omega), bands, strict=False).imag)

    def real_F(omega):
        value, _ = pole_sample(atom, bath, omega, query, bands, strict=False)
        return float(np.real(value))

    omegas = np.linspace(lower, upper, grid)
    magnitudes = np.array([imaginary(omega) for omega in omegas])
    found = []
    for i in _dips(magnitudes):
        window = (omegas[i - 1], omegas[i + 1])
        refined = optimize.minimize_scalar(imaginary, bounds=window, method='bounded', options={'xatol': xtol})
        candidate = float(refined.x)
        sample = self_energy(atom, bath, query.at(candidate), bands, strict=False)
        if abs(sample.imag) > sample_tolerance(sample):
            continue
        f_low, f_high = real_F(window[0]), real_F(window[1])
        if f_low * f_high < 0:
            candidate = float(optimize.brentq(real_F, *window, xtol=xtol))

        F, sample = pole_sample(atom, bath, candidate, query, bands)
        im_residual = abs(sample.imag)
        pole_residual = abs(F)
        flags = ()
        if im_residual <= sample_tolerance(sample) and pole_residual <= gla_settings.F_TOL * J:
            bound_state = bs_wavefunction(atom, bath, candidate, query, Classification.IN_BAND, bands)
            if _size_stable(atom, bath, bound_state, query):
                found.append(bound_state)
                continue
            logger.info('In-band root at ω = %.10f is not localized on resizing the lattice', candidate)
            flags = ('size_unstable',)
        logger.info('Quasi-bound candidate at ω = %.10f: |Im Σ| = %.3e, |F| = %.3e',
                    candidate, im_residual, pole_residual)
        found.append(BoundState(
            omega_bs=candidate,
            photon_amplitudes=None,
            classification=Classification.QUASI_BOUND,
            pole_residual=pole_residual,
            im_residual=im_residual,
            flags=flags,
        ))
    return found
