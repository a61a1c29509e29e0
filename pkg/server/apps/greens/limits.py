# apps/greens/limits.py
"""
Boundary values G_B(ω + i0⁺) on a finite lattice.

Two routes exist. When ω sits inside a band but none of the bath modes at ω
overlap the requested vectors, the limit is exact on the finite lattice and
only needs the component along the resonant modes fixed by requiring
localization. Otherwise the limit is estimated by Richardson extrapolation
over broadenings ε, 2ε and 4ε and checked against the estimate from 2ε,
4ε and 8ε.
"""
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from apps.bath.models import BathGraph
from apps.bath.shells import outer_region
from apps.bath.spectra import diagonalize
from utils.conf import gla_settings
from utils.exceptions import ConvergenceError, RegularizationRequired

logger = logging.getLogger(__name__)


class Methods:
    GAP = 'gap'
    EXACT = 'exact'
    RICHARDSON = 'richardson'
    BROADENED = 'broadened'
    ANALYTIC = 'analytic'


@dataclass(frozen=True, eq=False)
class BoundaryValue:
    value: Any
    epsilon: float
    method: str
    converged: bool = True
    discrepancy: float = 0.0

    @property
    def im_tolerance(self):
        return im_tolerance(self.epsilon if self.method == Methods.RICHARDSON else 0.0)


def default_epsilon(bath: BathGraph, bands=None) -> float:
    """EPSILON_FACTOR mean level spacings of the finite bath, or k-sampling spacings on the Bloch path."""
    if bands is not None:
        return gla_settings.EPSILON_FACTOR * bands.sampling_spacing
    decomposition = diagonalize(bath)
    spacing = decomposition.level_spacing or bath.hopping_scale
    return gla_settings.EPSILON_FACTOR * spacing


def im_tolerance(epsilon) -> float:
    """Largest |Im Σ| still read as zero; ε-extrapolation leaves a remainder of order ε²."""
    return max(gla_settings.IM_TOL_FLOOR, gla_settings.IM_TOL_FACTOR * epsilon ** 2)


def boundary_value(evaluate, epsilon, scale, strict=True) -> BoundaryValue:
    """
    Second-order Richardson estimate (8f(ε) - 6f(2ε) + f(4ε)) / 3 of
    lim f(ε → 0⁺), checked against the same estimate one octave up.
    ``scale`` is the spectral span; values below 2/scale are compared
    absolutely.
    """
    f1, f2, f4, f8 = (np.asarray(evaluate(eps)) for eps in (epsilon, 2 * epsilon, 4 * epsilon, 8 * epsilon))
    fine = (8 * f1 - 6 * f2 + f4) / 3
    coarse = (8 * f2 - 6 * f4 + f8) / 3
    discrepancy = float(np.max(np.abs(fine - coarse)))
    reference = max(float(np.max(np.abs(fine))), 2.0 / max(scale, 1e-12))
    converged = discrepancy <= gla_settings.CONVERGENCE_RTOL * reference
    if not converged:
        diagnostics = {
            'epsilons': [epsilon, 2 * epsilon, 4 * epsilon],
            'check_epsilons': [2 * epsilon, 4 * epsilon, 8 * epsilon],
            'discrepancy': discrepancy,
            'reference': reference,
        }
        if strict:
            raise ConvergenceError(
                f'ε → 0⁺ estimate moved by {discrepancy:.3e} between broadening pairs.',
                diagnostics=diagnostics,
            )
        logger.warning('Unconverged boundary value, discrepancy %.3e at ε = %.3e', discrepancy, epsilon)
    value = fine.item() if fine.ndim == 0 else fine
    return BoundaryValue(value=value, epsilon=epsilon, method=Methods.RICHARDSON,
                         converged=converged, discrepancy=discrepancy)


def exact_limit_vector(bath: BathGraph, vectors, omega) -> np.ndarray:
    """
    G_B(ω⁺)|u⟩ at ε = 0 on the finite lattice.

    Allowed only when no bath mode within E_TOL of ω overlaps |u⟩; the free
    component along those modes is chosen to minimise the weight on the
    outer shell, and the result must then be localized.
    """
    decomposition = diagonalize(bath)
    columns = np.asarray(vectors, dtype=complex)
    single = columns.ndim == 1
    columns = columns.reshape(bath.n_sites, -1)
    norms = np.linalg.norm(columns, axis=0)

    detuning = omega - decomposition.eigenvalues
    resonant = np.abs(detuning) <= gla_settings.E_TOL * bath.hopping_scale
    overlaps = decomposition.overlaps(columns)
    if resonant.any():
        leak = np.abs(overlaps[resonant]).max(axis=0)
        if np.any(leak > gla_settings.C_TOL * norms):
            raise RegularizationRequired(
                f'Bath modes at ω = {omega} overlap the requested vector.',
                diagnostics={'omega': omega, 'resonant_modes': int(resonant.sum()), 'overlap': leak.tolist()},
            )

    coefficients = np.zeros_like(overlaps)
    coefficients[~resonant] = overlaps[~resonant] / detuning[~resonant, None]
    result = decomposition.eigenvectors @ coefficients

    support = np.flatnonzero(np.any(columns != 0, axis=1))
    outer = outer_region(bath, support)
    if outer.any():
        if resonant.any():
            modes = decomposition.eigenvectors[:, resonant]
            correction, *_ = np.linalg.lstsq(modes[outer], -result[outer], rcond=None)
            result = result + modes @ correction
        total = np.sum(np.abs(result) ** 2, axis=0)
        outer_weight = np.sum(np.abs(result[outer]) ** 2, axis=0) / np.where(total > 0, total, 1.0)
        if np.any(outer_weight > gla_settings.LOCALIZATION_TOL):
            raise RegularizationRequired(
                f'ε = 0 limit at ω = {omega} is not localized on the finite lattice.',
                diagnostics={'omega': omega, 'outer_weight': outer_weight.tolist()},
            )
    return result[:, 0] if single else result
