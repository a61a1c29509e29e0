# apps/boundstates/localization.py
import logging

import numpy as np

from apps.bath.builders import enlarge
from apps.bath.models import BathGraph
from apps.bath.shells import boundary_sites, outer_region, shell_distances
from apps.boundstates.models import LocalizationResult
from utils.conf import gla_settings
from utils.exceptions import InvalidState, ResourceLimitError

logger = logging.getLogger(__name__)

SIZE_CHANGE_FACTOR = 10.0
RESIZE_FACTOR = 1.5


def enlarged_retest(bath: BathGraph, solve, factor=RESIZE_FACTOR):
    """
    A ``resized`` callable for :func:`localization_check`: ``solve(larger,
    site_map)`` recomputes the state on the enlarged lattice and returns its
    amplitudes, or None when the state does not exist there. None when the
    bath cannot be enlarged (custom networks, vacancies).
    """
    if not bath.supports_bloch:
        return None

    def resized():
        larger, site_map = enlarge(bath, factor)
        if larger.n_sites > gla_settings.DENSE_LIMIT:
            raise ResourceLimitError(diagnostics={'n_sites': larger.n_sites,
                                                  'dense_limit': gla_settings.DENSE_LIMIT})
        state = solve(larger, site_map)
        return None if state is None else (state, site_map)

    return resized


def _size_change(larger) -> float:
    if larger is None:
        return 1.0
    state, site_map = larger
    weights = np.abs(np.asarray(state, dtype=complex).ravel()) ** 2
    return float(abs(1.0 - weights[np.asarray(site_map)].sum() / weights.sum()))


def localization_check(state, bath: BathGraph, shells=1, localization_tol=None, resized=None) -> LocalizationResult:
    """
    A state counts as localized when less than ``localization_tol`` of its
    weight sits on the outermost ``shells`` of the lattice.

    ``resized`` is an optional callable returning ``(state, site_map)``: the
    same state recomputed on a 1.5× larger lattice and the index of every
    original site there, or None when the state is gone. The weight the
    larger state keeps on the original footprint must then stay within 10×
    the tolerance of the full weight.
    """
    tol = gla_settings.LOCALIZATION_TOL if localization_tol is None else localization_tol
    amplitudes = np.asarray(state, dtype=complex).ravel()
    if amplitudes.shape != (bath.n_sites,):
        raise InvalidState(f'Expected {bath.n_sites} amplitudes, got {amplitudes.shape[0]}.')
    weights = np.abs(amplitudes) ** 2
    total = weights.sum()
    if total == 0:
        raise InvalidState('Cannot check the localization of a zero state.')

    peak = int(np.argmax(weights))
    boundary = boundary_sites(bath)
    depth = shell_distances(bath, boundary if boundary.size else [peak])
    reached = depth >= 0
    profile = np.bincount(depth[reached], weights=weights[reached], minlength=1) / total

    outer = outer_region(bath, [peak], depth=shells)
    if not outer.any():
        logger.info('Lattice of %d sites is too small to define %d outer shell(s)', bath.n_sites, shells)
        return LocalizationResult(localized=False, boundary_weight=0.0, profile=profile, inconclusive=True)

    boundary_weight = float(weights[outer].sum() / total)
    localized = boundary_weight < tol

    size_change = None
    if resized is not None and localized:
        try:
            size_change = _size_change(resized())
        except ResourceLimitError as exc:
            logger.info('Skipping the size re-test: %s', exc.diagnostics)
        else:
            localized = size_change < SIZE_CHANGE_FACTOR * tol
            if not localized:
                logger.debug('State moved %.3e of its weight off the original lattice on resizing', size_change)
    return LocalizationResult(
        localized=localized,
        boundary_weight=boundary_weight,
        profile=profile,
        size_change=size_change,
    )
