# apps/bath/spectra.py
import logging
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import linalg, sparse

from apps.bath.models import BandStructure, BathGraph, BlochSpec, SpectralDecomposition, per_bath
from utils.conf import gla_settings
from utils.exceptions import InvalidArgument, ResourceLimitError, SpecError

logger = logging.getLogger(__name__)


def hamiltonian_matrix(bath: BathGraph, as_sparse=False):
    """
    One-excitation matrix of H_B. Real baths give a float matrix, complex
    hoppings a complex one; both are Hermitian bit-for-bit since every
    off-diagonal pair is written from the same stored amplitude.
    """
    rows, cols, amplitudes = bath.hopping_arrays
    dtype = float if bath.is_real else complex
    values = amplitudes.real if dtype is float else amplitudes
    n = bath.n_sites
    diagonal = np.arange(n)
    matrix = sparse.coo_matrix(
        (
            np.concatenate([bath.frequencies, values, np.conj(values)]).astype(dtype),
            (np.concatenate([diagonal, rows, cols]), np.concatenate([diagonal, cols, rows])),
        ),
        shape=(n, n),
    ).tocsr()
    if as_sparse:
        return matrix
    return matrix.toarray()


def hamiltonian_frame(bath: BathGraph) -> pd.DataFrame:
    """Coordinate-list export of H_B: columns (row, col, re, im)."""
    matrix = hamiltonian_matrix(bath, as_sparse=True).tocoo()
    order = np.lexsort((matrix.col, matrix.row))
    data = np.asarray(matrix.data, dtype=complex)[order]
    return pd.DataFrame({
        'row': matrix.row[order],
        'col': matrix.col[order],
        're': data.real,
        'im': data.imag,
    })


@per_bath
def diagonalize(bath: BathGraph) -> SpectralDecomposition:
    """
    Full Hermitian eigendecomposition, stored on the bath object so it is
    released with it. Baths above the dense limit must go through the Bloch
    path instead.
    """
    limit = gla_settings.DENSE_LIMIT
    if bath.n_sites > limit:
        raise ResourceLimitError(
            f'{bath.n_sites} sites exceed the dense limit of {limit}; use the bloch_sum backend.',
            diagnostics={'n_sites': bath.n_sites, 'dense_limit': limit},
        )
    matrix = hamiltonian_matrix(bath)
    eigenvalues, eigenvectors = linalg.eigh(matrix)
    decomposition = SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)
    _verify_decomposition(matrix, decomposition)
    logger.debug('Diagonalized %s bath with %d sites', bath.kind, bath.n_sites)
    return decomposition


def _verify_decomposition(matrix, decomposition, sample=64, tol=1e-10):
    vectors = decomposition.eigenvectors
    n = vectors.shape[1]
    columns = np.arange(n) if n <= 4 * sample else np.linspace(0, n - 1, sample).astype(int)
    scale = max(np.abs(matrix).sum(axis=1).max(), 1.0)
    residual = matrix @ vectors[:, columns] - vectors[:, columns] * decomposition.eigenvalues[columns]
    worst = np.linalg.norm(residual, axis=0).max()
    gram = vectors[:, columns].conj().T @ vectors[:, columns]
    orthogonality = np.abs(gram - np.eye(len(columns))).max()
    if worst > tol * scale or orthogonality > tol:
        logger.warning(
            'Eigendecomposition residuals above tolerance: residual=%.3e, gram=%.3e',
            worst, orthogonality,
        )


def band_structure(spec: BlochSpec, k_resolution: int) -> BandStructure:
    """
    Diagonalize h(k) on a uniform grid of reduced wave vectors
    k = 2π m / N folded into [-π, π), the same k set as a periodic lattice of
    N cells.
    """
    if k_resolution < 2:
        raise InvalidArgument(f'k_resolution must be at least 2, got {k_resolution}.')
    axis = 2 * np.pi * (np.arange(k_resolution) - k_resolution // 2) / k_resolution
    grid = np.stack(np.meshgrid(*([axis] * spec.dimension), indexing='ij'), axis=-1)
    k_grid = grid.reshape(-1, spec.dimension)

    h = spec.bloch_matrices(k_grid)
    residual = np.abs(h - np.conj(np.swapaxes(h, 1, 2))).max()
    if residual > 1e-12:
        raise SpecError(diagnostics={'hermiticity_residual': float(residual)})
    energies, vectors = np.linalg.eigh(h)

    return BandStructure(
        k_grid=k_grid,
        energies=energies,
        bloch_vectors=vectors,
        resolution=k_resolution,
        spec=spec,
    )


def band_frame(bands: BandStructure) -> pd.DataFrame:
    """Long-format band table: k components, band index, energy."""
    n_k, n_bands = bands.energies.shape
    columns = {}
    for axis in range(bands.k_grid.shape[1]):
        columns[f'k{axis + 1}'] = np.repeat(bands.k_grid[:, axis], n_bands)
    columns['band'] = np.tile(np.arange(n_bands), n_k)
    columns['energy'] = bands.energies.ravel()
    return pd.DataFrame(columns)


def spectral_gaps(bath: BathGraph, bands: BandStructure = None):
    """
    Certified gaps of a finite bath, including the two semi-infinite ones.

    A point is in a gap when the nearest eigenvalue is farther than
    GAP_SPACING_FACTOR mean level spacings and, when bands are supplied,
    every band excludes it by GAP_MARGIN.
    """
    decomposition = diagonalize(bath)
    eigenvalues = decomposition.eigenvalues
    guard = gla_settings.GAP_SPACING_FACTOR * max(decomposition.level_spacing, 1e-12)
    gaps = [(-np.inf, eigenvalues[0] - guard)]
    for lower, upper in zip(eigenvalues[:-1], eigenvalues[1:]):
        if upper - lower > 2 * guard:
            gaps.append((lower + guard, upper - guard))
    gaps.append((eigenvalues[-1] + guard, np.inf))

    if bands is None:
        bands = bath_bands(bath)
    if bands is not None:
        gaps = _trim_to_bands(gaps, bands)
    return [gap for gap in gaps if gap[1] > gap[0]]


def _trim_to_bands(gaps, bands):
    margin = gla_settings.GAP_MARGIN
    trimmed = []
    for lower, upper in gaps:
        pieces = [(lower, upper)]
        for band_min, band_max in bands.band_edges:
            next_pieces = []
            for a, b in pieces:
                if b <= band_min - margin or a >= band_max + margin:
                    next_pieces.append((a, b))
                    continue
                if a < band_min - margin:
                    next_pieces.append((a, band_min - margin))
                if b > band_max + margin:
                    next_pieces.append((band_max + margin, b))
            pieces = next_pieces
        trimmed.extend(pieces)
    return trimmed


def in_certified_gap(omega, bath: BathGraph, bands: BandStructure = None):
    return any(lower <= omega <= upper for lower, upper in spectral_gaps(bath, bands))


def bath_bands(bath: BathGraph, k_resolution=None):
    """Band structure of the lattice a bath was tiled from, or None."""
    if not bath.supports_bloch:
        return None
    if k_resolution is None:
        k_resolution = (
            gla_settings.K_RESOLUTION if bath.unit_cell.dimension == 1 else gla_settings.K_RESOLUTION_2D
        )
    return _cached_bands(bath.unit_cell, int(k_resolution))


@lru_cache(maxsize=8)
def _cached_bands(spec, k_resolution):
    return band_structure(spec, k_resolution)
