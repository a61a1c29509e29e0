# apps/bath/models.py
"""
Value types of the photonic bath.

All types are frozen dataclasses holding read-only numpy arrays, so a bath or a
spectral decomposition can be shared between threads without copies.
"""
from dataclasses import dataclass, field
from functools import cached_property, wraps
from typing import Optional

import numpy as np
from scipy import sparse

from utils.constants import Boundary, Lattices
from utils.exceptions import InvalidGeometry, SiteIndexError, SpecError


def _frozen(array, dtype=None):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


def per_bath(function):
    """Cache ``function(bath)`` on the bath object, so the result is released with it."""
    slot = f'_{function.__name__.lstrip("_")}'

    @wraps(function)
    def cached(bath):
        try:
            return bath.__dict__[slot]
        except KeyError:
            value = function(bath)
            object.__setattr__(bath, slot, value)
            return value

    return cached


@dataclass(frozen=True, eq=False)
class BlochSpec:
    """
    Unit cell of a translationally invariant lattice.

    A hopping ``(beta, beta2, offset, t)`` is the matrix element between
    sublattice ``beta`` of cell ``r`` and sublattice ``beta2`` of cell
    ``r + offset``; its Hermitian partner is implied. Wave vectors are handled
    in reduced form, k·R with R the integer cell offset.
    """
    dimension: int
    bravais_vectors: np.ndarray
    sublattice_count: int
    onsite: tuple
    intra_cell: tuple = ()
    inter_cell: tuple = ()
    basis_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise SpecError('Only one- and two-dimensional lattices are supported.')
        vectors = _frozen(self.bravais_vectors, float).reshape(self.dimension, -1)
        object.__setattr__(self, 'bravais_vectors', vectors)
        if len(self.onsite) != self.sublattice_count:
            raise SpecError('One onsite frequency per sublattice is required.')
        object.__setattr__(self, 'onsite', tuple(float(w) for w in self.onsite))

        positions = self.basis_positions
        if positions is None:
            positions = np.zeros((self.sublattice_count, vectors.shape[1]))
        object.__setattr__(self, 'basis_positions', _frozen(positions, float))

        seen = set()
        for name in ('intra_cell', 'inter_cell'):
            cleaned = []
            for beta, beta2, offset, amplitude in getattr(self, name):
                offset = tuple(int(o) for o in np.atleast_1d(offset))
                if len(offset) != self.dimension:
                    raise SpecError(f'Cell offset {offset} does not match dimension {self.dimension}.')
                if not (0 <= beta < self.sublattice_count and 0 <= beta2 < self.sublattice_count):
                    raise SpecError(f'Sublattice index out of range in hopping {(beta, beta2, offset)}.')
                is_zero = not any(offset)
                if name == 'intra_cell' and not is_zero:
                    raise SpecError('Intra-cell hoppings must have a zero cell offset.')
                if name == 'inter_cell' and is_zero:
                    raise SpecError('Inter-cell hoppings need a non-zero cell offset.')
                if is_zero and beta == beta2:
                    raise SpecError('Self-hopping inside a cell; use the onsite term.')
                key = (beta, beta2, offset)
                mirrored = (beta2, beta, tuple(-o for o in offset))
                if key in seen or mirrored in seen:
                    raise SpecError(f'Duplicate hopping {key}.')
                seen.add(key)
                cleaned.append((int(beta), int(beta2), offset, complex(amplitude)))
            object.__setattr__(self, name, tuple(cleaned))

        self.check_hermitian()

    @property
    def hoppings(self):
        return self.intra_cell + self.inter_cell

    def bloch_matrices(self, k_points):
        """h(k) for a stack of reduced wave vectors, shape (n_k, n_sub, n_sub)."""
        k_points = np.atleast_2d(np.asarray(k_points, dtype=float))
        n_sub = self.sublattice_count
        h = np.zeros((k_points.shape[0], n_sub, n_sub), dtype=complex)
        h[:, range(n_sub), range(n_sub)] = self.onsite
        for beta, beta2, offset, amplitude in self.hoppings:
            phase = np.exp(1j * k_points @ np.asarray(offset, dtype=float))
            h[:, beta, beta2] += amplitude * phase
            h[:, beta2, beta] += np.conj(amplitude * phase)
        return h

    def bloch_matrix(self, k):
        return self.bloch_matrices(np.atleast_1d(k))[0]

    def check_hermitian(self, samples=7, tol=1e-12):
        axis = np.linspace(-np.pi, np.pi, samples)
        grid = np.stack(np.meshgrid(*([axis] * self.dimension), indexing='ij'), axis=-1)
        h = self.bloch_matrices(grid.reshape(-1, self.dimension))
        residual = np.max(np.abs(h - np.conj(np.swapaxes(h, 1, 2)))) if h.size else 0.0
        if not np.isfinite(residual) or residual > tol:
            raise SpecError(diagnostics={'hermiticity_residual': float(residual)})

    @cached_property
    def reciprocal_vectors(self):
        """Rows b_i with a_i·b_j = 2π δ_ij (only square Bravais matrices)."""
        vectors = self.bravais_vectors
        if vectors.shape[0] != vectors.shape[1]:
            return None
        return 2 * np.pi * np.linalg.inv(vectors).T


@dataclass(frozen=True, eq=False)
class BathGraph:
    """
    Finite network of coupled cavities, H_B = Σ ω_x |x⟩⟨x| + Σ (J_xx' |x⟩⟨x'| + h.c.).

    ``hoppings`` stores each unordered pair once as ``(x, x2, J)`` meaning
    H[x, x2] = J and H[x2, x] = conj(J). Lattice builders also attach the unit
    cell and the number of cells so the Bloch path and real-space coordinates
    stay available.
    """
    site_labels: tuple
    frequencies: np.ndarray
    hoppings: tuple
    boundary: str = Boundary.OPEN
    kind: str = Lattices.CUSTOM
    unit_cell: Optional[BlochSpec] = None
    cells: Optional[tuple] = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = tuple(_normalize_label(label) for label in self.site_labels)
        object.__setattr__(self, 'site_labels', labels)
        frequencies = _frozen(self.frequencies, float)
        n = len(labels)
        if n < 1:
            raise InvalidGeometry('A bath needs at least one site.')
        if frequencies.shape != (n,):
            raise InvalidGeometry(f'Expected {n} frequencies, got shape {frequencies.shape}.')
        if len(set(labels)) != n:
            raise InvalidGeometry('Site labels must be unique.')
        if self.boundary not in (Boundary.OPEN, Boundary.PERIODIC):
            raise InvalidGeometry(f"Unknown boundary '{self.boundary}'.")
        object.__setattr__(self, 'frequencies', frequencies)

        pairs = set()
        cleaned = []
        for x, x2, amplitude in self.hoppings:
            x, x2 = int(x), int(x2)
            if not (0 <= x < n and 0 <= x2 < n):
                raise SiteIndexError(f'Hopping ({x}, {x2}) references a missing site.')
            if x == x2:
                raise InvalidGeometry(f'Self-hopping on site {x}.')
            pair = (min(x, x2), max(x, x2))
            if pair in pairs:
                raise InvalidGeometry(f'Duplicate hopping between sites {pair}.')
            pairs.add(pair)
            cleaned.append((x, x2, complex(amplitude)))
        object.__setattr__(self, 'hoppings', tuple(cleaned))
        object.__setattr__(self, 'parameters', dict(self.parameters))

    @property
    def n_sites(self):
        return len(self.site_labels)

    @cached_property
    def _index(self):
        return {label: i for i, label in enumerate(self.site_labels)}

    def site_index(self, label):
        """Index of a site given its label (int, or [cell..., sublattice])."""
        key = _normalize_label(label)
        if key not in self._index and isinstance(key, tuple) and len(key[0]) == 1 and key[1] == 0:
            # [n, 0] addresses site n of a one-sublattice chain
            key = key[0][0]
        try:
            return self._index[key]
        except (KeyError, TypeError):
            raise SiteIndexError(f'Site {label!r} does not exist in this bath.')

    def check_index(self, index):
        if not 0 <= int(index) < self.n_sites:
            raise SiteIndexError(f'Site index {index} out of range [0, {self.n_sites}).')
        return int(index)

    @cached_property
    def hopping_arrays(self):
        if not self.hoppings:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0, complex)
        rows, cols, amplitudes = zip(*self.hoppings)
        return np.array(rows), np.array(cols), np.array(amplitudes, dtype=complex)

    @property
    def is_real(self):
        return not np.any(self.hopping_arrays[2].imag)

    @cached_property
    def adjacency(self):
        """Unweighted symmetric connectivity, used for shell distances."""
        rows, cols, _ = self.hopping_arrays
        data = np.ones(2 * len(rows))
        return sparse.csr_matrix(
            (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(self.n_sites, self.n_sites),
        )

    @cached_property
    def coordination(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(int)

    def cell_and_sublattice(self, index):
        label = self.site_labels[index]
        if isinstance(label, int):
            return (label,), 0
        return label

    @cached_property
    def cell_indices(self):
        """Integer cell vector per site (n_sites × dimension)."""
        return np.array([self.cell_and_sublattice(i)[0] for i in range(self.n_sites)], dtype=int)

    @cached_property
    def sublattices(self):
        return np.array([self.cell_and_sublattice(i)[1] for i in range(self.n_sites)], dtype=int)

    @cached_property
    def coordinates(self):
        """Real-space position per site; falls back to the label for custom graphs."""
        cells = self.cell_indices.astype(float)
        if self.unit_cell is None:
            return cells
        spec = self.unit_cell
        return cells @ spec.bravais_vectors + spec.basis_positions[self.sublattices]

    @property
    def supports_bloch(self):
        """Bloch sums apply to vacancy-free lattices built from a unit cell."""
        return self.unit_cell is not None and not self.parameters.get('vacancies')

    @property
    def hopping_scale(self):
        return float(self.parameters.get('J', 1.0))


@dataclass(frozen=True, eq=False)
class BandStructure:
    """Bands ω_nk and Bloch vectors u_nβ(k) on a uniform grid of reduced wave vectors."""
    k_grid: np.ndarray
    energies: np.ndarray
    bloch_vectors: np.ndarray
    resolution: int
    spec: BlochSpec

    def __post_init__(self):
        for name in ('k_grid', 'energies', 'bloch_vectors'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def band_count(self):
        return self.energies.shape[1]

    @property
    def band_edges(self):
        return np.column_stack([self.energies.min(axis=0), self.energies.max(axis=0)])

    @property
    def span(self):
        return float(self.energies.max() - self.energies.min())

    @property
    def sampling_spacing(self):
        """Typical energy step between neighbouring k samples."""
        return max(self.span, 1e-12) / self.resolution

    @property
    def cartesian_k(self):
        reciprocal = self.spec.reciprocal_vectors
        if reciprocal is None:
            return self.k_grid
        return self.k_grid @ reciprocal / (2 * np.pi)

    def excludes(self, omega, margin=0.0):
        edges = self.band_edges
        return bool(np.all((omega < edges[:, 0] - margin) | (omega > edges[:, 1] + margin)))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'eigenvalues', _frozen(self.eigenvalues, float))
        object.__setattr__(self, 'eigenvectors', _frozen(self.eigenvectors))

    @property
    def span(self):
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    @property
    def level_spacing(self):
        n = len(self.eigenvalues)
        return self.span / (n - 1) if n > 1 else 0.0

    def overlaps(self, vector):
        """⟨v_m|ψ⟩ for every eigenvector."""
        return self.eigenvectors.conj().T @ vector


def _normalize_label(label):
    if isinstance(label, (int, np.integer)):
        return int(label)
    if isinstance(label, (list, tuple)):
        if len(label) == 2 and isinstance(label[0], (list, tuple)):
            return tuple(int(c) for c in label[0]), int(label[1])
        if len(label) == 1:
            return int(label[0])
        *cell, sublattice = label
        return tuple(int(c) for c in cell), int(sublattice)
    raise SiteIndexError(f'Unsupported site label {label!r}.')
