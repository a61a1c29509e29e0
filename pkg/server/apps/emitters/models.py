# apps/emitters/models.py
"""
Giant atoms and their site states.

An atom couples to cavities x_l with strengths g_l; in the one-excitation
sector H|e⟩ = ω₀|e⟩ + ḡ|χ⟩ with |χ⟩ = Σ α_l |x_l⟩ and α_l = g_l / ḡ.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import sparse

from utils.exceptions import DegenerateEmitter, InvalidGeometry, SiteIndexError, UnsupportedConfiguration

NORM_TOL = 1e-12


def _frozen(array, dtype=None):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GiantAtom:
    omega0: float
    couplings: tuple
    label: str = ''

    def __post_init__(self):
        couplings = tuple((int(site), complex(g)) for site, g in self.couplings)
        if not couplings:
            raise DegenerateEmitter('An atom needs at least one coupling point.')
        sites = [site for site, _ in couplings]
        if len(set(sites)) != len(sites):
            raise InvalidGeometry(f'Coupling points must be distinct, got {sites}.')
        if min(sites) < 0:
            raise SiteIndexError(f'Negative site index in {sites}.')
        if not any(g != 0 for _, g in couplings):
            raise DegenerateEmitter(diagnostics={'couplings': [str(g) for _, g in couplings]})
        object.__setattr__(self, 'couplings', couplings)
        object.__setattr__(self, 'omega0', float(self.omega0))

    @property
    def sites(self) -> np.ndarray:
        return np.array([site for site, _ in self.couplings], dtype=int)

    @property
    def strengths(self) -> np.ndarray:
        return np.array([g for _, g in self.couplings], dtype=complex)

    @property
    def n_points(self):
        return len(self.couplings)

    @property
    def is_giant(self):
        return self.n_points >= 2

    @cached_property
    def g_bar(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.strengths) ** 2)))

    @property
    def alpha(self) -> np.ndarray:
        return self.strengths / self.g_bar

    def scaled(self, factor) -> 'GiantAtom':
        """Same geometry, every g_l multiplied by ``factor``."""
        return replace(self, couplings=tuple((site, g * factor) for site, g in self.couplings))

    def with_strength(self, g) -> 'GiantAtom':
        """Rescale so that the strongest coupling point has |g_l| = g."""
        return self.scaled(g / np.abs(self.strengths).max())

    def relocated(self, site_map) -> 'GiantAtom':
        """Same couplings on the sites ``site_map[x_l]`` of another lattice."""
        site_map = np.asarray(site_map, dtype=int)
        return replace(self, couplings=tuple((int(site_map[site]), g) for site, g in self.couplings))


@dataclass(frozen=True, eq=False)
class SiteState:
    """Single-photon state supported on a few sites."""
    sites: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'sites', _frozen(self.sites, int))
        object.__setattr__(self, 'amplitudes', _frozen(self.amplitudes, complex))
        if self.sites.shape != self.amplitudes.shape:
            raise InvalidGeometry('One amplitude per site is required.')
        norm = np.sum(np.abs(self.amplitudes) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise DegenerateEmitter(f'Site state is not normalized (norm² = {norm}).')

    def dense(self, n_sites) -> np.ndarray:
        vector = np.zeros(n_sites, dtype=complex)
        vector[self.sites] = self.amplitudes
        return vector

    def sparse(self, n_sites):
        return sparse.csc_matrix(
            (self.amplitudes, (self.sites, np.zeros(len(self.sites), dtype=int))), shape=(n_sites, 1)
        )

    def overlap(self, vector) -> complex:
        """⟨χ|v⟩ for a dense site vector."""
        return complex(np.vdot(self.amplitudes, np.asarray(vector)[self.sites]))


@dataclass(frozen=True, eq=False)
class ChiFrame:
    """
    Orthonormal field basis in which the atom couples to χ only.

    ``basis`` is the unitary U whose columns are χ, the χ⊥_i and then every
    site outside the coupling points in ascending order; ``transformed_bath``
    is U† H_B U in that basis.
    """
    chi: SiteState
    chi_perp: tuple
    basis: sparse.csc_matrix
    transformed_bath: sparse.csr_matrix
    other_sites: np.ndarray

    @property
    def n_points(self):
        return 1 + len(self.chi_perp)

    def to_sites(self, coefficients) -> np.ndarray:
        """Map frame coefficients back to the site basis."""
        return self.basis @ coefficients

    def unitarity_residual(self) -> float:
        gram = (self.basis.conj().T @ self.basis).toarray()
        return float(np.abs(gram - np.eye(gram.shape[0])).max())


@dataclass(frozen=True, eq=False)
class EmitterEnsemble:
    atoms: tuple
    n_sites: Optional[int] = None
    labels: tuple = field(default=())

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise InvalidGeometry('An ensemble needs at least one atom.')
        object.__setattr__(self, 'atoms', atoms)
        labels = tuple(atom.label or f'atom{j + 1}' for j, atom in enumerate(atoms))
        if len(set(labels)) != len(labels):
            raise InvalidGeometry(f'Excited-state labels collide: {labels}.')
        object.__setattr__(self, 'labels', labels)
        if self.n_sites is not None:
            for atom, label in zip(atoms, labels):
                if atom.sites.max() >= self.n_sites:
                    raise SiteIndexError(
                        f'{label} couples to site {atom.sites.max()} outside a bath of {self.n_sites} sites.'
                    )

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __getitem__(self, index):
        return self.atoms[index]

    @property
    def g_bars(self) -> np.ndarray:
        return np.array([atom.g_bar for atom in self.atoms])

    @property
    def uniform_omega0(self):
        return len({atom.omega0 for atom in self.atoms}) == 1

    @property
    def uniform_g_bar(self):
        return bool(np.allclose(self.g_bars, self.g_bars[0], rtol=1e-12, atol=0))

    @property
    def omega0(self) -> float:
        if not self.uniform_omega0:
            raise UnsupportedConfiguration(
                'Atoms have different bare frequencies.',
                diagnostics={'omega0': [atom.omega0 for atom in self.atoms]},
            )
        return self.atoms[0].omega0

    def scaled(self, factor) -> 'EmitterEnsemble':
        return replace(self, atoms=tuple(atom.scaled(factor) for atom in self.atoms), labels=())
