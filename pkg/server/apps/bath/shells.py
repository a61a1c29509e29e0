# apps/bath/shells.py
"""
Hop-distance geometry of a bath: boundary sites, BFS shells and the outer
region used to decide whether a photonic amplitude is localized.
"""
import numpy as np
from scipy.sparse import csgraph

from apps.bath.models import BathGraph, per_bath
from utils.constants import Boundary


@per_bath
def boundary_sites(bath: BathGraph) -> np.ndarray:
    """
    Sites missing at least one bond compared with the best-connected site
    of the same sublattice. Periodic lattices have none.
    """
    coordination = bath.coordination
    sublattices = bath.sublattices
    missing = np.zeros(bath.n_sites, dtype=bool)
    for beta in np.unique(sublattices):
        members = sublattices == beta
        missing[members] = coordination[members] < coordination[members].max()
    return np.flatnonzero(missing)


def shell_distances(bath: BathGraph, sources) -> np.ndarray:
    """Hop distance from the nearest source site; unreachable sites get -1."""
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    if sources.size == 0:
        return np.full(bath.n_sites, -1)
    distances = csgraph.shortest_path(
        bath.adjacency, unweighted=True, directed=False, indices=sources
    )
    nearest = np.min(np.atleast_2d(distances), axis=0)
    nearest[~np.isfinite(nearest)] = -1
    return nearest.astype(int)


@per_bath
def _boundary_depth(bath: BathGraph):
    return shell_distances(bath, boundary_sites(bath))


def outer_region(bath: BathGraph, support, depth=1) -> np.ndarray:
    """
    Mask of the outermost ``depth`` shells. Open lattices measure from the
    boundary; lattices without a boundary take the shells farthest from
    ``support``.
    """
    if boundary_sites(bath).size:
        depth_from_boundary = _boundary_depth(bath)
        return (depth_from_boundary >= 0) & (depth_from_boundary < depth)
    distances = shell_distances(bath, support)
    reach = distances.max()
    if reach < depth + 1:
        return np.zeros(bath.n_sites, dtype=bool)
    return distances > reach - depth


def travel_distance(bath: BathGraph, sources) -> int:
    """
    Hops a wavefront needs before it can come back to the sources: distance
    to the nearest boundary site, or the eccentricity of the sources on a
    lattice without boundary.
    """
    distances = shell_distances(bath, sources)
    boundary = boundary_sites(bath)
    if bath.boundary == Boundary.OPEN and boundary.size:
        return int(distances[boundary].min())
    return int(distances.max())


def max_hopping_speed(bath: BathGraph) -> float:
    """Largest row sum of |H_B| off the diagonal, a bound on the photon speed in hops per unit time."""
    rows, cols, amplitudes = bath.hopping_arrays
    if not len(rows):
        return 0.0
    weights = np.abs(amplitudes)
    sums = np.bincount(rows, weights, bath.n_sites) + np.bincount(cols, weights, bath.n_sites)
    return float(sums.max())
