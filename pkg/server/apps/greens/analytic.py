# apps/greens/analytic.py
"""
Closed-form resolvent of the infinite coupled-cavity array with hopping -J.

Every element follows from the root w of w² + ((z - ω_c)/J) w + 1 = 0 with
|w| < 1 (Im w > 0 on the band itself, the ε → 0⁺ side):

    ⟨n|G_B(z)|n'⟩ = w^|n-n'| / (J (w - 1/w)).

On the band, w = e^{ik}, which gives -(i/v) e^{ik|n-n'|} with v = 2J sin k.
"""
import numpy as np

from utils.exceptions import InvalidArgument, OutOfBand, PoleProximity


def chain_wave_factor(z, J=1.0, omega_c=0.0) -> complex:
    z = complex(z)
    if J <= 0:
        raise InvalidArgument(f'Hopping rate J must be positive, got {J}.')
    x = (z - omega_c) / (2 * J)
    if z.imag == 0 and abs(x.real) <= 1:
        return complex(-x.real, np.sqrt(1 - x.real ** 2))
    root = np.sqrt(x * x - 1 + 0j)
    candidates = (-x + root, -x - root)
    return complex(min(candidates, key=abs))


EDGE_TOL = 1e-15


def _off_edge(w, z):
    if abs(w * w - 1) < EDGE_TOL:
        raise PoleProximity('Band edge of the chain: the resolvent diverges.', diagnostics={'z': str(z)})
    return w


def chain_green(delta, z, J=1.0, omega_c=0.0) -> complex:
    w = _off_edge(chain_wave_factor(z, J, omega_c), z)
    return complex(w ** abs(int(delta)) / (J * (w - 1 / w)))


def chain_wavevector(omega, J=1.0, omega_c=0.0) -> float:
    """k in (0, π) with ω = ω_c - 2J cos k."""
    x = (omega - omega_c) / (2 * J)
    if abs(x) >= 1:
        raise OutOfBand(diagnostics={'omega': omega, 'band': [omega_c - 2 * J, omega_c + 2 * J]})
    return float(np.arccos(-x))


def group_velocity(omega, J=1.0, omega_c=0.0) -> float:
    return float(2 * J * np.sin(chain_wavevector(omega, J, omega_c)))


def bath_green_chain_analytic(n, n2, omega, J=1.0, omega_c=0.0) -> complex:
    """In-band boundary value -(i/v) e^{ik|n-n'|}."""
    x = (omega - omega_c) / (2 * J)
    if abs(x) >= 1:
        raise OutOfBand(
            f'ω = {omega} lies outside the band [{omega_c - 2 * J}, {omega_c + 2 * J}]; use bath_green_chain_gap.',
            diagnostics={'omega': omega, 'J': J},
        )
    root = np.sqrt(1 - x * x)
    return complex(-1j / (2 * J * root) * (-x + 1j * root) ** abs(int(n) - int(n2)))


def bath_green_chain_gap(n, n2, omega, J=1.0, omega_c=0.0) -> float:
    """Evanescent form outside the band; real, decaying as |w|^|n-n'|."""
    x = (omega - omega_c) / (2 * J)
    if abs(x) <= 1:
        raise OutOfBand(
            f'ω = {omega} lies inside the band; use bath_green_chain_analytic.',
            diagnostics={'omega': omega, 'J': J},
        )
    return chain_green(int(n) - int(n2), omega, J, omega_c).real


def chain_green_matrix(rows, cols, z, J=1.0, omega_c=0.0) -> np.ndarray:
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    w = _off_edge(chain_wave_factor(z, J, omega_c), z)
    distance = np.abs(rows[:, None] - cols[None, :])
    return w ** distance / (J * (w - 1 / w))
