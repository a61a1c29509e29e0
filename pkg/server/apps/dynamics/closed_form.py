# apps/dynamics/closed_form.py
"""
Closed-form rates for two-point giant atoms on the infinite coupled-cavity
array, H_B = -J Σ|n⟩⟨n+1| + H.c. Each atom couples at x and x + d with
strengths ḡ cos θ and ḡ sin θ; at ω₀ inside the band the photon wave
number is k₀ and its group velocity v = 2J sin k₀.
"""
import numpy as np

from utils.exceptions import InvalidArgument


def _velocity(k0, J):
    if not 0 < k0 < np.pi:
        raise InvalidArgument(f'Wave number {k0} is outside the open band interval (0, π).')
    if J <= 0:
        raise InvalidArgument(f'Hopping rate must be positive, got {J}.')
    return 2 * J * np.sin(k0)


def _check_angle(theta):
    if not 0 <= theta <= np.pi / 2:
        raise InvalidArgument(f'Mixing angle {theta} outside [0, π/2].')


def decay_rate_closed_form(theta, k0, d, g_bar, J=1.0) -> float:
    """γ = (2ḡ²/v)[1 + sin 2θ cos k₀d] for one two-point atom."""
    _check_angle(theta)
    if d < 1:
        raise InvalidArgument(f'Coupling points must be at least one site apart, got d = {d}.')
    v = _velocity(k0, J)
    return float(2 * g_bar ** 2 / v * (1 + np.sin(2 * theta) * np.cos(k0 * d)))


def braided_rates_closed_form(theta, k0, d, x21, g_bar, J=1.0):
    """
    (K₁₂, γ₁₂, γ₁₁) for a braided pair: atom 1 at {0, d}, atom 2 at
    {x21, x21 + d} with 0 < x21 < d.
    """
    _check_angle(theta)
    if int(d) != d or int(x21) != x21:
        raise InvalidArgument('Distances are counted in lattice sites.')
    if not 0 < x21 < d:
        raise InvalidArgument(f'A braided pair needs 0 < x21 < d, got x21 = {x21}, d = {d}.')
    v = _velocity(k0, J)
    mixing = np.sin(2 * theta)
    scale = g_bar ** 2 / v
    K12 = scale * (np.sin(k0 * x21) + mixing * np.sin(k0 * d) * np.cos(k0 * x21))
    gamma12 = 2 * scale * np.cos(k0 * x21) * (1 + mixing * np.cos(k0 * d))
    gamma11 = decay_rate_closed_form(theta, k0, d, g_bar, J)
    return float(K12), float(gamma12), gamma11


def nested_cancellation(k0, x21, x22) -> float:
    """sin k₀x₂₁ + sin k₀x₂₂; zero when a nested inner atom decouples from the outer one."""
    if not 0 < x21 < x22:
        raise InvalidArgument(f'Nested points must satisfy 0 < x21 < x22, got {x21}, {x22}.')
    return float(np.sin(k0 * x21) + np.sin(k0 * x22))
