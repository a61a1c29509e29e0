# server/utils/conf.py
"""
Access to the GIANT_ATOMS settings dict.

The numerical apps read tolerances through ``gla_settings`` so they keep
working when Django settings are not configured (library use).
"""
import threading
from contextlib import contextmanager
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

DEFAULTS = {
    'DENSE_LIMIT': 10000,
    'E_TOL': 1e-8,
    'C_TOL': 1e-8,
    'IM_TOL_FLOOR': 1e-8,
    'IM_TOL_FACTOR': 10.0,
    'LOCALIZATION_TOL': 1e-6,
    'PSD_TOL': 1e-8,
    'DFH_TOL_FACTOR': 1e-3,
    'DFH_TOL_GAP': 1e-8,
    'EPSILON_FACTOR': 10.0,
    'CONVERGENCE_RTOL': 1e-3,
    'WEAK_COUPLING_THRESHOLD': 0.1,
    'F_TOL': 1e-6,
    'ROOT_XTOL': 1e-12,
    'POLE_DISTANCE': 1e-9,
    'GAP_MARGIN': 1e-6,
    'GAP_SPACING_FACTOR': 5.0,
    'K_RESOLUTION': 4096,
    'K_RESOLUTION_2D': 256,
    'LDOS_KERNEL_FACTOR': 4.0,
    'PINNING_COUPLINGS': (0.05, 0.5, 1.0),
    'SWEEP_WORKERS': 4,
    'OUTPUT_ROOT': Path('runs'),
}


class GiantAtomSettings:
    def __init__(self, defaults):
        self.defaults = defaults
        self._overrides = {}
        self._lock = threading.RLock()

    def _user_settings(self):
        try:
            return getattr(settings, 'GIANT_ATOMS', {})
        except ImproperlyConfigured:
            return {}

    def __getattr__(self, name):
        if name not in self.defaults:
            raise AttributeError(f"Invalid giant-atom setting: '{name}'")
        if name in self._overrides:
            return self._overrides[name]
        return self._user_settings().get(name, self.defaults[name])

    @contextmanager
    def override(self, **values):
        """
        Temporarily replace settings, e.g. a scaled tolerance in the regression suite.

        Overrides are process-wide so sweep workers see them. The lock is held
        for the whole block: overriding threads take turns and nested
        overrides in one thread stack.
        """
        unknown = set(values) - set(self.defaults)
        if unknown:
            raise AttributeError(f"Invalid giant-atom settings: {sorted(unknown)}")
        with self._lock:
            previous = self._overrides
            self._overrides = {**previous, **values}
            try:
                yield self
            finally:
                self._overrides = previous


gla_settings = GiantAtomSettings(DEFAULTS)
