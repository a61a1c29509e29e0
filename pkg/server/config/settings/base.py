import os
from pathlib import Path

from dotenv import load_dotenv

from config.settings.logging import LOGGING

# Base Settings
BASE_DIR = Path(__file__).resolve().parent.parent.parent
env_path = BASE_DIR / '.env'
load_dotenv(dotenv_path=env_path)
SECRET_KEY = os.getenv('SECRET_KEY', 'giant-atoms-local-only')

# Application Settings
INSTALLED_APPS = [
    'rest_framework',
    'apps.bath.apps.BathConfig',
    'apps.emitters.apps.EmittersConfig',
    'apps.greens.apps.GreensConfig',
    'apps.boundstates.apps.BoundstatesConfig',
    'apps.dynamics.apps.DynamicsConfig',
    'apps.scenarios.apps.ScenariosConfig',
]

# No persistence: every result is written as report.json + CSV
DATABASES = {}

# Internationalization

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

REST_FRAMEWORK = {
    'NON_FIELD_ERRORS_KEY': 'error',
}


def _env_float(name, default):
    return float(os.getenv(name, default))


# Numerical Settings (energies in units of J)
GIANT_ATOMS = {
    'DENSE_LIMIT': int(os.getenv('GLA_DENSE_LIMIT', 10000)),
    'E_TOL': _env_float('GLA_E_TOL', 1e-8),
    'C_TOL': _env_float('GLA_C_TOL', 1e-8),
    'IM_TOL_FLOOR': _env_float('GLA_IM_TOL_FLOOR', 1e-8),
    'IM_TOL_FACTOR': _env_float('GLA_IM_TOL_FACTOR', 10.0),
    'LOCALIZATION_TOL': _env_float('GLA_LOCALIZATION_TOL', 1e-6),
    'PSD_TOL': _env_float('GLA_PSD_TOL', 1e-8),
    'DFH_TOL_FACTOR': _env_float('GLA_DFH_TOL_FACTOR', 1e-3),
    'DFH_TOL_GAP': _env_float('GLA_DFH_TOL_GAP', 1e-8),
    'EPSILON_FACTOR': _env_float('GLA_EPSILON_FACTOR', 10.0),
    'CONVERGENCE_RTOL': _env_float('GLA_CONVERGENCE_RTOL', 1e-3),
    'WEAK_COUPLING_THRESHOLD': _env_float('GLA_WEAK_COUPLING_THRESHOLD', 0.1),
    'F_TOL': _env_float('GLA_F_TOL', 1e-6),
    'ROOT_XTOL': _env_float('GLA_ROOT_XTOL', 1e-12),
    'POLE_DISTANCE': _env_float('GLA_POLE_DISTANCE', 1e-9),
    'GAP_MARGIN': _env_float('GLA_GAP_MARGIN', 1e-6),
    'GAP_SPACING_FACTOR': _env_float('GLA_GAP_SPACING_FACTOR', 5.0),
    'K_RESOLUTION': int(os.getenv('GLA_K_RESOLUTION', 4096)),
    'K_RESOLUTION_2D': int(os.getenv('GLA_K_RESOLUTION_2D', 256)),
    'LDOS_KERNEL_FACTOR': _env_float('GLA_LDOS_KERNEL_FACTOR', 4.0),
    'PINNING_COUPLINGS': (0.05, 0.5, 1.0),
    'SWEEP_WORKERS': int(os.getenv('GLA_SWEEP_WORKERS', 4)),
    'OUTPUT_ROOT': Path(os.getenv('GLA_OUTPUT_ROOT', BASE_DIR / 'runs')),
}
