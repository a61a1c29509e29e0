from .dev import *

DEBUG = False

# Batch runs: keep the console to warnings, files keep everything
LOGGING['handlers']['console']['level'] = 'WARNING'
GIANT_ATOMS['SWEEP_WORKERS'] = int(os.getenv('GLA_SWEEP_WORKERS', os.cpu_count() or 4))
