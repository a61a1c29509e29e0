# server/utils/exceptions.py
from utils.constants import ExitCodes


class GiantAtomError(Exception):
    """
    Base class for every computation error raised by the apps.

    Subclasses set ``default_detail``/``default_code`` and the process exit
    code the command line maps them to. ``diagnostics`` carries the numbers
    that explain the failure (residuals, ε pairs, offending sites) and ends up
    in the traceback file written by the error log handler.
    """
    default_detail = 'Giant-atom computation failed.'
    default_code = 'error'
    exit_code = 1

    def __init__(self, detail=None, code=None, diagnostics=None):
        self.detail = detail if detail is not None else self.default_detail
        self.code = code if code is not None else self.default_code
        self.diagnostics = dict(diagnostics or {})
        super().__init__(self.detail)

    def __str__(self):
        return str(self.detail)


class InvalidGeometry(GiantAtomError):
    default_detail = 'Lattice or emitter geometry is invalid.'
    default_code = 'invalid_geometry'
    exit_code = ExitCodes.CONFIG_ERROR


class SpecError(GiantAtomError):
    default_detail = 'Bloch specification does not give a Hermitian h(k).'
    default_code = 'spec_error'
    exit_code = ExitCodes.CONFIG_ERROR


class SiteIndexError(GiantAtomError, IndexError):
    default_detail = 'Site does not exist in the bath.'
    default_code = 'index_error'
    exit_code = ExitCodes.CONFIG_ERROR


class ResourceLimitError(GiantAtomError):
    default_detail = 'Bath exceeds the dense diagonalization limit; use the Bloch path.'
    default_code = 'resource_error'
    exit_code = ExitCodes.CONFIG_ERROR


class DegenerateEmitter(GiantAtomError):
    default_detail = 'Emitter has no non-zero coupling.'
    default_code = 'degenerate_emitter'
    exit_code = ExitCodes.CONFIG_ERROR


class RegularizationRequired(GiantAtomError):
    default_detail = 'Energy lies inside a band; a positive broadening is required.'
    default_code = 'regularization_required'
    exit_code = ExitCodes.CONVERGENCE_ERROR


class OutOfBand(GiantAtomError):
    default_detail = 'Energy lies outside the band of the analytic chain resolvent.'
    default_code = 'out_of_band'


class PoleProximity(GiantAtomError):
    default_detail = 'Energy is too close to an eigenvalue of the total Hamiltonian.'
    default_code = 'pole_proximity'


class NotAGap(GiantAtomError):
    default_detail = 'Interval touches a band.'
    default_code = 'not_a_gap'
    exit_code = ExitCodes.CONFIG_ERROR


class ConvergenceError(GiantAtomError):
    default_detail = 'Broadening limit did not converge.'
    default_code = 'convergence_error'
    exit_code = ExitCodes.CONVERGENCE_ERROR


class StaleRoot(GiantAtomError):
    default_detail = 'Pole function does not vanish at the requested energy.'
    default_code = 'stale_root'
    exit_code = ExitCodes.CONVERGENCE_ERROR


class UnsupportedConfiguration(GiantAtomError):
    default_detail = 'Configuration is outside the supported model.'
    default_code = 'unsupported_configuration'
    exit_code = ExitCodes.CONFIG_ERROR


class NotDecoherenceFree(GiantAtomError):
    default_detail = 'At least one atom seeds no weak-coupling bound state.'
    default_code = 'not_decoherence_free'


class InvalidState(GiantAtomError):
    default_detail = 'Initial state is not a valid density matrix.'
    default_code = 'invalid_state'
    exit_code = ExitCodes.CONFIG_ERROR


class InvalidArgument(GiantAtomError):
    default_detail = 'Argument outside the allowed domain.'
    default_code = 'invalid_argument'
    exit_code = ExitCodes.CONFIG_ERROR


class ConfigError(GiantAtomError):
    default_detail = 'Scenario configuration is invalid.'
    default_code = 'config_error'
    exit_code = ExitCodes.CONFIG_ERROR


class RegressionFailure(GiantAtomError):
    default_detail = 'Regression suite has failing rows.'
    default_code = 'regression_failure'
    exit_code = ExitCodes.REGRESSION_FAILURE
