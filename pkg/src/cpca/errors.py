"""Exception hierarchy shared by all cpca modules.

Every error carries an ``exit_code`` used by the command-line layer:
2 = invalid configuration or violated call contract, 3 = unreadable or
inconsistent data, 4 = numerical failure.
"""


class CpcaError(Exception):
    """Base class for all cpca errors."""

    exit_code = 2
    code = "ERROR"

    def one_line(self) -> str:
        """Machine-parsable single-line rendering, ``CODE: message``."""
        return f"{self.code}: {self}"


class ConfigError(CpcaError):
    exit_code = 2
    code = "ECONFIG"


class ContractViolationError(ConfigError):
    """An operation was called with inputs violating its preconditions."""

    code = "ECONTRACT"


class GridMismatchError(ConfigError):
    """Two objects live on incompatible time grids."""

    code = "EGRID"


class DegenerateInputError(ConfigError):
    """Input is identically zero or otherwise has no usable content."""

    code = "EDEGENERATE"


class LinearDependenceError(ConfigError):
    """Mode functions expected to be independent are (nearly) parallel."""

    code = "ELINDEP"


class DataFormatError(CpcaError):
    exit_code = 3
    code = "EDATA"


class ModeCountError(DataFormatError):
    """The spectrum does not contain the expected number of occupied modes."""

    code = "EMODECOUNT"


class NumericalError(CpcaError):
    exit_code = 4
    code = "ENUMERIC"


class SamplerConfigurationError(NumericalError):
    """Phase-space rejection sampler failed to produce accepted draws."""

    code = "ESAMPLER"


class SingleModeStateError(NumericalError):
    """Second mean photon number is not positive; not a two-mode state."""

    code = "ESINGLEMODE"


class InconsistentMomentsError(NumericalError):
    """Estimated moments lie outside the physically allowed region."""

    code = "EMOMENTS"
