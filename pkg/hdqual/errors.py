"""
Exceptions raised by hdqual.

Every exception carries a short machine-readable ``code`` and the
``exit_code`` the command-line tool uses for it (2 configuration error,
3 data error, 4 runtime error). They also derive from the matching
builtin exception so that callers can catch ``ValueError`` etc.
"""


class HdqualError(Exception):
    """ base class of all hdqual errors """

    code = "ERROR"
    exit_code = 4


class ConfigError(HdqualError, ValueError):
    code = "CONFIG_ERROR"
    exit_code = 2


class InvalidArgumentError(ConfigError):
    code = "INVALID_ARGUMENT"


class ScenarioError(ConfigError):
    """ malformed projection scenario, names the offending field """

    code = "SCENARIO_ERROR"

    def __init__(self, field, message):
        super(ScenarioError, self).__init__(
            "scenario field '{}': {}".format(field, message)
        )
        self.field = field


class DataError(HdqualError, ValueError):
    code = "DATA_ERROR"
    exit_code = 3


class DimensionMismatchError(DataError):
    code = "DIMENSION_MISMATCH"


class InvalidInputError(DataError):
    code = "INVALID_INPUT"


class ZeroNormError(DataError):
    code = "ZERO_NORM"


class EmptyDatasetError(DataError):
    code = "EMPTY_DATASET"


class UnknownClassError(DataError):
    code = "UNKNOWN_CLASS"


class WindowTooLongError(DataError):
    code = "WINDOW_TOO_LONG"


class DegenerateDistributionError(DataError):
    code = "DEGENERATE_DISTRIBUTION"


class EmptyClassError(DataError):
    code = "EMPTY_CLASS"


class StratificationError(DataError):
    code = "STRATIFICATION_ERROR"


class ModelEncoderMismatchError(DataError):
    code = "MODEL_ENCODER_MISMATCH"


class ModelFormatError(DataError):
    code = "MODEL_FORMAT"


class ManifestError(DataError):
    """ missing or malformed recording manifest, names the path """

    code = "MANIFEST_ERROR"


class OutputPathError(DataError):
    code = "IO_ERROR"


class HdqualRuntimeError(HdqualError, RuntimeError):
    code = "RUNTIME_ERROR"
    exit_code = 4


class CapabilityUnavailableError(HdqualRuntimeError):
    code = "CAPABILITY_UNAVAILABLE"


class InsufficientSamplesError(HdqualRuntimeError):
    code = "INSUFFICIENT_SAMPLES"
