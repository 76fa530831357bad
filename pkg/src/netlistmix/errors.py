"""Exception hierarchy shared across the package."""


class NetlistError(ValueError):
    """Base class for netlist parse/validation failures."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class UnknownModel(NetlistError):
    pass


class ArityMismatch(NetlistError):
    pass


class MalformedNet(NetlistError):
    pass


class MalformedParam(NetlistError):
    pass


class MalformedLine(NetlistError):
    pass


class DuplicateComponentId(NetlistError):
    pass


class ElementCountMismatch(ValueError):
    """Raised when two component lines with different token counts are mixed."""


class InvalidMix(ValueError):
    """A token-level mix produced something that is not a component line."""


class NormalizationDiverged(UserWarning):
    """Normalization hit its iteration cap while still changing."""


class SamplingExhausted(RuntimeError):
    pass


class EmptyComponentList(ValueError):
    pass


class EmptyEliteSet(ValueError):
    pass


class UnsupportedModel(ValueError):
    pass


class MissingPlaceholder(ValueError):
    pass


class MultiplePlaceholders(ValueError):
    pass


class SpawnFailure(RuntimeError):
    """The simulator binary could not be started at all."""


class MalformedPattern(ValueError):
    pass


class ConfigError(ValueError):
    pass


class SchemaError(ConfigError):
    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else str(key))


class ConflictingPolicy(ConfigError):
    pass


class MissingFile(ConfigError, FileNotFoundError):
    pass


class EvaluatorUnavailable(RuntimeError):
    pass
