"""Exception hierarchy shared by all pipeline stages."""


class ForgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ForgeError):
    """Missing or malformed configuration input."""


class IntegrityError(ForgeError):
    """A referenced file or command output does not exist."""


class ParseError(ForgeError):
    """Syntactic error in C text, process expressions or aspect files."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc += f" at line {line}"
        if column is not None:
            loc += f" column {column}"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class TargetError(ForgeError):
    """No verification target matched the configured patterns."""


class SpecError(ForgeError):
    """A decomposition specification references an unresolvable name."""


class SemanticError(ForgeError):
    """An intermediate model references an undeclared label or action."""


class SignalTypeError(ForgeError):
    """Send/receive parameter vectors disagree in length or types."""


class GenerationError(ForgeError):
    """A scenario generator stage failed."""

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage


class TranslationError(ForgeError):
    """A model violates the sequential-translator restrictions."""


class MergeError(ForgeError):
    """Conflicting definitions while merging sources."""


class TaskError(ForgeError):
    """A verification task bundle could not be assembled."""


class SchedulerError(ForgeError):
    """The scheduler could not spawn or control a backend run."""


class WitnessError(ForgeError):
    """A violation witness document cannot be interpreted."""
