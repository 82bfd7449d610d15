"""Exception hierarchy shared by all guardian modules."""


class GuardianError(Exception):
    """Base class for every error raised by this package."""


class RejectedInputError(GuardianError):
    """An input record violates a precondition and names the offender."""


class InvalidArgumentError(GuardianError):
    """A caller-supplied argument is out of its documented domain."""


class DegenerateEmbeddingError(GuardianError):
    """A zero-norm vector reached a cosine computation."""


class DivergedTrainingError(GuardianError):
    """Training produced a non-finite loss."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class ConfigurationError(GuardianError):
    """Mismatched dimensions or otherwise inconsistent component wiring."""


class MalformedReportError(GuardianError):
    """A completion is missing a required report section."""

    def __init__(self, section):
        super().__init__(f"report is missing required section: {section}")
        self.section = section


class SummaryGenerationError(GuardianError):
    """The completion backend kept returning unparseable output."""

    def __init__(self, message, completion=None):
        super().__init__(message)
        self.completion = completion


class BackendUnavailableError(GuardianError):
    """Transport-level failure talking to a completion backend."""


class ParseError(GuardianError):
    """Rule-expression syntax error, annotated with a source position."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class PolicyInapplicableError(GuardianError):
    """A refinement policy cannot run on the available data."""


class CandidateRejectedError(GuardianError):
    """The backend returned an unusable rule candidate; feeds the loop."""

    def __init__(self, message, completion=None):
        super().__init__(message)
        self.completion = completion


class SimulationInputError(GuardianError):
    """A candidate rule references data absent from the replay horizon."""


class NotFoundError(GuardianError):
    """Lookup by id failed."""


class InvalidStateError(GuardianError):
    """A state transition was attempted from the wrong state."""


class InputError(GuardianError):
    """An ingestion source could not be read."""
