"""Exception types shared across the toolkit."""


class AnnokitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(AnnokitError):
    """A file or wire payload does not conform to its declared format."""


class ValidationError(AnnokitError):
    """Data violates an invariant (bounds, overlap, length mismatch...)."""


class ConfigError(AnnokitError):
    """A configuration value is inconsistent or incomplete."""


class UndefinedMetricError(AnnokitError):
    """A metric has no defined value on this input (zero denominator)."""


class ResolutionError(AnnokitError):
    """No model could be resolved for an annotator."""


class UnknownSuggestionError(AnnokitError):
    """A decision referenced a suggestion id that does not exist."""


class DecisionStateError(AnnokitError):
    """A decision was applied to a suggestion that is no longer pending."""


class RequestError(AnnokitError):
    """A service request is malformed or violates a precondition (4xx)."""


class BusyError(AnnokitError):
    """An exclusive operation (model adjustment) is already in flight."""


class ServiceUnavailableError(AnnokitError):
    """The service cannot answer yet (no model registered)."""
