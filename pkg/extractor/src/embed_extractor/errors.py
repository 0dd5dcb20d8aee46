class ExtractorError(Exception):
    """Base class for extraction failures."""


class TemplateError(ExtractorError):
    """A (concept, label) pair has no phrase template."""


class AuthError(ExtractorError):
    """Missing or rejected API credentials."""


class QuotaError(ExtractorError):
    """The API account is out of quota; retrying will not help."""


class ServiceError(ExtractorError):
    """The embedding service kept failing after retries."""


class DimensionError(ExtractorError):
    """Returned vectors do not match the expected embedding size."""
