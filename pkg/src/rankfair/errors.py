"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors exit 1, data validation
errors exit 2, provider/backend failures exit 3.
"""


class RankfairError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(RankfairError):
    """Invalid data: malformed files, broken invariants, bad metric inputs."""


class ProviderError(RankfairError):
    """An embedding provider failed: cache miss, bad endpoint, bad vector."""


class TranslationBackendError(RankfairError):
    """A translation backend failed: missing mock entry, HTTP failure."""


class UsageError(RankfairError):
    """Command-line arguments could not be interpreted."""
