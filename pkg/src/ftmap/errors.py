"""Exception hierarchy shared across the package."""


class FtmapError(Exception):
    """Base class for all package errors."""


class ValidationError(FtmapError):
    """Data violates a documented range, shape, or precondition."""


class ParseError(FtmapError):
    """Malformed input file; the message names the line/byte offset."""


class ConfigError(FtmapError):
    """Invalid configuration value or unreadable referenced file."""


class MissingInputError(FtmapError):
    """A required stage input artifact does not exist."""


class FetchError(FtmapError):
    """Base class for metadata-endpoint client failures."""


class AuthError(FetchError):
    """Missing or rejected API key."""


class MalformedPageError(FetchError):
    """Endpoint returned a page that does not match the documented contract."""


class RetryExhaustedError(FetchError):
    """Transient network failures persisted through all retry attempts."""


class SceneGenerationError(FtmapError):
    """Could not place the requested number of disjoint buildings."""
