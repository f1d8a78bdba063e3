"""Exception types shared across the package."""


class BiasforgeError(Exception):
    """Base class for all package errors."""


class ValidationError(BiasforgeError):
    """Input violates a documented precondition or invariant."""


class ManifestParseError(BiasforgeError):
    """A manifest line could not be parsed. Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GatewayError(BiasforgeError):
    """Base class for correction-gateway failures."""


class GatewayAuthError(GatewayError):
    """The endpoint rejected the credential. Not retried."""


class GatewayTimeoutError(GatewayError):
    """The request timed out after all retries."""


class GatewayTransportError(GatewayError):
    """Transient transport failure (connection reset, 5xx) after all retries."""


class GatewayProtocolError(GatewayError):
    """The endpoint answered with a body we could not interpret."""
