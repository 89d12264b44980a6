"""Transport-only client for the sv6d reward service."""

__version__ = "0.1.0"

from .client import (
    ClientConfig,
    ClientError,
    RequestValidationError,
    RewardClient,
    RewardResult,
    SchemaMismatchError,
    TransportError,
)

__all__ = [
    "__version__",
    "ClientConfig",
    "ClientError",
    "RequestValidationError",
    "RewardClient",
    "RewardResult",
    "SchemaMismatchError",
    "TransportError",
]
