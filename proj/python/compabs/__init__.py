"""Python access to the compabs core library."""

from ._compabs import (
    CompabsError,
    __version__,
    check_certificates,
    closeness_bound,
    memory_estimate,
    monolithic_memory_estimate,
    msample,
    validate,
    wilson_interval,
)

__all__ = [
    "CompabsError",
    "__version__",
    "check_certificates",
    "closeness_bound",
    "memory_estimate",
    "monolithic_memory_estimate",
    "msample",
    "validate",
    "wilson_interval",
]
