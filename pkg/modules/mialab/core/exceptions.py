"""
Custom Exceptions.

Application-specific exception classes for consistent error handling.
Codes follow {CATEGORY}_{NOUN}_{STATE}; see docs/10-error-codes.md.
"""

from typing import Any


class ApplicationError(Exception):
    """Base exception for all application errors."""

    def __init__(self, message: str, code: str = "SYS_INTERNAL_ERROR") -> None:
        self.message = message
        self.code = code
        super().__init__(self.message)


# =============================================================================
# numerics
# =============================================================================


class NumericDomainError(ApplicationError):
    """Raised when a numeric kernel receives an argument outside its domain."""

    def __init__(self, message: str = "Argument outside function domain") -> None:
        super().__init__(message, code="NUM_ARGUMENT_INVALID")


class NumericOverflowError(ApplicationError):
    """Raised when an argument exceeds the overflow guard."""

    def __init__(self, message: str = "Argument exceeds overflow guard") -> None:
        super().__init__(message, code="NUM_ARGUMENT_OVERFLOW")


class SamplerError(ApplicationError):
    """Raised when a rejection sampler exhausts its iteration budget."""

    def __init__(self, message: str = "Rejection sampler did not accept") -> None:
        super().__init__(message, code="NUM_SAMPLER_EXHAUSTED")


class DegenerateLabelsError(ApplicationError):
    """Raised when AUC is requested for single-class labels."""

    def __init__(self, message: str = "Labels contain a single class") -> None:
        super().__init__(message, code="NUM_LABELS_DEGENERATE")


# =============================================================================
# nn
# =============================================================================


class ShapeMismatchError(ApplicationError):
    """Raised when array shapes do not line up."""

    def __init__(self, message: str = "Shape mismatch") -> None:
        super().__init__(message, code="NN_SHAPE_MISMATCH")


class StaleCacheError(ApplicationError):
    """Raised when a backward pass receives a cache from a different forward call."""

    def __init__(self, message: str = "Forward cache does not match") -> None:
        super().__init__(message, code="NN_CACHE_STALE")


class CheckpointError(ApplicationError):
    """Raised when a checkpoint container is malformed."""

    def __init__(self, message: str = "Invalid checkpoint") -> None:
        super().__init__(message, code="NN_CHECKPOINT_INVALID")


# =============================================================================
# data
# =============================================================================


class DatasetParseError(ApplicationError):
    """Raised when an input record cannot be parsed. Carries the 1-based line number."""

    def __init__(self, message: str = "Malformed record", line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, code="DATA_RECORD_INVALID")


class DuplicatePairError(ApplicationError):
    """Raised when a (user, item) pair appears twice."""

    def __init__(self, message: str = "Duplicate (user, item) pair", line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, code="DATA_PAIR_DUPLICATE")


class DegenerateSplitError(ApplicationError):
    """Raised when a split or member partition ends up empty."""

    def __init__(self, message: str = "Split is empty") -> None:
        super().__init__(message, code="DATA_SPLIT_EMPTY")


class SplitInvariantError(ApplicationError):
    """Raised by the bundle verifier when a split invariant is violated."""

    def __init__(self, message: str = "Split invariant violated") -> None:
        super().__init__(message, code="DATA_SPLIT_INVALID")


class CoverageError(ApplicationError):
    """Raised when catalog items have no interactions to learn an embedding from."""

    def __init__(self, message: str = "Catalog item without interactions") -> None:
        super().__init__(message, code="DATA_ITEM_UNCOVERED")


# =============================================================================
# recommenders
# =============================================================================


class InsufficientCatalogError(ApplicationError):
    """Raised when fewer than k candidate items remain for a user."""

    def __init__(self, message: str = "Not enough candidate items") -> None:
        super().__init__(message, code="REC_CATALOG_INSUFFICIENT")


class DivergenceError(ApplicationError):
    """Raised when factorization training RMSE blows up."""

    def __init__(self, message: str = "Training diverged") -> None:
        super().__init__(message, code="REC_TRAINING_DIVERGED")


# =============================================================================
# dlmia
# =============================================================================


class NonFiniteLossError(ApplicationError):
    """Raised when a training loss turns NaN or infinite."""

    def __init__(
        self,
        message: str = "Non-finite loss",
        phase: str | None = None,
        epoch: int | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        self.phase = phase
        self.epoch = epoch
        self.details = details or {}
        if phase is not None:
            message = f"{message} (phase={phase}, epoch={epoch})"
        super().__init__(message, code="ATK_LOSS_NONFINITE")


# =============================================================================
# configuration / orchestration
# =============================================================================


class ConfigurationError(ApplicationError):
    """Raised when experiment configuration is invalid."""

    def __init__(self, message: str = "Invalid configuration") -> None:
        super().__init__(message, code="VAL_CONFIG_INVALID")


class ExperimentStageError(ApplicationError):
    """Wraps a module error with the experiment stage it occurred in."""

    def __init__(self, stage: str, cause: ApplicationError) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause.message} ({cause.code})", code="EXP_STAGE_FAILED")
