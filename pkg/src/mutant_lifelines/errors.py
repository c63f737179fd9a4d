"""Exception hierarchy.

Two families map onto the CLI exit codes: ``FormatError`` subclasses are
I/O or input-format problems (exit 2), ``DomainError`` subclasses are
violations of the analysis model itself (exit 1).
"""

from __future__ import annotations


class LifelineError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LifelineError):
    pass


class FormatError(LifelineError):
    pass


# diff_map
class MalformedDiff(FormatError):
    pass


class LineOutOfRange(DomainError):
    pass


# lifeline
class EmptyCohort(DomainError):
    pass


# subsumption
class UnknownMutant(DomainError):
    pass


class UnknownTestId(FormatError):
    pass


class LengthMismatch(DomainError):
    pass


class EmptySubset(DomainError):
    pass


# selection_sim
class EmptyPool(DomainError):
    pass


class DivisionByZeroRelevance(DomainError):
    pass


# ingest
class ManifestNotFound(FormatError):
    pass


class ManifestSchemaError(FormatError):
    pass


class MissingArtifactPath(FormatError):
    pass


class CsvSchemaError(FormatError):
    pass


class DuplicateMutantKey(FormatError):
    pass


class UnknownMutantInMatrix(FormatError):
    pass


class InvalidTimeline(DomainError):
    """Raised when an assembled timeline fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
