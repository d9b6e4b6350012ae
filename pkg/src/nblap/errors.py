"""Exception types shared across the package.

Each error carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class NblapError(Exception):
    exit_code = 1


class InputError(NblapError, ValueError):
    """Malformed file, bad configuration or unusable argument."""

    exit_code = 2


class MatrixFormatError(InputError):
    pass


class NonBranchingViolation(NblapError, ValueError):
    """A row carries more than two nonzeros or an entry outside {-1, +1}."""

    exit_code = 3

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DuplicateEntry(NonBranchingViolation):
    pass


class ComplexError(NblapError, ValueError):
    exit_code = 4


class DimensionOutOfRange(ComplexError):
    pass


class NotNonBranching(ComplexError):
    pass


class FaceMissing(ComplexError):
    pass


class NotSubcomplex(ComplexError):
    pass


class NonPositiveWeight(ComplexError):
    pass


class OddDimensions(InputError):
    pass


class WeightedL(ComplexError):
    """The Kron identification is only available for unweighted complexes."""


class NotHypergraph(ComplexError):
    """B_LK has an entry outside {-1, 0, 1}, so its columns are not oriented hyperedges."""


class NumericalError(NblapError, ArithmeticError):
    exit_code = 5


class NotSimilarizable(NumericalError):
    pass
