# ebsum/exceptions.py


class EBSumError(Exception):
    """Base class for every error raised by the ebsum library."""


class InvalidArgument(EBSumError, ValueError):
    pass


class InvalidFamily(InvalidArgument):
    pass


class IllegalStep(InvalidArgument):
    """A step in a profile sequence that neither raises one p, adds a Bernoulli term nor raises lambda."""


class ContractViolation(EBSumError, AssertionError):
    """An internal postcondition failed; this indicates a bug or a lost digit budget."""


class BudgetExceeded(EBSumError):
    pass


class DegenerateMode(EBSumError):
    """The probability function has a flat top (twin mode) or a single atom."""


class NoImprovement(EBSumError):
    pass


class UnsupportedFamily(EBSumError):
    pass
