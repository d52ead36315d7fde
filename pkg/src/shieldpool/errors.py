"""Exception hierarchy. Each class carries a machine-readable ``category``
which the CLI reports and maps to an exit code."""


class PoolError(Exception):
    category = "error"
    exit_code = 1


class ValidationError(PoolError, ValueError):
    category = "validation"
    exit_code = 2


class ConflictError(PoolError):
    category = "conflict"
    exit_code = 3


class NotFoundError(PoolError):
    category = "not-found"
    exit_code = 4


class FundingError(PoolError):
    category = "funding"
    exit_code = 10


class StaleViewError(PoolError):
    category = "stale-view"
    exit_code = 11


class CapacityError(PoolError):
    category = "capacity"
    exit_code = 12


class StatementError(PoolError):
    """The prover was asked to prove a false statement."""
    category = "false-statement"
    exit_code = 13


class StaleRootError(PoolError):
    category = "stale-root"
    exit_code = 20


class DoubleSpendError(PoolError):
    category = "double-spend"
    exit_code = 21


class ProofError(PoolError):
    category = "proof"
    exit_code = 22


class PaymasterError(PoolError):
    category = "paymaster"
    exit_code = 23


class QuoteError(PoolError):
    category = "quote"
    exit_code = 24


class ScreeningError(PoolError):
    category = "screening"
    exit_code = 25


class LimitError(PoolError):
    category = "limit"
    exit_code = 26


class ChannelError(PoolError):
    category = "channel"
    exit_code = 27


class ConvertError(PoolError):
    category = "convert"
    exit_code = 28


class ComplianceError(PoolError):
    category = "compliance"
    exit_code = 30


def exit_code_for(category: str) -> int:
    """Exit code for a category name, e.g. one recorded in a ledger rejection."""
    stack = [PoolError]
    while stack:
        cls = stack.pop()
        if cls.category == category:
            return cls.exit_code
        stack.extend(cls.__subclasses__())
    return PoolError.exit_code
