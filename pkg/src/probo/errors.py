"""Exception hierarchy shared by all probo modules.

Domain failures raise subclasses of ProboError; invalidity that is part of a
return contract (chain validation, descriptor violations) is reported as a
value, not an exception.
"""


class ProboError(Exception):
    """Base class for every protocol-level failure."""


# --- canonical serialization ---

class NonCanonicalizable(ProboError):
    """Value cannot be canonically serialized (NaN, infinity, non-string key,
    or an unsupported type)."""


# --- ledger ---

class InvalidConfig(ProboError):
    """Genesis configuration rejected (empty node list, negative balance,
    bad economic parameters)."""


class TimestampRegression(ProboError):
    """New timestamp is earlier than the current clock or chain tail."""


class InvalidPayload(ProboError):
    """Block payload violates its structural invariants."""


class InvalidChain(ProboError):
    """Operation requires a valid chain but validation failed."""


# --- tokenomics ---

class DuplicateAccount(ProboError):
    pass


class PostGenesisMint(ProboError):
    """Nonzero initial balance requested after the genesis allocation was
    sealed; supply can only grow through settlement rewards."""


class InsufficientFunds(ProboError):
    pass


class UnknownAccount(ProboError):
    pass


class DepositBelowMinimum(ProboError):
    pass


class DuplicateRequest(ProboError):
    pass


class UnknownEscrow(ProboError):
    pass


class AlreadySettled(ProboError):
    pass


class EmptyVerifierSet(ProboError):
    """Accepted/Rejected settlement needs at least one verifier."""


# --- studies ---

class DescriptorInvalid(ProboError):
    """Raised by pipeline entry points when a descriptor fails validation;
    carries the full violation list."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class InvalidPartition(ProboError):
    """Stage boundaries overlap or do not cover the descriptor sections."""


# --- verification ---

class UnknownMetric(ProboError):
    """Tolerance names a metric absent from the proponent table."""


class MixedRequestIds(ProboError):
    pass


class UnorderedReports(ProboError):
    pass


class CommitmentMismatch(ProboError):
    """Revealed output table does not hash to the registered commitment."""


# --- simulation ---

class NoEscrow(ProboError):
    """Broadcast refused: no open deposit backs the request."""


class HorizonExceeded(ProboError):
    pass


class InvalidScenario(ProboError):
    pass
