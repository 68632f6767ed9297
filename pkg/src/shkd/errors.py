"""Exception hierarchy shared by all shkd modules."""


class ShkdError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(ShkdError):
    """An operation was called with arguments violating its contract
    (mismatched moduli, wrong vector length, unknown user, index out of range)."""


class ConfigurationError(ShkdError):
    """Invalid construction parameters (non-prime modulus, duplicate
    x-coordinates, overlapping parts, cycles out of range, ...)."""


class NotAuthorizedError(ShkdError):
    """Reconstruction was requested for a user set that cannot span the
    group-manager vector."""


class SystemFailedError(ShkdError):
    """The key distribution system reached a terminal failure state and a
    fresh set-up would be required."""


class RevocationCapacityError(SystemFailedError):
    """The accumulated revoked set became an authorized set, so no
    unauthorized padding superset exists any more."""


class SessionExhaustedError(SystemFailedError):
    """All sessions have been consumed; the session counter cannot advance."""


class PaddingExhaustedError(ShkdError):
    """No disjoint padding set completes the revoked set to a maximal
    unauthorized set (not enough inactive users / dummies)."""


class SequencingError(ShkdError):
    """A group-manager operation was invoked out of session order."""


class NotAMemberError(ShkdError):
    """The user is not a member for the requested session (outside its
    life cycle), so it holds no secrets for it."""


class RecoveryFailureError(ShkdError):
    """Session-key recovery failed: the broadcast plus the user's own share
    does not form an authorized set (malformed broadcast, or the user's own
    share was among the revealed ones)."""


class CannotHealForwardError(ShkdError):
    """Self-healing was requested for a session after the broadcast in hand;
    healing only works backwards from a later broadcast."""


class IdSpaceExhaustedError(ShkdError):
    """No unused identity (or x-coordinate) remains for a joining member."""


class DecodeError(ShkdError):
    """A wire message failed to parse (bad magic, version, or truncation)."""


class CensusInfeasibleError(ShkdError):
    """The exhaustive secrecy census was requested for a parameter range too
    large to enumerate."""


class ScenarioError(ShkdError):
    """A simulation scenario failed validation."""


class ReconciliationError(ShkdError):
    """A measured overhead counter disagreed with the formula it must match
    exactly."""
