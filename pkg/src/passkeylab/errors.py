"""Exception hierarchy shared by every layer of the testbed.

Every error has a stable ``code`` (its class name). Codes cross the simulated
wire as strings and come back as the same class, and blocked scenario
verdicts are rendered as ``blocked(<code>)``.
"""

from __future__ import annotations


class PasskeyLabError(Exception):
    """Base class; ``code`` is what transcripts and wire responses carry."""

    @property
    def code(self) -> str:
        return type(self).__name__


# relying party
class UnknownUser(PasskeyLabError):
    pass


class UnknownCeremony(PasskeyLabError):
    pass


class WrongCeremonyType(PasskeyLabError):
    pass


class ChallengeMismatch(PasskeyLabError):
    pass


class OriginMismatch(PasskeyLabError):
    pass


class RpIdMismatch(PasskeyLabError):
    pass


class DuplicateCredentialId(PasskeyLabError):
    pass


class UnknownCredential(PasskeyLabError):
    pass


class InvalidSignature(PasskeyLabError):
    pass


class CloneSuspected(PasskeyLabError):
    pass


class UserMismatch(PasskeyLabError):
    pass


class BadCredentials(PasskeyLabError):
    pass


class InvalidSession(PasskeyLabError):
    pass


class MalformedResponse(PasskeyLabError):
    pass


# client / authenticator
class InsecureContext(PasskeyLabError):
    pass


class UserDeclined(PasskeyLabError):
    pass


class NoCredential(PasskeyLabError):
    pass


class WrongPin(PasskeyLabError):
    pass


class NotUnlocked(PasskeyLabError):
    pass


# network fabric
class NameResolutionFailure(PasskeyLabError):
    pass


class TlsUntrusted(PasskeyLabError):
    pass


class ConnectionRefused(PasskeyLabError):
    pass


class MessageDropped(PasskeyLabError):
    pass


class PositionRequired(PasskeyLabError):
    pass


class PrivilegeError(PasskeyLabError):
    pass


# scenario-level outcomes that are not raised by a single primitive
class GenuineRpReached(PasskeyLabError):
    """The victim's navigation landed on the real RP, so the attack has no foothold."""


class PhishingUnreachable(PasskeyLabError):
    pass


class PasswordUnavailable(PasskeyLabError):
    pass


class OutOfScope(PasskeyLabError):
    pass


# harness
class ConfigError(PasskeyLabError):
    pass


class UnknownScenario(PasskeyLabError):
    pass


class ParseError(PasskeyLabError):
    pass


def _collect(cls: type) -> dict[str, type]:
    out = {}
    for sub in cls.__subclasses__():
        out[sub.__name__] = sub
        out.update(_collect(sub))
    return out


ERRORS_BY_CODE: dict[str, type[PasskeyLabError]] = _collect(PasskeyLabError)


def error_from_code(code: str, detail: str = "") -> PasskeyLabError:
    cls = ERRORS_BY_CODE.get(code)
    if cls is None:
        raise ParseError(f"unknown error code {code!r}")
    return cls(detail)
