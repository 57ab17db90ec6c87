"""Error hierarchy shared by the engine, content loader, and server.

Every error carries a stable ``code`` string (its class name) so the server
can pass engine failures to clients verbatim.
"""
from __future__ import annotations


class GameError(Exception):
    """Base for all rule/content/session failures."""

    @property
    def code(self) -> str:
        return type(self).__name__


# Content / scenario errors
class ParseError(GameError):
    pass


class SchemaVersionUnsupported(GameError):
    pass


class InvalidScenario(GameError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations[:5])
        super().__init__(f"scenario failed validation ({len(self.violations)} violations): {lines}")


# Engine errors
class IncompleteAssignment(GameError):
    pass


class WrongPhase(GameError):
    pass


class UnknownRole(GameError):
    pass


class NotEntitled(GameError):
    pass


class InsufficientTalent(GameError):
    pass


class InsufficientFunds(GameError):
    pass


class PrerequisiteLocked(GameError):
    pass


class UnknownTarget(GameError):
    pass


class UnruledFreeText(GameError):
    def __init__(self, order_refs):
        self.order_refs = list(order_refs)
        super().__init__(f"unruled free-text orders: {', '.join(self.order_refs)}")


class NotFacilitator(GameError):
    pass


class AlreadyRuled(GameError):
    pass


class UnknownOrder(GameError):
    pass


class CorruptLog(GameError):
    pass


# Session / server errors
class UnknownScenario(GameError):
    pass


class UnknownSession(GameError):
    pass


class CodeClaimed(GameError):
    pass


class SessionRunning(GameError):
    pass


class SessionNotRunning(GameError):
    pass


class UnknownToken(GameError):
    pass
