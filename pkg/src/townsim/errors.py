"""Typed exceptions raised across the simulation.

Everything inherits from TownError so callers can catch the whole family.
A few names deliberately diverge from the obvious choice because Python
already owns them as builtins (ReferenceError, TimeoutError, MemoryError).
"""

from __future__ import annotations


class TownError(Exception):
    """Base class for every error this package raises on purpose."""


# --- world configuration -----------------------------------------------------


class ConfigError(TownError):
    """A configuration document or task file is unusable."""


class ParseError(ConfigError):
    """Malformed config document. Carries a best-effort location."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DanglingReferenceError(ConfigError):
    """A document references an equipment/building id that is not defined."""


class DuplicateIdError(ConfigError):
    """Two definitions (or registry entries) share an id."""


# --- world geometry ------------------------------------------------------------


class OutOfBoundsError(TownError):
    """A cell or placement falls outside the map."""


class OverlapError(TownError):
    """A placement's occupied cells collide with existing occupancy."""


# --- agents ---------------------------------------------------------------------


class DuplicateNameError(TownError):
    """An agent name is already taken by a live agent."""


class UnknownBackendError(TownError):
    """A profile references a backend id that is not registered."""


class UnknownSystemError(TownError):
    """A profile references a memory/plan system id that is not registered."""


class InsufficientCashError(TownError):
    """Purchase price exceeds the agent's cash; state is left unchanged."""


class UnknownItemError(TownError):
    """Purchased item is not on the equipment's menu."""


class NotAdjacentError(TownError):
    """The agent is not next to the equipment it tries to operate."""


class UnknownAgentError(TownError):
    """A goal predicate (or command) names an agent that does not exist."""


# --- memory ----------------------------------------------------------------------


class EmptyTextError(TownError):
    """Memory text or embed input was empty."""


class EmbedderError(TownError):
    """The embedder failed on a non-empty input."""


class DimensionMismatchError(TownError):
    """Two vectors (or a record and its store) disagree on dimension."""


# --- planning ----------------------------------------------------------------------


class EmptyGoalError(TownError):
    """make_plan was asked to decompose an empty goal."""


class EmptyPurposeError(TownError):
    """An equipment operation was requested with an empty purpose."""


class PromptParseError(TownError):
    """A single backend response did not match the expected line format."""


class PlanParseError(TownError):
    """Responses stayed unparseable after the retry budget."""


# --- backends ----------------------------------------------------------------------


class BackendError(TownError):
    """Base for completion-backend failures."""


class BackendTimeoutError(BackendError):
    """A single request exceeded the configured timeout."""


class EndpointError(BackendError):
    """The endpoint answered with a non-success status."""

    def __init__(self, status: int, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(f"endpoint returned status {status}: {body[:200]}")


class ExhaustedRetriesError(BackendError):
    """Every retry attempt failed; the last cause is chained."""


# --- snapshots -----------------------------------------------------------------------


class SnapshotError(TownError):
    """Base for snapshot persistence failures."""


class VersionMismatchError(SnapshotError):
    """Snapshot was written by an incompatible format version."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"snapshot version {found!r}, this build reads {expected!r}")


class CorruptSnapshotError(SnapshotError):
    """Snapshot document is truncated or structurally invalid."""
