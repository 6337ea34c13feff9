"""The single action an agent issues per tick."""

from __future__ import annotations

from dataclasses import dataclass

from .world import Cell

MOVE = "move"
SAY = "say"
USE = "use"
IDLE = "idle"


@dataclass(frozen=True)
class AgentAction:
    """Exactly one of move/say/use/idle, with the fields that kind needs.

    Build through the classmethods so unrelated fields stay None.
    """

    kind: str
    issued_tick: int = 0
    target: Cell | None = None
    peer_id: int | None = None
    utterance: str | None = None
    equipment_id: int | None = None
    operation: str | None = None
    purpose: str | None = None

    @classmethod
    def move(cls, target: Cell, tick: int = 0) -> "AgentAction":
        return cls(kind=MOVE, issued_tick=tick, target=tuple(target))

    @classmethod
    def say(cls, peer_id: int, utterance: str, tick: int = 0) -> "AgentAction":
        return cls(kind=SAY, issued_tick=tick, peer_id=peer_id, utterance=utterance)

    @classmethod
    def use(cls, equipment_id: int, purpose: str, operation: str | None = None, tick: int = 0) -> "AgentAction":
        return cls(
            kind=USE,
            issued_tick=tick,
            equipment_id=equipment_id,
            purpose=purpose,
            operation=operation,
        )

    @classmethod
    def idle(cls, tick: int = 0) -> "AgentAction":
        return cls(kind=IDLE, issued_tick=tick)
