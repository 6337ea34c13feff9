"""World configuration: equipment, economy, buildings, and the town map.

Three JSON documents define the physical and economic world. Each is an
array of objects:

  equipment  [{"id": 1, "type": "counter", "function": {...}, "description": "..."}]
  economy    [{"id": 1, "menu": {"chicken": 20}, "salary": 0}]
  buildings  [{"assets": "store_v1.2_0719", "id": 1, "price": 2000,
               "type": "store", "blocks": [[1,0,0,1,1]], "equipment": [1,0,0,0,0]}]

The equipment "function" object encodes the support behaviour that answers
operation texts: either an ordered rule table

  {"mode": "rules",
   "rules": [{"pattern": "buy chicken", "outcome": "You bought a chicken", "success": true}],
   "fallback": {"outcome": "Meaningless operation", "success": false}}

or {"mode": "model"}, in which case a language model generates the outcome.

A building's "blocks" grid marks solid cells (1) inside its rectangle, and
"equipment" is a flat list aligned row-major with the flattened blocks: a
non-zero entry places that equipment id on the corresponding cell, which
must be a solid cell.

Everything in this module is a pure function over immutable inputs; there
is no shared mutable state to worry about across threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

from .errors import (
    DanglingReferenceError,
    DuplicateIdError,
    OutOfBoundsError,
    OverlapError,
    ParseError,
)

logger = logging.getLogger(__name__)

Cell = tuple[int, int]

RULE_TABLE = "rules"
MODEL_BACKED = "model"

_EQUIPMENT_FIELDS = {"id", "type", "function", "description"}
_ECONOMY_FIELDS = {"id", "menu", "salary"}
_BUILDING_FIELDS = {"assets", "id", "price", "type", "blocks", "equipment"}
_FUNCTION_FIELDS = {"mode", "rules", "fallback"}
_RULE_FIELDS = {"pattern", "outcome", "success"}


@dataclass(frozen=True)
class SupportRule:
    """One pattern -> outcome entry of a rule table (first match wins)."""

    pattern: str
    outcome: str
    success: bool


@dataclass(frozen=True)
class SupportSpec:
    """How a piece of equipment answers operation texts."""

    mode: str  # RULE_TABLE or MODEL_BACKED
    rules: tuple[SupportRule, ...] = ()
    fallback_outcome: str = "Nothing happens."
    fallback_success: bool = False

    def evaluate(self, operation: str) -> tuple[str, bool]:
        """Rule-table lookup: earliest rule whose pattern is a
        case-insensitive substring of the operation wins; otherwise the
        fallback applies. Only meaningful in RULE_TABLE mode."""
        needle = operation.lower()
        for rule in self.rules:
            if rule.pattern.lower() in needle:
                return rule.outcome, rule.success
        return self.fallback_outcome, self.fallback_success


@dataclass(frozen=True)
class EquipmentDef:
    id: int
    kind: str
    description: str
    support: SupportSpec


@dataclass(frozen=True)
class EconomyDef:
    equipment_id: int
    menu: tuple[tuple[str, int], ...]  # (item, price) in document order
    salary: int

    def price_of(self, item: str) -> int | None:
        for name, price in self.menu:
            if name == item:
                return price
        return None


@dataclass(frozen=True)
class BuildingDef:
    id: int
    kind: str
    assets: str
    price: int
    blocks: tuple[tuple[int, ...], ...]  # rows of 0/1
    equipment_slots: tuple[tuple[Cell, int], ...]  # (cell offset, equipment id)

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def width(self) -> int:
        return len(self.blocks[0])

    def solid_offsets(self) -> list[Cell]:
        return [
            (x, y)
            for y, row in enumerate(self.blocks)
            for x, v in enumerate(row)
            if v
        ]


@dataclass(frozen=True)
class WorldConfig:
    """Cross-validated bundle of the three configuration documents."""

    equipment: dict[int, EquipmentDef]
    economy: dict[int, EconomyDef]  # keyed by equipment id
    buildings: dict[int, BuildingDef]

    def economy_for(self, equipment_id: int) -> EconomyDef | None:
        return self.economy.get(equipment_id)


@dataclass(frozen=True)
class Placement:
    building_id: int
    origin: Cell


@dataclass(frozen=True)
class WorldMap:
    """Town grid with building placements and the derived occupancy.

    `occupied` maps every solid cell to its building id; `equipment_at`
    maps cells that carry an equipment slot to (building id, equipment id).
    Both are derived from `placements` and rebuilt by `place_building`,
    never edited directly.
    """

    width: int
    height: int
    placements: tuple[Placement, ...] = ()
    occupied: dict[Cell, int] = field(default_factory=dict)
    equipment_at: dict[Cell, tuple[int, int]] = field(default_factory=dict)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_blocked(self, cell: Cell) -> bool:
        return cell in self.occupied

    def equipment_cells(self, equipment_id: int) -> list[Cell]:
        """All cells holding the given equipment id, in a stable order."""
        return sorted(
            cell for cell, (_b, eq) in self.equipment_at.items() if eq == equipment_id
        )


def new_world_map(width: int, height: int) -> WorldMap:
    if width <= 0 or height <= 0:
        raise ParseError(f"map size {width}x{height} must be positive")
    return WorldMap(width=width, height=height)


# --- document parsing --------------------------------------------------------


def _as_array(text: str, doc_name: str) -> list:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON: {exc.msg}", location=f"{doc_name} line {exc.lineno} col {exc.colno}"
        ) from exc
    if not isinstance(data, list):
        raise ParseError("top level must be an array", location=doc_name)
    return data


def _warn_unknown(entry: dict, known: set[str], where: str) -> None:
    for key in entry:
        if key not in known:
            logger.warning("%s: ignoring unknown field %r", where, key)


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ParseError(f"missing field {key!r}", location=where)
    return entry[key]


def _positive_int(value, what: str, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ParseError(f"{what} must be a positive integer, got {value!r}", location=where)
    return value


def _nonneg_int(value, what: str, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ParseError(f"{what} must be a non-negative integer, got {value!r}", location=where)
    return value


def _parse_support(raw, where: str) -> SupportSpec:
    if not isinstance(raw, dict):
        raise ParseError("'function' must be an object", location=where)
    _warn_unknown(raw, _FUNCTION_FIELDS, where)
    mode = raw.get("mode")
    if mode == MODEL_BACKED:
        return SupportSpec(mode=MODEL_BACKED)
    if mode != RULE_TABLE:
        raise ParseError(f"function mode must be 'rules' or 'model', got {mode!r}", location=where)
    rules = []
    for i, entry in enumerate(raw.get("rules", [])):
        rwhere = f"{where}.rules[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("rule must be an object", location=rwhere)
        _warn_unknown(entry, _RULE_FIELDS, rwhere)
        pattern = _require(entry, "pattern", rwhere)
        outcome = _require(entry, "outcome", rwhere)
        success = bool(entry.get("success", False))
        if not isinstance(pattern, str) or not pattern:
            raise ParseError("rule pattern must be a non-empty string", location=rwhere)
        if not isinstance(outcome, str) or not outcome:
            raise ParseError("rule outcome must be a non-empty string", location=rwhere)
        rules.append(SupportRule(pattern=pattern, outcome=outcome, success=success))
    fallback = raw.get("fallback")
    if fallback is None:
        if not rules:
            raise ParseError("rule table needs at least one rule or a fallback", location=where)
        return SupportSpec(mode=RULE_TABLE, rules=tuple(rules))
    if not isinstance(fallback, dict) or not isinstance(fallback.get("outcome"), str):
        raise ParseError("fallback must be {'outcome': str, 'success': bool}", location=where)
    return SupportSpec(
        mode=RULE_TABLE,
        rules=tuple(rules),
        fallback_outcome=fallback["outcome"],
        fallback_success=bool(fallback.get("success", False)),
    )


def parse_equipment(entries: list, doc_name: str = "equipment") -> dict[int, EquipmentDef]:
    defs: dict[int, EquipmentDef] = {}
    for i, entry in enumerate(entries):
        where = f"{doc_name}[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("entry must be an object", location=where)
        _warn_unknown(entry, _EQUIPMENT_FIELDS, where)
        eq_id = _positive_int(_require(entry, "id", where), "id", where)
        kind = _require(entry, "type", where)
        description = _require(entry, "description", where)
        if not isinstance(kind, str) or not kind:
            raise ParseError("'type' must be a non-empty string", location=where)
        if not isinstance(description, str) or not description:
            raise ParseError("'description' must be a non-empty string", location=where)
        if eq_id in defs:
            raise DuplicateIdError(f"{where}: equipment id {eq_id} already defined")
        support = _parse_support(_require(entry, "function", where), f"{where}.function")
        defs[eq_id] = EquipmentDef(id=eq_id, kind=kind, description=description, support=support)
    return defs


def parse_economy(
    entries: list, equipment: dict[int, EquipmentDef], doc_name: str = "economy"
) -> dict[int, EconomyDef]:
    defs: dict[int, EconomyDef] = {}
    for i, entry in enumerate(entries):
        where = f"{doc_name}[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("entry must be an object", location=where)
        _warn_unknown(entry, _ECONOMY_FIELDS, where)
        eq_id = _positive_int(_require(entry, "id", where), "id", where)
        if eq_id not in equipment:
            raise DanglingReferenceError(f"{where}: no equipment with id {eq_id}")
        if eq_id in defs:
            raise DuplicateIdError(f"{where}: economy for equipment {eq_id} already defined")
        menu_raw = entry.get("menu", {})
        if not isinstance(menu_raw, dict):
            raise ParseError("'menu' must be an object of item -> price", location=where)
        menu = []
        for item, price in menu_raw.items():
            menu.append((item, _nonneg_int(price, f"price of {item!r}", where)))
        salary = _nonneg_int(entry.get("salary", 0), "salary", where)
        defs[eq_id] = EconomyDef(equipment_id=eq_id, menu=tuple(menu), salary=salary)
    return defs


def parse_buildings(
    entries: list, equipment: dict[int, EquipmentDef], doc_name: str = "buildings"
) -> dict[int, BuildingDef]:
    defs: dict[int, BuildingDef] = {}
    for i, entry in enumerate(entries):
        where = f"{doc_name}[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("entry must be an object", location=where)
        _warn_unknown(entry, _BUILDING_FIELDS, where)
        b_id = _positive_int(_require(entry, "id", where), "id", where)
        if b_id in defs:
            raise DuplicateIdError(f"{where}: building id {b_id} already defined")
        kind = _require(entry, "type", where)
        assets = entry.get("assets", "")
        price = _nonneg_int(entry.get("price", 0), "price", where)
        if not isinstance(kind, str) or not kind:
            raise ParseError("'type' must be a non-empty string", location=where)
        blocks_raw = _require(entry, "blocks", where)
        if (
            not isinstance(blocks_raw, list)
            or not blocks_raw
            or not all(isinstance(r, list) and r for r in blocks_raw)
        ):
            raise ParseError("'blocks' must be a non-empty 2D array", location=where)
        row_len = len(blocks_raw[0])
        if any(len(r) != row_len for r in blocks_raw):
            raise ParseError("'blocks' rows must all have the same length", location=where)
        for r, row in enumerate(blocks_raw):
            for c, v in enumerate(row):
                if v not in (0, 1):
                    raise ParseError(f"blocks[{r}][{c}] must be 0 or 1, got {v!r}", location=where)
        blocks = tuple(tuple(row) for row in blocks_raw)
        flat = [v for row in blocks for v in row]
        eq_raw = entry.get("equipment", [0] * len(flat))
        if not isinstance(eq_raw, list) or len(eq_raw) != len(flat):
            raise ParseError(
                f"'equipment' must be a flat list of {len(flat)} entries aligned with blocks",
                location=where,
            )
        slots = []
        for idx, eq_id in enumerate(eq_raw):
            if eq_id == 0:
                continue
            cell = (idx % row_len, idx // row_len)
            if not flat[idx]:
                raise ParseError(
                    f"equipment slot at block cell {cell} is not an occupied cell", location=where
                )
            if eq_id not in equipment:
                raise DanglingReferenceError(f"{where}: no equipment with id {eq_id}")
            slots.append((cell, eq_id))
        defs[b_id] = BuildingDef(
            id=b_id,
            kind=kind,
            assets=assets,
            price=price,
            blocks=blocks,
            equipment_slots=tuple(slots),
        )
    return defs


def parse_world_config(
    equipment_doc: list, economy_doc: list, buildings_doc: list
) -> WorldConfig:
    """Assemble and cross-validate already-decoded document arrays."""
    equipment = parse_equipment(equipment_doc)
    economy = parse_economy(economy_doc, equipment)
    buildings = parse_buildings(buildings_doc, equipment)
    return WorldConfig(equipment=equipment, economy=economy, buildings=buildings)


def load_world_config(
    equipment_text: str, economy_text: str, buildings_text: str
) -> WorldConfig:
    """Parse the three JSON documents into a cross-validated WorldConfig."""
    return parse_world_config(
        _as_array(equipment_text, "equipment"),
        _as_array(economy_text, "economy"),
        _as_array(buildings_text, "buildings"),
    )


# --- serialization (round-trips through the same parsers) ---------------------


def support_to_json(spec: SupportSpec) -> dict:
    if spec.mode == MODEL_BACKED:
        return {"mode": MODEL_BACKED}
    return {
        "mode": RULE_TABLE,
        "rules": [
            {"pattern": r.pattern, "outcome": r.outcome, "success": r.success}
            for r in spec.rules
        ],
        "fallback": {"outcome": spec.fallback_outcome, "success": spec.fallback_success},
    }


def world_config_to_documents(cfg: WorldConfig) -> tuple[list, list, list]:
    equipment = [
        {
            "id": e.id,
            "type": e.kind,
            "function": support_to_json(e.support),
            "description": e.description,
        }
        for e in cfg.equipment.values()
    ]
    economy = [
        {"id": e.equipment_id, "menu": {k: v for k, v in e.menu}, "salary": e.salary}
        for e in cfg.economy.values()
    ]
    buildings = []
    for b in cfg.buildings.values():
        flat_eq = [0] * (b.width * b.height)
        for (x, y), eq_id in b.equipment_slots:
            flat_eq[y * b.width + x] = eq_id
        buildings.append(
            {
                "assets": b.assets,
                "id": b.id,
                "price": b.price,
                "type": b.kind,
                "blocks": [list(row) for row in b.blocks],
                "equipment": flat_eq,
            }
        )
    return equipment, economy, buildings


def serialize_world_config(cfg: WorldConfig) -> tuple[str, str, str]:
    eq, ec, bd = world_config_to_documents(cfg)
    return json.dumps(eq), json.dumps(ec), json.dumps(bd)


# --- placement ------------------------------------------------------------------


def place_building(world_map: WorldMap, building: BuildingDef, origin: Cell) -> WorldMap:
    """Return a new map with the building placed at origin.

    The whole block rectangle must fit inside the map, and none of the
    building's solid cells may collide with existing occupancy.
    """
    ox, oy = origin
    if (
        ox < 0
        or oy < 0
        or ox + building.width > world_map.width
        or oy + building.height > world_map.height
    ):
        raise OutOfBoundsError(
            f"building {building.id} ({building.width}x{building.height}) at {origin} "
            f"does not fit a {world_map.width}x{world_map.height} map"
        )
    cells = [(ox + dx, oy + dy) for dx, dy in building.solid_offsets()]
    for cell in cells:
        if cell in world_map.occupied:
            raise OverlapError(
                f"cell {cell} already occupied by building {world_map.occupied[cell]}"
            )
    occupied = dict(world_map.occupied)
    equipment_at = dict(world_map.equipment_at)
    for cell in cells:
        occupied[cell] = building.id
    for (dx, dy), eq_id in building.equipment_slots:
        equipment_at[(ox + dx, oy + dy)] = (building.id, eq_id)
    return replace(
        world_map,
        placements=world_map.placements + (Placement(building.id, (ox, oy)),),
        occupied=occupied,
        equipment_at=equipment_at,
    )


def resolve_equipment_at(world_map: WorldMap, cell: Cell) -> tuple[int, int] | None:
    """(building id, equipment id) under the cell, or None."""
    if not world_map.in_bounds(cell):
        raise OutOfBoundsError(f"cell {cell} outside {world_map.width}x{world_map.height} map")
    return world_map.equipment_at.get(cell)


def build_world_map(
    cfg: WorldConfig, width: int, height: int, placements: list[tuple[int, Cell]]
) -> WorldMap:
    """Construct a map by placing configured buildings in order."""
    world_map = new_world_map(width, height)
    for building_id, origin in placements:
        if building_id not in cfg.buildings:
            raise DanglingReferenceError(f"no building with id {building_id}")
        world_map = place_building(world_map, cfg.buildings[building_id], tuple(origin))
    return world_map
